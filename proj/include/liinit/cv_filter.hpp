#ifndef LIINIT_CV_FILTER_HPP
#define LIINIT_CV_FILTER_HPP

// Constant-velocity error-state iterated Kalman filter used as the front-end
// odometry model: the state is (attitude, position, velocity, body angular
// velocity) on SO(3) x R^9; scans are motion-compensated per point against the
// scan-end state and corrected with point-to-plane residuals.

#include <vector>

#include "liinit/types.hpp"

namespace liinit {

using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;
using Mat12x6 = Eigen::Matrix<double, 12, 6>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Tangent ordering: [rotation, position, velocity, omega], 3 each.
struct CvState {
  Mat3 rotation = Mat3::Identity();  // sensor body to global
  Vec3 position = Vec3::Zero();      // global
  Vec3 velocity = Vec3::Zero();      // global
  Vec3 omega = Vec3::Zero();         // body angular velocity

  static constexpr int kTangentDim = 12;
};

CvState boxplus(const CvState& x, const Vec12& u);
Vec12 boxminus(const CvState& x1, const CvState& x2);

/// Random-walk intensities of the velocity and angular-velocity channels.
struct ProcessNoise {
  double velocity = 0.1;  // (m/s)^2 / s
  double omega = 0.1;     // (rad/s)^2 / s

  Mat6 matrix() const;
};

struct Prediction {
  CvState state;
  Mat12 cov;
};

/// Forward propagation x (+) dt * f(x, 0) of the constant-velocity model.
CvState predict_state(const CvState& x, double dt);

/// Exact differentials of the prediction in the error state: f_x is the
/// derivative of predict(x (+) d) (-) predict(x) at d = 0, f_w the derivative
/// in the noise channels. f_x deviates from identity only in the
/// rotation-rotation block Exp(-w dt), the rotation-omega block Jr(w dt) dt
/// and the position-velocity block I dt.
void transition_jacobians(const CvState& x, double dt, Mat12* f_x, Mat12x6* f_w);

Prediction predict(const CvState& x, const Mat12& cov, double dt, const ProcessNoise& q);

struct TimedPoint {
  Vec3 xyz = Vec3::Zero();  // sensor body frame at its own sampling instant
  double t = 0.0;
};

/// n . x = offset with |n| = 1.
struct PlaneLandmark {
  Vec3 normal = Vec3::UnitZ();
  double offset = 0.0;
};

struct PlaneAssociation {
  TimedPoint point;
  PlaneLandmark plane;
};

/// Maps a point sampled at pt.t into the scan-end body frame under the
/// constant-velocity assumption: rotation Exp(-w dt_j) and translation
/// -R^T v dt_j with dt_j = scan_end_time - pt.t >= 0.
Vec3 compensate_point(const CvState& scan_end_state, const TimedPoint& pt, double scan_end_time);

struct SubScan {
  std::vector<TimedPoint> points;
  double t_begin = 0.0;
  double t_end = 0.0;
};

/// Index of the right-inclusive equal sub-interval of [t_begin, t_end] that
/// owns timestamp t, clamped to [0, n-1].
int subframe_index(double t, double t_begin, double t_end, int n);

/// Partitions a scan into n equal time sub-intervals of [t_begin, t_end];
/// sub-scan i owns timestamps in (b_i-1, b_i], the first also its left edge.
std::vector<SubScan> split_scan(const std::vector<TimedPoint>& scan, int n, double t_begin,
                                double t_end);

/// As above with the interval taken from the scan's own timestamp range.
std::vector<SubScan> split_scan(const std::vector<TimedPoint>& scan, int n);

struct UpdateOptions {
  double point_noise = 0.02;  // point-to-plane measurement std, m
  int max_iterations = 10;
  double step_tolerance = 1e-6;  // tangent norm declaring convergence
  bool compensate = true;        // false treats every point as sampled at scan end
};

struct UpdateResult {
  CvState state;
  Mat12 cov;
  int iterations = 0;
  bool converged = false;
};

/// Iterated point-to-plane update of the predicted state. Re-linearizes the
/// residuals (including the per-point compensation) at every iterate and stops
/// on step_tolerance or max_iterations. Unobservable directions stay at the
/// prior; the returned covariance is the information-form posterior.
UpdateResult iterated_update(const CvState& predicted, const Mat12& predicted_cov,
                             const std::vector<PlaneAssociation>& associations,
                             double scan_end_time, const UpdateOptions& opts = {});

}  // namespace liinit

#endif
