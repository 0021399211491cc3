#ifndef LIINIT_SPATIAL_HPP
#define LIINIT_SPATIAL_HPP

// Spatial-temporal calibration solves. Stage one fits the extrinsic rotation,
// gyro bias and the sub-sample time refinement from angular-velocity pairs;
// the IMU series is then re-evaluated at the refined times and stage two fits
// the lever arm, accelerometer bias and gravity from the acceleration pairs.

#include <vector>

#include "liinit/gauss_newton.hpp"
#include "liinit/preprocess.hpp"
#include "liinit/types.hpp"

namespace liinit {

struct RotTimeSolution {
  Mat3 r_imu_lidar = Mat3::Identity();  // rotation LiDAR -> IMU
  Vec3 gyro_bias = Vec3::Zero();        // IMU frame
  double delta_t = 0.0;                 // sub-sample refinement, |delta_t| < period
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes sum_k |R w_L[k] + b - w_I[k + d] - dt * wdot_I[k + d]|^2 from the
/// initial value (identity, 0, 0). Both series must be co-indexed at odometry
/// rate; d is the cross-correlation lag. With refine_dt false the time term is
/// frozen at zero. delta_t is kept inside (-period, period) by box projection.
RotTimeSolution solve_rot_bias_dt(const std::vector<Vec3>& lidar_omega,
                                  const ImuDerived& imu_at_odom, int d_star, double period,
                                  bool refine_dt = true, const SolverOptions& opts = {});

/// IMU angular velocity and acceleration re-evaluated at t_k + d*period + dt
/// by first-order extrapolation. Entry i pairs with odometry index k_begin + i.
struct AlignedImu {
  int k_begin = 0;
  std::vector<Vec3> omega;
  std::vector<Vec3> accel;
  int trimmed = 0;  // odometry indices lost to the shifted overlap
};

/// Requires |delta_t| < period. n_lidar bounds the odometry index range.
AlignedImu align_imu(const ImuDerived& imu_at_odom, int n_lidar, int d_star, double delta_t,
                     double period);

///// Body-frame acceleration of the odometry sensor: R_k^T (a_k - g).
std::vector<Vec3> lidar_body_accel(const LidarDerived& lidar, const Vec3& gravity);

struct TransGravSolution {
  Vec3 p_imu_in_lidar = Vec3::Zero();  // lever arm solved directly
  Vec3 p_lidar_in_imu = Vec3::Zero();  // -R * p_imu_in_lidar
  Vec3 accel_bias = Vec3::Zero();      // IMU frame
  Vec3 gravity = Vec3::Zero();         // global frame, |g| = 9.81
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes sum_k |R^T (a_I[k] - b_a) - R_k^T (a_k - g) - ([w]x^2 + [wdot]x) p|^2
/// over the lever arm, the accelerometer bias and gravity on the 9.81-sphere
/// (two-parameter tangent retraction), from the initial value (0, 0, 9.81 e3).
/// A positive excitation_threshold rejects runs whose translation Gram has a
/// per-sample smallest singular value at or below it.
TransGravSolution solve_trans_bias_gravity(const LidarDerived& lidar, const AlignedImu& aligned,
                                           const Mat3& r_imu_lidar,
                                           double excitation_threshold = 0.0,
                                           const SolverOptions& opts = {});

}  // namespace liinit

#endif
