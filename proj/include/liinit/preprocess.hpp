#ifndef LIINIT_PREPROCESS_HPP
#define LIINIT_PREPROCESS_HPP

// Turns raw IMU and odometry streams into the smoothed, differentiated and
// co-sampled sequences the calibration solves consume: zero-phase Butterworth
// smoothing, central-difference differentiation, and linear-interpolation
// downsampling of the IMU series onto the odometry timestamps.

#include <vector>

#include "liinit/types.hpp"

namespace liinit {

struct ImuSample {
  double t = 0.0;
  Vec3 gyro = Vec3::Zero();   // rad/s, IMU body frame
  Vec3 accel = Vec3::Zero();  // m/s^2, specific force in the IMU body frame
};

struct OdomSample {
  double t = 0.0;
  Mat3 rotation = Mat3::Identity();  // sensor body to global
  Vec3 position = Vec3::Zero();      // global, m
  Vec3 velocity = Vec3::Zero();      // global, m/s
  Vec3 omega = Vec3::Zero();         // rad/s, sensor body frame
};

/// Odometry-rate sequences after smoothing and differentiation.
struct LidarDerived {
  std::vector<double> t;
  std::vector<Mat3> rotation;    // attitude passthrough (never filtered)
  std::vector<Vec3> omega;      // filtered body angular velocity
  std::vector<Vec3> velocity;   // filtered global velocity
  std::vector<Vec3> omega_dot;  // angular acceleration, central difference of omega
  std::vector<Vec3> accel;      // global acceleration, central difference of velocity

  std::size_t size() const { return t.size(); }
};

/// IMU sequences after smoothing and differentiation, at IMU rate or, after
/// downsample_interpolate, at odometry rate.
struct ImuDerived {
  std::vector<double> t;
  std::vector<Vec3> omega;
  std::vector<Vec3> accel;
  std::vector<Vec3> omega_dot;

  std::size_t size() const { return t.size(); }
};

/// Digital low-pass coefficients, b over a, normalized so a[0] = 1 and the DC
/// gain is exactly 1.
struct ButterworthCoeffs {
  std::vector<double> b;
  std::vector<double> a;
};

/// Bilinear-transform Butterworth low-pass design. Requires 0 < cutoff < Nyquist.
ButterworthCoeffs butterworth_lowpass(int order, double cutoff_hz, double sample_rate_hz);

/// Single forward pass of the difference equation (direct form II transposed),
/// with the internal state initialized to the steady-state response of a
/// constant input x[0].
std::vector<double> filter_forward(const ButterworthCoeffs& c, const std::vector<double>& x);

/// Forward-backward application of `c` with odd-reflection padding of
/// 3*order samples on both ends; output has the input length and zero phase.
std::vector<double> filtfilt(const ButterworthCoeffs& c, const std::vector<double>& x);

/// Zero-phase Butterworth smoothing of a uniformly sampled 3-vector series.
/// The sample rate is derived from the timestamps; spacing must stay within
/// 1% of the median period and the series must be longer than 3*order.
std::vector<Vec3> zero_phase_lowpass(const std::vector<double>& t, const std::vector<Vec3>& x,
                                     double cutoff_hz, int order = 4);

/// d/dt by central differences at interior samples and one-sided differences
/// at the ends. Where the grid is locally uniform (within 0.1%) a sixth-order
/// seven-point stencil is used, so band-limited signals keep their derivative
/// to near machine accuracy; otherwise the three-point form applies.
/// Requires at least 3 samples and strictly increasing timestamps.
std::vector<Vec3> central_difference(const std::vector<double>& t, const std::vector<Vec3>& x);

struct ResampledImu {
  ImuDerived series;        // timestamps are the retained odometry times
  int first_odom_index = 0;  // index into the query times of series.t.front()
  int dropped_head = 0;      // query times before the IMU span
  int dropped_tail = 0;      // query times after the IMU span
};

/// Linear interpolation of an IMU-rate ImuDerived at the given odometry
/// timestamps. Times outside the IMU span are dropped and counted.
ResampledImu downsample_interpolate(const ImuDerived& imu, const std::vector<double>& odom_times);

/// Smooths omega and velocity, then differentiates the smoothed series.
LidarDerived build_lidar_derived(const std::vector<OdomSample>& odom, double cutoff_hz,
                                 int order = 4);

/// Smooths gyro and accel, then differentiates the smoothed gyro.
ImuDerived build_imu_derived(const std::vector<ImuSample>& imu, double cutoff_hz, int order = 4);

/// Splits a timestamp vector into maximal near-uniform runs. Spacing within
/// `tol_frac` of the median period continues a run; gaps up to `max_gap`
/// periods are bridged (callers repair them by interpolation); anything larger
/// starts a new segment. Returns [begin, end) index pairs.
std::vector<std::pair<int, int>> uniform_segments(const std::vector<double>& t,
                                                  double tol_frac = 0.01, double max_gap = 3.5);

/// Repairs isolated dropped samples by inserting linearly interpolated ones on
/// the uniform grid and splits at gaps larger than `max_gap` periods.
std::vector<std::vector<ImuSample>> regularize_imu(const std::vector<ImuSample>& samples,
                                                   int* inserted = nullptr);
std::vector<std::vector<OdomSample>> regularize_odom(const std::vector<OdomSample>& samples,
                                                     int* inserted = nullptr);

}  // namespace liinit

#endif
