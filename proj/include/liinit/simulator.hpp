#ifndef LIINIT_SIMULATOR_HPP
#define LIINIT_SIMULATOR_HPP

// Synthetic-trajectory simulator with analytic ground truth. Poses come from
// per-axis sinusoid sums (plus optional linear drift terms), so velocity,
// acceleration, body angular velocity and angular acceleration all have closed
// forms; IMU and odometry streams are synthesized from the exact kinematics of
// a rigid LiDAR-IMU pair, and scans are ray-cast against a world of planes.

#include <array>
#include <cstdint>
#include <vector>

#include "liinit/cv_filter.hpp"
#include "liinit/preprocess.hpp"
#include "liinit/types.hpp"

namespace liinit {

/// One scalar channel: linear * t + sum_j amplitude_j sin(2 pi freq_j t + phase_j).
struct SinusoidAxis {
  double linear = 0.0;
  std::vector<double> amplitude;
  std::vector<double> freq_hz;
  std::vector<double> phase;

  double value(double t) const;
  double deriv(double t) const;
  double deriv2(double t) const;
};

/// Trajectory of the LiDAR body frame: position per axis in meters, attitude
/// as a rotation-vector channel per axis (R(t) = Exp(rotvec(t))).
struct TrajectorySpec {
  std::array<SinusoidAxis, 3> position;
  std::array<SinusoidAxis, 3> rotvec;
};

struct TrajectorySample {
  double t = 0.0;
  Mat3 rotation = Mat3::Identity();  // body to global
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();   // global
  Vec3 accel = Vec3::Zero();      // global
  Vec3 omega = Vec3::Zero();      // body
  Vec3 omega_dot = Vec3::Zero();  // body
};

/// Exact pose and derivatives at time t; omega = vee(R^T dR/dt) evaluated
/// analytically through the right Jacobian of the rotation-vector channel.
TrajectorySample eval_trajectory(const TrajectorySpec& spec, double t);

/// Rigid sensor pair and measurement corruption parameters.
struct SensorRig {
  Mat3 r_imu_lidar = Mat3::Identity();   // rotation LiDAR -> IMU
  Vec3 p_imu_in_lidar = Vec3::Zero();    // IMU origin in the LiDAR frame, m
  double time_offset = 0.0;              // added to IMU timestamps, s
  Vec3 gyro_bias = Vec3::Zero();         // rad/s
  Vec3 accel_bias = Vec3::Zero();        // m/s^2
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);  // global, |g| must be 9.81

  double imu_rate_hz = 200.0;
  double odom_rate_hz = 10.0;

  double gyro_noise = 0.0;        // per-sample std, rad/s
  double accel_noise = 0.0;       // per-sample std, m/s^2
  double odom_att_noise = 0.0;    // rad, right-multiplied Exp perturbation
  double odom_pos_noise = 0.0;    // m
  double odom_vel_noise = 0.0;    // m/s
  double odom_omega_noise = 0.0;  // rad/s

  Vec3 p_lidar_in_imu() const { return -r_imu_lidar * p_imu_in_lidar; }
  void validate() const;  // throws std::invalid_argument
};

/// IMU stream over [0, duration]: specific force and angular rate at the IMU,
/// derived from the trajectory by the rigid-link transfer, biased and noised,
/// timestamps shifted by rig.time_offset. Same seed, same bytes.
std::vector<ImuSample> synth_imu(const TrajectorySpec& spec, const SensorRig& rig,
                                 double duration, std::uint64_t seed);

/// Odometry stream of the LiDAR body at odom_rate_hz with seeded noise.
std::vector<OdomSample> synth_odometry(const TrajectorySpec& spec, const SensorRig& rig,
                                       double duration, std::uint64_t seed);

/// Planes n . x = offset enclosing the origin region; the first three normals
/// are mutually well conditioned so point-to-plane updates see full rank.
std::vector<PlaneLandmark> gen_plane_world(int n_planes, std::uint64_t seed);

/// Scan over (t_begin, t_end]: evenly spaced timestamps, random ray directions
/// from the moving sensor, each point the nearest plane hit, expressed in the
/// body frame at its own sampling instant. Returns point-plane pairs.
std::vector<PlaneAssociation> raycast_scan(const std::vector<PlaneLandmark>& world,
                                           const TrajectorySpec& spec, double t_begin,
                                           double t_end, int n_points, std::uint64_t seed,
                                           double range_noise = 0.0);

/// Multi-frequency motion exciting all axes; peak rates near 1.5 rad/s and
/// 1.5 m/s^2. Frequencies are integer cycles over `duration`.
TrajectorySpec smooth_excitation_trajectory(double duration = 40.0);

/// Rotation about a single axis plus mild translation: the canonical
/// degenerate case for excitation gating.
TrajectorySpec single_axis_trajectory(int axis = 2, double duration = 40.0);

/// Constant body angular velocity and constant global velocity: matches the
/// constant-velocity filter model exactly.
TrajectorySpec constant_velocity_trajectory(const Vec3& velocity, const Vec3& omega);

}  // namespace liinit

#endif
