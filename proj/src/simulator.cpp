#include "liinit/simulator.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "liinit/so3.hpp"

namespace liinit {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kGravityNorm = 9.81;
}  // namespace

double SinusoidAxis::value(double t) const {
  double v = linear * t;
  for (std::size_t j = 0; j < amplitude.size(); ++j) {
    v += amplitude[j] * std::sin(kTwoPi * freq_hz[j] * t + phase[j]);
  }
  return v;
}

double SinusoidAxis::deriv(double t) const {
  double v = linear;
  for (std::size_t j = 0; j < amplitude.size(); ++j) {
    const double w = kTwoPi * freq_hz[j];
    v += amplitude[j] * w * std::cos(w * t + phase[j]);
  }
  return v;
}

double SinusoidAxis::deriv2(double t) const {
  double v = 0.0;
  for (std::size_t j = 0; j < amplitude.size(); ++j) {
    const double w = kTwoPi * freq_hz[j];
    v += -amplitude[j] * w * w * std::sin(w * t + phase[j]);
  }
  return v;
}

TrajectorySample eval_trajectory(const TrajectorySpec& spec, double t) {
  TrajectorySample s;
  s.t = t;
  Vec3 theta, theta_dot, theta_ddot;
  for (int i = 0; i < 3; ++i) {
    s.position[i] = spec.position[i].value(t);
    s.velocity[i] = spec.position[i].deriv(t);
    s.accel[i] = spec.position[i].deriv2(t);
    theta[i] = spec.rotvec[i].value(t);
    theta_dot[i] = spec.rotvec[i].deriv(t);
    theta_ddot[i] = spec.rotvec[i].deriv2(t);
  }
  s.rotation = so3_exp<double>(theta);
  const Mat3 jr = so3_right_jacobian<double>(theta);
  s.omega = jr * theta_dot;
  s.omega_dot = so3_right_jacobian_dot<double>(theta, theta_dot) * theta_dot + jr * theta_ddot;
  return s;
}

void SensorRig::validate() const {
  if (!(imu_rate_hz > 0.0) || !(odom_rate_hz > 0.0)) {
    throw std::invalid_argument("SensorRig: rates must be positive");
  }
  if (std::abs(gravity.norm() - kGravityNorm) > 1e-9) {
    throw std::invalid_argument("SensorRig: |gravity| must be 9.81");
  }
  if (!is_rotation<double>(r_imu_lidar, 1e-9)) {
    throw std::invalid_argument("SensorRig: r_imu_lidar is not a rotation");
  }
  if (gyro_noise < 0.0 || accel_noise < 0.0 || odom_att_noise < 0.0 || odom_pos_noise < 0.0 ||
      odom_vel_noise < 0.0 || odom_omega_noise < 0.0) {
    throw std::invalid_argument("SensorRig: noise levels must be non-negative");
  }
}

std::vector<ImuSample> synth_imu(const TrajectorySpec& spec, const SensorRig& rig,
                                 double duration, std::uint64_t seed) {
  rig.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("synth_imu: duration must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto noise3 = [&](double sigma) {
    Vec3 n(gauss(rng), gauss(rng), gauss(rng));
    return Vec3(sigma * n);
  };

  const int n = static_cast<int>(std::floor(duration * rig.imu_rate_hz)) + 1;
  std::vector<ImuSample> out(n);
  for (int i = 0; i < n; ++i) {
    const double t = i / rig.imu_rate_hz;
    const TrajectorySample s = eval_trajectory(spec, t);
    // Rigid transfer from the LiDAR body to the IMU: shared angular velocity,
    // lever-arm terms for the linear acceleration, gravity removed to give
    // specific force.
    const Vec3 omega_imu = rig.r_imu_lidar * s.omega;
    const Mat3 wx = skew<double>(s.omega);
    const Vec3 accel_body =
        s.rotation.transpose() * (s.accel - rig.gravity) +
        (wx * wx + skew<double>(s.omega_dot)) * rig.p_imu_in_lidar;
    const Vec3 accel_imu = rig.r_imu_lidar * accel_body;

    out[i].t = t + rig.time_offset;
    out[i].gyro = omega_imu + rig.gyro_bias + noise3(rig.gyro_noise);
    out[i].accel = accel_imu + rig.accel_bias + noise3(rig.accel_noise);
  }
  return out;
}

std::vector<OdomSample> synth_odometry(const TrajectorySpec& spec, const SensorRig& rig,
                                       double duration, std::uint64_t seed) {
  rig.validate();
  if (!(duration > 0.0)) throw std::invalid_argument("synth_odometry: duration must be positive");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const auto noise3 = [&](double sigma) {
    Vec3 n(gauss(rng), gauss(rng), gauss(rng));
    return Vec3(sigma * n);
  };

  const int n = static_cast<int>(std::floor(duration * rig.odom_rate_hz)) + 1;
  std::vector<OdomSample> out(n);
  for (int k = 0; k < n; ++k) {
    const double t = k / rig.odom_rate_hz;
    const TrajectorySample s = eval_trajectory(spec, t);
    out[k].t = t;
    out[k].rotation = s.rotation * so3_exp<double>(noise3(rig.odom_att_noise));
    out[k].position = s.position + noise3(rig.odom_pos_noise);
    out[k].velocity = s.velocity + noise3(rig.odom_vel_noise);
    out[k].omega = s.omega + noise3(rig.odom_omega_noise);
  }
  return out;
}

std::vector<PlaneLandmark> gen_plane_world(int n_planes, std::uint64_t seed) {
  if (n_planes < 1) throw std::invalid_argument("gen_plane_world: need at least one plane");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> offset(5.0, 9.0);

  const auto random_unit = [&] {
    Vec3 v;
    do {
      v = Vec3(gauss(rng), gauss(rng), gauss(rng));
    } while (v.norm() < 1e-6);
    return Vec3(v.normalized());
  };

  std::vector<PlaneLandmark> world(n_planes);
  // A randomly oriented orthogonal triple first, so any three of the leading
  // planes span R^3; extra planes are free directions.
  const Mat3 base = so3_exp<double>(Vec3(gauss(rng), gauss(rng), gauss(rng)));
  for (int i = 0; i < n_planes; ++i) {
    world[i].normal = (i < 3) ? Vec3(base.col(i)) : random_unit();
    world[i].offset = offset(rng);
  }
  return world;
}

std::vector<PlaneAssociation> raycast_scan(const std::vector<PlaneLandmark>& world,
                                           const TrajectorySpec& spec, double t_begin,
                                           double t_end, int n_points, std::uint64_t seed,
                                           double range_noise) {
  if (world.empty()) throw std::invalid_argument("raycast_scan: empty world");
  if (n_points < 1) throw std::invalid_argument("raycast_scan: need at least one point");
  if (!(t_end > t_begin)) throw std::invalid_argument("raycast_scan: empty time span");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<PlaneAssociation> out;
  out.reserve(n_points);
  for (int j = 0; j < n_points; ++j) {
    const double t = t_begin + (t_end - t_begin) * (j + 1) / n_points;
    const TrajectorySample s = eval_trajectory(spec, t);

    int plane_idx = -1;
    double range = 0.0;
    Vec3 dir_body = Vec3::UnitX();
    for (int attempt = 0; attempt < 200 && plane_idx < 0; ++attempt) {
      Vec3 d(gauss(rng), gauss(rng), gauss(rng));
      if (d.norm() < 1e-6) continue;
      d.normalize();
      const Vec3 dir_global = s.rotation * d;
      double best = 80.0;
      for (std::size_t p = 0; p < world.size(); ++p) {
        const double denom = world[p].normal.dot(dir_global);
        if (denom <= 1e-6) continue;
        const double hit = (world[p].offset - world[p].normal.dot(s.position)) / denom;
        if (hit >= 0.3 && hit < best) {
          best = hit;
          plane_idx = static_cast<int>(p);
        }
      }
      if (plane_idx >= 0) {
        range = best;
        dir_body = d;
      }
    }
    if (plane_idx < 0) {
      throw std::runtime_error("raycast_scan: no plane visible after 200 direction draws");
    }
    if (range_noise > 0.0) range += range_noise * gauss(rng);

    PlaneAssociation assoc;
    assoc.point.xyz = range * dir_body;
    assoc.point.t = t;
    assoc.plane = world[plane_idx];
    out.push_back(assoc);
  }
  return out;
}

TrajectorySpec smooth_excitation_trajectory(double duration) {
  if (!(duration > 0.0)) throw std::invalid_argument("trajectory: duration must be positive");
  const double base = 1.0 / duration;  // integer cycles across the window
  TrajectorySpec spec;
  spec.rotvec[0] = {0.0, {0.9, 0.35}, {5 * base, 11 * base}, {0.0, 1.1}};
  spec.rotvec[1] = {0.0, {0.8, 0.30}, {7 * base, 13 * base}, {0.7, 2.3}};
  spec.rotvec[2] = {0.0, {0.85, 0.30}, {9 * base, 3 * base}, {1.9, 0.4}};
  spec.position[0] = {0.0, {0.9}, {6 * base}, {0.3}};
  spec.position[1] = {0.0, {0.8}, {8 * base}, {1.5}};
  spec.position[2] = {0.0, {0.6}, {10 * base}, {2.6}};
  return spec;
}

TrajectorySpec single_axis_trajectory(int axis, double duration) {
  if (axis < 0 || axis > 2) throw std::invalid_argument("trajectory: axis must be 0..2");
  if (!(duration > 0.0)) throw std::invalid_argument("trajectory: duration must be positive");
  const double base = 1.0 / duration;
  TrajectorySpec spec;
  spec.rotvec[axis] = {0.0, {1.0, 0.3}, {8 * base, 13 * base}, {0.0, 1.2}};
  spec.position[0] = {0.0, {0.4}, {6 * base}, {0.3}};
  spec.position[1] = {0.0, {0.3}, {8 * base}, {1.5}};
  return spec;
}

TrajectorySpec constant_velocity_trajectory(const Vec3& velocity, const Vec3& omega) {
  TrajectorySpec spec;
  for (int i = 0; i < 3; ++i) {
    spec.position[i].linear = velocity[i];
    spec.rotvec[i].linear = omega[i];
  }
  return spec;
}

}  // namespace liinit
