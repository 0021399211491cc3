#include "liinit/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "liinit/so3.hpp"

namespace liinit {

namespace {

// Huber scale from the residual norms: 3 * 1.4826 * MAD. Returns 0 when the
// spread collapses, which callers treat as "no reweighting".
double huber_scale(std::vector<double> norms) {
  if (norms.empty()) return 0.0;
  auto mid = norms.begin() + norms.size() / 2;
  std::nth_element(norms.begin(), mid, norms.end());
  const double med = *mid;
  for (auto& v : norms) v = std::abs(v - med);
  std::nth_element(norms.begin(), mid, norms.end());
  return 3.0 * 1.4826 * *mid;
}

Eigen::Matrix<double, 3, 2> basis_perp(const Vec3& g) {
  int imin;
  g.cwiseAbs().minCoeff(&imin);
  Eigen::Matrix<double, 3, 2> b;
  b.col(0) = g.cross(Vec3::Unit(imin)).normalized();
  b.col(1) = g.cross(Vec3(b.col(0))).normalized();
  return b;
}

}  // namespace

RotTimeSolution solve_rot_bias_dt(const std::vector<Vec3>& lidar_omega,
                                  const ImuDerived& imu_at_odom, int d_star, double period,
                                  bool refine_dt, const SolverOptions& opts) {
  if (!(period > 0.0)) throw std::invalid_argument("solve_rot_bias_dt: period must be positive");
  const int nl = static_cast<int>(lidar_omega.size());
  const int ni = static_cast<int>(imu_at_odom.size());
  const int k_begin = std::max(0, -d_star);
  const int k_end = std::min(nl, ni - d_star);
  if (k_end - k_begin < 10) {
    throw std::invalid_argument("solve_rot_bias_dt: fewer than 10 overlapping samples");
  }

  struct Params {
    Mat3 r = Mat3::Identity();
    Vec3 b = Vec3::Zero();
    double dt = 0.0;
  };
  const int dim = refine_dt ? 7 : 6;
  const double dt_limit = period * (1.0 - 1e-9);

  // The robust scale is held fixed while the solver runs and re-estimated
  // only between solves (IRLS); recomputing it inside every cost evaluation
  // would make the solver compare costs measured against different scales.
  double robust_scale = 0.0;
  std::vector<double> norms(k_end - k_begin);
  const auto eval = [&](const Params& p, MatX* jtj, VecX* jtr) {
    std::vector<Vec3> residuals(k_end - k_begin);
    for (int k = k_begin; k < k_end; ++k) {
      const int i = k + d_star;
      residuals[k - k_begin] =
          p.r * lidar_omega[k] + p.b - imu_at_odom.omega[i] - p.dt * imu_at_odom.omega_dot[i];
      norms[k - k_begin] = residuals[k - k_begin].norm();
    }
    const double scale = robust_scale;

    double cost = 0.0;
    if (jtj) {
      jtj->setZero();
      jtr->setZero();
    }
    MatX jac(3, dim);
    for (int k = k_begin; k < k_end; ++k) {
      const Vec3& r = residuals[k - k_begin];
      const double n = norms[k - k_begin];
      double w = 1.0;
      if (scale > 1e-12 && n > scale) {
        cost += scale * (2.0 * n - scale);
        w = scale / n;
      } else {
        cost += r.squaredNorm();
      }
      if (jtj) {
        jac.block<3, 3>(0, 0) = -p.r * skew<double>(lidar_omega[k]);
        jac.block<3, 3>(0, 3) = Mat3::Identity();
        if (refine_dt) jac.col(6) = -imu_at_odom.omega_dot[k + d_star];
        jtj->noalias() += w * jac.transpose() * jac;
        jtr->noalias() += w * jac.transpose() * r;
      }
    }
    return cost;
  };

  const auto retract = [&](const Params& p, const VecX& delta) {
    Params out;
    out.r = p.r * so3_exp<double>(Vec3(delta.segment<3>(0)));
    out.b = p.b + delta.segment<3>(3);
    out.dt = refine_dt ? std::clamp(p.dt + delta[6], -dt_limit, dt_limit) : 0.0;
    return out;
  };

  Params p;
  SolverStats stats = damped_gauss_newton(p, dim, eval, retract, opts);
  if (opts.use_huber) {
    for (int pass = 0; pass < 2; ++pass) {
      eval(p, nullptr, nullptr);
      const double scale = huber_scale(norms);
      if (!(scale > 1e-12)) break;
      robust_scale = scale;
      const int prev = stats.iterations;
      stats = damped_gauss_newton(p, dim, eval, retract, opts);
      stats.iterations += prev;
    }
  }

  RotTimeSolution sol;
  sol.r_imu_lidar = p.r;
  sol.gyro_bias = p.b;
  sol.delta_t = p.dt;
  sol.final_cost = stats.final_cost;
  sol.iterations = stats.iterations;
  sol.converged = stats.converged;
  return sol;
}

AlignedImu align_imu(const ImuDerived& imu_at_odom, int n_lidar, int d_star, double delta_t,
                     double period) {
  if (!(period > 0.0)) throw std::invalid_argument("align_imu: period must be positive");
  if (!(std::abs(delta_t) < period)) {
    throw std::invalid_argument("align_imu: |delta_t| must be below one odometry period");
  }
  const int ni = static_cast<int>(imu_at_odom.size());

  AlignedImu out;
  out.k_begin = std::max(0, -d_star);
  // The acceleration extrapolation reads sample i+1, so the usable range ends
  // one sample earlier than the angular-velocity overlap.
  const int k_end = std::min(n_lidar, ni - 1 - d_star);
  if (k_end <= out.k_begin) throw std::invalid_argument("align_imu: no overlapping samples");

  const double s = delta_t / period;
  for (int k = out.k_begin; k < k_end; ++k) {
    const int i = k + d_star;
    out.omega.push_back(imu_at_odom.omega[i] + delta_t * imu_at_odom.omega_dot[i]);
    out.accel.push_back(imu_at_odom.accel[i] + s * (imu_at_odom.accel[i + 1] - imu_at_odom.accel[i]));
  }
  out.trimmed = n_lidar - static_cast<int>(out.omega.size());
  return out;
}

std::vector<Vec3> lidar_body_accel(const LidarDerived& lidar, const Vec3& gravity) {
  std::vector<Vec3> out(lidar.size());
  for (std::size_t k = 0; k < lidar.size(); ++k) {
    out[k] = lidar.rotation[k].transpose() * (lidar.accel[k] - gravity);
  }
  return out;
}

TransGravSolution solve_trans_bias_gravity(const LidarDerived& lidar, const AlignedImu& aligned,
                                           const Mat3& r_imu_lidar, double excitation_threshold,
                                           const SolverOptions& opts) {
  const int n = static_cast<int>(aligned.accel.size());
  if (n < 10) throw std::invalid_argument("solve_trans_bias_gravity: fewer than 10 samples");
  if (aligned.k_begin + n > static_cast<int>(lidar.size())) {
    throw std::invalid_argument("solve_trans_bias_gravity: aligned range exceeds odometry series");
  }

  std::vector<Mat3> regressors(n);
  Mat3 gram = Mat3::Zero();
  for (int i = 0; i < n; ++i) {
    const int k = aligned.k_begin + i;
    const Mat3 wx = skew<double>(lidar.omega[k]);
    regressors[i] = wx * wx + skew<double>(lidar.omega_dot[k]);
    gram += regressors[i].transpose() * regressors[i];
  }
  if (excitation_threshold > 0.0) {
    Eigen::SelfAdjointEigenSolver<Mat3> eig(gram);
    if (eig.eigenvalues()(0) / n <= excitation_threshold) {
      throw std::runtime_error("solve_trans_bias_gravity: insufficient translational excitation");
    }
  }

  struct Params {
    Vec3 p = Vec3::Zero();
    Vec3 ba = Vec3::Zero();
    Vec3 g = Vec3(0.0, 0.0, 9.81);
  };
  const Mat3 rt = r_imu_lidar.transpose();

  // Same IRLS arrangement as the rotation solve: the scale stays fixed inside
  // each solver run so its cost comparisons stay consistent.
  double robust_scale = 0.0;
  std::vector<double> norms(n);
  const auto eval = [&](const Params& prm, MatX* jtj, VecX* jtr) {
    std::vector<Vec3> residuals(n);
    for (int i = 0; i < n; ++i) {
      const int k = aligned.k_begin + i;
      const Vec3 a_body = lidar.rotation[k].transpose() * (lidar.accel[k] - prm.g);
      residuals[i] = rt * (aligned.accel[i] - prm.ba) - a_body - regressors[i] * prm.p;
      norms[i] = residuals[i].norm();
    }
    const double scale = robust_scale;

    const Eigen::Matrix<double, 3, 2> basis = basis_perp(prm.g);
    const Mat3 gx = skew<double>(prm.g);
    double cost = 0.0;
    if (jtj) {
      jtj->setZero();
      jtr->setZero();
    }
    MatX jac(3, 8);
    for (int i = 0; i < n; ++i) {
      const int k = aligned.k_begin + i;
      const Vec3& r = residuals[i];
      double w = 1.0;
      if (scale > 1e-12 && norms[i] > scale) {
        cost += scale * (2.0 * norms[i] - scale);
        w = scale / norms[i];
      } else {
        cost += r.squaredNorm();
      }
      if (jtj) {
        jac.block<3, 3>(0, 0) = -regressors[i];
        jac.block<3, 3>(0, 3) = -rt;
        jac.block<3, 2>(0, 6) = -lidar.rotation[k].transpose() * gx * basis;
        jtj->noalias() += w * jac.transpose() * jac;
        jtr->noalias() += w * jac.transpose() * r;
      }
    }
    return cost;
  };

  const auto retract = [&](const Params& prm, const VecX& delta) {
    Params out;
    out.p = prm.p + delta.segment<3>(0);
    out.ba = prm.ba + delta.segment<3>(3);
    out.g = so3_exp<double>(Vec3(basis_perp(prm.g) * delta.segment<2>(6))) * prm.g;
    return out;
  };

  Params prm;
  SolverStats stats = damped_gauss_newton(prm, 8, eval, retract, opts);
  if (opts.use_huber) {
    for (int pass = 0; pass < 2; ++pass) {
      eval(prm, nullptr, nullptr);
      const double scale = huber_scale(norms);
      if (!(scale > 1e-12)) break;
      robust_scale = scale;
      const int prev = stats.iterations;
      stats = damped_gauss_newton(prm, 8, eval, retract, opts);
      stats.iterations += prev;
    }
  }

  TransGravSolution sol;
  sol.p_imu_in_lidar = prm.p;
  sol.p_lidar_in_imu = -r_imu_lidar * prm.p;
  sol.accel_bias = prm.ba;
  sol.gravity = prm.g;
  sol.final_cost = stats.final_cost;
  sol.iterations = stats.iterations;
  sol.converged = stats.converged;
  return sol;
}

}  // namespace liinit
