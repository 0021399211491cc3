#include "liinit/cv_filter.hpp"

#include <cmath>
#include <stdexcept>

#include "liinit/so3.hpp"

namespace liinit {

CvState boxplus(const CvState& x, const Vec12& u) {
  CvState out;
  out.rotation = x.rotation * so3_exp<double>(u.segment<3>(0));
  out.position = x.position + u.segment<3>(3);
  out.velocity = x.velocity + u.segment<3>(6);
  out.omega = x.omega + u.segment<3>(9);
  return out;
}

Vec12 boxminus(const CvState& x1, const CvState& x2) {
  Vec12 u;
  u.segment<3>(0) = so3_log<double>(Mat3(x2.rotation.transpose() * x1.rotation));
  u.segment<3>(3) = x1.position - x2.position;
  u.segment<3>(6) = x1.velocity - x2.velocity;
  u.segment<3>(9) = x1.omega - x2.omega;
  return u;
}

Mat6 ProcessNoise::matrix() const {
  Mat6 q = Mat6::Zero();
  q.diagonal().head<3>().setConstant(velocity);
  q.diagonal().tail<3>().setConstant(omega);
  return q;
}

CvState predict_state(const CvState& x, double dt) {
  Vec12 motion;
  motion.segment<3>(0) = x.omega * dt;
  motion.segment<3>(3) = x.velocity * dt;
  motion.segment<3>(6).setZero();
  motion.segment<3>(9).setZero();
  return boxplus(x, motion);
}

void transition_jacobians(const CvState& x, double dt, Mat12* f_x, Mat12x6* f_w) {
  if (f_x) {
    f_x->setIdentity();
    const Vec3 wdt = x.omega * dt;
    f_x->block<3, 3>(0, 0) = so3_exp<double>(Vec3(-wdt));
    f_x->block<3, 3>(0, 9) = so3_right_jacobian<double>(wdt) * dt;
    f_x->block<3, 3>(3, 6) = Mat3::Identity() * dt;
  }
  if (f_w) {
    f_w->setZero();
    f_w->block<3, 3>(6, 0) = Mat3::Identity() * dt;
    f_w->block<3, 3>(9, 3) = Mat3::Identity() * dt;
  }
}

Prediction predict(const CvState& x, const Mat12& cov, double dt, const ProcessNoise& q) {
  if (!(dt >= 0.0)) throw std::invalid_argument("predict: dt must be non-negative");
  Mat12 f_x;
  Mat12x6 f_w;
  transition_jacobians(x, dt, &f_x, &f_w);
  Prediction out;
  out.state = predict_state(x, dt);
  out.cov = f_x * cov * f_x.transpose() + f_w * q.matrix() * f_w.transpose();
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

Vec3 compensate_point(const CvState& s, const TimedPoint& pt, double scan_end_time) {
  const double dt = scan_end_time - pt.t;
  if (dt < 0.0) throw std::invalid_argument("compensate_point: point is later than scan end");
  const Mat3 rot = so3_exp<double>(Vec3(-s.omega * dt));
  const Vec3 trans = -(s.rotation.transpose() * s.velocity) * dt;
  return rot * pt.xyz + trans;
}

int subframe_index(double t, double t_begin, double t_end, int n) {
  const double f = (t - t_begin) / (t_end - t_begin);
  const int idx = static_cast<int>(std::ceil(f * n)) - 1;  // right-inclusive intervals
  return std::min(std::max(idx, 0), n - 1);
}

std::vector<SubScan> split_scan(const std::vector<TimedPoint>& scan, int n, double t_begin,
                                double t_end) {
  if (n < 1) throw std::invalid_argument("split_scan: need at least one sub-scan");
  if (scan.empty()) throw std::invalid_argument("split_scan: empty scan");
  if (!(t_end > t_begin)) throw std::invalid_argument("split_scan: empty time span");

  const double span = t_end - t_begin;
  std::vector<SubScan> subs(n);
  for (int i = 0; i < n; ++i) {
    subs[i].t_begin = t_begin + span * i / n;
    subs[i].t_end = t_begin + span * (i + 1) / n;
  }
  for (const auto& pt : scan) {
    subs[subframe_index(pt.t, t_begin, t_end, n)].points.push_back(pt);
  }
  return subs;
}

std::vector<SubScan> split_scan(const std::vector<TimedPoint>& scan, int n) {
  if (scan.empty()) throw std::invalid_argument("split_scan: empty scan");
  double lo = scan.front().t, hi = scan.front().t;
  for (const auto& pt : scan) {
    lo = std::min(lo, pt.t);
    hi = std::max(hi, pt.t);
  }
  return split_scan(scan, n, lo, hi);
}

UpdateResult iterated_update(const CvState& predicted, const Mat12& predicted_cov,
                             const std::vector<PlaneAssociation>& associations,
                             double scan_end_time, const UpdateOptions& opts) {
  if (opts.max_iterations < 1) throw std::invalid_argument("iterated_update: max_iterations < 1");
  if (!(opts.point_noise > 0.0)) throw std::invalid_argument("iterated_update: point noise <= 0");

  UpdateResult out;
  out.state = predicted;
  out.cov = predicted_cov;
  if (associations.empty()) {
    out.converged = true;
    return out;
  }

  const Mat12 prior_info = predicted_cov.ldlt().solve(Mat12::Identity());
  const double meas_info = 1.0 / (opts.point_noise * opts.point_noise);

  const auto normal_equations = [&](const CvState& x, Mat12* hessian, Vec12* gradient) {
    const Vec12 err = boxminus(x, predicted);
    Mat12 j_prior = Mat12::Identity();
    j_prior.block<3, 3>(0, 0) = so3_right_jacobian_inverse<double>(err.segment<3>(0));

    *hessian = j_prior.transpose() * prior_info * j_prior;
    if (gradient) *gradient = j_prior.transpose() * prior_info * err;

    Eigen::Matrix<double, 1, 12> h;
    for (const auto& assoc : associations) {
      const double dt = opts.compensate ? scan_end_time - assoc.point.t : 0.0;
      if (dt < 0.0) throw std::invalid_argument("iterated_update: point later than scan end");
      const Vec3 wdt = -x.omega * dt;
      const Mat3 r_comp = so3_exp<double>(wdt);
      const Vec3 local = r_comp * assoc.point.xyz;  // compensated, before translation
      const Vec3 world = x.rotation * local + x.position - x.velocity * dt;
      const double residual = assoc.plane.normal.dot(world) - assoc.plane.offset;

      const Eigen::RowVector3d nt = assoc.plane.normal.transpose();
      h.segment<3>(0) = -nt * x.rotation * skew<double>(local);
      h.segment<3>(3) = nt;
      h.segment<3>(6) = -dt * nt;
      h.segment<3>(9) = nt * x.rotation * r_comp * skew<double>(assoc.point.xyz) *
                        so3_right_jacobian<double>(wdt) * dt;

      hessian->noalias() += meas_info * h.transpose() * h;
      if (gradient) gradient->noalias() += meas_info * h.transpose() * residual;
    }
  };

  CvState x = predicted;
  Mat12 hessian;
  Vec12 gradient;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    normal_equations(x, &hessian, &gradient);
    const Vec12 step = hessian.ldlt().solve(Vec12(-gradient));
    x = boxplus(x, step);
    ++out.iterations;
    if (step.norm() < opts.step_tolerance) {
      out.converged = true;
      break;
    }
  }

  out.state = x;
  normal_equations(x, &hessian, nullptr);
  out.cov = hessian.ldlt().solve(Mat12::Identity());
  out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
  return out;
}

}  // namespace liinit
