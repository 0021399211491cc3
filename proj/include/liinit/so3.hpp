#ifndef LIINIT_SO3_HPP
#define LIINIT_SO3_HPP

// SO(3) primitives: skew, exponential/logarithm maps, right Jacobians, and the
// boxplus/boxminus pair for product states SO(3) x R^n. Rotations are plain 3x3
// matrices; quaternions appear only at I/O boundaries.

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "liinit/types.hpp"

namespace liinit {

// Below this angle (rad) the trigonometric coefficients switch to their Taylor
// expansions; both branches agree to machine precision at the boundary.
inline constexpr double kSmallAngle = 1e-8;

template <typename Scalar>
Mat3T<Scalar> skew(const Vec3T<Scalar>& v) {
  Mat3T<Scalar> m;
  m << Scalar(0), -v.z(), v.y(),
       v.z(), Scalar(0), -v.x(),
       -v.y(), v.x(), Scalar(0);
  return m;
}

template <typename Scalar>
Vec3T<Scalar> vee(const Mat3T<Scalar>& m) {
  return Vec3T<Scalar>(m(2, 1), m(0, 2), m(1, 0));
}

/// Max-norm residual of the orthonormality conditions |R R^T - I| and |det R - 1|.
template <typename Scalar>
Scalar rotation_residual(const Mat3T<Scalar>& r) {
  Scalar ortho = (r * r.transpose() - Mat3T<Scalar>::Identity()).template lpNorm<Eigen::Infinity>();
  return std::max(ortho, std::abs(r.determinant() - Scalar(1)));
}

template <typename Scalar>
bool is_rotation(const Mat3T<Scalar>& r, Scalar tol = Scalar(1e-9)) {
  return rotation_residual(r) <= tol;
}

/// Rodrigues formula. Unconditionally well defined; no angle wrapping.
template <typename Scalar>
Mat3T<Scalar> so3_exp(const Vec3T<Scalar>& r) {
  const Scalar theta2 = r.squaredNorm();
  const Mat3T<Scalar> rx = skew(r);
  Scalar a, b;  // R = I + a*[r]x + b*[r]x^2
  if (theta2 < Scalar(kSmallAngle * kSmallAngle)) {
    a = Scalar(1) - theta2 / Scalar(6);
    b = Scalar(0.5) - theta2 / Scalar(24);
  } else {
    const Scalar theta = std::sqrt(theta2);
    a = std::sin(theta) / theta;
    b = (Scalar(1) - std::cos(theta)) / theta2;
  }
  return Mat3T<Scalar>::Identity() + a * rx + b * rx * rx;
}

/// Inverse of so3_exp onto the ball of radius pi. Rejects matrices whose
/// orthonormality residual exceeds `ortho_tol`.
template <typename Scalar>
Vec3T<Scalar> so3_log(const Mat3T<Scalar>& r, Scalar ortho_tol = Scalar(1e-6)) {
  if (rotation_residual(r) > ortho_tol) {
    throw std::invalid_argument("so3_log: input is not orthonormal");
  }
  const Scalar cos_theta =
      std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Vec3T<Scalar> half_vee(Scalar(0.5) * (r(2, 1) - r(1, 2)),
                               Scalar(0.5) * (r(0, 2) - r(2, 0)),
                               Scalar(0.5) * (r(1, 0) - r(0, 1)));  // = sin(theta) * axis
  // atan2 stays well conditioned where acos(cos_theta) loses half its digits
  // (theta near 0 and near pi).
  const Scalar sin_norm = half_vee.norm();
  const Scalar theta = std::atan2(sin_norm, cos_theta);
  if (theta < Scalar(1e-7)) {
    const Scalar theta2 = theta * theta;
    return half_vee * (Scalar(1) + theta2 / Scalar(6) + Scalar(7) * theta2 * theta2 / Scalar(360));
  }
  if (theta > Scalar(std::numbers::pi) - Scalar(1e-4)) {
    // sin(theta) is too small to trust half_vee alone; recover the axis from the
    // symmetric part, n n^T = (sym(R) - cos(theta) I) / (1 - cos(theta)).
    const Mat3T<Scalar> sym = Scalar(0.5) * (r + r.transpose());
    int imax;
    (sym.diagonal().array() - cos_theta).maxCoeff(&imax);
    Vec3T<Scalar> axis;
    axis[imax] = std::sqrt(std::max((sym(imax, imax) - cos_theta) / (Scalar(1) - cos_theta),
                                    Scalar(0)));
    for (int j = 0; j < 3; ++j) {
      if (j != imax) axis[j] = sym(imax, j) / ((Scalar(1) - cos_theta) * axis[imax]);
    }
    axis.normalize();
    const Scalar sign_ref = half_vee.dot(axis);  // = sin(theta), noise near exactly pi
    if (sign_ref < Scalar(-1e-12)) {
      axis = -axis;
    } else if (sign_ref < Scalar(1e-12)) {
      // Exactly pi: both signs are valid logs; pick the one whose first nonzero
      // component is positive so the result is deterministic.
      for (int j = 0; j < 3; ++j) {
        if (std::abs(axis[j]) > Scalar(1e-6)) {
          if (axis[j] < Scalar(0)) axis = -axis;
          break;
        }
      }
    }
    return theta * axis;
  }
  return half_vee * (theta / sin_norm);
}

/// Right Jacobian of SO(3): Exp(r + d) ~ Exp(r) Exp(Jr(r) d).
template <typename Scalar>
Mat3T<Scalar> so3_right_jacobian(const Vec3T<Scalar>& r) {
  const Scalar theta2 = r.squaredNorm();
  const Mat3T<Scalar> rx = skew(r);
  Scalar c1, c2;  // Jr = I - c1*[r]x + c2*[r]x^2
  if (theta2 < Scalar(kSmallAngle * kSmallAngle)) {
    c1 = Scalar(0.5) - theta2 / Scalar(24);
    c2 = Scalar(1) / Scalar(6) - theta2 / Scalar(120);
  } else {
    const Scalar theta = std::sqrt(theta2);
    c1 = (Scalar(1) - std::cos(theta)) / theta2;
    c2 = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3T<Scalar>::Identity() - c1 * rx + c2 * rx * rx;
}

template <typename Scalar>
Mat3T<Scalar> so3_right_jacobian_inverse(const Vec3T<Scalar>& r) {
  const Scalar theta2 = r.squaredNorm();
  const Mat3T<Scalar> rx = skew(r);
  Scalar c;  // Jr^-1 = I + [r]x/2 + c*[r]x^2
  if (theta2 < Scalar(kSmallAngle * kSmallAngle)) {
    c = Scalar(1) / Scalar(12) + theta2 / Scalar(720);
  } else {
    const Scalar theta = std::sqrt(theta2);
    c = Scalar(1) / theta2 - (Scalar(1) + std::cos(theta)) / (Scalar(2) * theta * std::sin(theta));
  }
  return Mat3T<Scalar>::Identity() + Scalar(0.5) * rx + c * rx * rx;
}

/// Time derivative of Jr(r(t)) for analytic angular-acceleration evaluation:
/// d/dt [Jr(r) rdot] = so3_right_jacobian_dot(r, rdot) * rdot + Jr(r) * rddot.
template <typename Scalar>
Mat3T<Scalar> so3_right_jacobian_dot(const Vec3T<Scalar>& r, const Vec3T<Scalar>& rdot) {
  const Scalar theta2 = r.squaredNorm();
  const Scalar rdr = r.dot(rdot);
  const Mat3T<Scalar> rx = skew(r);
  const Mat3T<Scalar> vx = skew(rdot);
  // Coefficients c1, c2 as in so3_right_jacobian; d1 = c1'(theta)/theta,
  // d2 = c2'(theta)/theta so that dc/dt = d * (r . rdot).
  Scalar c1, c2, d1, d2;
  if (theta2 < Scalar(1e-6)) {
    c1 = Scalar(0.5) - theta2 / Scalar(24);
    c2 = Scalar(1) / Scalar(6) - theta2 / Scalar(120);
    d1 = Scalar(-1) / Scalar(12) + theta2 / Scalar(180);
    d2 = Scalar(-1) / Scalar(60) + theta2 / Scalar(1260);
  } else {
    const Scalar theta = std::sqrt(theta2);
    const Scalar s = std::sin(theta), co = std::cos(theta);
    c1 = (Scalar(1) - co) / theta2;
    c2 = (theta - s) / (theta2 * theta);
    d1 = (theta * s - Scalar(2) * (Scalar(1) - co)) / (theta2 * theta2);
    d2 = ((Scalar(1) - co) * theta - Scalar(3) * (theta - s)) / (theta2 * theta2 * theta);
  }
  return -d1 * rdr * rx - c1 * vx + d2 * rdr * rx * rx + c2 * (vx * rx + rx * vx);
}

/// Product-manifold state SO(3) x R^n with a dynamically sized vector factor.
struct RotVecState {
  Mat3 rotation = Mat3::Identity();
  VecX vector;

  int tangent_dim() const { return 3 + static_cast<int>(vector.size()); }
};

/// x (+) u with u = [rotation tangent; vector increment].
inline RotVecState boxplus(const RotVecState& x, const VecX& u) {
  if (u.size() != x.tangent_dim()) {
    throw std::invalid_argument("boxplus: tangent dimension mismatch");
  }
  RotVecState out;
  out.rotation = x.rotation * so3_exp<double>(u.head<3>());
  out.vector = x.vector + u.tail(x.vector.size());
  return out;
}

/// x1 (-) x2, the tangent u with x2 (+) u = x1 (rotation part via Log(R2^T R1)).
inline VecX boxminus(const RotVecState& x1, const RotVecState& x2) {
  if (x1.vector.size() != x2.vector.size()) {
    throw std::invalid_argument("boxminus: state dimension mismatch");
  }
  VecX u(x1.tangent_dim());
  u.head<3>() = so3_log<double>(Mat3(x2.rotation.transpose() * x1.rotation));
  u.tail(x1.vector.size()) = x1.vector - x2.vector;
  return u;
}

}  // namespace liinit

#endif
