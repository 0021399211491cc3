#include "liinit/excitation.hpp"

#include <stdexcept>

#include "liinit/so3.hpp"

namespace liinit {

Mat3 rotation_gram(const std::vector<Vec3>& omega) {
  Mat3 g = Mat3::Zero();
  for (const auto& w : omega) {
    const Mat3 wx = skew<double>(w);
    g += wx.transpose() * wx;
  }
  return g;
}

Mat3 translation_gram(const std::vector<Vec3>& omega, const std::vector<Vec3>& omega_dot) {
  if (omega.size() != omega_dot.size()) {
    throw std::invalid_argument("translation_gram: series length mismatch");
  }
  Mat3 g = Mat3::Zero();
  for (std::size_t k = 0; k < omega.size(); ++k) {
    const Mat3 wx = skew<double>(omega[k]);
    const Mat3 m = wx * wx + skew<double>(omega_dot[k]);
    g += m.transpose() * m;
  }
  return g;
}

ExcitationReport assess(const Mat3& rot_gram, const Mat3& trans_gram, int sample_count,
                        const ExcitationThresholds& thresholds) {
  if (sample_count < 0) throw std::invalid_argument("assess: negative sample count");

  ExcitationReport rep;
  rep.rot_gram = rot_gram;
  rep.trans_gram = trans_gram;
  rep.sample_count = sample_count;

  if (sample_count == 0 || (rot_gram.isZero(0.0) && trans_gram.isZero(0.0))) {
    rep.degenerate = true;
    return rep;
  }

  // The Grams are symmetric PSD, so singular values coincide with eigenvalues
  // and the singular vectors with the eigenvectors.
  Eigen::SelfAdjointEigenSolver<Mat3> rot_eig(rot_gram);
  Eigen::SelfAdjointEigenSolver<Mat3> trans_eig(trans_gram);
  // SelfAdjointEigenSolver sorts ascending; report descending.
  rep.rot_singular = rot_eig.eigenvalues().reverse().cwiseMax(0.0);
  rep.trans_singular = trans_eig.eigenvalues().reverse().cwiseMax(0.0);
  rep.weakest_rot_axis = rot_eig.eigenvectors().col(0);
  rep.weakest_trans_axis = trans_eig.eigenvectors().col(0);

  const double n = static_cast<double>(sample_count);
  rep.rot_sufficient = rep.rot_singular[2] / n > thresholds.rotation;
  rep.trans_sufficient = rep.trans_singular[2] / n > thresholds.translation;
  rep.sufficient = rep.rot_sufficient && rep.trans_sufficient;
  return rep;
}

void ExcitationAccumulator::add(const Vec3& omega, const Vec3& omega_dot) {
  const Mat3 wx = skew<double>(omega);
  rot_gram_ += wx.transpose() * wx;
  const Mat3 m = wx * wx + skew<double>(omega_dot);
  trans_gram_ += m.transpose() * m;
  ++count_;
}

ExcitationReport ExcitationAccumulator::report(const ExcitationThresholds& thresholds) const {
  return assess(rot_gram_, trans_gram_, count_, thresholds);
}

}  // namespace liinit
