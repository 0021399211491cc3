#ifndef LIINIT_EXCITATION_HPP
#define LIINIT_EXCITATION_HPP

// Observability assessment. The rotation solve sees angular velocity through
// rows proportional to [w]x, the translation solve through [w]x^2 + [wdot]x;
// the accumulated Gram matrices of those regressors tell whether each solve is
// well conditioned and which axis is weakest.

#include <vector>

#include "liinit/types.hpp"

namespace liinit {

struct ExcitationThresholds {
  double rotation = 0.1;     // min singular value of the rotation Gram, per sample
  double translation = 0.25; // min singular value of the translation Gram, per sample
};

struct ExcitationReport {
  Mat3 rot_gram = Mat3::Zero();
  Mat3 trans_gram = Mat3::Zero();
  int sample_count = 0;
  Vec3 rot_singular = Vec3::Zero();    // descending, raw (not normalized)
  Vec3 trans_singular = Vec3::Zero();  // descending, raw
  Vec3 weakest_rot_axis = Vec3::UnitZ();
  Vec3 weakest_trans_axis = Vec3::UnitZ();
  bool rot_sufficient = false;
  bool trans_sufficient = false;
  bool sufficient = false;
  bool degenerate = false;  // zero Gram: weakest axes are placeholders
};

/// sum_k [w_k]x^T [w_k]x
Mat3 rotation_gram(const std::vector<Vec3>& omega);

/// sum_k ([w_k]x^2 + [wdot_k]x)^T ([w_k]x^2 + [wdot_k]x)
Mat3 translation_gram(const std::vector<Vec3>& omega, const std::vector<Vec3>& omega_dot);

/// Verdict and weakest-axis report. Sufficiency compares the smallest singular
/// value divided by `sample_count` against the thresholds.
ExcitationReport assess(const Mat3& rot_gram, const Mat3& trans_gram, int sample_count,
                        const ExcitationThresholds& thresholds = {});

/// Per-frame accumulator; re-assesses over everything seen so far (no
/// forgetting). Single-owner, not thread safe.
class ExcitationAccumulator {
 public:
  void add(const Vec3& omega, const Vec3& omega_dot);
  ExcitationReport report(const ExcitationThresholds& thresholds = {}) const;
  int count() const { return count_; }

 private:
  Mat3 rot_gram_ = Mat3::Zero();
  Mat3 trans_gram_ = Mat3::Zero();
  int count_ = 0;
};

}  // namespace liinit

#endif
