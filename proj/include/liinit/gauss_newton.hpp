#ifndef LIINIT_GAUSS_NEWTON_HPP
#define LIINIT_GAUSS_NEWTON_HPP

// Small dense damped Gauss-Newton driver shared by the calibration solves.
// Parameters live in a caller-owned value type with a retraction, so manifold
// blocks (rotations, the gravity sphere) compose with plain vector blocks.

#include <stdexcept>

#include "liinit/types.hpp"

namespace liinit {

struct SolverOptions {
  double lambda_init = 1e-4;    // Levenberg damping seed
  double step_tolerance = 1e-8; // tangent norm declaring convergence
  int max_iterations = 50;
  bool use_huber = false;       // IRLS reweighting, scale 3 * MAD-sigma
};

struct SolverStats {
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// eval(p, jtj, jtr) returns the cost at p and, when jtj is non-null, fills
/// the normal equations. retract(p, delta) returns the stepped parameters.
/// Damping: accepted steps scale lambda by 0.3, rejected ones by 3; five
/// consecutive rejections with non-decreasing cost throw (divergence).
template <typename Params, typename EvalFn, typename RetractFn>
SolverStats damped_gauss_newton(Params& p, int tangent_dim, EvalFn&& eval, RetractFn&& retract,
                                const SolverOptions& opts) {
  MatX jtj(tangent_dim, tangent_dim);
  VecX jtr(tangent_dim);
  double cost = eval(p, &jtj, &jtr);
  double lambda = opts.lambda_init;

  SolverStats stats;
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    int rejects = 0;
    bool accepted = false;
    while (!accepted) {
      MatX damped = jtj;
      damped.diagonal().array() += lambda;
      const VecX delta = damped.ldlt().solve(VecX(-jtr));
      if (delta.norm() < opts.step_tolerance) {
        stats.converged = true;
        stats.final_cost = cost;
        return stats;
      }
      Params trial = retract(p, delta);
      MatX jtj_trial(tangent_dim, tangent_dim);
      VecX jtr_trial(tangent_dim);
      const double trial_cost = eval(trial, &jtj_trial, &jtr_trial);
      if (trial_cost < cost) {
        p = trial;
        cost = trial_cost;
        jtj = jtj_trial;
        jtr = jtr_trial;
        lambda *= 0.3;
        accepted = true;
      } else {
        lambda *= 3.0;
        if (++rejects >= 5) {
          throw std::runtime_error("damped_gauss_newton: cost kept increasing, diverged");
        }
      }
    }
    ++stats.iterations;
  }
  stats.final_cost = cost;
  return stats;
}

}  // namespace liinit

#endif
