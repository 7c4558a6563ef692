#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fado/autodiff.hpp"
#include "fado/dfs.hpp"

namespace fado {

inline void check_loss_eps(double eps) {
  if (!(eps > 0.0) || eps > 1e-3)
    throw std::invalid_argument("strategy_loss: eps must lie in (0, 1e-3]");
}

// Feedback-aware strategy NLL. Non-negative feedback pulls the ground-truth
// probability toward 1; negative feedback pushes it toward 0 through the
// mirrored -log(1 - p) term, clamped at eps to stay finite.
inline ad::Var strategy_loss(ad::Tape& t, ad::Var o_prime, int gt, double delta_s,
                             double eps = 1e-8) {
  check_loss_eps(eps);
  const Mat& logits = t.val(o_prime);
  if (logits.rows != 1) throw std::invalid_argument("strategy_loss: expected a single logit row");
  if (gt < 0 || gt >= logits.cols) throw std::out_of_range("strategy_loss: bad strategy id");
  if (!all_finite(logits)) throw std::invalid_argument("strategy_loss: non-finite logits");
  if (delta_s >= 0.0) return t.cross_entropy_rows(o_prime, {gt});
  ad::Var p_gt = t.pick(t.softmax_rows(o_prime), 0, gt);
  return t.neg_log_one_minus(p_gt, eps);
}

inline double strategy_loss_value(const Mat& o_prime, int gt, double delta_s,
                                  double eps = 1e-8) {
  check_loss_eps(eps);
  StrategyProbs sp = strategy_probs(o_prime);
  if (gt < 0 || gt >= static_cast<int>(sp.probs.size()))
    throw std::out_of_range("strategy_loss: bad strategy id");
  double p = sp.probs[gt];
  if (delta_s >= 0.0) return -std::log(p);
  return -std::log(std::max(1.0 - p, eps));
}

// Generation cross entropy summed over target positions; logits are one row
// per step.
inline ad::Var generation_loss(ad::Tape& t, ad::Var step_logits, const std::vector<int>& targets) {
  if (targets.empty()) throw std::invalid_argument("generation_loss: empty target");
  return t.cross_entropy_rows(step_logits, targets);
}

// Pure form over explicit per-step distributions, used by oracles and PPL.
inline double generation_loss_value(const std::vector<Mat>& step_distributions,
                                    const std::vector<int>& targets) {
  if (step_distributions.size() != targets.size())
    throw std::invalid_argument("generation_loss: one distribution per target required");
  if (targets.empty()) throw std::invalid_argument("generation_loss: empty target");
  double loss = 0.0;
  for (size_t i = 0; i < targets.size(); ++i) {
    const Mat& p = step_distributions[i];
    if (p.rows != 1) throw std::invalid_argument("generation_loss: distributions must be rows");
    if (targets[i] < 0 || targets[i] >= p.cols)
      throw std::out_of_range("generation_loss: target out of range");
    loss -= std::log(p(0, targets[i]));
  }
  return loss;
}

}  // namespace fado
