#pragma once

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "fado/pipeline.hpp"

namespace fado {

struct TrainConfig {
  double learning_rate = 3e-5;
  int warmup_steps = 100;
  int epochs = 3;
  int batch_size = 16;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double grad_clip = 0.0;  // 0 disables clipping
  double mu = 0.5;
  double alpha = 0.2;
  double beta = 0.2;
  double loss_eps = 1e-8;
  uint64_t seed = 1;
  int max_steps = 0;  // 0 runs the full epoch budget
  AblationConfig ablation;

  void validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
    if (warmup_steps < 0) throw std::invalid_argument("warmup_steps must be >= 0");
    if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
      throw std::invalid_argument("adam betas must lie in [0,1)");
    if (!(adam_eps > 0.0)) throw std::invalid_argument("adam_eps must be positive");
    if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
    if (grad_clip < 0.0) throw std::invalid_argument("grad_clip must be >= 0");
    check_loss_eps(loss_eps);
    if (max_steps < 0) throw std::invalid_argument("max_steps must be >= 0");
    FlowConfig{alpha, beta}.validate();
  }
};

// Linear ramp over the first warmup_steps optimizer steps (1-based), constant
// afterwards.
inline double warmup_factor(int step, int warmup_steps) {
  if (step < 1) throw std::invalid_argument("warmup_factor: steps are 1-based");
  if (warmup_steps <= 0) return 1.0;
  return std::min(1.0, static_cast<double>(step) / warmup_steps);
}

// Adam with decoupled weight decay, keyed by parameter address so gradients
// from any tape reach the right slot.
class AdamW {
 public:
  AdamW(const std::vector<Mat*>& params, const TrainConfig& cfg) : cfg_(cfg) {
    for (Mat* p : params) track(*p);
  }

  AdamW(ModelState& model, const TrainConfig& cfg) : cfg_(cfg) {
    model.visit_params([&](const std::string&, Mat& p) { track(p); });
  }

  void zero_grad() {
    for (Mat& g : grads_)
      for (double& x : g.a) x = 0.0;
  }

  // Pull gradients of every bound model parameter off a finished tape.
  void accumulate(const nn::ParamBinder& bind, const ad::Tape& t) {
    for (const auto& [mat, var] : bind.bound()) {
      auto it = index_.find(mat);
      if (it == index_.end()) continue;
      const Mat& g = t.grad(var);
      Mat& acc = grads_[it->second];
      for (size_t k = 0; k < acc.a.size(); ++k) acc.a[k] += g.a[k];
    }
  }

  double grad_norm() const {
    double sq = 0.0;
    for (const Mat& g : grads_)
      for (double x : g.a) sq += x * x;
    return std::sqrt(sq);
  }

  // Global-norm clipping; a zero threshold disables it.
  void clip(double max_norm) {
    if (max_norm <= 0.0) return;
    double norm = grad_norm();
    if (norm <= max_norm) return;
    double scale = max_norm / norm;
    for (Mat& g : grads_)
      for (double& x : g.a) x *= scale;
  }

  void step(double lr) {
    ++t_;
    double bc1 = 1.0 - std::pow(cfg_.adam_beta1, t_);
    double bc2 = 1.0 - std::pow(cfg_.adam_beta2, t_);
    for (size_t i = 0; i < params_.size(); ++i) {
      Mat& p = *params_[i];
      for (size_t k = 0; k < p.a.size(); ++k) {
        double g = grads_[i].a[k];
        m_[i].a[k] = cfg_.adam_beta1 * m_[i].a[k] + (1.0 - cfg_.adam_beta1) * g;
        v_[i].a[k] = cfg_.adam_beta2 * v_[i].a[k] + (1.0 - cfg_.adam_beta2) * g * g;
        double m_hat = m_[i].a[k] / bc1;
        double v_hat = v_[i].a[k] / bc2;
        p.a[k] -= lr * (m_hat / (std::sqrt(v_hat) + cfg_.adam_eps) +
                        cfg_.weight_decay * p.a[k]);
      }
    }
  }

  int steps_taken() const { return t_; }

 private:
  void track(Mat& p) {
    index_.emplace(&p, params_.size());
    params_.push_back(&p);
    m_.emplace_back(p.rows, p.cols);
    v_.emplace_back(p.rows, p.cols);
    grads_.emplace_back(p.rows, p.cols);
  }

  TrainConfig cfg_;
  std::vector<Mat*> params_;
  std::unordered_map<Mat*, size_t> index_;
  std::vector<Mat> m_, v_, grads_;
  int t_ = 0;
};

struct StepLog {
  int step = 0;
  int epoch = 0;
  double l1 = 0.0;           // batch mean
  double l2 = 0.0;           // batch mean of per-example sums
  double l2_per_token = 0.0;
  double lr = 0.0;
  double grad_norm = 0.0;
  int positive_feedback = 0;  // delta_s >= 0 count in the batch
  int negative_feedback = 0;
};

struct TrainHooks {
  std::function<void(const StepLog&)> on_step;
  std::function<void(int epoch, ModelState&)> on_epoch_end;
};

struct TrainResult {
  std::vector<StepLog> steps;
  int epochs_completed = 0;
};

// Joint loop: per batch, mean strategy loss plus mean generation loss,
// backpropagated example by example on fresh tapes and applied in one
// optimizer step. Deterministic batching under (seed, epoch).
inline TrainResult train(ModelState& model, const StrategyDictionary& dict, const Vocab& vocab,
                         const EmotionScorer& scorer,
                         const std::vector<TrainingExample>& examples, const TrainConfig& cfg,
                         const TrainHooks& hooks = {}) {
  cfg.validate();
  if (examples.empty()) throw std::invalid_argument("train: empty training split");

  model.cfg.flow.alpha = cfg.alpha;
  model.cfg.flow.beta = cfg.beta;
  AdamW opt(model, cfg);

  ForwardOptions fwd;
  fwd.ablation = cfg.ablation;
  fwd.loss_eps = cfg.loss_eps;
  fwd.mu = cfg.mu;

  TrainResult result;
  int step = 0;
  bool done = false;
  for (int epoch = 0; epoch < cfg.epochs && !done; ++epoch) {
    std::vector<size_t> order(examples.size());
    std::iota(order.begin(), order.end(), 0);
    deterministic_shuffle(order, cfg.seed + 0x9e3779b97f4a7c15ull * (epoch + 1));

    for (size_t begin = 0; begin < order.size() && !done; begin += cfg.batch_size) {
      size_t end = std::min(order.size(), begin + cfg.batch_size);
      double inv_b = 1.0 / static_cast<double>(end - begin);

      opt.zero_grad();
      StepLog log;
      int batch_tokens = 0;
      for (size_t k = begin; k < end; ++k) {
        ad::Tape t;
        nn::ParamBinder bind(t);
        ExampleForward f =
            example_forward(t, bind, model, dict, vocab, scorer, examples[order[k]], fwd);
        double l1v = t.val(f.l1)(0, 0);
        double l2v = t.val(f.l2)(0, 0);
        if (!std::isfinite(l1v) || !std::isfinite(l2v))
          throw std::runtime_error("train: loss diverged at step " + std::to_string(step + 1));
        ad::Var total = t.axpby(inv_b, f.l1, inv_b, f.l2);
        t.backward(total);
        opt.accumulate(bind, t);

        log.l1 += l1v * inv_b;
        log.l2 += l2v * inv_b;
        log.l2_per_token += l2v;
        batch_tokens += f.target_tokens;
        (f.delta_s >= 0.0 ? log.positive_feedback : log.negative_feedback) += 1;
      }
      log.l2_per_token /= batch_tokens;
      log.grad_norm = opt.grad_norm();
      opt.clip(cfg.grad_clip);

      ++step;
      log.step = step;
      log.epoch = epoch;
      log.lr = cfg.learning_rate * warmup_factor(step, cfg.warmup_steps);
      opt.step(log.lr);

      result.steps.push_back(log);
      if (hooks.on_step) hooks.on_step(log);
      if (cfg.max_steps > 0 && step >= cfg.max_steps) done = true;
    }
    result.epochs_completed = epoch + 1;
    if (hooks.on_epoch_end) hooks.on_epoch_end(epoch, model);
  }
  return result;
}

}  // namespace fado
