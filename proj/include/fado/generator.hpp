#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "fado/model.hpp"

namespace fado {

struct DecodingConfig {
  double top_p = 0.9;
  double temperature = 0.7;
  double repetition_penalty = 1.0;
  int max_new_tokens = 64;
  uint64_t seed = 1;

  void validate() const {
    if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must lie in (0,1]");
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    if (repetition_penalty < 1.0)
      throw std::invalid_argument("repetition_penalty must be >= 1");
    if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
  }
};

// Cross-attention memory: the updated context rows stacked over the
// strategy-description rows.
inline ad::Var build_memory(ad::Tape& t, ad::Var h_prime, ad::Var v) {
  return t.concat_rows(h_prime, v);
}

// Raw next-token logits for the last prefix position.
inline Mat decode_step_logits(ModelState& m, const std::vector<int>& prefix, const Mat& h_prime,
                              const Mat& v) {
  if (prefix.empty()) throw std::invalid_argument("decode_step: empty prefix");
  ad::Tape t;
  nn::ParamBinder bind(t);
  ad::Var memory = build_memory(t, t.constant(h_prime), t.constant(v));
  ad::Var x = nn::embed_sequence(t, bind, m.tok_emb, m.decoder.pos_emb, prefix);
  Mat mask = nn::causal_mask(static_cast<int>(prefix.size()));
  ad::Var states = nn::decoder_forward(t, bind, m.decoder, x, memory, m.cfg.enc.heads, mask);
  int last = static_cast<int>(prefix.size()) - 1;
  ad::Var last_state = t.slice_rows(states, last, last + 1);
  ad::Var logits = ad::affine(t, last_state, bind(m.decoder.out_proj), bind(m.decoder.out_bias));
  return t.val(logits);
}

// Normalized next-token distribution (softmax of the raw logits).
inline Mat decode_step(ModelState& m, const std::vector<int>& prefix, const Mat& h_prime,
                       const Mat& v) {
  Mat logits = decode_step_logits(m, prefix, h_prime, v);
  double mx = *std::max_element(logits.a.begin(), logits.a.end());
  double z = 0.0;
  Mat probs(1, logits.cols);
  for (int j = 0; j < logits.cols; ++j) {
    probs(0, j) = std::exp(logits(0, j) - mx);
    z += probs(0, j);
  }
  for (double& p : probs.a) p /= z;
  return probs;
}

// Temperature then repetition penalty (positive logits of already-generated
// tokens divided by the penalty, negative ones multiplied), then softmax.
inline std::vector<double> sampling_distribution(const Mat& logits,
                                                 const std::vector<int>& generated,
                                                 const DecodingConfig& cfg) {
  cfg.validate();
  std::vector<double> z(logits.cols);
  for (int j = 0; j < logits.cols; ++j) z[j] = logits(0, j) / cfg.temperature;
  std::set<int> seen(generated.begin(), generated.end());
  for (int j : seen) {
    if (j < 0 || j >= logits.cols) continue;
    if (z[j] > 0.0)
      z[j] /= cfg.repetition_penalty;
    else
      z[j] *= cfg.repetition_penalty;
  }
  double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return z;
}

struct Nucleus {
  std::vector<int> ids;            // kept token ids, highest probability first
  std::vector<double> probs;       // renormalized over the kept set
  double raw_mass = 0.0;           // pre-renormalization mass of the kept set

  bool contains(int id) const {
    return std::find(ids.begin(), ids.end(), id) != ids.end();
  }
};

// Smallest probability-sorted prefix whose cumulative mass reaches top_p;
// the crossing token is included. Ties sort by lower id for determinism.
inline Nucleus nucleus_set(const std::vector<double>& probs, double top_p) {
  if (probs.empty()) throw std::invalid_argument("nucleus_set: empty distribution");
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (probs[a] != probs[b]) return probs[a] > probs[b];
    return a < b;
  });
  Nucleus n;
  for (int id : order) {
    n.ids.push_back(id);
    n.raw_mass += probs[id];
    if (n.raw_mass >= top_p) break;
  }
  for (int id : n.ids) n.probs.push_back(probs[id] / n.raw_mass);
  return n;
}

inline int sample_nucleus(const Nucleus& n, Rng& rng) {
  double u = rng.next_double();
  double cum = 0.0;
  for (size_t k = 0; k < n.ids.size(); ++k) {
    cum += n.probs[k];
    if (u < cum) return n.ids[k];
  }
  return n.ids.back();
}

struct GenerationResult {
  std::vector<int> token_ids;       // generated ids, EOS excluded
  std::vector<int> nucleus_sizes;   // per-step kept-set sizes
  bool hit_eos = false;
};

// Autoregressive nucleus-sampling loop. The prefix starts at BOS; the loop
// stops at EOS, max_new_tokens, or the decoder position limit.
inline GenerationResult generate(ModelState& m, const Mat& h_prime, const Mat& v,
                                 const DecodingConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  GenerationResult out;
  std::vector<int> prefix{Vocab::kBos};
  for (int step = 0; step < cfg.max_new_tokens; ++step) {
    if (static_cast<int>(prefix.size()) >= m.cfg.enc.max_positions) break;
    Mat logits = decode_step_logits(m, prefix, h_prime, v);
    std::vector<double> probs = sampling_distribution(logits, out.token_ids, cfg);
    Nucleus nucleus = nucleus_set(probs, cfg.top_p);
    int next = sample_nucleus(nucleus, rng);
    out.nucleus_sizes.push_back(static_cast<int>(nucleus.ids.size()));
    if (next == Vocab::kEos) {
      out.hit_eos = true;
      break;
    }
    out.token_ids.push_back(next);
    prefix.push_back(next);
  }
  return out;
}

}  // namespace fado
