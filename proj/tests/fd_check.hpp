#pragma once

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <vector>

#include "fado/autodiff.hpp"
#include "fado/rng.hpp"

namespace testutil {

inline fado::Mat random_mat(int r, int c, fado::Rng& rng, double scale = 1.0) {
  fado::Mat m(r, c);
  fado::fill_uniform(m, rng, -scale, scale);
  return m;
}

// Central finite differences of a scalar-valued rebuild over every entry of
// every input matrix, compared against one analytic backward pass.
inline void check_gradients(
    std::vector<fado::Mat> inputs,
    const std::function<fado::ad::Var(fado::ad::Tape&, const std::vector<fado::ad::Var>&)>& build,
    double step = 1e-6, double tol = 1e-6) {
  namespace ad = fado::ad;
  ad::Tape tape;
  std::vector<ad::Var> vars;
  for (const auto& m : inputs) vars.push_back(tape.leaf(m));
  ad::Var loss = build(tape, vars);
  tape.backward(loss);

  auto eval = [&](const std::vector<fado::Mat>& xs) {
    ad::Tape t;
    std::vector<ad::Var> vs;
    for (const auto& m : xs) vs.push_back(t.leaf(m));
    return t.val(build(t, vs))(0, 0);
  };

  for (size_t k = 0; k < inputs.size(); ++k) {
    const fado::Mat& analytic = tape.grad(vars[k]);
    for (size_t i = 0; i < inputs[k].a.size(); ++i) {
      auto plus = inputs;
      auto minus = inputs;
      plus[k].a[i] += step;
      minus[k].a[i] -= step;
      double fd = (eval(plus) - eval(minus)) / (2 * step);
      double got = analytic.a[i];
      double denom = std::max({std::abs(fd), std::abs(got), 1.0});
      INFO("input " << k << " entry " << i << " fd=" << fd << " analytic=" << got);
      REQUIRE(std::abs(fd - got) / denom < tol);
    }
  }
}

}  // namespace testutil
