#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "fado/mat.hpp"

namespace fado::ad {

struct Var {
  int idx = -1;
  bool valid() const { return idx >= 0; }
};

// Reverse-mode tape over Mat values. Ops append a node holding the result
// and a closure that propagates the node's gradient to its parents.
// backward() must be called at most once per recorded graph.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var leaf(const Mat& v) { return push(v, {}); }
  Var leaf(Mat&& v) { return push(std::move(v), {}); }
  Var constant(const Mat& v) { return leaf(v); }

  const Mat& val(Var v) const { return nodes_[v.idx].val; }
  const Mat& grad(Var v) const { return nodes_[v.idx].grad; }

  size_t size() const { return nodes_.size(); }

  // ---- arithmetic ----

  Var matmul(Var a, Var b) {
    const Mat& x = val(a);
    const Mat& y = val(b);
    Mat out = fado::matmul(x, y);
    return push(std::move(out), [a, b](Tape& t, const Mat& g) {
      t.accumulate(a, fado::matmul(g, fado::transpose(t.val(b))));
      t.accumulate(b, fado::matmul(fado::transpose(t.val(a)), g));
    });
  }

  Var add(Var a, Var b) { return axpby(1.0, a, 1.0, b); }

  // ka*A + kb*B, same shape
  Var axpby(double ka, Var a, double kb, Var b) {
    const Mat& x = val(a);
    const Mat& y = val(b);
    if (!x.same_shape(y)) throw std::invalid_argument("axpby: shape mismatch");
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = ka * x.a[i] + kb * y.a[i];
    return push(std::move(out), [a, b, ka, kb](Tape& t, const Mat& g) {
      Mat ga(g.rows, g.cols), gb(g.rows, g.cols);
      for (size_t i = 0; i < g.a.size(); ++i) {
        ga.a[i] = ka * g.a[i];
        gb.a[i] = kb * g.a[i];
      }
      t.accumulate(a, ga);
      t.accumulate(b, gb);
    });
  }

  Var scale(Var a, double k) {
    const Mat& x = val(a);
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = k * x.a[i];
    return push(std::move(out), [a, k](Tape& t, const Mat& g) {
      Mat ga(g.rows, g.cols);
      for (size_t i = 0; i < g.a.size(); ++i) ga.a[i] = k * g.a[i];
      t.accumulate(a, ga);
    });
  }

  Var mul(Var a, Var b) {
    const Mat& x = val(a);
    const Mat& y = val(b);
    if (!x.same_shape(y)) throw std::invalid_argument("mul: shape mismatch");
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = x.a[i] * y.a[i];
    return push(std::move(out), [a, b](Tape& t, const Mat& g) {
      const Mat& x = t.val(a);
      const Mat& y = t.val(b);
      Mat ga(g.rows, g.cols), gb(g.rows, g.cols);
      for (size_t i = 0; i < g.a.size(); ++i) {
        ga.a[i] = g.a[i] * y.a[i];
        gb.a[i] = g.a[i] * x.a[i];
      }
      t.accumulate(a, ga);
      t.accumulate(b, gb);
    });
  }

  // M + broadcast row r over every row of M
  Var add_rowvec(Var m, Var r) {
    const Mat& x = val(m);
    const Mat& v = val(r);
    if (v.rows != 1 || v.cols != x.cols) throw std::invalid_argument("add_rowvec: shape mismatch");
    Mat out = x;
    for (int i = 0; i < x.rows; ++i)
      for (int j = 0; j < x.cols; ++j) out(i, j) += v(0, j);
    return push(std::move(out), [m, r](Tape& t, const Mat& g) {
      t.accumulate(m, g);
      Mat gr(1, g.cols);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) gr(0, j) += g(i, j);
      t.accumulate(r, gr);
    });
  }

  // out(i,j) = M(i,j) * r(0,j)
  Var mul_rowvec(Var m, Var r) {
    const Mat& x = val(m);
    const Mat& v = val(r);
    if (v.rows != 1 || v.cols != x.cols) throw std::invalid_argument("mul_rowvec: shape mismatch");
    Mat out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int j = 0; j < x.cols; ++j) out(i, j) = x(i, j) * v(0, j);
    return push(std::move(out), [m, r](Tape& t, const Mat& g) {
      const Mat& x = t.val(m);
      const Mat& v = t.val(r);
      Mat gm(g.rows, g.cols);
      Mat gr(1, g.cols);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) {
          gm(i, j) = g(i, j) * v(0, j);
          gr(0, j) += g(i, j) * x(i, j);
        }
      t.accumulate(m, gm);
      t.accumulate(r, gr);
    });
  }

  // ---- activations ----

  Var tanh_(Var a) {
    const Mat& x = val(a);
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = std::tanh(x.a[i]);
    Var v = push(std::move(out), {});
    nodes_[v.idx].back = [a, v](Tape& t, const Mat& g) {
      const Mat& y = t.val(v);
      Mat ga(g.rows, g.cols);
      for (size_t i = 0; i < g.a.size(); ++i) ga.a[i] = g.a[i] * (1.0 - y.a[i] * y.a[i]);
      t.accumulate(a, ga);
    };
    return v;
  }

  Var sigmoid_(Var a) {
    const Mat& x = val(a);
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i) out.a[i] = sigmoid_scalar(x.a[i]);
    Var v = push(std::move(out), {});
    nodes_[v.idx].back = [a, v](Tape& t, const Mat& g) {
      const Mat& y = t.val(v);
      Mat ga(g.rows, g.cols);
      for (size_t i = 0; i < g.a.size(); ++i) ga.a[i] = g.a[i] * y.a[i] * (1.0 - y.a[i]);
      t.accumulate(a, ga);
    };
    return v;
  }

  // exact erf-based GELU; smooth everywhere, which keeps finite-difference
  // checks tight
  Var gelu_(Var a) {
    const Mat& x = val(a);
    Mat out(x.rows, x.cols);
    for (size_t i = 0; i < x.a.size(); ++i)
      out.a[i] = 0.5 * x.a[i] * (1.0 + std::erf(x.a[i] * kInvSqrt2));
    return push(std::move(out), [a](Tape& t, const Mat& g) {
      const Mat& x = t.val(a);
      Mat ga(g.rows, g.cols);
      for (size_t i = 0; i < g.a.size(); ++i) {
        double z = x.a[i];
        double cdf = 0.5 * (1.0 + std::erf(z * kInvSqrt2));
        double pdf = std::exp(-0.5 * z * z) * kInvSqrt2Pi;
        ga.a[i] = g.a[i] * (cdf + z * pdf);
      }
      t.accumulate(a, ga);
    });
  }

  // ---- row-wise reductions & normalizations ----

  // Stable row-wise softmax; add_mask (optional, untracked) is added to the
  // inputs first, e.g. a causal mask of 0 / -1e30 entries.
  Var softmax_rows(Var a, const Mat* add_mask = nullptr) {
    const Mat& x = val(a);
    if (add_mask && !add_mask->same_shape(x))
      throw std::invalid_argument("softmax_rows: mask shape mismatch");
    Mat out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < x.cols; ++j) {
        double v = x(i, j) + (add_mask ? (*add_mask)(i, j) : 0.0);
        mx = std::max(mx, v);
      }
      double sum = 0.0;
      for (int j = 0; j < x.cols; ++j) {
        double v = x(i, j) + (add_mask ? (*add_mask)(i, j) : 0.0);
        out(i, j) = std::exp(v - mx);
        sum += out(i, j);
      }
      for (int j = 0; j < x.cols; ++j) out(i, j) /= sum;
    }
    Var v = push(std::move(out), {});
    nodes_[v.idx].back = [a, v](Tape& t, const Mat& g) {
      const Mat& y = t.val(v);
      Mat ga(g.rows, g.cols);
      for (int i = 0; i < g.rows; ++i) {
        double dot = 0.0;
        for (int j = 0; j < g.cols; ++j) dot += g(i, j) * y(i, j);
        for (int j = 0; j < g.cols; ++j) ga(i, j) = y(i, j) * (g(i, j) - dot);
      }
      t.accumulate(a, ga);
    };
    return v;
  }

  // Per-row layer norm with learned gain/bias rows (1 x d).
  Var layer_norm_rows(Var a, Var gain, Var bias, double eps = 1e-5) {
    const Mat& x = val(a);
    const Mat& gn = val(gain);
    const Mat& bs = val(bias);
    if (gn.rows != 1 || gn.cols != x.cols || bs.rows != 1 || bs.cols != x.cols)
      throw std::invalid_argument("layer_norm_rows: gain/bias shape mismatch");
    int d = x.cols;
    Mat out(x.rows, d);
    Mat xhat(x.rows, d);
    std::vector<double> inv_std(x.rows);
    for (int i = 0; i < x.rows; ++i) {
      double mean = 0.0;
      for (int j = 0; j < d; ++j) mean += x(i, j);
      mean /= d;
      double var = 0.0;
      for (int j = 0; j < d; ++j) {
        double c = x(i, j) - mean;
        var += c * c;
      }
      var /= d;
      double is = 1.0 / std::sqrt(var + eps);
      inv_std[i] = is;
      for (int j = 0; j < d; ++j) {
        xhat(i, j) = (x(i, j) - mean) * is;
        out(i, j) = gn(0, j) * xhat(i, j) + bs(0, j);
      }
    }
    return push(std::move(out),
                [a, gain, bias, xhat = std::move(xhat), inv_std = std::move(inv_std)](
                    Tape& t, const Mat& g) {
                  const Mat& gn = t.val(gain);
                  int d = g.cols;
                  Mat ga(g.rows, d);
                  Mat ggain(1, d);
                  Mat gbias(1, d);
                  for (int i = 0; i < g.rows; ++i) {
                    double m1 = 0.0, m2 = 0.0;
                    for (int j = 0; j < d; ++j) {
                      double dxh = g(i, j) * gn(0, j);
                      m1 += dxh;
                      m2 += dxh * xhat(i, j);
                      ggain(0, j) += g(i, j) * xhat(i, j);
                      gbias(0, j) += g(i, j);
                    }
                    m1 /= d;
                    m2 /= d;
                    for (int j = 0; j < d; ++j) {
                      double dxh = g(i, j) * gn(0, j);
                      ga(i, j) = inv_std[i] * (dxh - m1 - xhat(i, j) * m2);
                    }
                  }
                  t.accumulate(a, ga);
                  t.accumulate(gain, ggain);
                  t.accumulate(bias, gbias);
                });
  }

  // column means -> 1 x c
  Var mean_rows(Var a) {
    const Mat& x = val(a);
    if (x.rows == 0) throw std::invalid_argument("mean_rows: empty input");
    Mat out(1, x.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int j = 0; j < x.cols; ++j) out(0, j) += x(i, j);
    for (int j = 0; j < x.cols; ++j) out(0, j) /= x.rows;
    int rows = x.rows;
    return push(std::move(out), [a, rows](Tape& t, const Mat& g) {
      Mat ga(rows, g.cols);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < g.cols; ++j) ga(i, j) = g(0, j) / rows;
      t.accumulate(a, ga);
    });
  }

  // ---- structural ops ----

  Var concat_rows(Var a, Var b) {
    const Mat& x = val(a);
    const Mat& y = val(b);
    if (x.cols != y.cols) throw std::invalid_argument("concat_rows: column mismatch");
    Mat out(x.rows + y.rows, x.cols);
    std::copy(x.a.begin(), x.a.end(), out.a.begin());
    std::copy(y.a.begin(), y.a.end(), out.a.begin() + x.a.size());
    int ra = x.rows;
    return push(std::move(out), [a, b, ra](Tape& t, const Mat& g) {
      Mat ga(ra, g.cols), gb(g.rows - ra, g.cols);
      std::copy(g.a.begin(), g.a.begin() + ga.a.size(), ga.a.begin());
      std::copy(g.a.begin() + ga.a.size(), g.a.end(), gb.a.begin());
      t.accumulate(a, ga);
      t.accumulate(b, gb);
    });
  }

  Var concat_cols(Var a, Var b) {
    const Mat& x = val(a);
    const Mat& y = val(b);
    if (x.rows != y.rows) throw std::invalid_argument("concat_cols: row mismatch");
    Mat out(x.rows, x.cols + y.cols);
    for (int i = 0; i < x.rows; ++i) {
      for (int j = 0; j < x.cols; ++j) out(i, j) = x(i, j);
      for (int j = 0; j < y.cols; ++j) out(i, x.cols + j) = y(i, j);
    }
    int ca = x.cols;
    return push(std::move(out), [a, b, ca](Tape& t, const Mat& g) {
      Mat ga(g.rows, ca), gb(g.rows, g.cols - ca);
      for (int i = 0; i < g.rows; ++i) {
        for (int j = 0; j < ca; ++j) ga(i, j) = g(i, j);
        for (int j = ca; j < g.cols; ++j) gb(i, j - ca) = g(i, j);
      }
      t.accumulate(a, ga);
      t.accumulate(b, gb);
    });
  }

  Var slice_cols(Var a, int c0, int c1) {
    const Mat& x = val(a);
    if (c0 < 0 || c1 > x.cols || c0 >= c1) throw std::invalid_argument("slice_cols: bad range");
    Mat out(x.rows, c1 - c0);
    for (int i = 0; i < x.rows; ++i)
      for (int j = c0; j < c1; ++j) out(i, j - c0) = x(i, j);
    int rows = x.rows, cols = x.cols;
    return push(std::move(out), [a, c0, rows, cols](Tape& t, const Mat& g) {
      Mat ga(rows, cols);
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < g.cols; ++j) ga(i, c0 + j) = g(i, j);
      t.accumulate(a, ga);
    });
  }

  Var slice_rows(Var a, int r0, int r1) {
    const Mat& x = val(a);
    if (r0 < 0 || r1 > x.rows || r0 >= r1) throw std::invalid_argument("slice_rows: bad range");
    Mat out(r1 - r0, x.cols);
    for (int i = r0; i < r1; ++i)
      for (int j = 0; j < x.cols; ++j) out(i - r0, j) = x(i, j);
    int rows = x.rows;
    return push(std::move(out), [a, r0, rows](Tape& t, const Mat& g) {
      Mat ga(rows, g.cols);
      for (int i = 0; i < g.rows; ++i)
        for (int j = 0; j < g.cols; ++j) ga(r0 + i, j) = g(i, j);
      t.accumulate(a, ga);
    });
  }

  // out row k = table row idx[k]; backward scatter-adds
  Var rows_gather(Var table, std::vector<int> idx) {
    const Mat& x = val(table);
    Mat out(static_cast<int>(idx.size()), x.cols);
    for (size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] < 0 || idx[k] >= x.rows) throw std::out_of_range("rows_gather: index out of range");
      for (int j = 0; j < x.cols; ++j) out(static_cast<int>(k), j) = x(idx[k], j);
    }
    int rows = x.rows;
    return push(std::move(out), [table, idx = std::move(idx), rows](Tape& t, const Mat& g) {
      Mat ga(rows, g.cols);
      for (size_t k = 0; k < idx.size(); ++k)
        for (int j = 0; j < g.cols; ++j) ga(idx[k], j) += g(static_cast<int>(k), j);
      t.accumulate(table, ga);
    });
  }

  Var transpose_(Var a) {
    Mat out = fado::transpose(val(a));
    return push(std::move(out),
                [a](Tape& t, const Mat& g) { t.accumulate(a, fado::transpose(g)); });
  }

  // ---- scalar reductions (1 x 1 results) ----

  Var pick(Var a, int i, int j) {
    const Mat& x = val(a);
    if (i < 0 || i >= x.rows || j < 0 || j >= x.cols) throw std::out_of_range("pick: out of range");
    Mat out(1, 1);
    out(0, 0) = x(i, j);
    int rows = x.rows, cols = x.cols;
    return push(std::move(out), [a, i, j, rows, cols](Tape& t, const Mat& g) {
      Mat ga(rows, cols);
      ga(i, j) = g(0, 0);
      t.accumulate(a, ga);
    });
  }

  Var sum_all(Var a) {
    const Mat& x = val(a);
    Mat out(1, 1);
    for (double v : x.a) out(0, 0) += v;
    int rows = x.rows, cols = x.cols;
    return push(std::move(out), [a, rows, cols](Tape& t, const Mat& g) {
      t.accumulate(a, Mat::full(rows, cols, g(0, 0)));
    });
  }

  // -log(p) for a 1x1 probability node
  Var neg_log(Var p) {
    double pv = val(p)(0, 0);
    Mat out(1, 1);
    out(0, 0) = -std::log(pv);
    return push(std::move(out), [p](Tape& t, const Mat& g) {
      Mat gp(1, 1);
      gp(0, 0) = -g(0, 0) / t.val(p)(0, 0);
      t.accumulate(p, gp);
    });
  }

  // -log(max(1 - p, eps)); constant (zero gradient) inside the clamp
  Var neg_log_one_minus(Var p, double eps) {
    double pv = val(p)(0, 0);
    double q = std::max(1.0 - pv, eps);
    Mat out(1, 1);
    out(0, 0) = -std::log(q);
    return push(std::move(out), [p, eps](Tape& t, const Mat& g) {
      double pv = t.val(p)(0, 0);
      Mat gp(1, 1);
      if (1.0 - pv > eps) gp(0, 0) = g(0, 0) / (1.0 - pv);
      t.accumulate(p, gp);
    });
  }

  // Sum over rows of -log softmax(row)[target[row]]; fused for stability.
  Var cross_entropy_rows(Var logits, std::vector<int> targets) {
    const Mat& x = val(logits);
    if (static_cast<int>(targets.size()) != x.rows)
      throw std::invalid_argument("cross_entropy_rows: one target per row required");
    Mat probs(x.rows, x.cols);
    double loss = 0.0;
    for (int i = 0; i < x.rows; ++i) {
      if (targets[i] < 0 || targets[i] >= x.cols)
        throw std::out_of_range("cross_entropy_rows: target out of range");
      double mx = -std::numeric_limits<double>::infinity();
      for (int j = 0; j < x.cols; ++j) mx = std::max(mx, x(i, j));
      double sum = 0.0;
      for (int j = 0; j < x.cols; ++j) {
        probs(i, j) = std::exp(x(i, j) - mx);
        sum += probs(i, j);
      }
      for (int j = 0; j < x.cols; ++j) probs(i, j) /= sum;
      loss -= std::log(probs(i, targets[i]));
    }
    Mat out(1, 1);
    out(0, 0) = loss;
    return push(std::move(out), [logits, targets = std::move(targets), probs = std::move(probs)](
                                    Tape& t, const Mat& g) {
      Mat ga = probs;
      for (int i = 0; i < ga.rows; ++i) ga(i, targets[i]) -= 1.0;
      for (auto& v : ga.a) v *= g(0, 0);
      t.accumulate(logits, ga);
    });
  }

  // ---- driver ----

  void backward(Var loss) {
    const Mat& out = val(loss);
    if (out.rows != 1 || out.cols != 1) throw std::invalid_argument("backward: loss must be 1x1");
    for (auto& n : nodes_)
      if (n.grad.a.empty()) n.grad = Mat(n.val.rows, n.val.cols);
    nodes_[loss.idx].grad(0, 0) = 1.0;
    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i)
      if (nodes_[i].back) nodes_[i].back(*this, nodes_[i].grad);
  }

  static double sigmoid_scalar(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }

 private:
  static constexpr double kInvSqrt2 = 0.7071067811865475244;
  static constexpr double kInvSqrt2Pi = 0.3989422804014326779;

  struct Node {
    Mat val;
    Mat grad;
    std::function<void(Tape&, const Mat&)> back;
  };

  Var push(Mat&& v, std::function<void(Tape&, const Mat&)> back) {
    nodes_.push_back(Node{std::move(v), Mat(), std::move(back)});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }
  Var push(const Mat& v, std::function<void(Tape&, const Mat&)> back) {
    Mat copy = v;
    return push(std::move(copy), std::move(back));
  }

  void accumulate(Var v, const Mat& g) {
    Mat& dst = nodes_[v.idx].grad;
    for (size_t i = 0; i < dst.a.size(); ++i) dst.a[i] += g.a[i];
  }

  std::vector<Node> nodes_;
};

// affine map out = x * w + b with row-broadcast bias
inline Var affine(Tape& t, Var x, Var w, Var b) { return t.add_rowvec(t.matmul(x, w), b); }

}  // namespace fado::ad
