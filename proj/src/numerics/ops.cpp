#include "equalizer/numerics/ops.hpp"

#include <algorithm>
#include <cmath>

#include "equalizer/error.hpp"

namespace equalizer::numerics {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
  }
}

double sigmoid_scalar(double v) {
  return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

void softmax_row(const double* in, double* out, std::size_t n) {
  double mx = in[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, in[i]);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(in[i] - mx);
    total += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= total;
}

// c += a * b^T for a [m x k], b [n x k] -> c [m x n]
void gemm_abt_acc(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      const double* ar = a + i * k;
      const double* br = b + j * k;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      c[i * n + j] += s;
    }
  }
}

// c += a^T * b for a [k x m], b [k x n] -> c [m x n]
void gemm_atb_acc(const double* a, const double* b, double* c, std::size_t k, std::size_t m, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[p * m + i];
      if (av == 0.0) continue;
      double* cr = c + i * n;
      const double* br = b + p * n;
      for (std::size_t j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
}

template <class F>
NodeId unary(Graph& g, NodeId x, const char* op, F forward, double (*derivative)(double in, double out)) {
  const Tensor& in = g.value(x);
  Tensor out(in.shape());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = forward(in[i]);
  return g.record(op, std::move(out), {x}, [derivative](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& in = ctx.input(0);
    const Tensor& out = ctx.out_value();
    const Tensor& go = ctx.out_grad();
    for (std::size_t i = 0; i < in.size(); ++i) (*gx)[i] += go[i] * derivative(in[i], out[i]);
  });
}

}  // namespace

Tensor softmax(const Tensor& logits) {
  if (!logits.all_finite()) throw NumericError("softmax: non-finite logits");
  if (logits.rank() != 1 && logits.rank() != 2) throw DimensionError("softmax: expected rank 1 or 2");
  Tensor out(logits.shape());
  const std::size_t cols = logits.shape().back();
  const std::size_t rows = logits.size() / cols;
  for (std::size_t r = 0; r < rows; ++r) softmax_row(logits.raw() + r * cols, out.raw() + r * cols, cols);
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  if (b.extent(0) != k) {
    throw DimensionError("matmul: inner dimensions disagree " + shape_string(a.shape()) + " * " +
                         shape_string(b.shape()));
  }
  Tensor c({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    double* cr = c.raw() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.raw()[i * k + p];
      const double* br = b.raw() + p * n;
      for (std::size_t j = 0; j < n; ++j) cr[j] += av * br[j];
    }
  }
  return c;
}

Tensor conv2d(const Tensor& x, const Tensor& kernel, std::size_t stride) {
  require_rank(x, 3, "conv2d");
  require_rank(kernel, 4, "conv2d");
  if (stride == 0) throw DimensionError("conv2d: stride must be at least 1");
  const std::size_t cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  const std::size_t cout = kernel.extent(0), kh = kernel.extent(2), kw = kernel.extent(3);
  if (kernel.extent(1) != cin) throw DimensionError("conv2d: kernel input channels disagree with input");
  if (kh > h || kw > w) throw DimensionError("conv2d: kernel larger than input");
  const std::size_t oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
  Tensor out({cout, oh, ow});
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t c = 0; c < cin; ++c) {
      for (std::size_t i = 0; i < kh; ++i) {
        for (std::size_t j = 0; j < kw; ++j) {
          const double kv = kernel.raw()[((o * cin + c) * kh + i) * kw + j];
          for (std::size_t y = 0; y < oh; ++y) {
            const double* xr = x.raw() + (c * h + y * stride + i) * w + j;
            double* orow = out.raw() + (o * oh + y) * ow;
            for (std::size_t xx = 0; xx < ow; ++xx) orow[xx] += kv * xr[xx * stride];
          }
        }
      }
    }
  }
  return out;
}

NodeId matmul(Graph& g, NodeId a, NodeId b) {
  Tensor out = matmul(g.value(a), g.value(b));
  return g.record("matmul", std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Tensor& av = ctx.input(0);
    const Tensor& bv = ctx.input(1);
    const Tensor& go = ctx.out_grad();
    const std::size_t m = av.extent(0), k = av.extent(1), n = bv.extent(1);
    if (Tensor* ga = ctx.input_grad(0)) gemm_abt_acc(go.raw(), bv.raw(), ga->raw(), m, n, k);
    if (Tensor* gb = ctx.input_grad(1)) gemm_atb_acc(av.raw(), go.raw(), gb->raw(), m, k, n);
  });
}

NodeId add(Graph& g, NodeId a, NodeId b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_same_shape(av, bv, "add");
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return g.record("add", std::move(out), {a, b}, [](BackwardContext& ctx) {
    const Tensor& go = ctx.out_grad();
    for (std::size_t k = 0; k < 2; ++k) {
      if (Tensor* gi = ctx.input_grad(k)) {
        for (std::size_t i = 0; i < go.size(); ++i) (*gi)[i] += go[i];
      }
    }
  });
}

NodeId add_bias(Graph& g, NodeId x, NodeId bias) {
  const Tensor& xv = g.value(x);
  const Tensor& bv = g.value(bias);
  require_rank(bv, 1, "add_bias");
  const std::size_t n = bv.size();
  if (xv.shape().back() != n || xv.rank() > 2) {
    throw DimensionError("add_bias: bias " + shape_string(bv.shape()) + " does not fit " + shape_string(xv.shape()));
  }
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i % n];
  return g.record("add_bias", std::move(out), {x, bias}, [n](BackwardContext& ctx) {
    const Tensor& go = ctx.out_grad();
    if (Tensor* gx = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gx)[i] += go[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i % n] += go[i];
    }
  });
}

NodeId scale(Graph& g, NodeId x, double factor) {
  Tensor out = g.value(x);
  for (auto& v : out.data()) v *= factor;
  return g.record("scale", std::move(out), {x}, [factor](BackwardContext& ctx) {
    if (Tensor* gx = ctx.input_grad(0)) {
      const Tensor& go = ctx.out_grad();
      for (std::size_t i = 0; i < go.size(); ++i) (*gx)[i] += factor * go[i];
    }
  });
}

NodeId linear(Graph& g, NodeId weight, NodeId x, NodeId bias) {
  const Tensor& wv = g.value(weight);
  const Tensor& xv = g.value(x);
  const Tensor& bv = g.value(bias);
  require_rank(wv, 2, "linear");
  const std::size_t m = wv.extent(0), k = wv.extent(1);
  if (xv.size() != k || bv.size() != m) {
    throw DimensionError("linear: weight " + shape_string(wv.shape()) + " with input " + shape_string(xv.shape()) +
                         " and bias " + shape_string(bv.shape()));
  }
  Tensor out({m});
  for (std::size_t i = 0; i < m; ++i) {
    const double* wr = wv.raw() + i * k;
    double s = bv[i];
    for (std::size_t p = 0; p < k; ++p) s += wr[p] * xv[p];
    out[i] = s;
  }
  return g.record("linear", std::move(out), {weight, x, bias}, [m, k](BackwardContext& ctx) {
    const Tensor& go = ctx.out_grad();
    const Tensor& wv = ctx.input(0);
    const Tensor& xv = ctx.input(1);
    if (Tensor* gw = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = go[i];
        if (gi == 0.0) continue;
        double* gr = gw->raw() + i * k;
        for (std::size_t p = 0; p < k; ++p) gr[p] += gi * xv[p];
      }
    }
    if (Tensor* gx = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = go[i];
        if (gi == 0.0) continue;
        const double* wr = wv.raw() + i * k;
        for (std::size_t p = 0; p < k; ++p) (*gx)[p] += gi * wr[p];
      }
    }
    if (Tensor* gb = ctx.input_grad(2)) {
      for (std::size_t i = 0; i < m; ++i) (*gb)[i] += go[i];
    }
  });
}

NodeId conv2d(Graph& g, NodeId x, NodeId kernel, std::size_t stride) {
  Tensor out = conv2d(g.value(x), g.value(kernel), stride);
  return g.record("conv2d", std::move(out), {x, kernel}, [stride](BackwardContext& ctx) {
    const Tensor& xv = ctx.input(0);
    const Tensor& kv = ctx.input(1);
    const Tensor& go = ctx.out_grad();
    Tensor* gx = ctx.input_grad(0);
    Tensor* gk = ctx.input_grad(1);
    const std::size_t cin = xv.extent(0), h = xv.extent(1), w = xv.extent(2);
    const std::size_t cout = kv.extent(0), kh = kv.extent(2), kw = kv.extent(3);
    const std::size_t oh = go.extent(1), ow = go.extent(2);
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t i = 0; i < kh; ++i) {
          for (std::size_t j = 0; j < kw; ++j) {
            const std::size_t kidx = ((o * cin + c) * kh + i) * kw + j;
            const double kval = kv.raw()[kidx];
            double acc = 0.0;
            for (std::size_t y = 0; y < oh; ++y) {
              const std::size_t xbase = (c * h + y * stride + i) * w + j;
              const double* gor = go.raw() + (o * oh + y) * ow;
              if (gk) {
                const double* xr = xv.raw() + xbase;
                for (std::size_t xx = 0; xx < ow; ++xx) acc += gor[xx] * xr[xx * stride];
              }
              if (gx) {
                double* gxr = gx->raw() + xbase;
                for (std::size_t xx = 0; xx < ow; ++xx) gxr[xx * stride] += gor[xx] * kval;
              }
            }
            if (gk) gk->raw()[kidx] += acc;
          }
        }
      }
    }
  });
}

NodeId add_channel_bias(Graph& g, NodeId x, NodeId bias) {
  const Tensor& xv = g.value(x);
  const Tensor& bv = g.value(bias);
  require_rank(xv, 3, "add_channel_bias");
  if (bv.size() != xv.extent(0)) throw DimensionError("add_channel_bias: one bias per channel required");
  const std::size_t plane = xv.extent(1) * xv.extent(2);
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i / plane];
  return g.record("add_channel_bias", std::move(out), {x, bias}, [plane](BackwardContext& ctx) {
    const Tensor& go = ctx.out_grad();
    if (Tensor* gx = ctx.input_grad(0)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gx)[i] += go[i];
    }
    if (Tensor* gb = ctx.input_grad(1)) {
      for (std::size_t i = 0; i < go.size(); ++i) (*gb)[i / plane] += go[i];
    }
  });
}

NodeId relu(Graph& g, NodeId x) {
  return unary(
      g, x, "relu", [](double v) { return v > 0.0 ? v : 0.0; },
      [](double in, double) { return in > 0.0 ? 1.0 : 0.0; });
}

NodeId sigmoid(Graph& g, NodeId x) {
  return unary(g, x, "sigmoid", sigmoid_scalar, [](double, double out) { return out * (1.0 - out); });
}

NodeId tanh(Graph& g, NodeId x) {
  return unary(
      g, x, "tanh", [](double v) { return std::tanh(v); }, [](double, double out) { return 1.0 - out * out; });
}

NodeId log(Graph& g, NodeId x) {
  for (double v : g.value(x).data()) {
    if (!(v > 0.0)) throw NumericError("log: non-positive input");
  }
  return unary(
      g, x, "log", [](double v) { return std::log(v); }, [](double in, double) { return 1.0 / in; });
}

NodeId reshape(Graph& g, NodeId x, Shape shape) {
  const Tensor& xv = g.value(x);
  if (shape_size(shape) != xv.size()) {
    throw DimensionError("reshape: " + shape_string(xv.shape()) + " to " + shape_string(shape));
  }
  return g.record("reshape", xv.reshaped(std::move(shape)), {x}, [](BackwardContext& ctx) {
    if (Tensor* gx = ctx.input_grad(0)) {
      const Tensor& go = ctx.out_grad();
      for (std::size_t i = 0; i < go.size(); ++i) (*gx)[i] += go[i];
    }
  });
}

NodeId concat(Graph& g, std::span<const NodeId> parts) {
  if (parts.empty()) throw DimensionError("concat: no inputs");
  std::vector<double> data;
  std::vector<std::size_t> sizes;
  for (auto p : parts) {
    const Tensor& v = g.value(p);
    require_rank(v, 1, "concat");
    data.insert(data.end(), v.data().begin(), v.data().end());
    sizes.push_back(v.size());
  }
  return g.record("concat", Tensor::vector(std::move(data)), {parts.begin(), parts.end()},
                  [sizes](BackwardContext& ctx) {
                    const Tensor& go = ctx.out_grad();
                    std::size_t offset = 0;
                    for (std::size_t k = 0; k < sizes.size(); ++k) {
                      if (Tensor* gi = ctx.input_grad(k)) {
                        for (std::size_t i = 0; i < sizes[k]; ++i) (*gi)[i] += go[offset + i];
                      }
                      offset += sizes[k];
                    }
                  });
}

NodeId embedding(Graph& g, NodeId table, std::size_t row) {
  const Tensor& tv = g.value(table);
  require_rank(tv, 2, "embedding");
  if (row >= tv.extent(0)) throw LookupError("embedding: row " + std::to_string(row) + " out of range");
  const std::size_t d = tv.extent(1);
  std::vector<double> data(tv.raw() + row * d, tv.raw() + (row + 1) * d);
  return g.record("embedding", Tensor::vector(std::move(data)), {table}, [row, d](BackwardContext& ctx) {
    if (Tensor* gt = ctx.input_grad(0)) {
      const Tensor& go = ctx.out_grad();
      for (std::size_t i = 0; i < d; ++i) gt->raw()[row * d + i] += go[i];
    }
  });
}

NodeId stack_rows(Graph& g, std::span<const NodeId> rows) {
  if (rows.empty()) throw DimensionError("stack_rows: no inputs");
  const std::size_t n = g.value(rows[0]).size();
  std::vector<double> data;
  data.reserve(rows.size() * n);
  for (auto r : rows) {
    const Tensor& v = g.value(r);
    require_rank(v, 1, "stack_rows");
    if (v.size() != n) throw DimensionError("stack_rows: rows differ in length");
    data.insert(data.end(), v.data().begin(), v.data().end());
  }
  return g.record("stack_rows", Tensor::matrix(rows.size(), n, std::move(data)), {rows.begin(), rows.end()},
                  [n](BackwardContext& ctx) {
                    const Tensor& go = ctx.out_grad();
                    for (std::size_t k = 0; k < ctx.input_count(); ++k) {
                      if (Tensor* gi = ctx.input_grad(k)) {
                        for (std::size_t i = 0; i < n; ++i) (*gi)[i] += go[k * n + i];
                      }
                    }
                  });
}

NodeId softmax(Graph& g, NodeId logits) {
  Tensor out = softmax(g.value(logits));
  return g.record("softmax", std::move(out), {logits}, [](BackwardContext& ctx) {
    Tensor* gx = ctx.input_grad(0);
    if (!gx) return;
    const Tensor& p = ctx.out_value();
    const Tensor& go = ctx.out_grad();
    const std::size_t cols = p.shape().back();
    const std::size_t rows = p.size() / cols;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* pr = p.raw() + r * cols;
      const double* gr = go.raw() + r * cols;
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += pr[j] * gr[j];
      double* out = gx->raw() + r * cols;
      for (std::size_t j = 0; j < cols; ++j) out[j] += pr[j] * (gr[j] - dot);
    }
  });
}

NodeId sum(Graph& g, NodeId x) {
  double s = 0.0;
  for (double v : g.value(x).data()) s += v;
  return g.record("sum", Tensor::scalar(s), {x}, [](BackwardContext& ctx) {
    if (Tensor* gx = ctx.input_grad(0)) {
      const double go = ctx.out_grad()[0];
      for (auto& v : gx->data()) v += go;
    }
  });
}

NodeId pick(Graph& g, NodeId x, std::size_t i) {
  const Tensor& xv = g.value(x);
  if (i >= xv.size()) throw LookupError("pick: index out of range");
  return g.record("pick", Tensor::scalar(xv[i]), {x}, [i](BackwardContext& ctx) {
    if (Tensor* gx = ctx.input_grad(0)) (*gx)[i] += ctx.out_grad()[0];
  });
}

NodeId weighted_sum(Graph& g, std::span<const NodeId> terms, std::span<const double> coeffs) {
  if (terms.size() != coeffs.size()) throw DimensionError("weighted_sum: one coefficient per term required");
  double s = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const Tensor& v = g.value(terms[k]);
    if (v.size() != 1) throw DimensionError("weighted_sum: terms must be scalars");
    s += coeffs[k] * v[0];
  }
  std::vector<double> c(coeffs.begin(), coeffs.end());
  return g.record("weighted_sum", Tensor::scalar(s), {terms.begin(), terms.end()}, [c](BackwardContext& ctx) {
    const double go = ctx.out_grad()[0];
    for (std::size_t k = 0; k < c.size(); ++k) {
      if (Tensor* gi = ctx.input_grad(k)) (*gi)[0] += c[k] * go;
    }
  });
}

LstmState lstm_cell(Graph& g, NodeId x, NodeId h, NodeId c, NodeId weight, NodeId bias) {
  const Tensor& hv = g.value(h);
  const Tensor& cv = g.value(c);
  const Tensor& wv = g.value(weight);
  require_rank(hv, 1, "lstm_cell");
  require_same_shape(hv, cv, "lstm_cell");
  const std::size_t n = hv.size();
  require_rank(wv, 2, "lstm_cell");
  if (wv.extent(0) != 4 * n || wv.extent(1) != g.value(x).size() + n || g.value(bias).size() != 4 * n) {
    throw DimensionError("lstm_cell: parameter shapes inconsistent with input and state sizes");
  }
  const NodeId parts[] = {x, h};
  NodeId z = linear(g, weight, concat(g, parts), bias);

  const Tensor& zv = g.value(z);
  Tensor c_next({n});
  for (std::size_t i = 0; i < n; ++i) {
    const double ig = sigmoid_scalar(zv[i]);
    const double fg = sigmoid_scalar(zv[n + i]);
    const double cand = std::tanh(zv[3 * n + i]);
    c_next[i] = fg * cv[i] + ig * cand;
  }
  NodeId c_id = g.record("lstm_cell_state", std::move(c_next), {z, c}, [n](BackwardContext& ctx) {
    const Tensor& zv = ctx.input(0);
    const Tensor& cv = ctx.input(1);
    const Tensor& go = ctx.out_grad();
    Tensor* gz = ctx.input_grad(0);
    Tensor* gc = ctx.input_grad(1);
    for (std::size_t i = 0; i < n; ++i) {
      const double ig = sigmoid_scalar(zv[i]);
      const double fg = sigmoid_scalar(zv[n + i]);
      const double cand = std::tanh(zv[3 * n + i]);
      if (gz) {
        (*gz)[i] += go[i] * cand * ig * (1.0 - ig);
        (*gz)[n + i] += go[i] * cv[i] * fg * (1.0 - fg);
        (*gz)[3 * n + i] += go[i] * ig * (1.0 - cand * cand);
      }
      if (gc) (*gc)[i] += go[i] * fg;
    }
  });

  const Tensor& cn = g.value(c_id);
  Tensor h_next({n});
  for (std::size_t i = 0; i < n; ++i) h_next[i] = sigmoid_scalar(zv[2 * n + i]) * std::tanh(cn[i]);
  NodeId h_id = g.record("lstm_cell_output", std::move(h_next), {z, c_id}, [n](BackwardContext& ctx) {
    const Tensor& zv = ctx.input(0);
    const Tensor& cn = ctx.input(1);
    const Tensor& go = ctx.out_grad();
    Tensor* gz = ctx.input_grad(0);
    Tensor* gc = ctx.input_grad(1);
    for (std::size_t i = 0; i < n; ++i) {
      const double og = sigmoid_scalar(zv[2 * n + i]);
      const double tc = std::tanh(cn[i]);
      if (gz) (*gz)[2 * n + i] += go[i] * tc * og * (1.0 - og);
      if (gc) (*gc)[i] += go[i] * og * (1.0 - tc * tc);
    }
  });
  return {h_id, c_id};
}

}  // namespace equalizer::numerics
