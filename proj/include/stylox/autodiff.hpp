// Reverse-mode differentiation on a per-step tape.
//
// Nodes are created in forward order (define-by-run); backward() walks the
// tape in reverse, accumulating gradients. The op set is the minimum needed
// to express convolutional/recurrent encoders, additive attention and a
// conditioned GRU decoder, each verified against finite differences.

#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stylox/tensor.hpp"

namespace stylox {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

class Tape {
 public:
  const Tensor& value(Var v) const { return values_[check(v)]; }
  const Tensor& grad(Var v) const {
    const Tensor& g = grads_[check(v)];
    if (g.data.empty()) {
      static thread_local Tensor zero;
      zero = Tensor::zeros(values_[v.id].shape);
      return zero;
    }
    return g;
  }
  size_t node_count() const { return values_.size(); }

  Var leaf(Tensor value) { return push(std::move(value), nullptr); }
  Var leaf(const Tensor& value, bool copy) {
    (void)copy;
    return push(value, nullptr);
  }

  // --- arithmetic ---

  Var matmul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (A.cols() != B.rows())
      throw std::invalid_argument("matmul: shape mismatch " + shape_string(A) + " x " +
                                  shape_string(B));
    Tensor out = Tensor::zeros({A.rows(), B.cols()});
    as_matrix(out).noalias() = as_matrix(A) * as_matrix(B);
    return push(std::move(out), [a, b](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& A = t.values_[a.id];
      const Tensor& B = t.values_[b.id];
      as_matrix(t.ensure_grad(a)).noalias() += as_matrix(g) * as_matrix(B).transpose();
      as_matrix(t.ensure_grad(b)).noalias() += as_matrix(A).transpose() * as_matrix(g);
    });
  }

  /// Elementwise sum; `b` may also be a [1 x n] row broadcast over a's rows.
  Var add(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    bool bcast = !A.same_shape(B);
    if (bcast && !(B.rows() == 1 && B.cols() == A.cols()))
      throw std::invalid_argument("add: shape mismatch " + shape_string(A) + " + " +
                                  shape_string(B));
    Tensor out = A;
    if (bcast) {
      as_matrix(out).rowwise() += Eigen::Map<const Eigen::RowVectorXf>(B.data.data(), B.cols());
    } else {
      as_matrix(out) += as_matrix(B);
    }
    return push(std::move(out), [a, b, bcast](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      as_matrix(t.ensure_grad(a)) += as_matrix(g);
      if (bcast) {
        Eigen::Map<Eigen::RowVectorXf>(t.ensure_grad(b).data.data(), t.values_[b.id].cols()) +=
            as_matrix(g).colwise().sum();
      } else {
        as_matrix(t.ensure_grad(b)) += as_matrix(g);
      }
    });
  }

  Var sub(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B))
      throw std::invalid_argument("sub: shape mismatch " + shape_string(A) + " - " +
                                  shape_string(B));
    Tensor out = A;
    as_matrix(out) -= as_matrix(B);
    return push(std::move(out), [a, b](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      as_matrix(t.ensure_grad(a)) += as_matrix(g);
      as_matrix(t.ensure_grad(b)) -= as_matrix(g);
    });
  }

  /// Hadamard product.
  Var mul(Var a, Var b) {
    const Tensor& A = value(a);
    const Tensor& B = value(b);
    if (!A.same_shape(B))
      throw std::invalid_argument("mul: shape mismatch " + shape_string(A) + " * " +
                                  shape_string(B));
    Tensor out = A;
    as_matrix(out).array() *= as_matrix(B).array();
    return push(std::move(out), [a, b](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      as_matrix(t.ensure_grad(a)).array() +=
          as_matrix(g).array() * as_matrix(t.values_[b.id]).array();
      as_matrix(t.ensure_grad(b)).array() +=
          as_matrix(g).array() * as_matrix(t.values_[a.id]).array();
    });
  }

  Var scale(Var a, float c) {
    Tensor out = value(a);
    for (float& x : out.data) x *= c;
    return push(std::move(out), [a, c](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      as_matrix(t.ensure_grad(a)) += c * as_matrix(g);
    });
  }

  // --- activations ---

  Var sigmoid(Var a) {
    Tensor out = value(a);
    for (float& x : out.data) x = 1.0f / (1.0f + std::exp(-x));
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& y = t.values_[self];
      Tensor& da = t.ensure_grad(a);
      for (size_t i = 0; i < da.data.size(); ++i)
        da.data[i] += g.data[i] * y.data[i] * (1.0f - y.data[i]);
    });
  }

  Var tanh(Var a) {
    Tensor out = value(a);
    for (float& x : out.data) x = std::tanh(x);
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& y = t.values_[self];
      Tensor& da = t.ensure_grad(a);
      for (size_t i = 0; i < da.data.size(); ++i)
        da.data[i] += g.data[i] * (1.0f - y.data[i] * y.data[i]);
    });
  }

  Var relu(Var a) {
    Tensor out = value(a);
    for (float& x : out.data) x = x > 0 ? x : 0.0f;
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& x = t.values_[a.id];
      Tensor& da = t.ensure_grad(a);
      for (size_t i = 0; i < da.data.size(); ++i)
        if (x.data[i] > 0) da.data[i] += g.data[i];
    });
  }

  /// Row-wise softmax.
  Var softmax(Var a) {
    const Tensor& A = value(a);
    Tensor out = A;
    int R = A.rows(), C = A.cols();
    for (int r = 0; r < R; ++r) {
      float m = out.at(r, 0);
      for (int c = 1; c < C; ++c) m = std::max(m, out.at(r, c));
      float sum = 0;
      for (int c = 0; c < C; ++c) {
        float e = std::exp(out.at(r, c) - m);
        out.at(r, c) = e;
        sum += e;
      }
      for (int c = 0; c < C; ++c) out.at(r, c) /= sum;
    }
    return push(std::move(out), [a](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& y = t.values_[self];
      Tensor& da = t.ensure_grad(a);
      int R = y.rows(), C = y.cols();
      for (int r = 0; r < R; ++r) {
        float dot = 0;
        for (int c = 0; c < C; ++c) dot += g.at(r, c) * y.at(r, c);
        for (int c = 0; c < C; ++c) da.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
    });
  }

  // --- structure ---

  /// Row lookup: out[i, :] = table[ids[i], :].
  Var embedding(Var table, std::vector<int> ids) {
    const Tensor& T = value(table);
    int D = T.cols();
    Tensor out = Tensor::zeros({static_cast<int>(ids.size()), D});
    for (size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] < 0 || ids[i] >= T.rows())
        throw std::invalid_argument("embedding: id " + std::to_string(ids[i]) +
                                    " out of range for table " + shape_string(T));
      std::copy_n(&T.data[static_cast<size_t>(ids[i]) * D], D, &out.data[i * D]);
    }
    return push(std::move(out), [table, ids = std::move(ids), D](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      Tensor& dt = t.ensure_grad(table);
      for (size_t i = 0; i < ids.size(); ++i)
        for (int d = 0; d < D; ++d)
          dt.data[static_cast<size_t>(ids[i]) * D + d] += g.data[i * D + d];
    });
  }

  Var concat_cols(const std::vector<Var>& parts) { return concat(parts, /*axis=*/1); }
  Var concat_rows(const std::vector<Var>& parts) { return concat(parts, /*axis=*/0); }

  Var slice_cols(Var a, int c0, int c1) {
    const Tensor& A = value(a);
    if (c0 < 0 || c1 > A.cols() || c0 >= c1)
      throw std::invalid_argument("slice_cols: bad range on " + shape_string(A));
    int R = A.rows(), W = c1 - c0;
    Tensor out = Tensor::zeros({R, W});
    for (int r = 0; r < R; ++r)
      std::copy_n(&A.data[static_cast<size_t>(r) * A.cols() + c0], W, &out.data[static_cast<size_t>(r) * W]);
    return push(std::move(out), [a, c0, W](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      Tensor& da = t.ensure_grad(a);
      int C = t.values_[a.id].cols();
      for (int r = 0; r < g.rows(); ++r)
        for (int c = 0; c < W; ++c)
          da.data[static_cast<size_t>(r) * C + c0 + c] += g.data[static_cast<size_t>(r) * W + c];
    });
  }

  /// Row gather: out[i, :] = a[rows[i], :].
  Var gather_rows(Var a, std::vector<int> rows) {
    const Tensor& A = value(a);
    int C = A.cols();
    Tensor out = Tensor::zeros({static_cast<int>(rows.size()), C});
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0 || rows[i] >= A.rows())
        throw std::invalid_argument("gather_rows: row out of range");
      std::copy_n(&A.data[static_cast<size_t>(rows[i]) * C], C, &out.data[i * C]);
    }
    return push(std::move(out), [a, rows = std::move(rows), C](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      Tensor& da = t.ensure_grad(a);
      for (size_t i = 0; i < rows.size(); ++i)
        for (int c = 0; c < C; ++c)
          da.data[static_cast<size_t>(rows[i]) * C + c] += g.data[i * C + c];
    });
  }

  /// Valid 1D convolution over per-example time rows.
  ///
  /// `x` holds a batch of `batch` examples, each `t_in` consecutive rows of
  /// `c_in` channels (shape [batch*t_in x c_in]). Weights are [kernel*c_in x
  /// c_out], bias [1 x c_out]. Output is [batch*t_out x c_out] with
  /// t_out = (t_in - kernel)/stride + 1.
  Var conv1d(Var x, Var w, Var bias, int batch, int kernel, int stride) {
    const Tensor& X = value(x);
    const Tensor& W = value(w);
    const Tensor& B = value(bias);
    int c_in = X.cols();
    if (X.rows() % batch != 0) throw std::invalid_argument("conv1d: rows not divisible by batch");
    int t_in = X.rows() / batch;
    if (t_in < kernel) throw std::invalid_argument("conv1d: input shorter than kernel");
    if (W.rows() != kernel * c_in)
      throw std::invalid_argument("conv1d: weight shape " + shape_string(W) +
                                  " does not match kernel*c_in = " + std::to_string(kernel * c_in));
    int c_out = W.cols();
    if (B.cols() != c_out || B.rows() != 1)
      throw std::invalid_argument("conv1d: bias shape mismatch");
    int t_out = (t_in - kernel) / stride + 1;

    Tensor cols = Tensor::zeros({batch * t_out, kernel * c_in});
    for (int b = 0; b < batch; ++b)
      for (int u = 0; u < t_out; ++u)
        for (int k = 0; k < kernel; ++k)
          std::copy_n(&X.data[(static_cast<size_t>(b) * t_in + u * stride + k) * c_in], c_in,
                      &cols.data[(static_cast<size_t>(b) * t_out + u) * (kernel * c_in) + k * c_in]);

    Tensor out = Tensor::zeros({batch * t_out, c_out});
    as_matrix(out).noalias() = as_matrix(cols) * as_matrix(W);
    as_matrix(out).rowwise() += Eigen::Map<const Eigen::RowVectorXf>(B.data.data(), c_out);

    return push(std::move(out), [x, w, bias, batch, kernel, stride, t_in, t_out, c_in,
                                 c_out](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& X = t.values_[x.id];
      const Tensor& W = t.values_[w.id];

      Tensor cols = Tensor::zeros({batch * t_out, kernel * c_in});
      for (int b = 0; b < batch; ++b)
        for (int u = 0; u < t_out; ++u)
          for (int k = 0; k < kernel; ++k)
            std::copy_n(&X.data[(static_cast<size_t>(b) * t_in + u * stride + k) * c_in], c_in,
                        &cols.data[(static_cast<size_t>(b) * t_out + u) * (kernel * c_in) + k * c_in]);

      as_matrix(t.ensure_grad(w)).noalias() += as_matrix(cols).transpose() * as_matrix(g);
      Eigen::Map<Eigen::RowVectorXf>(t.ensure_grad(bias).data.data(), c_out) +=
          as_matrix(g).colwise().sum();

      Tensor dcols = Tensor::zeros({batch * t_out, kernel * c_in});
      as_matrix(dcols).noalias() = as_matrix(g) * as_matrix(W).transpose();
      Tensor& dx = t.ensure_grad(x);
      for (int b = 0; b < batch; ++b)
        for (int u = 0; u < t_out; ++u)
          for (int k = 0; k < kernel; ++k) {
            const float* src =
                &dcols.data[(static_cast<size_t>(b) * t_out + u) * (kernel * c_in) + k * c_in];
            float* dst = &dx.data[(static_cast<size_t>(b) * t_in + u * stride + k) * c_in];
            for (int c = 0; c < c_in; ++c) dst[c] += src[c];
          }
    });
  }

  // --- attention (time-major encoder states: row j*batch + b) ---

  /// Additive attention scores: e[b,j] = v . tanh(ws[b,:] + uah[j*B+b,:]).
  Var attn_scores(Var ws, Var uah, Var v, int positions) {
    const Tensor& S = value(ws);
    const Tensor& U = value(uah);
    const Tensor& V = value(v);
    int B = S.rows(), D = S.cols();
    if (U.cols() != D || V.rows() != D || V.cols() != 1 || U.rows() != positions * B)
      throw std::invalid_argument("attn_scores: shape mismatch " + shape_string(S) + ", " +
                                  shape_string(U) + ", " + shape_string(V));
    Tensor out = Tensor::zeros({B, positions});
    for (int j = 0; j < positions; ++j)
      for (int b = 0; b < B; ++b) {
        const float* srow = &S.data[static_cast<size_t>(b) * D];
        const float* urow = &U.data[(static_cast<size_t>(j) * B + b) * D];
        float e = 0;
        for (int d = 0; d < D; ++d) e += V.data[d] * std::tanh(srow[d] + urow[d]);
        out.at(b, j) = e;
      }
    return push(std::move(out), [ws, uah, v, positions](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& S = t.values_[ws.id];
      const Tensor& U = t.values_[uah.id];
      const Tensor& V = t.values_[v.id];
      int B = S.rows(), D = S.cols();
      Tensor& ds = t.ensure_grad(ws);
      Tensor& du = t.ensure_grad(uah);
      Tensor& dv = t.ensure_grad(v);
      for (int j = 0; j < positions; ++j)
        for (int b = 0; b < B; ++b) {
          float gd = g.at(b, j);
          if (gd == 0.0f) continue;
          const float* srow = &S.data[static_cast<size_t>(b) * D];
          const float* urow = &U.data[(static_cast<size_t>(j) * B + b) * D];
          float* dsrow = &ds.data[static_cast<size_t>(b) * D];
          float* durow = &du.data[(static_cast<size_t>(j) * B + b) * D];
          for (int d = 0; d < D; ++d) {
            float th = std::tanh(srow[d] + urow[d]);
            float pre = gd * V.data[d] * (1.0f - th * th);
            dsrow[d] += pre;
            durow[d] += pre;
            dv.data[d] += gd * th;
          }
        }
    });
  }

  /// Convex combination of encoder states: c[b,:] = sum_j alpha[b,j] * h[j*B+b,:].
  Var attn_context(Var alpha, Var h) {
    const Tensor& A = value(alpha);
    const Tensor& H = value(h);
    int B = A.rows(), J = A.cols(), N = H.cols();
    if (H.rows() != J * B)
      throw std::invalid_argument("attn_context: shape mismatch " + shape_string(A) + ", " +
                                  shape_string(H));
    Tensor out = Tensor::zeros({B, N});
    for (int j = 0; j < J; ++j)
      for (int b = 0; b < B; ++b) {
        float a = A.at(b, j);
        const float* hrow = &H.data[(static_cast<size_t>(j) * B + b) * N];
        float* orow = &out.data[static_cast<size_t>(b) * N];
        for (int n = 0; n < N; ++n) orow[n] += a * hrow[n];
      }
    return push(std::move(out), [alpha, h](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      const Tensor& A = t.values_[alpha.id];
      const Tensor& H = t.values_[h.id];
      int B = A.rows(), J = A.cols(), N = H.cols();
      Tensor& da = t.ensure_grad(alpha);
      Tensor& dh = t.ensure_grad(h);
      for (int j = 0; j < J; ++j)
        for (int b = 0; b < B; ++b) {
          const float* grow = &g.data[static_cast<size_t>(b) * N];
          const float* hrow = &H.data[(static_cast<size_t>(j) * B + b) * N];
          float* dhrow = &dh.data[(static_cast<size_t>(j) * B + b) * N];
          float a = A.at(b, j);
          float dot = 0;
          for (int n = 0; n < N; ++n) {
            dot += grow[n] * hrow[n];
            dhrow[n] += a * grow[n];
          }
          da.at(b, j) += dot;
        }
    });
  }

  // --- losses ---

  /// Masked token cross-entropy over rows of logits. With `mean` the sum is
  /// divided by the mask total (0 rows contribute nothing).
  Var cross_entropy(Var logits, std::vector<int> targets, std::vector<float> mask, bool mean) {
    const Tensor& L = value(logits);
    int N = L.rows(), V = L.cols();
    if (static_cast<int>(targets.size()) != N || static_cast<int>(mask.size()) != N)
      throw std::invalid_argument("cross_entropy: targets/mask length mismatch with logits " +
                                  shape_string(L));
    double mask_total = 0;
    for (float m : mask) mask_total += m;
    double denom = mean ? (mask_total > 0 ? mask_total : 1.0) : 1.0;

    double total = 0;
    for (int r = 0; r < N; ++r) {
      if (mask[r] == 0.0f) continue;
      if (targets[r] < 0 || targets[r] >= V)
        throw std::invalid_argument("cross_entropy: target id out of range");
      const float* row = &L.data[static_cast<size_t>(r) * V];
      float m = row[0];
      for (int c = 1; c < V; ++c) m = std::max(m, row[c]);
      double sum = 0;
      for (int c = 0; c < V; ++c) sum += std::exp(static_cast<double>(row[c]) - m);
      double lse = m + std::log(sum);
      total += mask[r] * (lse - row[targets[r]]);
    }
    Tensor out = Tensor::scalar(static_cast<float>(total / denom));
    return push(std::move(out),
                [logits, targets = std::move(targets), mask = std::move(mask), denom](
                    Tape& t, int self) {
                  float gs = t.grads_[self].data[0];
                  if (gs == 0.0f) return;
                  const Tensor& L = t.values_[logits.id];
                  Tensor& dl = t.ensure_grad(logits);
                  int N = L.rows(), V = L.cols();
                  for (int r = 0; r < N; ++r) {
                    if (mask[r] == 0.0f) continue;
                    const float* row = &L.data[static_cast<size_t>(r) * V];
                    float* drow = &dl.data[static_cast<size_t>(r) * V];
                    float m = row[0];
                    for (int c = 1; c < V; ++c) m = std::max(m, row[c]);
                    double sum = 0;
                    for (int c = 0; c < V; ++c) sum += std::exp(static_cast<double>(row[c]) - m);
                    float coeff = gs * mask[r] / static_cast<float>(denom);
                    for (int c = 0; c < V; ++c) {
                      float p = static_cast<float>(std::exp(static_cast<double>(row[c]) - m) / sum);
                      drow[c] += coeff * (p - (c == targets[r] ? 1.0f : 0.0f));
                    }
                  }
                });
  }

  Var sum_all(Var a) {
    const Tensor& A = value(a);
    double s = 0;
    for (float x : A.data) s += x;
    Tensor out = Tensor::scalar(static_cast<float>(s));
    return push(std::move(out), [a](Tape& t, int self) {
      float g = t.grads_[self].data[0];
      Tensor& da = t.ensure_grad(a);
      for (float& x : da.data) x += g;
    });
  }

  /// Backpropagate from a scalar root (seeded with 1).
  void backward(Var root) {
    if (!value(root).is_scalar())
      throw std::invalid_argument("backward: root must be a scalar");
    grads_.assign(values_.size(), Tensor{});
    ensure_grad(root).data[0] = 1.0f;
    for (int i = root.id; i >= 0; --i) {
      if (grads_[i].data.empty() || !backs_[i]) continue;
      backs_[i](*this, i);
    }
  }

 private:
  using BackFn = std::function<void(Tape&, int)>;

  int check(Var v) const {
    if (!v.valid() || v.id >= static_cast<int>(values_.size()))
      throw std::invalid_argument("invalid tape variable");
    return v.id;
  }

  Var push(Tensor value, BackFn back) {
    values_.push_back(std::move(value));
    backs_.push_back(std::move(back));
    grads_.emplace_back();
    return Var{static_cast<int>(values_.size()) - 1};
  }

  Tensor& ensure_grad(Var v) {
    Tensor& g = grads_[check(v)];
    if (g.data.empty()) g = Tensor::zeros(values_[v.id].shape);
    return g;
  }
  Tensor& ensure_grad(int id) { return ensure_grad(Var{id}); }

  Var concat(const std::vector<Var>& parts, int axis) {
    if (parts.empty()) throw std::invalid_argument("concat: no inputs");
    int R = value(parts[0]).rows(), C = value(parts[0]).cols();
    int total = 0;
    for (Var p : parts) {
      const Tensor& t = value(p);
      if (axis == 1 && t.rows() != R)
        throw std::invalid_argument("concat_cols: row mismatch");
      if (axis == 0 && t.cols() != C)
        throw std::invalid_argument("concat_rows: column mismatch");
      total += axis == 1 ? t.cols() : t.rows();
    }
    Tensor out = axis == 1 ? Tensor::zeros({R, total}) : Tensor::zeros({total, C});
    int at = 0;
    for (Var p : parts) {
      const Tensor& t = value(p);
      if (axis == 1) {
        for (int r = 0; r < R; ++r)
          std::copy_n(&t.data[static_cast<size_t>(r) * t.cols()], t.cols(),
                      &out.data[static_cast<size_t>(r) * total + at]);
        at += t.cols();
      } else {
        std::copy_n(t.data.data(), t.data.size(), &out.data[static_cast<size_t>(at) * C]);
        at += t.rows();
      }
    }
    auto parts_copy = parts;
    return push(std::move(out), [parts = std::move(parts_copy), axis](Tape& t, int self) {
      const Tensor& g = t.grads_[self];
      int at = 0;
      for (Var p : parts) {
        Tensor& dp = t.ensure_grad(p);
        int R = dp.rows(), C = dp.cols();
        if (axis == 1) {
          for (int r = 0; r < R; ++r)
            for (int c = 0; c < C; ++c)
              dp.data[static_cast<size_t>(r) * C + c] +=
                  g.data[static_cast<size_t>(r) * g.cols() + at + c];
          at += C;
        } else {
          for (size_t i = 0; i < dp.data.size(); ++i)
            dp.data[i] += g.data[static_cast<size_t>(at) * C + i];
          at += R;
        }
      }
    });
  }

  std::vector<Tensor> values_;
  std::vector<BackFn> backs_;
  std::vector<Tensor> grads_;
};

}  // namespace stylox
