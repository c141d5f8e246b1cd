#include "windfc/autodiff/ops.hpp"

#include <Eigen/Core>
#include <cmath>
#include <string>

namespace windfc::ad {

namespace {

template <typename T>
using MatR = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapR = Eigen::Map<MatR<T>>;
template <typename T>
using CMapR = Eigen::Map<const MatR<T>>;

thread_local std::string g_broken_op;

template <typename T>
T fault_factor(const char* op) {
  return (!g_broken_op.empty() && g_broken_op == op) ? T(1.5) : T(1);
}

template <typename T>
CMapR<T> cmap(const Tensor<T>& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return CMapR<T>(t.data().data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

template <typename T>
MapR<T> map(Tensor<T>& t, std::size_t rows, std::size_t cols, std::size_t offset = 0) {
  return MapR<T>(t.data().data() + offset, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

template <typename T>
void same_tape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (!a.attached() || a.tape() != b.tape()) throw Error(ErrorCode::DetachedLoss, std::string(op) + ": tape mismatch");
}

}  // namespace

namespace debug {
void break_backward(std::string_view op) { g_broken_op = std::string(op); }
void clear_broken_backward() { g_broken_op.clear(); }
}  // namespace debug

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  same_tape("matmul", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() < 2 || bv.rank() != 2 || av.shape().back() != bv.dim(0)) shape_error("matmul", av.shape(), bv.shape());
  const std::size_t k = bv.dim(0);
  const std::size_t n = bv.dim(1);
  const std::size_t rows = av.size() / k;
  Shape out_shape = av.shape();
  out_shape.back() = n;
  Tensor<T> out(out_shape);
  map(out, rows, n).noalias() = cmap(av, rows, k) * cmap(bv, k, n);

  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(
      std::move(out), {a, b},
      [ia, ib, rows, k, n](Tape<T>& tape, const Tensor<T>& g) {
        const auto gm = cmap(g, rows, n);
        if (tape.requires_grad(ia)) {
          map(tape.grad_buffer(ia), rows, k).noalias() +=
              fault_factor<T>("matmul") * (gm * cmap(tape.value(ib), k, n).transpose());
        }
        if (tape.requires_grad(ib)) {
          map(tape.grad_buffer(ib), k, n).noalias() += cmap(tape.value(ia), rows, k).transpose() * gm;
        }
      },
      "matmul");
}

template <typename T>
Var<T> batch_matmul(const Var<T>& a, const Var<T>& b, bool transpose_b) {
  same_tape("batch_matmul", a, b);
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() < 3 || bv.rank() != av.rank()) shape_error("batch_matmul", av.shape(), bv.shape());
  for (std::size_t i = 0; i + 2 < av.rank(); ++i) {
    if (av.dim(i) != bv.dim(i)) shape_error("batch_matmul", av.shape(), bv.shape());
  }
  const std::size_t r = av.rank();
  const std::size_t m = av.dim(r - 2);
  const std::size_t k = av.dim(r - 1);
  const std::size_t bk = transpose_b ? bv.dim(r - 1) : bv.dim(r - 2);
  const std::size_t n = transpose_b ? bv.dim(r - 2) : bv.dim(r - 1);
  if (bk != k) shape_error("batch_matmul", av.shape(), bv.shape());
  const std::size_t batches = av.size() / (m * k);

  Shape out_shape = av.shape();
  out_shape[r - 1] = n;
  Tensor<T> out(out_shape);
  for (std::size_t i = 0; i < batches; ++i) {
    auto A = cmap(av, m, k, i * m * k);
    if (transpose_b) {
      map(out, m, n, i * m * n).noalias() = A * cmap(bv, n, k, i * n * k).transpose();
    } else {
      map(out, m, n, i * m * n).noalias() = A * cmap(bv, k, n, i * k * n);
    }
  }

  const std::size_t ia = a.id();
  const std::size_t ib = b.id();
  return a.tape()->record(
      std::move(out), {a, b},
      [ia, ib, batches, m, k, n, transpose_b](Tape<T>& tape, const Tensor<T>& g) {
        const bool need_a = tape.requires_grad(ia);
        const bool need_b = tape.requires_grad(ib);
        const T f = fault_factor<T>("batch_matmul");
        const auto& A = tape.value(ia);
        const auto& B = tape.value(ib);
        for (std::size_t i = 0; i < batches; ++i) {
          const auto G = cmap(g, m, n, i * m * n);
          if (need_a) {
            auto dA = map(tape.grad_buffer(ia), m, k, i * m * k);
            if (transpose_b) {
              dA.noalias() += f * (G * cmap(B, n, k, i * n * k));
            } else {
              dA.noalias() += f * (G * cmap(B, k, n, i * k * n).transpose());
            }
          }
          if (need_b) {
            if (transpose_b) {
              map(tape.grad_buffer(ib), n, k, i * n * k).noalias() += G.transpose() * cmap(A, m, k, i * m * k);
            } else {
              map(tape.grad_buffer(ib), k, n, i * k * n).noalias() += cmap(A, m, k, i * m * k).transpose() * G;
            }
          }
        }
      },
      "batch_matmul");
}

template <typename T>
Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  same_tape("affine", x, w);
  same_tape("affine", x, b);
  const auto& xv = x.value();
  const auto& wv = w.value();
  const auto& bv = b.value();
  if (wv.rank() != 2 || xv.shape().back() != wv.dim(0)) shape_error("affine", xv.shape(), wv.shape());
  if (bv.rank() != 1 || bv.dim(0) != wv.dim(1)) shape_error("affine", wv.shape(), bv.shape());
  const std::size_t d_in = wv.dim(0);
  const std::size_t d_out = wv.dim(1);
  const std::size_t rows = xv.size() / d_in;
  Shape out_shape = xv.shape();
  out_shape.back() = d_out;
  Tensor<T> out(out_shape);
  auto O = map(out, rows, d_out);
  O.noalias() = cmap(xv, rows, d_in) * cmap(wv, d_in, d_out);
  O.rowwise() += cmap(bv, 1, d_out).row(0);

  const std::size_t ix = x.id();
  const std::size_t iw = w.id();
  const std::size_t ib = b.id();
  return x.tape()->record(
      std::move(out), {x, w, b},
      [ix, iw, ib, rows, d_in, d_out](Tape<T>& tape, const Tensor<T>& g) {
        const auto G = cmap(g, rows, d_out);
        if (tape.requires_grad(ix)) {
          map(tape.grad_buffer(ix), rows, d_in).noalias() +=
              fault_factor<T>("affine") * (G * cmap(tape.value(iw), d_in, d_out).transpose());
        }
        if (tape.requires_grad(iw)) {
          map(tape.grad_buffer(iw), d_in, d_out).noalias() += cmap(tape.value(ix), rows, d_in).transpose() * G;
        }
        if (tape.requires_grad(ib)) {
          map(tape.grad_buffer(ib), 1, d_out).row(0) += G.colwise().sum();
        }
      },
      "affine");
}

template <typename T>
Var<T> add(const Var<T>& x, const Var<T>& y) {
  same_tape("add", x, y);
  const auto& xv = x.value();
  const auto& yv = y.value();
  if (xv.shape() != yv.shape()) shape_error("add", xv.shape(), yv.shape());
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] + yv[i];
  const std::size_t ix = x.id();
  const std::size_t iy = y.id();
  return x.tape()->record(
      std::move(out), {x, y},
      [ix, iy](Tape<T>& tape, const Tensor<T>& g) {
        const T f = fault_factor<T>("add");
        if (tape.requires_grad(ix)) {
          auto d = tape.grad_buffer(ix).data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += f * g[i];
        }
        if (tape.requires_grad(iy)) tape.accumulate_grad(iy, g);
      },
      "add");
}

template <typename T>
Var<T> mul(const Var<T>& x, const Var<T>& y) {
  same_tape("mul", x, y);
  const auto& xv = x.value();
  const auto& yv = y.value();
  if (xv.shape() != yv.shape()) shape_error("mul", xv.shape(), yv.shape());
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] * yv[i];
  const std::size_t ix = x.id();
  const std::size_t iy = y.id();
  return x.tape()->record(
      std::move(out), {x, y},
      [ix, iy](Tape<T>& tape, const Tensor<T>& g) {
        const auto& xv = tape.value(ix);
        const auto& yv = tape.value(iy);
        if (tape.requires_grad(ix)) {
          const T f = fault_factor<T>("mul");
          auto d = tape.grad_buffer(ix).data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += f * g[i] * yv[i];
        }
        if (tape.requires_grad(iy)) {
          auto d = tape.grad_buffer(iy).data();
          for (std::size_t i = 0; i < d.size(); ++i) d[i] += g[i] * xv[i];
        }
      },
      "mul");
}

template <typename T>
Var<T> scale(const Var<T>& x, T c) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * xv[i];
  const std::size_t ix = x.id();
  return x.tape()->record(
      std::move(out), {x},
      [ix, c](Tape<T>& tape, const Tensor<T>& g) {
        const T k = c * fault_factor<T>("scale");
        auto d = tape.grad_buffer(ix).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += k * g[i];
      },
      "scale");
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  const auto& xv = x.value();
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = xv[i] > T(0) ? xv[i] : T(0);
  const std::size_t ix = x.id();
  return x.tape()->record(
      std::move(out), {x},
      [ix](Tape<T>& tape, const Tensor<T>& g) {
        const T f = fault_factor<T>("relu");
        const auto& xv = tape.value(ix);
        auto d = tape.grad_buffer(ix).data();
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (xv[i] > T(0)) d[i] += f * g[i];
        }
      },
      "relu");
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  const std::size_t ix = x.id();
  return x.tape()->record(
      std::move(out), {x},
      [ix](Tape<T>& tape, const Tensor<T>& g) {
        const T f = fault_factor<T>("reshape");
        auto d = tape.grad_buffer(ix).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += f * g[i];
      },
      "reshape");
}

template <typename T>
Var<T> swap_axes12(const Var<T>& x) {
  const auto& xv = x.value();
  if (xv.rank() != 4) throw Error(ErrorCode::ShapeMismatch, "swap_axes12 needs rank 4, got " + shape_string(xv.shape()));
  const std::size_t A = xv.dim(0);
  const std::size_t B = xv.dim(1);
  const std::size_t C = xv.dim(2);
  const std::size_t D = xv.dim(3);
  Tensor<T> out({A, C, B, D});
  for (std::size_t a = 0; a < A; ++a)
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t c = 0; c < C; ++c) {
        const T* src = xv.data().data() + ((a * B + b) * C + c) * D;
        T* dst = out.data().data() + ((a * C + c) * B + b) * D;
        std::copy(src, src + D, dst);
      }
  const std::size_t ix = x.id();
  return x.tape()->record(
      std::move(out), {x},
      [ix, A, B, C, D](Tape<T>& tape, const Tensor<T>& g) {
        const T f = fault_factor<T>("swap_axes12");
        auto d = tape.grad_buffer(ix).data();
        for (std::size_t a = 0; a < A; ++a)
          for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) {
              const T* src = g.data().data() + ((a * C + c) * B + b) * D;
              T* dst = d.data() + ((a * B + b) * C + c) * D;
              for (std::size_t e = 0; e < D; ++e) dst[e] += f * src[e];
            }
      },
      "swap_axes12");
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  const auto& xv = x.value();
  T total = T(0);
  for (T v : xv.data()) total += v;
  const std::size_t ix = x.id();
  return x.tape()->record(
      Tensor<T>::scalar(total), {x},
      [ix](Tape<T>& tape, const Tensor<T>& g) {
        const T gv = g[0] * fault_factor<T>("sum");
        for (T& d : tape.grad_buffer(ix).data()) d += gv;
      },
      "sum");
}

template <typename T>
Var<T> softmax_lastaxis(const Var<T>& x) {
  const auto& xv = x.value();
  const std::size_t d = xv.shape().back();
  const std::size_t rows = xv.size() / d;
  Tensor<T> out(xv.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data().data() + r * d;
    T* o = out.data().data() + r * d;
    T mx = in[0];
    for (std::size_t j = 0; j < d; ++j) {
      if (!std::isfinite(in[j])) throw Error(ErrorCode::NonFiniteInput, "softmax_lastaxis");
      mx = std::max(mx, in[j]);
    }
    T z = T(0);
    for (std::size_t j = 0; j < d; ++j) {
      o[j] = std::exp(in[j] - mx);
      z += o[j];
    }
    const T inv = T(1) / z;
    for (std::size_t j = 0; j < d; ++j) o[j] *= inv;
  }
  const std::size_t ix = x.id();
  const std::size_t self = x.tape()->size();
  return x.tape()->record(
      std::move(out), {x},
      [ix, self, rows, d](Tape<T>& tape, const Tensor<T>& g) {
        const T f = fault_factor<T>("softmax_lastaxis");
        const auto& y = tape.value(self);
        auto dx = tape.grad_buffer(ix).data();
        for (std::size_t r = 0; r < rows; ++r) {
          const T* yr = y.data().data() + r * d;
          const T* gr = g.data().data() + r * d;
          T dot = T(0);
          for (std::size_t j = 0; j < d; ++j) dot += gr[j] * yr[j];
          T* out = dx.data() + r * d;
          for (std::size_t j = 0; j < d; ++j) out[j] += f * yr[j] * (gr[j] - dot);
        }
      },
      "softmax_lastaxis");
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  same_tape("layer_norm", x, gamma);
  same_tape("layer_norm", x, beta);
  const auto& xv = x.value();
  const std::size_t d = xv.shape().back();
  if (gamma.value().shape() != Shape{d} || beta.value().shape() != Shape{d}) {
    shape_error("layer_norm", xv.shape(), gamma.value().shape());
  }
  if (!(eps > T(0))) throw Error(ErrorCode::InvalidArgument, "layer_norm eps must be positive");
  const std::size_t rows = xv.size() / d;
  const auto& gv = gamma.value();
  const auto& bv = beta.value();

  Tensor<T> out(xv.shape());
  std::vector<T> xhat(xv.size());
  std::vector<T> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = xv.data().data() + r * d;
    T mean = T(0);
    for (std::size_t j = 0; j < d; ++j) mean += in[j];
    mean /= T(d);
    T var = T(0);
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mean) * (in[j] - mean);
    var /= T(d);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[r] = is;
    for (std::size_t j = 0; j < d; ++j) {
      const T h = (in[j] - mean) * is;
      xhat[r * d + j] = h;
      out[r * d + j] = gv[j] * h + bv[j];
    }
  }

  const std::size_t ix = x.id();
  const std::size_t ig = gamma.id();
  const std::size_t ib = beta.id();
  return x.tape()->record(
      std::move(out), {x, gamma, beta},
      [ix, ig, ib, rows, d, xhat = std::move(xhat), inv_std = std::move(inv_std)](Tape<T>& tape,
                                                                                  const Tensor<T>& g) {
        const auto& gv = tape.value(ig);
        if (tape.requires_grad(ix)) {
          const T f = fault_factor<T>("layer_norm");
          auto dx = tape.grad_buffer(ix).data();
          std::vector<T> dxhat(d);
          for (std::size_t r = 0; r < rows; ++r) {
            T s1 = T(0);
            T s2 = T(0);
            for (std::size_t j = 0; j < d; ++j) {
              dxhat[j] = g[r * d + j] * gv[j];
              s1 += dxhat[j];
              s2 += dxhat[j] * xhat[r * d + j];
            }
            const T k = f * inv_std[r] / T(d);
            for (std::size_t j = 0; j < d; ++j) {
              dx[r * d + j] += k * (T(d) * dxhat[j] - s1 - xhat[r * d + j] * s2);
            }
          }
        }
        if (tape.requires_grad(ig)) {
          auto dg = tape.grad_buffer(ig).data();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) dg[j] += g[r * d + j] * xhat[r * d + j];
        }
        if (tape.requires_grad(ib)) {
          auto db = tape.grad_buffer(ib).data();
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t j = 0; j < d; ++j) db[j] += g[r * d + j];
        }
      },
      "layer_norm");
}

template <typename T>
Var<T> dropout(const Var<T>& x, T rate, bool training, std::mt19937_64& rng) {
  if (!(rate >= T(0) && rate < T(1))) throw Error(ErrorCode::InvalidArgument, "dropout rate must be in [0, 1)");
  const auto& xv = x.value();
  if (!training || rate == T(0)) return x;
  const T keep_scale = T(1) / (T(1) - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<T> mask(xv.size());
  Tensor<T> out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    mask[i] = uniform(rng) < static_cast<double>(rate) ? T(0) : keep_scale;
    out[i] = xv[i] * mask[i];
  }
  const std::size_t ix = x.id();
  return x.tape()->record(
      std::move(out), {x},
      [ix, mask = std::move(mask)](Tape<T>& tape, const Tensor<T>& g) {
        const T f = fault_factor<T>("dropout");
        auto d = tape.grad_buffer(ix).data();
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += f * g[i] * mask[i];
      },
      "dropout");
}

template <typename T>
Var<T> rmse_loss(const Var<T>& pred, const Tensor<T>& target, std::span<const std::uint8_t> mask, T eps_loss) {
  const auto& pv = pred.value();
  if (pv.shape() != target.shape()) shape_error("rmse_loss", pv.shape(), target.shape());
  if (mask.size() != pv.size()) {
    throw Error(ErrorCode::ShapeMismatch, "rmse_loss: mask has " + std::to_string(mask.size()) + " elements");
  }
  double count = 0.0;
  double sq = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    if (!mask[i]) continue;
    const double e = static_cast<double>(pv[i]) - static_cast<double>(target[i]);
    sq += e * e;
    count += 1.0;
  }
  if (count == 0.0) throw Error(ErrorCode::EmptyMask, "rmse_loss: no unmasked positions");
  const double loss = std::sqrt(sq / count + static_cast<double>(eps_loss));

  const std::size_t ip = pred.id();
  std::vector<std::uint8_t> mask_copy(mask.begin(), mask.end());
  return pred.tape()->record(
      Tensor<T>::scalar(static_cast<T>(loss)), {pred},
      [ip, target, mask_copy = std::move(mask_copy), count, loss](Tape<T>& tape, const Tensor<T>& g) {
        const auto& pv = tape.value(ip);
        const double k = static_cast<double>(g[0]) * static_cast<double>(fault_factor<T>("rmse_loss")) / (count * loss);
        auto d = tape.grad_buffer(ip).data();
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (mask_copy[i]) d[i] += static_cast<T>(k * (static_cast<double>(pv[i]) - static_cast<double>(target[i])));
        }
      },
      "rmse_loss");
}

#define WINDFC_INSTANTIATE_OPS(T)                                                                    \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                             \
  template Var<T> batch_matmul(const Var<T>&, const Var<T>&, bool);                                 \
  template Var<T> affine(const Var<T>&, const Var<T>&, const Var<T>&);                              \
  template Var<T> add(const Var<T>&, const Var<T>&);                                                \
  template Var<T> mul(const Var<T>&, const Var<T>&);                                                \
  template Var<T> scale(const Var<T>&, T);                                                          \
  template Var<T> relu(const Var<T>&);                                                              \
  template Var<T> reshape(const Var<T>&, Shape);                                                    \
  template Var<T> swap_axes12(const Var<T>&);                                                       \
  template Var<T> sum(const Var<T>&);                                                               \
  template Var<T> softmax_lastaxis(const Var<T>&);                                                  \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);                      \
  template Var<T> dropout(const Var<T>&, T, bool, std::mt19937_64&);                                \
  template Var<T> rmse_loss(const Var<T>&, const Tensor<T>&, std::span<const std::uint8_t>, T);

WINDFC_INSTANTIATE_OPS(float)
WINDFC_INSTANTIATE_OPS(double)

#undef WINDFC_INSTANTIATE_OPS

}  // namespace windfc::ad
