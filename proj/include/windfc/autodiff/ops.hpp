#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "windfc/autodiff/tape.hpp"

namespace windfc::ad {

/// [.., m, k] x [k, n] -> [.., m, n]; b is shared across leading dims.
template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b);

/// Per-batch product: a [.., m, k] with b [.., k, n] (or [.., n, k] when
/// `transpose_b`). Leading dims of a and b must match.
template <typename T>
Var<T> batch_matmul(const Var<T>& a, const Var<T>& b, bool transpose_b = false);

/// x [.., d_in] w [d_in, d_out] + b [d_out].
template <typename T>
Var<T> affine(const Var<T>& x, const Var<T>& w, const Var<T>& b);

template <typename T>
Var<T> add(const Var<T>& x, const Var<T>& y);

/// Elementwise product of equal shapes.
template <typename T>
Var<T> mul(const Var<T>& x, const Var<T>& y);

template <typename T>
Var<T> scale(const Var<T>& x, T c);

template <typename T>
Var<T> relu(const Var<T>& x);

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape);

/// [a, b, c, d] -> [a, c, b, d]
template <typename T>
Var<T> swap_axes12(const Var<T>& x);

/// Sum of all elements as a shape-[1] tensor.
template <typename T>
Var<T> sum(const Var<T>& x);

/// Max-subtracted softmax over the last axis. Throws NonFiniteInput.
template <typename T>
Var<T> softmax_lastaxis(const Var<T>& x);

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps);

/// Inverted dropout: survivors are scaled by 1/(1 - rate). Identity when
/// `training` is false or rate is 0; the RNG is then not advanced.
template <typename T>
Var<T> dropout(const Var<T>& x, T rate, bool training, std::mt19937_64& rng);

/// sqrt(sum(mask * (pred - target)^2) / sum(mask) + eps_loss). `target` is
/// not differentiated. Throws EmptyMask when no position is selected.
template <typename T>
Var<T> rmse_loss(const Var<T>& pred, const Tensor<T>& target, std::span<const std::uint8_t> mask,
                 T eps_loss = T(1e-8));

namespace debug {
/// Scales the input gradient of the named primitive by 1.5 until cleared.
/// Used as a negative control for gradient checks.
void break_backward(std::string_view op);
void clear_broken_backward();
}  // namespace debug

}  // namespace windfc::ad
