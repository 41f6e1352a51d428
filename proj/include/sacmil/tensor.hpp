#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <vector>

#include "sacmil/common.hpp"
#include "sacmil/rng.hpp"

namespace sacmil {

// Dense row-major arrays (rank 1-3) carrying a reverse-mode tape. Each op
// returns a fresh node whose backward_fn scatters adjoints into its parents.
// Scalar type S is float for training/ECL runs and double for gradient
// checks. All ops are single-threaded with a fixed reduction order, so
// identical inputs produce bitwise-identical outputs.

template <typename S>
struct Tensor;

template <typename S>
using TensorPtr = std::shared_ptr<Tensor<S>>;

template <typename S>
struct Tensor : std::enable_shared_from_this<Tensor<S>> {
    std::vector<std::size_t> shape;
    std::vector<S> data;
    std::vector<S> grad;  // sized iff requires_grad
    bool requires_grad = false;

    std::vector<TensorPtr<S>> parents;
    std::function<void()> backward_fn;

    Tensor(std::vector<std::size_t> s, std::vector<S> d, bool rg)
        : shape(std::move(s)), data(std::move(d)), requires_grad(rg) {
        std::size_t n = 1;
        for (auto e : shape) n *= e;
        if (shape.empty() || shape.size() > 3)
            throw ContractError("tensor rank must be 1-3, got rank " + std::to_string(shape.size()));
        if (n != data.size())
            throw ContractError("tensor value count " + std::to_string(data.size()) +
                                " does not match shape " + shape_str(shape));
        if (requires_grad) grad.assign(data.size(), S(0));
    }

    std::size_t size() const { return data.size(); }
    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.size() > 1 ? shape[1] : 1; }

    void ensure_grad() {
        requires_grad = true;
        if (grad.size() != data.size()) grad.assign(data.size(), S(0));
    }

    void zero_grad() { std::fill(grad.begin(), grad.end(), S(0)); }

    // Reverse sweep from a scalar root. Adjoints accumulate, so a second
    // call without zeroing the grads adds on top of the first.
    void backward() {
        if (size() != 1)
            throw ContractError("backward() root must be a scalar, got shape " + shape_str(shape));
        if (!requires_grad)
            throw ContractError("backward() root does not require gradients");

        std::vector<Tensor<S>*> topo;
        std::unordered_set<const Tensor<S>*> visited;
        // iterative DFS; post-order via explicit frame state
        std::vector<std::pair<Tensor<S>*, std::size_t>> frames;
        frames.emplace_back(this, 0);
        visited.insert(this);
        while (!frames.empty()) {
            auto& [node, next] = frames.back();
            if (next < node->parents.size()) {
                Tensor<S>* p = node->parents[next++].get();
                if (p->requires_grad && visited.insert(p).second) frames.emplace_back(p, 0);
            } else {
                topo.push_back(node);
                frames.pop_back();
            }
        }
        grad[0] += S(1);
        for (auto it = topo.rbegin(); it != topo.rend(); ++it)
            if ((*it)->backward_fn) (*it)->backward_fn();
    }
};

template <typename S>
TensorPtr<S> tensor(std::vector<std::size_t> shape, std::vector<S> data, bool requires_grad = false) {
    return std::make_shared<Tensor<S>>(std::move(shape), std::move(data), requires_grad);
}

template <typename S>
TensorPtr<S> zeros(std::vector<std::size_t> shape, bool requires_grad = false) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return tensor<S>(std::move(shape), std::vector<S>(n, S(0)), requires_grad);
}

template <typename S>
TensorPtr<S> full(std::vector<std::size_t> shape, S value, bool requires_grad = false) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    return tensor<S>(std::move(shape), std::vector<S>(n, value), requires_grad);
}

template <typename S>
TensorPtr<S> uniform(std::vector<std::size_t> shape, Rng& rng, double lo, double hi,
                     bool requires_grad = false) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    std::vector<S> d(n);
    for (auto& v : d) v = static_cast<S>(rng.uniform(lo, hi));
    return tensor<S>(std::move(shape), std::move(d), requires_grad);
}

template <typename S>
TensorPtr<S> randn(std::vector<std::size_t> shape, Rng& rng, bool requires_grad = false) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    std::vector<S> d(n);
    for (auto& v : d) v = static_cast<S>(rng.normal());
    return tensor<S>(std::move(shape), std::move(d), requires_grad);
}

namespace detail {

template <typename S>
void attach(const TensorPtr<S>& out, std::vector<TensorPtr<S>> parents, std::function<void()> fn) {
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    if (!rg) return;
    out->ensure_grad();
    out->parents = std::move(parents);
    out->backward_fn = std::move(fn);
}

}  // namespace detail

// C = A (m x p) * B (p x q)
template <typename S>
TensorPtr<S> matmul(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    if (a->shape.size() != 2 || b->shape.size() != 2 || a->shape[1] != b->shape[0])
        throw ContractError("matmul shape mismatch: " + shape_str(a->shape) + " vs " +
                            shape_str(b->shape));
    const std::size_t m = a->shape[0], p = a->shape[1], q = b->shape[1];
    auto out = zeros<S>({m, q});
    const S* pa = a->data.data();
    const S* pb = b->data.data();
    S* pc = out->data.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t k = 0; k < p; ++k) {
            const S aik = pa[i * p + k];
            const S* brow = pb + k * q;
            S* crow = pc + i * q;
            for (std::size_t j = 0; j < q; ++j) crow[j] += aik * brow[j];
        }
    detail::attach<S>(out, {a, b}, [ao = a.get(), bo = b.get(), co = out.get(), m, p, q]() {
        const S* g = co->grad.data();
        if (ao->requires_grad) {
            // dA = dC * B^T
            S* ga = ao->grad.data();
            const S* pb2 = bo->data.data();
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t k = 0; k < p; ++k) {
                    S acc = 0;
                    const S* grow = g + i * q;
                    const S* brow = pb2 + k * q;
                    for (std::size_t j = 0; j < q; ++j) acc += grow[j] * brow[j];
                    ga[i * p + k] += acc;
                }
        }
        if (bo->requires_grad) {
            // dB = A^T * dC
            S* gb = bo->grad.data();
            const S* pa2 = ao->data.data();
            for (std::size_t k = 0; k < p; ++k)
                for (std::size_t i = 0; i < m; ++i) {
                    const S aik = pa2[i * p + k];
                    const S* grow = g + i * q;
                    S* gbrow = gb + k * q;
                    for (std::size_t j = 0; j < q; ++j) gbrow[j] += aik * grow[j];
                }
        }
    });
    return out;
}

template <typename S>
TensorPtr<S> add(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    if (a->shape != b->shape)
        throw ContractError("add shape mismatch: " + shape_str(a->shape) + " vs " +
                            shape_str(b->shape));
    auto out = tensor<S>(a->shape, a->data);
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] += b->data[i];
    detail::attach<S>(out, {a, b}, [ao = a.get(), bo = b.get(), co = out.get()]() {
        if (ao->requires_grad)
            for (std::size_t i = 0; i < co->size(); ++i) ao->grad[i] += co->grad[i];
        if (bo->requires_grad)
            for (std::size_t i = 0; i < co->size(); ++i) bo->grad[i] += co->grad[i];
    });
    return out;
}

template <typename S>
TensorPtr<S> mul(const TensorPtr<S>& a, const TensorPtr<S>& b) {
    if (a->shape != b->shape)
        throw ContractError("mul shape mismatch: " + shape_str(a->shape) + " vs " +
                            shape_str(b->shape));
    auto out = tensor<S>(a->shape, a->data);
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] *= b->data[i];
    detail::attach<S>(out, {a, b}, [ao = a.get(), bo = b.get(), co = out.get()]() {
        if (ao->requires_grad)
            for (std::size_t i = 0; i < co->size(); ++i) ao->grad[i] += bo->data[i] * co->grad[i];
        if (bo->requires_grad)
            for (std::size_t i = 0; i < co->size(); ++i) bo->grad[i] += ao->data[i] * co->grad[i];
    });
    return out;
}

// x (L x D) + b (D) broadcast over rows
template <typename S>
TensorPtr<S> add_bias(const TensorPtr<S>& x, const TensorPtr<S>& b) {
    if (x->shape.size() != 2 || b->shape.size() != 1 || x->shape[1] != b->shape[0])
        throw ContractError("add_bias shape mismatch: " + shape_str(x->shape) + " vs " +
                            shape_str(b->shape));
    const std::size_t L = x->shape[0], D = x->shape[1];
    auto out = tensor<S>(x->shape, x->data);
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < D; ++j) out->data[i * D + j] += b->data[j];
    detail::attach<S>(out, {x, b}, [xo = x.get(), bo = b.get(), co = out.get(), L, D]() {
        if (xo->requires_grad)
            for (std::size_t i = 0; i < co->size(); ++i) xo->grad[i] += co->grad[i];
        if (bo->requires_grad)
            for (std::size_t i = 0; i < L; ++i)
                for (std::size_t j = 0; j < D; ++j) bo->grad[j] += co->grad[i * D + j];
    });
    return out;
}

template <typename S>
TensorPtr<S> scale(const TensorPtr<S>& x, S factor) {
    auto out = tensor<S>(x->shape, x->data);
    for (auto& v : out->data) v *= factor;
    detail::attach<S>(out, {x}, [xo = x.get(), co = out.get(), factor]() {
        for (std::size_t i = 0; i < co->size(); ++i) xo->grad[i] += factor * co->grad[i];
    });
    return out;
}

// exact-erf GELU: x * Phi(x)
template <typename S>
TensorPtr<S> gelu(const TensorPtr<S>& x) {
    auto out = tensor<S>(x->shape, x->data);
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    for (auto& v : out->data) {
        const double xv = static_cast<double>(v);
        v = static_cast<S>(xv * 0.5 * (1.0 + std::erf(xv * inv_sqrt2)));
    }
    detail::attach<S>(out, {x}, [xo = x.get(), co = out.get()]() {
        constexpr double inv_sqrt2pi = 0.39894228040143267794;
        for (std::size_t i = 0; i < co->size(); ++i) {
            const double xv = static_cast<double>(xo->data[i]);
            const double phi = 0.5 * (1.0 + std::erf(xv * 0.70710678118654752440));
            const double pdf = inv_sqrt2pi * std::exp(-0.5 * xv * xv);
            xo->grad[i] += static_cast<S>(static_cast<double>(co->grad[i]) * (phi + xv * pdf));
        }
    });
    return out;
}

// Per-row standardization over the channel axis, then affine.
template <typename S>
TensorPtr<S> layer_norm(const TensorPtr<S>& x, const TensorPtr<S>& gamma, const TensorPtr<S>& beta,
                        S eps) {
    if (x->shape.size() != 2)
        throw ContractError("layer_norm expects a rank-2 input, got " + shape_str(x->shape));
    const std::size_t L = x->shape[0], D = x->shape[1];
    if (D < 2)
        throw ContractError("layer_norm channel width must be >= 2, got " + std::to_string(D));
    if (gamma->shape != std::vector<std::size_t>{D} || beta->shape != std::vector<std::size_t>{D})
        throw ContractError("layer_norm affine params must have shape [" + std::to_string(D) + "]");
    if (!(eps > S(0))) throw ContractError("layer_norm eps must be positive");

    auto out = zeros<S>({L, D});
    // cache per-row mean and inverse stddev for the backward pass
    auto inv_std = std::make_shared<std::vector<S>>(L);
    auto xhat = std::make_shared<std::vector<S>>(L * D);
    for (std::size_t i = 0; i < L; ++i) {
        const S* row = x->data.data() + i * D;
        S mean = 0;
        for (std::size_t j = 0; j < D; ++j) mean += row[j];
        mean /= static_cast<S>(D);
        S var = 0;
        for (std::size_t j = 0; j < D; ++j) {
            const S c = row[j] - mean;
            var += c * c;
        }
        var /= static_cast<S>(D);
        const S istd = S(1) / std::sqrt(var + eps);
        (*inv_std)[i] = istd;
        for (std::size_t j = 0; j < D; ++j) {
            const S h = (row[j] - mean) * istd;
            (*xhat)[i * D + j] = h;
            out->data[i * D + j] = gamma->data[j] * h + beta->data[j];
        }
    }
    detail::attach<S>(out, {x, gamma, beta},
                      [xo = x.get(), go = gamma.get(), bo = beta.get(), co = out.get(), inv_std,
                       xhat, L, D]() {
                          for (std::size_t i = 0; i < L; ++i) {
                              const S* gr = co->grad.data() + i * D;
                              const S* xh = xhat->data() + i * D;
                              if (go->requires_grad || bo->requires_grad)
                                  for (std::size_t j = 0; j < D; ++j) {
                                      if (go->requires_grad) go->grad[j] += gr[j] * xh[j];
                                      if (bo->requires_grad) bo->grad[j] += gr[j];
                                  }
                              if (!xo->requires_grad) continue;
                              S sum_g = 0, sum_gx = 0;
                              for (std::size_t j = 0; j < D; ++j) {
                                  const S gg = gr[j] * go->data[j];
                                  sum_g += gg;
                                  sum_gx += gg * xh[j];
                              }
                              const S istd = (*inv_std)[i];
                              const S inv_d = S(1) / static_cast<S>(D);
                              for (std::size_t j = 0; j < D; ++j) {
                                  const S gg = gr[j] * go->data[j];
                                  xo->grad[i * D + j] +=
                                      istd * (gg - inv_d * sum_g - xh[j] * inv_d * sum_gx);
                              }
                          }
                      });
    return out;
}

// Negative log softmax probability of the true class; rank-1 logits.
template <typename S>
TensorPtr<S> softmax_cross_entropy(const TensorPtr<S>& logits, std::size_t label) {
    if (logits->shape.size() != 1)
        throw ContractError("softmax_cross_entropy expects rank-1 logits, got " +
                            shape_str(logits->shape));
    const std::size_t C = logits->shape[0];
    if (label >= C)
        throw ContractError("class label " + std::to_string(label) + " out of range for " +
                            std::to_string(C) + " classes");
    S max_z = logits->data[0];
    for (std::size_t c = 1; c < C; ++c) max_z = std::max(max_z, logits->data[c]);
    S sum_exp = 0;
    for (std::size_t c = 0; c < C; ++c) sum_exp += std::exp(logits->data[c] - max_z);
    const S loss = std::log(sum_exp) - (logits->data[label] - max_z);
    auto out = tensor<S>({1}, {loss});
    detail::attach<S>(out, {logits}, [lo = logits.get(), co = out.get(), label, max_z, sum_exp,
                                      C]() {
        const S g = co->grad[0];
        for (std::size_t c = 0; c < C; ++c) {
            S p = std::exp(lo->data[c] - max_z) / sum_exp;
            if (c == label) p -= S(1);
            lo->grad[c] += g * p;
        }
    });
    return out;
}

// Mean over rows whose mask entry is true; result rank-1.
template <typename S>
TensorPtr<S> masked_mean_rows(const TensorPtr<S>& x, const std::vector<bool>& keep) {
    if (x->shape.size() != 2 || keep.size() != x->shape[0])
        throw ContractError("masked_mean_rows mask length must equal row count");
    const std::size_t L = x->shape[0], D = x->shape[1];
    std::size_t count = 0;
    for (bool k : keep) count += k ? 1 : 0;
    if (count == 0) throw ContractError("masked_mean_rows needs at least one unmasked row");
    auto out = zeros<S>({D});
    for (std::size_t i = 0; i < L; ++i) {
        if (!keep[i]) continue;
        for (std::size_t j = 0; j < D; ++j) out->data[j] += x->data[i * D + j];
    }
    const S inv = S(1) / static_cast<S>(count);
    for (auto& v : out->data) v *= inv;
    detail::attach<S>(out, {x}, [xo = x.get(), co = out.get(), keep, inv, L, D]() {
        for (std::size_t i = 0; i < L; ++i) {
            if (!keep[i]) continue;
            for (std::size_t j = 0; j < D; ++j) xo->grad[i * D + j] += inv * co->grad[j];
        }
    });
    return out;
}

template <typename S>
TensorPtr<S> reshape(const TensorPtr<S>& x, std::vector<std::size_t> new_shape) {
    std::size_t n = 1;
    for (auto e : new_shape) n *= e;
    if (n != x->size())
        throw ContractError("reshape to " + shape_str(new_shape) + " changes value count of " +
                            shape_str(x->shape));
    auto out = tensor<S>(std::move(new_shape), x->data);
    detail::attach<S>(out, {x}, [xo = x.get(), co = out.get()]() {
        for (std::size_t i = 0; i < co->size(); ++i) xo->grad[i] += co->grad[i];
    });
    return out;
}

template <typename S>
TensorPtr<S> sum_all(const TensorPtr<S>& x) {
    S acc = 0;
    for (auto v : x->data) acc += v;
    auto out = tensor<S>({1}, {acc});
    detail::attach<S>(out, {x}, [xo = x.get(), co = out.get()]() {
        for (auto& g : xo->grad) g += co->grad[0];
    });
    return out;
}

// out[i] = in[src[i]] for flat cell indices; src must be a permutation.
// Gradient scatters through the inverse map.
template <typename S>
TensorPtr<S> permute_cells(const TensorPtr<S>& x, std::shared_ptr<const std::vector<std::size_t>> src) {
    if (src->size() != x->size())
        throw ContractError("permute_cells map size must equal tensor size");
    auto out = zeros<S>(x->shape);
    for (std::size_t i = 0; i < out->size(); ++i) out->data[i] = x->data[(*src)[i]];
    detail::attach<S>(out, {x}, [xo = x.get(), co = out.get(), src]() {
        for (std::size_t i = 0; i < co->size(); ++i) xo->grad[(*src)[i]] += co->grad[i];
    });
    return out;
}

// In-plane rotation of channel pair (2t, 2t+1) of row m by angles[m*D/2 + t].
// Differentiable w.r.t. x only; the adjoint is the inverse rotation.
template <typename S>
TensorPtr<S> rotate_pairs(const TensorPtr<S>& x, std::shared_ptr<const std::vector<double>> angles) {
    if (x->shape.size() != 2)
        throw ContractError("rotate_pairs expects a rank-2 input, got " + shape_str(x->shape));
    const std::size_t L = x->shape[0], D = x->shape[1];
    if (D % 2 != 0)
        throw ContractError("rotate_pairs channel width must be even, got " + std::to_string(D));
    if (angles->size() != L * D / 2)
        throw ContractError("rotate_pairs needs one angle per channel pair");
    auto out = zeros<S>({L, D});
    for (std::size_t m = 0; m < L; ++m)
        for (std::size_t t = 0; t < D / 2; ++t) {
            const double a = (*angles)[m * (D / 2) + t];
            const S c = static_cast<S>(std::cos(a));
            const S s = static_cast<S>(std::sin(a));
            const S x0 = x->data[m * D + 2 * t];
            const S x1 = x->data[m * D + 2 * t + 1];
            out->data[m * D + 2 * t] = c * x0 - s * x1;
            out->data[m * D + 2 * t + 1] = s * x0 + c * x1;
        }
    detail::attach<S>(out, {x}, [xo = x.get(), co = out.get(), angles, L, D]() {
        for (std::size_t m = 0; m < L; ++m)
            for (std::size_t t = 0; t < D / 2; ++t) {
                const double a = (*angles)[m * (D / 2) + t];
                const S c = static_cast<S>(std::cos(a));
                const S s = static_cast<S>(std::sin(a));
                const S g0 = co->grad[m * D + 2 * t];
                const S g1 = co->grad[m * D + 2 * t + 1];
                xo->grad[m * D + 2 * t] += c * g0 + s * g1;
                xo->grad[m * D + 2 * t + 1] += -s * g0 + c * g1;
            }
    });
    return out;
}

}  // namespace sacmil
