#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "sacmil/partition.hpp"
#include "sacmil/tensor.hpp"

namespace sacmil {

enum class EncoderKind { none, sinusoidal, rope1d, rope2d, prope };

EncoderKind encoder_from_string(const std::string& name);
std::string encoder_name(EncoderKind kind);

struct PolarCoord {
    double rho = 0.0;    // radial distance after lambda scaling
    double alpha = 0.0;  // angle in (-pi, pi]
};

struct NormCoord {
    double x = 0.0;
    double y = 0.0;
};

// theta_t = 10000^(-t / (D/2)) for t = 0 .. D/2-1
class ThetaSchedule {
public:
    explicit ThetaSchedule(std::size_t dim) {
        if (dim < 2 || dim % 2 != 0)
            throw ContractError("theta schedule needs an even dimension >= 2, got " +
                                std::to_string(dim));
        const double half = static_cast<double>(dim / 2);
        theta_.resize(dim / 2);
        for (std::size_t t = 0; t < theta_.size(); ++t)
            theta_[t] = std::pow(10000.0, -static_cast<double>(t) / half);
    }
    double at(std::size_t t) const { return theta_.at(t); }
    std::size_t size() const { return theta_.size(); }

private:
    std::vector<double> theta_;
};

// Per-axis min-max normalization into [0,1]; a degenerate axis (max == min)
// maps to 0. Numerator and denominator stay in integer arithmetic until the
// final division, so scaling every coordinate by a positive constant yields
// bitwise-identical results.
std::vector<NormCoord> normalize_coords(const CoordSet& coords);

// rho = sqrt(x^2 + y^2) * lambda, alpha = atan2(y, x)
std::vector<PolarCoord> to_polar(const std::vector<NormCoord>& norm, double lambda);

// Rotate channel pair (2t, 2t+1) of instance m by rho_m * theta_t + alpha_m.
template <typename S>
TensorPtr<S> apply_prope(const TensorPtr<S>& h, const std::vector<PolarCoord>& polar,
                         const ThetaSchedule& theta) {
    if (h->shape.size() != 2)
        throw ContractError("apply_prope expects a rank-2 sequence, got " + shape_str(h->shape));
    const std::size_t L = h->shape[0], D = h->shape[1];
    if (D % 2 != 0)
        throw ContractError("apply_prope channel width must be even, got " + std::to_string(D));
    if (polar.size() != L)
        throw ContractError("apply_prope polar coordinate count must equal sequence length");
    if (theta.size() != D / 2)
        throw ContractError("apply_prope theta schedule does not match channel width");
    auto angles = std::make_shared<std::vector<double>>(L * D / 2);
    for (std::size_t m = 0; m < L; ++m)
        for (std::size_t t = 0; t < D / 2; ++t)
            (*angles)[m * (D / 2) + t] = polar[m].rho * theta.at(t) + polar[m].alpha;
    return rotate_pairs(h, angles);
}

// Classic ROPE on the arranged token index.
template <typename S>
TensorPtr<S> apply_rope_1d(const TensorPtr<S>& h, const std::vector<std::size_t>& indices,
                           const ThetaSchedule& theta) {
    if (h->shape.size() != 2)
        throw ContractError("apply_rope_1d expects a rank-2 sequence, got " + shape_str(h->shape));
    const std::size_t L = h->shape[0], D = h->shape[1];
    if (D % 2 != 0)
        throw ContractError("apply_rope_1d channel width must be even, got " + std::to_string(D));
    if (indices.size() != L)
        throw ContractError("apply_rope_1d index count must equal sequence length");
    auto angles = std::make_shared<std::vector<double>>(L * D / 2);
    for (std::size_t m = 0; m < L; ++m)
        for (std::size_t t = 0; t < D / 2; ++t)
            (*angles)[m * (D / 2) + t] = static_cast<double>(indices[m]) * theta.at(t);
    return rotate_pairs(h, angles);
}

// Axis-interleaved 2D ROPE: even channel pairs rotate with the x coordinate,
// odd pairs with y, both against theta_{pair/2}.
template <typename S>
TensorPtr<S> apply_rope_2d(const TensorPtr<S>& h, const std::vector<double>& px,
                           const std::vector<double>& py, const ThetaSchedule& theta) {
    if (h->shape.size() != 2)
        throw ContractError("apply_rope_2d expects a rank-2 sequence, got " + shape_str(h->shape));
    const std::size_t L = h->shape[0], D = h->shape[1];
    if (D % 4 != 0)
        throw ContractError("apply_rope_2d channel width must be divisible by 4, got " +
                            std::to_string(D));
    if (px.size() != L || py.size() != L)
        throw ContractError("apply_rope_2d coordinate counts must equal sequence length");
    auto angles = std::make_shared<std::vector<double>>(L * D / 2);
    for (std::size_t m = 0; m < L; ++m)
        for (std::size_t pair = 0; pair < D / 2; ++pair) {
            const double t = theta.at(pair / 2);
            (*angles)[m * (D / 2) + pair] = (pair % 2 == 0 ? px[m] : py[m]) * t;
        }
    return rotate_pairs(h, angles);
}

// Additive sinusoidal baseline on the arranged token index.
template <typename S>
TensorPtr<S> apply_sinusoidal(const TensorPtr<S>& h, const std::vector<std::size_t>& indices,
                              const ThetaSchedule& theta) {
    if (h->shape.size() != 2)
        throw ContractError("apply_sinusoidal expects a rank-2 sequence, got " +
                            shape_str(h->shape));
    const std::size_t L = h->shape[0], D = h->shape[1];
    if (D % 2 != 0)
        throw ContractError("apply_sinusoidal channel width must be even, got " +
                            std::to_string(D));
    if (indices.size() != L)
        throw ContractError("apply_sinusoidal index count must equal sequence length");
    std::vector<S> pe(L * D);
    for (std::size_t m = 0; m < L; ++m)
        for (std::size_t t = 0; t < D / 2; ++t) {
            const double a = static_cast<double>(indices[m]) * theta.at(t);
            pe[m * D + 2 * t] = static_cast<S>(std::sin(a));
            pe[m * D + 2 * t + 1] = static_cast<S>(std::cos(a));
        }
    return add(h, tensor<S>({L, D}, std::move(pe)));
}

// Dispatch used by the model: applies the configured encoder once to the
// arranged sequence before the first mixing block.
template <typename S>
TensorPtr<S> apply_encoder(const TensorPtr<S>& h, EncoderKind kind,
                           const std::vector<NormCoord>& slot_norm, double lambda) {
    const std::size_t L = h->shape.at(0);
    const std::size_t D = h->shape.size() > 1 ? h->shape[1] : 1;
    switch (kind) {
        case EncoderKind::none:
            return h;
        case EncoderKind::sinusoidal: {
            std::vector<std::size_t> idx(L);
            for (std::size_t i = 0; i < L; ++i) idx[i] = i;
            return apply_sinusoidal(h, idx, ThetaSchedule(D));
        }
        case EncoderKind::rope1d: {
            std::vector<std::size_t> idx(L);
            for (std::size_t i = 0; i < L; ++i) idx[i] = i;
            return apply_rope_1d(h, idx, ThetaSchedule(D));
        }
        case EncoderKind::rope2d: {
            std::vector<double> px(L), py(L);
            for (std::size_t i = 0; i < L; ++i) {
                px[i] = slot_norm[i].x * lambda;
                py[i] = slot_norm[i].y * lambda;
            }
            return apply_rope_2d(h, px, py, ThetaSchedule(D));
        }
        case EncoderKind::prope:
            return apply_prope(h, to_polar(slot_norm, lambda), ThetaSchedule(D));
    }
    throw ConfigError("unknown encoder kind");
}

}  // namespace sacmil
