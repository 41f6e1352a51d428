#pragma once

#include <limits>
#include <memory>
#include <vector>

#include "sacmil/param_store.hpp"
#include "sacmil/tensor.hpp"

namespace sacmil {

enum class ShiftDirection { forward, inverse };

// One layer's shift geometry: k channel folds of size D/k, fold f moving by
// f * scale positions within each region of size k^(l+1). When the region
// exceeds the sequence, the whole sequence is treated as one region and
// offsets wrap mod L.
struct ShiftSpec {
    int layer = 0;
    std::size_t folds = 2;        // k
    std::size_t scale = 1;        // k^l
    std::size_t region_size = 2;  // k^(l+1)
    ShiftDirection direction = ShiftDirection::forward;
};

inline ShiftSpec reversed(ShiftSpec spec) {
    spec.direction = spec.direction == ShiftDirection::forward ? ShiftDirection::inverse
                                                               : ShiftDirection::forward;
    return spec;
}

// Per-layer specs for a stack of `blocks` layers: scale k^l, region k^(l+1).
// Regions are kept nominal here; layers whose region reaches past padded_len
// act on the whole sequence at shift time.
inline std::vector<ShiftSpec> region_schedule(std::size_t k, int blocks,
                                              std::size_t padded_len) {
    if (k < 2) throw ConfigError("fold count k must be >= 2, got " + std::to_string(k));
    if (blocks < 1) throw ConfigError("block count must be >= 1, got " + std::to_string(blocks));
    if (padded_len == 0) throw ContractError("padded sequence length must be positive");
    std::vector<ShiftSpec> specs;
    std::size_t scale = 1;
    for (int l = 0; l < blocks; ++l) {
        if (scale > std::numeric_limits<std::size_t>::max() / k)
            throw ConfigError("region size k^(l+1) overflows at layer " + std::to_string(l));
        ShiftSpec spec;
        spec.layer = l;
        spec.folds = k;
        spec.scale = scale;
        spec.region_size = scale * k;
        specs.push_back(spec);
        scale = spec.region_size;
    }
    return specs;
}

// flat cell source map for the fold shift; out[i] = in[map[i]]
inline std::shared_ptr<const std::vector<std::size_t>> shift_source_map(std::size_t L,
                                                                        std::size_t D,
                                                                        const ShiftSpec& spec) {
    const std::size_t k = spec.folds;
    if (k == 0 || D % k != 0)
        throw ConfigError("channel width " + std::to_string(D) +
                          " must be divisible by fold count " + std::to_string(k));
    const std::size_t s = std::min(spec.region_size, L);
    if (s < L && L % s != 0)
        throw ContractError("sequence length " + std::to_string(L) +
                            " is not padded to a multiple of region size " + std::to_string(s));
    const std::size_t fold_w = D / k;
    auto map = std::make_shared<std::vector<std::size_t>>(L * D);
    for (std::size_t row = 0; row < L; ++row) {
        const std::size_t base = (row / s) * s;
        const std::size_t local = row % s;
        for (std::size_t f = 0; f < k; ++f) {
            const std::size_t off = (f * spec.scale) % s;
            // forward moves content i -> i + off, so output row reads i - off
            const std::size_t src_local = spec.direction == ShiftDirection::forward
                                              ? (local + s - off) % s
                                              : (local + off) % s;
            const std::size_t src_row = base + src_local;
            for (std::size_t c = f * fold_w; c < (f + 1) * fold_w; ++c)
                (*map)[row * D + c] = src_row * D + c;
        }
    }
    return map;
}

// Exact value-preserving fold shift (Algorithm-1 style roll per fold).
template <typename S>
TensorPtr<S> shift_folds(const TensorPtr<S>& x, const ShiftSpec& spec) {
    if (x->shape.size() != 2)
        throw ContractError("shift_folds expects a rank-2 sequence, got " + shape_str(x->shape));
    return permute_cells(x, shift_source_map(x->shape[0], x->shape[1], spec));
}

template <typename S>
struct SacBlockParams {
    TensorPtr<S> gamma, beta;  // layer norm affine
    TensorPtr<S> w1, b1;       // partial-correlation channel map
    TensorPtr<S> w2, b2;       // full-correlation channel map
};

template <typename S>
SacBlockParams<S> make_sac_block_params(ParamStore<S>& store, const std::string& prefix,
                                        std::size_t dim, Rng& rng) {
    SacBlockParams<S> p;
    p.gamma = store.create(prefix + ".ln.gamma", full<S>({dim}, S(1)));
    p.beta = store.create(prefix + ".ln.beta", zeros<S>({dim}));
    p.w1 = store.create(prefix + ".w1", glorot<S>(dim, dim, rng));
    p.b1 = store.create(prefix + ".b1", zeros<S>({dim}));
    p.w2 = store.create(prefix + ".w2", glorot<S>(dim, dim, rng));
    p.b2 = store.create(prefix + ".b2", zeros<S>({dim}));
    return p;
}

// Pre-norm SAC block: partial correlation (forward fold shift -> W1 -> GELU)
// then full correlation (inverse shift -> W2), with an optional residual.
template <typename S>
TensorPtr<S> sac_block_forward(const TensorPtr<S>& x, const SacBlockParams<S>& params,
                               const ShiftSpec& spec, bool residual = true,
                               S ln_eps = S(1e-5)) {
    ShiftSpec fwd = spec;
    fwd.direction = ShiftDirection::forward;
    auto h = layer_norm(x, params.gamma, params.beta, ln_eps);
    h = shift_folds(h, fwd);
    h = gelu(add_bias(matmul(h, params.w1), params.b1));
    h = shift_folds(h, reversed(fwd));
    h = add_bias(matmul(h, params.w2), params.b2);
    return residual ? add(x, h) : h;
}

}  // namespace sacmil
