#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "sacmil/param_store.hpp"
#include "sacmil/sac.hpp"
#include "sacmil/tensor.hpp"

namespace sacmil {

// Reference reconstructions of the two comparison mixers. Both are
// residual blocks around "gather positions -> channel map -> GELU"; only
// their gather patterns differ.

inline std::size_t chord_track_count(std::size_t L) {
    if (L < 2) throw ContractError("chord mixer needs a sequence of length >= 2");
    std::size_t t = 0, span = 1;
    while (span < L) {
        span *= 2;
        ++t;
    }
    return t;  // ceil(log2 L)
}

// Track t (channel group) rotated by 2^t positions, cyclic over the
// sequence. Track widths are D/T each with the last absorbing the remainder.
inline std::shared_ptr<const std::vector<std::size_t>> chord_source_map(std::size_t L,
                                                                        std::size_t D) {
    const std::size_t tracks = chord_track_count(L);
    const std::size_t base_w = D / tracks;
    auto map = std::make_shared<std::vector<std::size_t>>(L * D);
    for (std::size_t row = 0; row < L; ++row) {
        std::size_t c = 0;
        for (std::size_t t = 0; t < tracks; ++t) {
            const std::size_t width = t + 1 == tracks ? D - base_w * (tracks - 1) : base_w;
            const std::size_t off = (std::size_t{1} << t) % L;
            const std::size_t src_row = (row + L - off) % L;
            for (std::size_t w = 0; w < width; ++w, ++c) (*map)[row * D + c] = src_row * D + c;
        }
    }
    return map;
}

template <typename S>
struct ChordParams {
    TensorPtr<S> w, b;
};

template <typename S>
TensorPtr<S> chord_mixer_layer(const TensorPtr<S>& x, const ChordParams<S>& params) {
    if (x->shape.size() != 2)
        throw ContractError("chord_mixer_layer expects a rank-2 sequence");
    auto h = permute_cells(x, chord_source_map(x->shape[0], x->shape[1]));
    h = gelu(add_bias(matmul(h, params.w), params.b));
    return add(x, h);
}

// Cycle-FC: channel c of output j reads channel c of input
// j + ((c mod S) - floor(S/2)), cyclic, then a channel map.
inline std::shared_ptr<const std::vector<std::size_t>> cycle_source_map(std::size_t L,
                                                                        std::size_t D,
                                                                        std::size_t stepsize) {
    if (stepsize < 1 || stepsize % 2 == 0)
        throw ConfigError("cycle stepsize must be odd and >= 1, got " + std::to_string(stepsize));
    if (L < stepsize)
        throw ContractError("cycle mixer needs sequence length >= stepsize " +
                            std::to_string(stepsize));
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(stepsize / 2);
    auto map = std::make_shared<std::vector<std::size_t>>(L * D);
    for (std::size_t row = 0; row < L; ++row)
        for (std::size_t c = 0; c < D; ++c) {
            const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(c % stepsize) - half;
            const std::size_t src_row =
                static_cast<std::size_t>((static_cast<std::ptrdiff_t>(row + L) + off) %
                                         static_cast<std::ptrdiff_t>(L));
            (*map)[row * D + c] = src_row * D + c;
        }
    return map;
}

template <typename S>
struct CycleParams {
    std::size_t stepsize = 7;
    TensorPtr<S> w, b;
};

template <typename S>
TensorPtr<S> cycle_fc_layer(const TensorPtr<S>& x, const CycleParams<S>& params) {
    if (x->shape.size() != 2)
        throw ContractError("cycle_fc_layer expects a rank-2 sequence");
    auto h = permute_cells(x, cycle_source_map(x->shape[0], x->shape[1], params.stepsize));
    h = gelu(add_bias(matmul(h, params.w), params.b));
    return add(x, h);
}

// Uniform handle over the four mixer stacks the ECL harness compares.
template <typename S>
struct MixerStack {
    std::string kind;
    int layers = 0;
    std::shared_ptr<ParamStore<S>> params;
    std::function<TensorPtr<S>(const TensorPtr<S>&)> forward;
};

template <typename S>
MixerStack<S> make_sac_stack(std::size_t L, std::size_t D, std::size_t k, int layers,
                             std::uint64_t seed, bool residual = true) {
    MixerStack<S> stack;
    stack.kind = "sac";
    stack.layers = layers;
    stack.params = std::make_shared<ParamStore<S>>();
    Rng rng(seed);
    auto specs = region_schedule(k, layers, L);
    auto blocks = std::make_shared<std::vector<SacBlockParams<S>>>();
    for (int l = 0; l < layers; ++l)
        blocks->push_back(make_sac_block_params(*stack.params, "block" + std::to_string(l), D, rng));
    stack.forward = [blocks, specs, residual](const TensorPtr<S>& x) {
        auto h = x;
        for (std::size_t l = 0; l < blocks->size(); ++l)
            h = sac_block_forward(h, (*blocks)[l], specs[l], residual);
        return h;
    };
    return stack;
}

template <typename S>
MixerStack<S> make_chord_stack(std::size_t D, int layers, std::uint64_t seed) {
    MixerStack<S> stack;
    stack.kind = "chord";
    stack.layers = layers;
    stack.params = std::make_shared<ParamStore<S>>();
    Rng rng(seed);
    auto params = std::make_shared<std::vector<ChordParams<S>>>();
    for (int l = 0; l < layers; ++l) {
        ChordParams<S> p;
        p.w = stack.params->create("chord" + std::to_string(l) + ".w", glorot<S>(D, D, rng));
        p.b = stack.params->create("chord" + std::to_string(l) + ".b", zeros<S>({D}));
        params->push_back(p);
    }
    stack.forward = [params](const TensorPtr<S>& x) {
        auto h = x;
        for (const auto& p : *params) h = chord_mixer_layer(h, p);
        return h;
    };
    return stack;
}

template <typename S>
MixerStack<S> make_cycle_stack(std::size_t D, std::size_t stepsize, int layers,
                               std::uint64_t seed) {
    if (stepsize < 1 || stepsize % 2 == 0)
        throw ConfigError("cycle stepsize must be odd and >= 1, got " + std::to_string(stepsize));
    MixerStack<S> stack;
    stack.kind = "cycle";
    stack.layers = layers;
    stack.params = std::make_shared<ParamStore<S>>();
    Rng rng(seed);
    auto params = std::make_shared<std::vector<CycleParams<S>>>();
    for (int l = 0; l < layers; ++l) {
        CycleParams<S> p;
        p.stepsize = stepsize;
        p.w = stack.params->create("cycle" + std::to_string(l) + ".w", glorot<S>(D, D, rng));
        p.b = stack.params->create("cycle" + std::to_string(l) + ".b", zeros<S>({D}));
        params->push_back(p);
    }
    stack.forward = [params](const TensorPtr<S>& x) {
        auto h = x;
        for (const auto& p : *params) h = cycle_fc_layer(h, p);
        return h;
    };
    return stack;
}

// Channel-only MLP stack; no cross-instance flow at all.
template <typename S>
MixerStack<S> make_plain_stack(std::size_t D, int layers, std::uint64_t seed) {
    MixerStack<S> stack;
    stack.kind = "none";
    stack.layers = layers;
    stack.params = std::make_shared<ParamStore<S>>();
    Rng rng(seed);
    auto ws = std::make_shared<std::vector<std::pair<TensorPtr<S>, TensorPtr<S>>>>();
    for (int l = 0; l < layers; ++l)
        ws->emplace_back(
            stack.params->create("mlp" + std::to_string(l) + ".w", glorot<S>(D, D, rng)),
            stack.params->create("mlp" + std::to_string(l) + ".b", zeros<S>({D})));
    stack.forward = [ws](const TensorPtr<S>& x) {
        auto h = x;
        for (const auto& [w, b] : *ws) h = gelu(add_bias(matmul(h, w), b));
        return h;
    };
    return stack;
}

}  // namespace sacmil
