#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "sacmil/bag.hpp"
#include "sacmil/encoding.hpp"
#include "sacmil/metrics.hpp"
#include "sacmil/param_store.hpp"
#include "sacmil/partition.hpp"
#include "sacmil/sac.hpp"
#include "sacmil/tensor.hpp"

namespace sacmil {

struct ModelConfig {
    std::size_t d_in = 32;
    std::size_t dim = 512;
    std::size_t k = 64;
    int blocks = 3;
    double lambda = 512.0;
    EncoderKind encoder = EncoderKind::prope;
    std::size_t classes = 2;
    bool residual = true;

    void validate() const {
        if (d_in < 1) throw ConfigError("d_in must be >= 1");
        if (dim < 2 || dim % 2 != 0)
            throw ConfigError("model dimension must be even and >= 2, got " + std::to_string(dim));
        if (k < 2) throw ConfigError("region base k must be >= 2, got " + std::to_string(k));
        if (dim % k != 0)
            throw ConfigError("model dimension " + std::to_string(dim) +
                              " must be divisible by fold count k=" + std::to_string(k));
        if (blocks < 1) throw ConfigError("block count must be >= 1");
        if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
        if (classes < 2) throw ConfigError("class count must be >= 2");
    }
};

struct TrainHyper {
    double lr = 1e-4;
    int epochs = 200;
    std::uint64_t seed = 0;
    // batch size is fixed at 1

    void validate() const {
        // lr = 0 is allowed: it must leave parameters untouched
        if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
        if (epochs < 1) throw ConfigError("epoch count must be >= 1");
    }
};

// reducer MLP -> positional encoder -> N SAC blocks -> masked mean pool ->
// linear classifier, all parameters in one deterministic-order store.
template <typename S>
struct SacMilModel {
    ModelConfig config;
    std::shared_ptr<ParamStore<S>> params;
    TensorPtr<S> reducer_w, reducer_b;
    std::vector<SacBlockParams<S>> blocks;
    TensorPtr<S> classifier_w, classifier_b;
};

template <typename S>
SacMilModel<S> build_model(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    SacMilModel<S> model;
    model.config = config;
    model.params = std::make_shared<ParamStore<S>>();
    Rng rng(seed);
    model.reducer_w = model.params->create("reducer.w", glorot<S>(config.d_in, config.dim, rng));
    model.reducer_b = model.params->create("reducer.b", zeros<S>({config.dim}));
    for (int l = 0; l < config.blocks; ++l)
        model.blocks.push_back(
            make_sac_block_params(*model.params, "block" + std::to_string(l), config.dim, rng));
    model.classifier_w =
        model.params->create("classifier.w", glorot<S>(config.dim, config.classes, rng));
    model.classifier_b = model.params->create("classifier.b", zeros<S>({config.classes}));
    return model;
}

template <typename S>
struct ForwardResult {
    TensorPtr<S> logits;                  // rank-1, length C
    std::vector<double> instance_scores;  // original order, length n
};

template <typename S>
ForwardResult<S> forward(const SacMilModel<S>& model, const InstanceBag& bag) {
    validate_bag(bag);
    const ModelConfig& cfg = model.config;
    if (bag.d != cfg.d_in)
        throw ContractError("bag '" + bag.id + "' feature width " + std::to_string(bag.d) +
                            " does not match configured d_in " + std::to_string(cfg.d_in));

    const Partition part = make_partition(bag.coords, cfg.k);
    const std::size_t L = part.arranged_len();
    const std::vector<float> arranged = arrange_rows(bag.features, bag.d, part);

    const std::vector<NormCoord> norm = normalize_coords(bag.coords);
    std::vector<NormCoord> slot_norm(L);
    for (std::size_t slot = 0; slot < L; ++slot)
        slot_norm[slot] = norm[part.slot_to_original[slot]];

    std::vector<S> values(arranged.size());
    for (std::size_t i = 0; i < arranged.size(); ++i) values[i] = static_cast<S>(arranged[i]);
    auto x = tensor<S>({L, bag.d}, std::move(values));

    auto h = gelu(add_bias(matmul(x, model.reducer_w), model.reducer_b));
    h = apply_encoder(h, cfg.encoder, slot_norm, cfg.lambda);

    const auto specs = region_schedule(cfg.k, cfg.blocks, L);
    for (int l = 0; l < cfg.blocks; ++l)
        h = sac_block_forward(h, model.blocks[static_cast<std::size_t>(l)],
                              specs[static_cast<std::size_t>(l)], cfg.residual);

    std::vector<bool> keep(L);
    for (std::size_t slot = 0; slot < L; ++slot) keep[slot] = !part.pad_mask[slot];
    auto pooled = reshape(masked_mean_rows(h, keep), {std::size_t{1}, cfg.dim});
    auto logits = reshape(add_bias(matmul(pooled, model.classifier_w), model.classifier_b),
                          {cfg.classes});

    ForwardResult<S> result;
    result.logits = logits;
    result.instance_scores.assign(bag.n, 0.0);
    for (std::size_t slot = 0; slot < L; ++slot) {
        if (part.pad_mask[slot]) continue;
        double acc = 0.0;
        for (std::size_t j = 0; j < cfg.dim; ++j) {
            const double v = static_cast<double>(h->data[slot * cfg.dim + j]);
            acc += v * v;
        }
        result.instance_scores[part.slot_to_original[slot]] = std::sqrt(acc);
    }
    return result;
}

template <typename S>
std::vector<double> softmax_probs(const TensorPtr<S>& logits) {
    double max_z = static_cast<double>(logits->data[0]);
    for (auto v : logits->data) max_z = std::max(max_z, static_cast<double>(v));
    std::vector<double> p(logits->size());
    double sum = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        p[c] = std::exp(static_cast<double>(logits->data[c]) - max_z);
        sum += p[c];
    }
    for (auto& v : p) v /= sum;
    return p;
}

template <typename S>
struct TrainResult {
    std::vector<double> loss_curve;  // mean loss per epoch
};

template <typename S>
TrainResult<S> train(SacMilModel<S>& model, const std::vector<InstanceBag>& bags,
                     const TrainHyper& hyper) {
    hyper.validate();
    if (bags.empty()) throw ContractError("train requires at least one bag");
    bool has_pos = false, has_neg = false;
    for (const auto& b : bags) {
        if (b.label == 0) has_neg = true;
        else has_pos = true;
    }
    if (!has_pos || !has_neg)
        throw ContractError("train requires at least one bag per class");

    AdamConfig acfg;
    acfg.lr = hyper.lr;
    Adam<S> adam(*model.params, acfg);
    Rng rng(hyper.seed);

    TrainResult<S> result;
    std::vector<std::size_t> order(bags.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t idx : order) {
            const InstanceBag& bag = bags[idx];
            auto out = forward(model, bag);
            auto loss = softmax_cross_entropy(out.logits, bag.label);
            epoch_loss += static_cast<double>(loss->data[0]);
            loss->backward();
            adam.step(*model.params);
        }
        result.loss_curve.push_back(epoch_loss / static_cast<double>(bags.size()));
    }
    return result;
}

template <typename S>
MetricsReport evaluate(const SacMilModel<S>& model, const std::vector<InstanceBag>& bags) {
    if (bags.empty()) throw ContractError("evaluate requires at least one bag");
    std::vector<int> preds, labels;
    std::vector<double> pos_scores;
    for (const auto& bag : bags) {
        auto out = forward(model, bag);
        auto probs = softmax_probs(out.logits);
        preds.push_back(static_cast<int>(
            std::max_element(probs.begin(), probs.end()) - probs.begin()));
        labels.push_back(static_cast<int>(bag.label));
        pos_scores.push_back(probs.size() > 1 ? probs[1] : probs[0]);
    }
    MetricsReport report;
    auto [acc, f1] = f1_acc(preds, labels);
    report.accuracy = acc;
    report.f1 = f1;
    bool both = false, seen_pos = false, seen_neg = false;
    for (int y : labels) (y == 1 ? seen_pos : seen_neg) = true;
    both = seen_pos && seen_neg;
    if (model.config.classes == 2 && both) report.auc = auc(pos_scores, labels);
    return report;
}

// Stratified k-fold assignment over bag indices; within each class the fold
// sizes differ by at most one.
inline std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> kfold_split(
    const std::vector<InstanceBag>& bags, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw ContractError("kfold_split requires at least 2 folds");
    if (bags.size() < folds)
        throw ContractError("kfold_split requires at least as many bags as folds");
    std::vector<std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < bags.size(); ++i) {
        const std::size_t y = bags[i].label;
        if (by_label.size() <= y) by_label.resize(y + 1);
        by_label[y].push_back(i);
    }
    Rng rng(seed);
    std::vector<std::vector<std::size_t>> test_sets(folds);
    for (auto& group : by_label) {
        rng.shuffle(group);
        for (std::size_t i = 0; i < group.size(); ++i) test_sets[i % folds].push_back(group[i]);
    }
    std::vector<std::pair<std::vector<std::size_t>, std::vector<std::size_t>>> out(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        std::sort(test_sets[f].begin(), test_sets[f].end());
        out[f].second = test_sets[f];
        for (std::size_t i = 0; i < bags.size(); ++i)
            if (!std::binary_search(test_sets[f].begin(), test_sets[f].end(), i))
                out[f].first.push_back(i);
    }
    return out;
}

}  // namespace sacmil
