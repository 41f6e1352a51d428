#include "sacmil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sacmil {

double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw ContractError("auc requires equal-length scores and labels");
    std::size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw ContractError("auc undefined: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks over tie groups
    std::vector<double> rank(scores.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = mid;
        i = j + 1;
    }

    double pos_rank_sum = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k)
        if (labels[k] == 1) pos_rank_sum += rank[k];
    const double np = static_cast<double>(n_pos);
    const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * static_cast<double>(n_neg));
}

std::pair<double, double> f1_acc(const std::vector<int>& predictions,
                                 const std::vector<int>& labels) {
    if (predictions.size() != labels.size())
        throw ContractError("f1_acc requires equal-length predictions and labels");
    if (predictions.empty()) throw ContractError("f1_acc requires a non-empty input");

    std::size_t correct = 0;
    int max_class = 1;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++correct;
        max_class = std::max({max_class, predictions[i], labels[i]});
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(predictions.size());

    auto class_f1 = [&](int cls) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < predictions.size(); ++i) {
            const bool p = predictions[i] == cls, t = labels[i] == cls;
            if (p && t) ++tp;
            if (p && !t) ++fp;
            if (!p && t) ++fn;
        }
        const double denom = static_cast<double>(2 * tp + fp + fn);
        return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp) / denom;
    };

    double f1;
    if (max_class <= 1) {
        f1 = class_f1(1);
    } else {
        f1 = 0.0;
        for (int c = 0; c <= max_class; ++c) f1 += class_f1(c);
        f1 /= static_cast<double>(max_class + 1);
    }
    return {acc, f1};
}

FoldSummary summarize_folds(const std::vector<MetricsReport>& folds) {
    if (folds.empty()) throw ContractError("summarize_folds requires at least one fold");
    FoldSummary s;
    s.folds = folds;
    auto agg = [&](auto getter) {
        double mean = 0.0;
        for (const auto& f : folds) mean += getter(f);
        mean /= static_cast<double>(folds.size());
        double var = 0.0;
        for (const auto& f : folds) {
            const double d = getter(f) - mean;
            var += d * d;
        }
        var /= static_cast<double>(folds.size());
        return std::pair<double, double>{mean, std::sqrt(var)};
    };
    auto [am, as] = agg([](const MetricsReport& r) { return r.accuracy; });
    auto [fm, fs] = agg([](const MetricsReport& r) { return r.f1; });
    s.mean.accuracy = am;
    s.stddev.accuracy = as;
    s.mean.f1 = fm;
    s.stddev.f1 = fs;
    bool all_auc = true;
    for (const auto& f : folds) all_auc = all_auc && f.auc.has_value();
    if (all_auc) {
        auto [um, us] = agg([](const MetricsReport& r) { return *r.auc; });
        s.mean.auc = um;
        s.stddev.auc = us;
    }
    return s;
}

}  // namespace sacmil
