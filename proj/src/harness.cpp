#include "sacmil/harness.hpp"

#include <cmath>
#include <cstdio>

namespace sacmil {

namespace {

std::uint64_t mix_seed(std::uint64_t base, std::size_t fold, std::uint64_t stream) {
    return base * 1000003ull + static_cast<std::uint64_t>(fold) * 97ull + stream;
}

}  // namespace

FoldSummary run_cross_validation(const ModelConfig& model_cfg, const TrainHyper& hyper,
                                 const std::vector<InstanceBag>& bags, std::size_t folds,
                                 std::uint64_t seed, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");

    const auto splits = kfold_split(bags, folds, seed);
    std::vector<MetricsReport> reports;
    std::string scores_csv = "bag_id,instance_index,score\n";

    for (std::size_t f = 0; f < splits.size(); ++f) {
        std::vector<InstanceBag> train_bags, test_bags;
        for (auto i : splits[f].first) train_bags.push_back(bags[i]);
        for (auto i : splits[f].second) test_bags.push_back(bags[i]);

        auto model = build_model<float>(model_cfg, mix_seed(seed, f, 0));
        TrainHyper fold_hyper = hyper;
        fold_hyper.seed = mix_seed(seed, f, 1);
        train(model, train_bags, fold_hyper);
        reports.push_back(evaluate(model, test_bags));

        for (const auto& bag : test_bags) {
            auto out = forward(model, bag);
            for (std::size_t i = 0; i < out.instance_scores.size(); ++i) {
                char row[128];
                std::snprintf(row, sizeof(row), "%s,%zu,%.6f\n", bag.id.c_str(), i,
                              out.instance_scores[i]);
                scores_csv += row;
            }
        }
    }

    const FoldSummary summary = summarize_folds(reports);

    std::string metrics_csv = "fold,acc,auc,f1\n";
    auto row = [](const std::string& tag, const MetricsReport& r) {
        char line[128];
        std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.6f\n", tag.c_str(), r.accuracy,
                      r.auc.value_or(std::nan("")), r.f1);
        return std::string(line);
    };
    for (std::size_t f = 0; f < reports.size(); ++f)
        metrics_csv += row(std::to_string(f), reports[f]);
    metrics_csv += row("mean", summary.mean);
    metrics_csv += row("std", summary.stddev);

    write_text_atomic(out_dir / "metrics.csv", metrics_csv);
    write_text_atomic(out_dir / "scores.csv", scores_csv);
    return summary;
}

}  // namespace sacmil
