#pragma once

#include <filesystem>

#include "sacmil/bag_io.hpp"
#include "sacmil/metrics.hpp"

namespace sacmil {

// Cross-validated training run: per fold trains a fresh model on the train
// split and evaluates on the held-out split. Writes metrics.csv (per-fold
// rows plus mean/std summary rows) and scores.csv (per-instance L2-norm
// scores of every held-out bag) into out_dir.
FoldSummary run_cross_validation(const ModelConfig& model_cfg, const TrainHyper& hyper,
                                 const std::vector<InstanceBag>& bags, std::size_t folds,
                                 std::uint64_t seed, const std::filesystem::path& out_dir);

}  // namespace sacmil
