#pragma once

#include <optional>
#include <vector>

#include "sacmil/common.hpp"

namespace sacmil {

struct MetricsReport {
    double accuracy = 0.0;
    std::optional<double> auc;  // absent when only one class is present
    double f1 = 0.0;
};

struct FoldSummary {
    std::vector<MetricsReport> folds;
    MetricsReport mean;
    MetricsReport stddev;
};

// Mann-Whitney rank AUC with the midrank tie convention.
double auc(const std::vector<double>& scores, const std::vector<int>& labels);

// accuracy + F1 (positive-class F1 for binary, macro-averaged otherwise)
std::pair<double, double> f1_acc(const std::vector<int>& predictions,
                                 const std::vector<int>& labels);

FoldSummary summarize_folds(const std::vector<MetricsReport>& folds);

}  // namespace sacmil
