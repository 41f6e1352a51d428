#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sacmil/common.hpp"

namespace sacmil {

struct GradCheckReport {
    bool pass = false;
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
};

// Central-difference comparison of an analytic gradient, coordinate by
// coordinate, in double precision. Relative error uses
// |analytic - fd| / max(1, |analytic|, |fd|): relative above unit scale,
// absolute below it, so near-zero gradients are not divided by
// finite-difference truncation noise.
inline GradCheckReport finite_diff_check(const std::function<double(const std::vector<double>&)>& f,
                                         std::vector<double> point,
                                         const std::vector<double>& analytic, double eps,
                                         double tol) {
    if (!(eps > 0.0)) throw ContractError("finite_diff_check eps must be positive");
    if (analytic.size() != point.size())
        throw ContractError("finite_diff_check gradient length must match point length");
    GradCheckReport report;
    for (std::size_t i = 0; i < point.size(); ++i) {
        const double saved = point[i];
        point[i] = saved + eps;
        const double fp = f(point);
        point[i] = saved - eps;
        const double fm = f(point);
        point[i] = saved;
        const double fd = (fp - fm) / (2.0 * eps);
        const double denom = std::max({std::fabs(analytic[i]), std::fabs(fd), 1.0});
        const double rel = std::fabs(analytic[i] - fd) / denom;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_index = i;
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace sacmil
