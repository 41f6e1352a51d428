#include "sacmil/selfcheck.hpp"

#include <functional>
#include <string>
#include <vector>

#include "sacmil/encoding.hpp"
#include "sacmil/gradcheck.hpp"
#include "sacmil/mixers.hpp"
#include "sacmil/model.hpp"
#include "sacmil/sac.hpp"

namespace sacmil {

namespace {

constexpr double kEps = 1e-3;
constexpr double kTol = 1e-4;

using Builder =
    std::function<TensorPtr<double>(const std::vector<TensorPtr<double>>&)>;

// Scalarizes the graph output against frozen random weights, then compares
// the analytic gradient of every leaf against central differences.
GradCheckReport check_graph(const std::vector<std::vector<std::size_t>>& leaf_shapes,
                            const std::vector<std::size_t>& out_shape, const Builder& raw_build,
                            Rng& rng) {
    auto w = randn<double>(out_shape, rng);
    auto build = [&](const std::vector<TensorPtr<double>>& xs) {
        return sum_all(mul(raw_build(xs), w));
    };

    std::vector<TensorPtr<double>> leaves;
    std::vector<double> flat;
    for (const auto& shape : leaf_shapes) {
        auto leaf = randn<double>(shape, rng, true);
        for (auto v : leaf->data) flat.push_back(v);
        leaves.push_back(leaf);
    }
    auto root = build(leaves);
    root->backward();
    std::vector<double> analytic;
    for (const auto& leaf : leaves)
        for (auto g : leaf->grad) analytic.push_back(g);

    auto f = [&](const std::vector<double>& v) {
        std::vector<TensorPtr<double>> xs;
        std::size_t off = 0;
        for (const auto& shape : leaf_shapes) {
            std::size_t n = 1;
            for (auto e : shape) n *= e;
            xs.push_back(tensor<double>(shape,
                                        std::vector<double>(v.begin() + off, v.begin() + off + n)));
            off += n;
        }
        return build(xs)->data[0];
    };
    return finite_diff_check(f, flat, analytic, kEps, kTol);
}

GradCheckReport full_model_check(std::uint64_t seed) {
    // tiny config per the gradient-soundness contract: L <= 16, D = 8, k = 2, N = 2
    ModelConfig cfg;
    cfg.d_in = 5;
    cfg.dim = 8;
    cfg.k = 2;
    cfg.blocks = 2;
    cfg.lambda = 512.0;
    cfg.encoder = EncoderKind::prope;
    cfg.classes = 2;
    auto model = build_model<double>(cfg, seed);

    Rng rng(seed + 17);
    InstanceBag bag;
    bag.id = "gradcheck";
    bag.n = 7;
    bag.d = cfg.d_in;
    bag.label = 1;
    bag.features.resize(bag.n * bag.d);
    for (auto& v : bag.features) v = static_cast<float>(rng.normal());
    bag.coords.resize(bag.n);
    for (auto& c : bag.coords) {
        c.x = static_cast<std::int32_t>(rng.uniform_index(400));
        c.y = static_cast<std::int32_t>(rng.uniform_index(400));
    }

    auto loss_fn = [&]() {
        auto out = forward(model, bag);
        return softmax_cross_entropy(out.logits, bag.label);
    };

    model.params->zero_grads();
    loss_fn()->backward();
    std::vector<double> flat, analytic;
    for (auto& [name, p] : *model.params) {
        for (auto v : p->data) flat.push_back(v);
        for (auto g : p->grad) analytic.push_back(g);
    }

    auto f = [&](const std::vector<double>& v) {
        std::size_t off = 0;
        for (auto& [name, p] : *model.params)
            for (auto& pv : p->data) pv = v[off++];
        return loss_fn()->data[0];
    };
    auto report = finite_diff_check(f, flat, analytic, kEps, kTol);
    // restore original parameter values
    std::size_t off = 0;
    for (auto& [name, p] : *model.params)
        for (auto& pv : p->data) pv = flat[off++];
    return report;
}

struct Check {
    std::string name;
    std::function<GradCheckReport(Rng&)> run;
};

}  // namespace

bool run_gradient_selfcheck(std::uint64_t seed, std::FILE* out) {
    const ShiftSpec spec{1, 2, 2, 4, ShiftDirection::forward};

    std::vector<Check> checks;
    checks.push_back({"matmul", [](Rng& rng) {
        return check_graph({{3, 4}, {4, 2}}, {3, 2}, [](const auto& xs) {
            return matmul(xs[0], xs[1]);
        }, rng);
    }});
    checks.push_back({"add_bias", [](Rng& rng) {
        return check_graph({{3, 4}, {4}}, {3, 4}, [](const auto& xs) {
            return add_bias(xs[0], xs[1]);
        }, rng);
    }});
    checks.push_back({"gelu", [](Rng& rng) {
        return check_graph({{4, 3}}, {4, 3}, [](const auto& xs) { return gelu(xs[0]); }, rng);
    }});
    checks.push_back({"layer_norm", [](Rng& rng) {
        return check_graph({{3, 6}, {6}, {6}}, {3, 6}, [](const auto& xs) {
            return layer_norm(xs[0], xs[1], xs[2], 1e-5);
        }, rng);
    }});
    checks.push_back({"softmax_cross_entropy", [](Rng& rng) {
        return check_graph({{4}}, {1}, [](const auto& xs) {
            return softmax_cross_entropy(xs[0], 2);
        }, rng);
    }});
    checks.push_back({"masked_mean_rows", [](Rng& rng) {
        return check_graph({{5, 3}}, {3}, [](const auto& xs) {
            return masked_mean_rows(xs[0], {true, false, true, true, false});
        }, rng);
    }});
    checks.push_back({"shift_folds", [spec](Rng& rng) {
        return check_graph({{8, 4}}, {8, 4}, [spec](const auto& xs) {
            return shift_folds(xs[0], spec);
        }, rng);
    }});
    checks.push_back({"rotate_pairs_prope", [](Rng& rng) {
        std::vector<NormCoord> norm(6);
        for (auto& c : norm) {
            c.x = rng.canonical();
            c.y = rng.canonical();
        }
        auto polar = to_polar(norm, 512.0);
        return check_graph({{6, 8}}, {6, 8}, [polar](const auto& xs) {
            return apply_prope(xs[0], polar, ThetaSchedule(8));
        }, rng);
    }});
    checks.push_back({"rope_1d", [](Rng& rng) {
        return check_graph({{5, 8}}, {5, 8}, [](const auto& xs) {
            return apply_rope_1d(xs[0], {0, 1, 2, 3, 4}, ThetaSchedule(8));
        }, rng);
    }});
    checks.push_back({"rope_2d", [](Rng& rng) {
        std::vector<double> px(5), py(5);
        for (std::size_t i = 0; i < 5; ++i) {
            px[i] = rng.uniform(0.0, 400.0);
            py[i] = rng.uniform(0.0, 400.0);
        }
        return check_graph({{5, 8}}, {5, 8}, [px, py](const auto& xs) {
            return apply_rope_2d(xs[0], px, py, ThetaSchedule(8));
        }, rng);
    }});
    checks.push_back({"sac_block", [spec](Rng& rng) {
        return check_graph({{8, 4}, {4}, {4}, {4, 4}, {4}, {4, 4}, {4}}, {8, 4},
                           [spec](const auto& xs) {
                               SacBlockParams<double> p{xs[1], xs[2], xs[3], xs[4], xs[5], xs[6]};
                               return sac_block_forward(xs[0], p, spec, true);
                           }, rng);
    }});
    checks.push_back({"chord_mixer_layer", [](Rng& rng) {
        return check_graph({{8, 6}, {6, 6}, {6}}, {8, 6}, [](const auto& xs) {
            ChordParams<double> p{xs[1], xs[2]};
            return chord_mixer_layer(xs[0], p);
        }, rng);
    }});
    checks.push_back({"cycle_fc_layer", [](Rng& rng) {
        return check_graph({{8, 6}, {6, 6}, {6}}, {8, 6}, [](const auto& xs) {
            CycleParams<double> p{3, xs[1], xs[2]};
            return cycle_fc_layer(xs[0], p);
        }, rng);
    }});

    bool all_pass = true;
    Rng rng(seed);
    for (const auto& check : checks) {
        GradCheckReport worst;
        bool pass = true;
        for (int rep = 0; rep < 10; ++rep) {
            auto report = check.run(rng);
            pass = pass && report.pass;
            if (report.max_rel_err > worst.max_rel_err) worst = report;
        }
        all_pass = all_pass && pass;
        if (out)
            std::fprintf(out, "[%s] %-22s max_rel_err=%.3e\n", pass ? "PASS" : "FAIL",
                         check.name.c_str(), worst.max_rel_err);
    }

    auto model_report = full_model_check(seed);
    all_pass = all_pass && model_report.pass;
    if (out)
        std::fprintf(out, "[%s] %-22s max_rel_err=%.3e\n", model_report.pass ? "PASS" : "FAIL",
                     "full_model", model_report.max_rel_err);
    return all_pass;
}

}  // namespace sacmil
