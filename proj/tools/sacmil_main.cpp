// sacmil command line: gen | train | ecl | partition | gradcheck
//
// Exit codes: 0 success, 1 contract/config error, 2 I/O error.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sacmil/bag_io.hpp"
#include "sacmil/ecl.hpp"
#include "sacmil/gradcheck.hpp"
#include "sacmil/harness.hpp"
#include "sacmil/selfcheck.hpp"

namespace {

std::vector<std::size_t> parse_lengths(const std::string& csv) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok = csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!tok.empty()) out.push_back(std::stoul(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw sacmil::ConfigError("--lengths needs at least one value");
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAC-MIL training, partitioning and effective-context-length harness"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic spatial-MIL dataset");
    sacmil::SyntheticSpec spec;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "data";
    gen->add_option("--bags", spec.bags, "number of bags");
    gen->add_option("--n-min", spec.n_min, "minimum instances per bag");
    gen->add_option("--n-max", spec.n_max, "maximum instances per bag");
    gen->add_option("--d", spec.d, "instance feature width");
    gen->add_option("--cluster-radius", spec.cluster_radius, "tumor cluster radius (grid cells)");
    gen->add_option("--pos-fraction", spec.positive_fraction, "fraction of positive bags");
    gen->add_option("--shift", spec.shift, "tumor feature shift magnitude");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "k-fold cross-validated training");
    std::string train_manifest, train_config, train_out = "runs";
    std::size_t train_folds = 5;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    train_cmd->add_option("--manifest", train_manifest, "dataset manifest csv")->required();
    train_cmd->add_option("--config", train_config, "run configuration file")->required();
    train_cmd->add_option("--folds", train_folds, "fold count");
    train_cmd->add_option("--seed", train_seed, "split/model seed")
        ->each([&](const std::string&) { train_seed_set = true; });
    train_cmd->add_option("--out", train_out, "output directory");

    // ecl
    auto* ecl_cmd = app.add_subcommand("ecl", "effective-context-length measurement");
    std::string ecl_mixer = "sac", ecl_lengths = "256,1024,4096", ecl_out = "ecl_out";
    sacmil::EclOptions ecl_opt;
    ecl_cmd->add_option("--mixer", ecl_mixer, "sac|chord|cycle|none");
    ecl_cmd->add_option("--lengths", ecl_lengths, "comma-separated sequence lengths");
    ecl_cmd->add_option("--layers", ecl_opt.layers, "stacked layer count");
    ecl_cmd->add_option("--k", ecl_opt.k, "SAC fold/region base");
    ecl_cmd->add_option("--dim", ecl_opt.dim, "channel width");
    ecl_cmd->add_option("--cycle-step", ecl_opt.cycle_step, "cycle footprint (odd)");
    ecl_cmd->add_option("--seed", ecl_opt.seed, "weight/input seed");
    ecl_cmd->add_option("--tol", ecl_opt.tol, "changed threshold on the L2 difference");
    ecl_cmd->add_option("--out", ecl_out, "output directory")->required();

    // partition
    auto* part_cmd = app.add_subcommand("partition", "partition one bag into spatial regions");
    std::string part_in, part_out;
    std::size_t part_k = 64;
    part_cmd->add_option("--in", part_in, "bag file")->required();
    part_cmd->add_option("--k", part_k, "region capacity");
    part_cmd->add_option("--out", part_out, "output csv")->required();

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    std::uint64_t grad_seed = 0;
    grad_cmd->add_option("--seed", grad_seed, "seed for the random checks");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*gen) {
            const auto manifest = sacmil::write_synthetic_dataset(spec, gen_seed, gen_out);
            std::printf("wrote %zu bags, manifest %s\n", spec.bags, manifest.string().c_str());
        } else if (*train_cmd) {
            auto cfg = sacmil::load_run_config(train_config);
            if (train_seed_set) cfg.train.seed = train_seed;
            auto bags = sacmil::load_bags(train_manifest);
            auto summary = sacmil::run_cross_validation(cfg.model, cfg.train, bags, train_folds,
                                                        cfg.train.seed, train_out);
            std::printf("folds=%zu mean acc=%.4f auc=%.4f f1=%.4f\n", train_folds,
                        summary.mean.accuracy, summary.mean.auc.value_or(-1.0), summary.mean.f1);
        } else if (*ecl_cmd) {
            auto records = sacmil::ecl_sweep({ecl_mixer}, parse_lengths(ecl_lengths), ecl_opt);
            sacmil::emit_report(records, ecl_out);
            for (const auto& r : records)
                std::printf("%s L=%zu layers=%d changed=%zu\n", r.mixer.c_str(), r.length,
                            r.layers, r.changed);
        } else if (*part_cmd) {
            auto bag = sacmil::load_bag(part_in);
            auto part = sacmil::make_partition(bag.coords, part_k);
            std::string csv = "instance_index,region_id,slot,is_pad\n";
            for (std::size_t slot = 0; slot < part.arranged_len(); ++slot) {
                char row[96];
                std::snprintf(row, sizeof(row), "%zu,%zu,%zu,%d\n", part.slot_to_original[slot],
                              slot / part.k, slot, part.pad_mask[slot] ? 1 : 0);
                csv += row;
            }
            sacmil::write_text_atomic(part_out, csv);
            std::printf("partitioned %zu instances into %zu regions of %zu\n", bag.n,
                        part.region_count, part.k);
        } else if (*grad_cmd) {
            const bool ok = sacmil::run_gradient_selfcheck(grad_seed, stdout);
            return ok ? 0 : 1;
        }
    } catch (const sacmil::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return 2;
    } catch (const sacmil::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
