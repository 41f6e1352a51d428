#include "sacmil/ecl.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>

#include "sacmil/bag_io.hpp"

namespace sacmil {

EclRecord measure_ecl(const std::string& mixer, std::size_t L, const EclOptions& opt) {
    if (L < 2) throw ContractError("ecl needs a sequence length >= 2, got " + std::to_string(L));
    if (!(opt.tol > 0.0)) throw ContractError("ecl tolerance must be positive");

    const auto t0 = std::chrono::steady_clock::now();
    auto stack = make_mixer_stack<float>(mixer, L, opt);

    Rng rng(opt.seed + 1);  // input stream independent of the weight stream
    auto base = randn<float>({L, opt.dim}, rng);
    auto perturbed = tensor<float>(base->shape, base->data);
    const std::size_t mid = L / 2;
    for (std::size_t j = 0; j < opt.dim; ++j) perturbed->data[mid * opt.dim + j] = 0.0f;

    auto out_a = stack.forward(base);
    auto out_b = stack.forward(perturbed);

    EclRecord rec;
    rec.mixer = mixer;
    rec.length = L;
    rec.layers = opt.layers;
    rec.perturb_index = mid;
    rec.l2_diffs.resize(L);
    for (std::size_t i = 0; i < L; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < opt.dim; ++j) {
            const double d = static_cast<double>(out_a->data[i * opt.dim + j]) -
                             static_cast<double>(out_b->data[i * opt.dim + j]);
            acc += d * d;
        }
        rec.l2_diffs[i] = std::sqrt(acc);
        if (rec.l2_diffs[i] > opt.tol) ++rec.changed;
    }
    rec.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - t0)
                         .count();
    return rec;
}

std::vector<EclRecord> ecl_sweep(const std::vector<std::string>& mixers,
                                 const std::vector<std::size_t>& lengths,
                                 const EclOptions& opt) {
    if (mixers.empty() || lengths.empty())
        throw ContractError("ecl sweep needs at least one mixer and one length");
    std::vector<EclRecord> records;
    for (const auto& mixer : mixers)
        for (std::size_t L : lengths) records.push_back(measure_ecl(mixer, L, opt));
    return records;
}

void emit_report(const std::vector<EclRecord>& records, const std::filesystem::path& out_dir) {
    if (records.empty()) throw ContractError("emit_report needs at least one record");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");

    std::string summary = "mixer,L,layers,perturb_idx,changed,runtime_ms\n";
    for (const auto& r : records) {
        char line[160];
        std::snprintf(line, sizeof(line), "%s,%zu,%d,%zu,%zu,%lld\n", r.mixer.c_str(), r.length,
                      r.layers, r.perturb_index, r.changed, r.runtime_ms);
        summary += line;

        std::string diffs = "instance_index,l2_diff\n";
        for (std::size_t i = 0; i < r.l2_diffs.size(); ++i) {
            char row[64];
            std::snprintf(row, sizeof(row), "%zu,%.9g\n", i, r.l2_diffs[i]);
            diffs += row;
        }
        write_text_atomic(out_dir / ("diffs_" + r.mixer + "_" + std::to_string(r.length) + ".csv"),
                          diffs);
    }
    write_text_atomic(out_dir / "ecl.csv", summary);
}

}  // namespace sacmil
