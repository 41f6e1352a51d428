#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sacmil/mixers.hpp"

namespace sacmil {

// One perturbation experiment: zero the middle instance, count outputs whose
// L2 difference exceeds tol.
struct EclRecord {
    std::string mixer;
    std::size_t length = 0;
    int layers = 0;
    std::size_t perturb_index = 0;
    std::size_t changed = 0;
    std::vector<double> l2_diffs;  // per output instance
    long long runtime_ms = 0;
};

struct EclOptions {
    std::size_t dim = 32;
    std::size_t k = 16;           // SAC fold/region base
    std::size_t cycle_step = 7;   // odd footprint
    int layers = 3;
    std::uint64_t seed = 0;
    double tol = 1e-12;
};

template <typename S>
MixerStack<S> make_mixer_stack(const std::string& kind, std::size_t L, const EclOptions& opt) {
    if (kind == "sac") return make_sac_stack<S>(L, opt.dim, opt.k, opt.layers, opt.seed);
    if (kind == "chord") return make_chord_stack<S>(opt.dim, opt.layers, opt.seed);
    if (kind == "cycle") return make_cycle_stack<S>(opt.dim, opt.cycle_step, opt.layers, opt.seed);
    if (kind == "none") return make_plain_stack<S>(opt.dim, opt.layers, opt.seed);
    throw ConfigError("unknown mixer '" + kind + "' (expected sac|chord|cycle|none)");
}

// Two single-threaded forward passes over the same seeded input, the second
// with instance floor(L/2) zeroed; unaffected outputs are bitwise identical,
// so any tiny tol gives the same changed set.
EclRecord measure_ecl(const std::string& mixer, std::size_t L, const EclOptions& opt);

std::vector<EclRecord> ecl_sweep(const std::vector<std::string>& mixers,
                                 const std::vector<std::size_t>& lengths, const EclOptions& opt);

// writes ecl.csv plus one diffs_<mixer>_<L>.csv per record
void emit_report(const std::vector<EclRecord>& records, const std::filesystem::path& out_dir);

}  // namespace sacmil
