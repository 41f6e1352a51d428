#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sacmil {

// Seeded RNG with hand-rolled distribution transforms. std::mt19937 output is
// pinned by the standard, while the std distributions are not; deriving
// uniform/normal draws directly from the engine keeps every seeded run
// bit-reproducible across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(static_cast<std::mt19937::result_type>(seed)) {}

    // uniform in [0, 1)
    double canonical() {
        return static_cast<double>(engine_()) * (1.0 / 4294967296.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * canonical(); }

    // uniform integer in [0, n)
    std::size_t uniform_index(std::size_t n) {
        if (n == 0) return 0;
        auto idx = static_cast<std::size_t>(canonical() * static_cast<double>(n));
        return idx < n ? idx : n - 1;
    }

    // Box-Muller, one draw per call (the unused sine branch is discarded so
    // the draw count per sample stays fixed).
    double normal() {
        double u1 = canonical();
        double u2 = canonical();
        if (u1 <= 0.0) u1 = 1.0 / 4294967296.0;
        constexpr double two_pi = 6.283185307179586476925286766559;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937 engine_;
};

}  // namespace sacmil
