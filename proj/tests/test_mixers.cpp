#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "sacmil/mixers.hpp"

using namespace sacmil;

namespace {

std::set<std::size_t> forward_diff_changed(const MixerStack<double>& stack, std::size_t L,
                                           std::size_t D, std::size_t perturb,
                                           std::uint64_t seed) {
    Rng rng(seed);
    auto base = randn<double>({L, D}, rng);
    auto pert = tensor<double>(base->shape, base->data);
    for (std::size_t j = 0; j < D; ++j) pert->data[perturb * D + j] = 0.0;
    auto a = stack.forward(base);
    auto b = stack.forward(pert);
    std::set<std::size_t> changed;
    for (std::size_t i = 0; i < L; ++i)
        for (std::size_t j = 0; j < D; ++j)
            if (a->data[i * D + j] != b->data[i * D + j]) {
                changed.insert(i);
                break;
            }
    return changed;
}

// set-arithmetic oracle: positions reachable as sums of at most n offsets
// from {0} U {2^t : t < ceil(log2 L)}, cyclic over L
std::set<std::size_t> chord_reach_oracle(std::size_t L, int layers) {
    std::set<std::size_t> reach{0};
    const std::size_t tracks = chord_track_count(L);
    for (int n = 0; n < layers; ++n) {
        std::set<std::size_t> next;
        for (std::size_t r : reach) {
            next.insert(r);
            for (std::size_t t = 0; t < tracks; ++t)
                next.insert((r + (std::size_t{1} << t)) % L);
        }
        reach = std::move(next);
    }
    return reach;
}

}  // namespace

TEST_CASE("chord single layer dependency set at L=8") {
    auto stack = make_chord_stack<double>(6, 1, 3);
    // output j depends on {j, j-1, j-2, j-4} mod 8; probe perturbing input 0
    // => changed outputs are {0, 1, 2, 4}
    auto changed = forward_diff_changed(stack, 8, 6, 0, 11);
    CHECK(changed == std::set<std::size_t>{0, 1, 2, 4});
    CHECK(chord_track_count(8) == 3);
}

TEST_CASE("chord stack of ceil(log2 L) layers reaches every output") {
    for (std::size_t L : {8u, 16u, 64u}) {
        const int layers = static_cast<int>(chord_track_count(L));
        auto stack = make_chord_stack<double>(8, layers, 5);
        auto changed = forward_diff_changed(stack, L, 8, L / 2, 13);
        CHECK(changed.size() == L);
    }
}

TEST_CASE("chord changed set equals the set-arithmetic oracle") {
    for (int layers = 1; layers <= 3; ++layers) {
        for (std::size_t L : {16u, 64u, 128u}) {
            auto stack = make_chord_stack<double>(8, layers, 7);
            auto changed = forward_diff_changed(stack, L, 8, 0, 17);
            auto oracle = chord_reach_oracle(L, layers);
            CHECK(changed == oracle);
            if (static_cast<std::size_t>(layers) < chord_track_count(L))
                CHECK(changed.size() < L);
        }
    }
}

TEST_CASE("cycle stepsize 1 is a pure channel map") {
    auto stack = make_cycle_stack<double>(6, 1, 2, 23);
    auto changed = forward_diff_changed(stack, 16, 6, 7, 29);
    CHECK(changed == std::set<std::size_t>{7});
}

TEST_CASE("cycle single layer footprint is exactly S") {
    auto stack = make_cycle_stack<double>(8, 3, 1, 31);
    auto changed = forward_diff_changed(stack, 16, 8, 8, 37);
    CHECK(changed == std::set<std::size_t>{7, 8, 9});
}

TEST_CASE("cycle footprint after n layers is n(S-1)+1, independent of L") {
    const std::size_t S = 7;
    for (int layers : {1, 2, 3}) {
        std::set<std::size_t> counts;
        for (std::size_t L : {64u, 256u}) {
            auto stack = make_cycle_stack<double>(14, S, layers, 41);
            auto changed = forward_diff_changed(stack, L, 14, L / 2, 43);
            counts.insert(changed.size());
            CHECK(changed.size() == static_cast<std::size_t>(layers) * (S - 1) + 1);
        }
        CHECK(counts.size() == 1);  // identical across lengths
    }
}

TEST_CASE("cycle parameter validation") {
    CHECK_THROWS_AS(make_cycle_stack<double>(8, 4, 1, 1), ConfigError);  // even S
    auto stack = make_cycle_stack<double>(8, 7, 1, 1);
    Rng rng(3);
    auto x = randn<double>({3, 8}, rng);  // L < S
    CHECK_THROWS_AS(stack.forward(x), ContractError);
}

TEST_CASE("plain stack keeps shape and has no cross-instance flow") {
    auto stack = make_plain_stack<double>(8, 3, 51);
    auto changed = forward_diff_changed(stack, 32, 8, 16, 53);
    CHECK(changed == std::set<std::size_t>{16});
}

TEST_CASE("chord track widths absorb the remainder") {
    // D=32, L=4096 -> 12 tracks of width 2, last width 10
    auto map = chord_source_map(4096, 32);
    CHECK(map->size() == 4096 * 32);
    // track 11 covers channels 22..31 and rotates by 2^11
    const std::size_t row = 100;
    for (std::size_t c = 22; c < 32; ++c)
        CHECK((*map)[row * 32 + c] == ((row + 4096 - 2048) % 4096) * 32 + c);
}
