#pragma once

#include <cstdint>
#include <vector>

#include "sacmil/common.hpp"

namespace sacmil {

struct Coord {
    std::int32_t x = 0;
    std::int32_t y = 0;
};

using CoordSet = std::vector<Coord>;

// One bag's spatial regioning: R = ceil(n/k) regions of exactly k arranged
// slots each. Slots holding a duplicated region center are flagged in
// pad_mask and excluded from pooling downstream.
struct Partition {
    std::size_t k = 0;
    std::size_t region_count = 0;
    std::vector<std::size_t> centers;             // original indices, FPS order
    std::vector<std::size_t> assignment;          // per original instance: region id
    std::vector<std::size_t> slot_to_original;    // per arranged slot: source instance
    std::vector<bool> pad_mask;                   // per arranged slot
    std::size_t arranged_len() const { return region_count * k; }
};

// squared Euclidean distance in exact integer arithmetic
inline std::int64_t dist2(const Coord& a, const Coord& b) {
    const std::int64_t dx = static_cast<std::int64_t>(a.x) - b.x;
    const std::int64_t dy = static_cast<std::int64_t>(a.y) - b.y;
    return dx * dx + dy * dy;
}

// Tie order used throughout the module: lexicographic (x, y), then original
// index. Permutation-invariant for distinct coordinates, which is what makes
// the arranged sequence canonical under input row shuffles.
inline bool coord_before(const CoordSet& coords, std::size_t a, std::size_t b) {
    if (coords[a].x != coords[b].x) return coords[a].x < coords[b].x;
    if (coords[a].y != coords[b].y) return coords[a].y < coords[b].y;
    return a < b;
}

// canonical first center: lexicographically smallest coordinate
std::size_t fps_seed_index(const CoordSet& coords);

// Farthest point sampling: greedy argmax of the minimum distance to the
// already-selected set, starting from seed_index.
std::vector<std::size_t> fps(const CoordSet& coords, std::size_t region_count,
                             std::size_t seed_index);

// Greedy disjoint claiming in center order; short final region is padded by
// duplicating its center.
Partition assign_regions(const CoordSet& coords, const std::vector<std::size_t>& centers,
                         std::size_t k);

Partition make_partition(const CoordSet& coords, std::size_t k);

// Reorders an n x width row-major feature matrix into arranged order
// (pads duplicate their center's row). Returns (R*k) x width values.
std::vector<float> arrange_rows(const std::vector<float>& features, std::size_t width,
                                const Partition& partition);

// arranged-slot coordinates (pads inherit their center's coordinate)
CoordSet arrange_coords(const CoordSet& coords, const Partition& partition);

}  // namespace sacmil
