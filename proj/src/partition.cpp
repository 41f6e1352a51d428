#include "sacmil/partition.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace sacmil {

std::size_t fps_seed_index(const CoordSet& coords) {
    if (coords.empty()) throw ContractError("fps_seed_index requires a non-empty coordinate set");
    std::size_t best = 0;
    for (std::size_t i = 1; i < coords.size(); ++i)
        if (coord_before(coords, i, best)) best = i;
    return best;
}

std::vector<std::size_t> fps(const CoordSet& coords, std::size_t region_count,
                             std::size_t seed_index) {
    const std::size_t n = coords.size();
    if (n == 0) throw ContractError("fps requires a non-empty coordinate set");
    if (region_count < 1 || region_count > n)
        throw ContractError("fps region count " + std::to_string(region_count) +
                            " must be in [1, " + std::to_string(n) + "]");
    if (seed_index >= n) throw ContractError("fps seed index out of range");

    std::vector<std::size_t> centers;
    centers.reserve(region_count);
    std::vector<char> selected(n, 0);
    std::vector<std::int64_t> min_d2(n, std::numeric_limits<std::int64_t>::max());

    centers.push_back(seed_index);
    selected[seed_index] = 1;
    for (std::size_t i = 0; i < n; ++i) min_d2[i] = dist2(coords[i], coords[seed_index]);

    while (centers.size() < region_count) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (selected[i]) continue;
            if (best == n || min_d2[i] > min_d2[best] ||
                (min_d2[i] == min_d2[best] && coord_before(coords, i, best)))
                best = i;
        }
        centers.push_back(best);
        selected[best] = 1;
        for (std::size_t i = 0; i < n; ++i)
            min_d2[i] = std::min(min_d2[i], dist2(coords[i], coords[best]));
    }
    return centers;
}

Partition assign_regions(const CoordSet& coords, const std::vector<std::size_t>& centers,
                         std::size_t k) {
    const std::size_t n = coords.size();
    if (n == 0) throw ContractError("assign_regions requires a non-empty coordinate set");
    if (k < 1) throw ContractError("assign_regions region capacity must be >= 1");
    if (centers.empty()) throw ContractError("assign_regions requires at least one center");

    Partition part;
    part.k = k;
    part.region_count = centers.size();
    part.centers = centers;
    part.assignment.assign(n, part.region_count);
    part.slot_to_original.assign(part.arranged_len(), 0);
    part.pad_mask.assign(part.arranged_len(), false);

    std::vector<char> claimed(n, 0);
    // later centers are reserved so an earlier region cannot swallow them
    std::vector<char> reserved(n, 0);
    for (std::size_t c : centers) reserved[c] = 1;

    for (std::size_t r = 0; r < centers.size(); ++r) {
        const std::size_t center = centers[r];
        reserved[center] = 0;
        claimed[center] = 1;
        part.assignment[center] = r;

        std::vector<std::size_t> members{center};
        while (members.size() < k) {
            std::size_t best = n;
            std::int64_t best_d2 = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (claimed[i] || reserved[i]) continue;
                const std::int64_t d2 = dist2(coords[i], coords[center]);
                if (best == n || d2 < best_d2 ||
                    (d2 == best_d2 && coord_before(coords, i, best))) {
                    best = i;
                    best_d2 = d2;
                }
            }
            if (best == n) break;  // pool exhausted; pad below
            claimed[best] = 1;
            part.assignment[best] = r;
            members.push_back(best);
        }

        // order by distance to center (center stays first), then fill pads
        std::sort(members.begin() + 1, members.end(), [&](std::size_t a, std::size_t b) {
            const std::int64_t da = dist2(coords[a], coords[center]);
            const std::int64_t db = dist2(coords[b], coords[center]);
            if (da != db) return da < db;
            return coord_before(coords, a, b);
        });
        for (std::size_t s = 0; s < k; ++s) {
            const std::size_t slot = r * k + s;
            if (s < members.size()) {
                part.slot_to_original[slot] = members[s];
            } else {
                part.slot_to_original[slot] = center;
                part.pad_mask[slot] = true;
            }
        }
    }
    return part;
}

Partition make_partition(const CoordSet& coords, std::size_t k) {
    const std::size_t n = coords.size();
    if (n == 0) throw ContractError("make_partition requires a non-empty coordinate set");
    if (k < 1) throw ContractError("make_partition region capacity must be >= 1");
    const std::size_t regions = (n + k - 1) / k;
    return assign_regions(coords, fps(coords, regions, fps_seed_index(coords)), k);
}

std::vector<float> arrange_rows(const std::vector<float>& features, std::size_t width,
                                const Partition& partition) {
    if (width == 0 || features.size() % width != 0)
        throw ContractError("arrange_rows feature buffer is not a whole number of rows");
    const std::size_t n = features.size() / width;
    for (std::size_t src : partition.slot_to_original)
        if (src >= n) throw ContractError("arrange_rows partition refers past the feature rows");
    std::vector<float> out(partition.arranged_len() * width);
    for (std::size_t slot = 0; slot < partition.arranged_len(); ++slot) {
        const std::size_t src = partition.slot_to_original[slot];
        std::copy_n(features.begin() + static_cast<std::ptrdiff_t>(src * width), width,
                    out.begin() + static_cast<std::ptrdiff_t>(slot * width));
    }
    return out;
}

CoordSet arrange_coords(const CoordSet& coords, const Partition& partition) {
    CoordSet out(partition.arranged_len());
    for (std::size_t slot = 0; slot < partition.arranged_len(); ++slot) {
        const std::size_t src = partition.slot_to_original[slot];
        if (src >= coords.size())
            throw ContractError("arrange_coords partition refers past the coordinate set");
        out[slot] = coords[src];
    }
    return out;
}

}  // namespace sacmil
