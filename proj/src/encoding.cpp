#include "sacmil/encoding.hpp"

#include <algorithm>

namespace sacmil {

EncoderKind encoder_from_string(const std::string& name) {
    if (name == "none") return EncoderKind::none;
    if (name == "sinusoidal") return EncoderKind::sinusoidal;
    if (name == "rope1d") return EncoderKind::rope1d;
    if (name == "rope2d") return EncoderKind::rope2d;
    if (name == "prope") return EncoderKind::prope;
    throw ConfigError("unknown encoder '" + name +
                      "' (expected none|sinusoidal|rope1d|rope2d|prope)");
}

std::string encoder_name(EncoderKind kind) {
    switch (kind) {
        case EncoderKind::none: return "none";
        case EncoderKind::sinusoidal: return "sinusoidal";
        case EncoderKind::rope1d: return "rope1d";
        case EncoderKind::rope2d: return "rope2d";
        case EncoderKind::prope: return "prope";
    }
    return "unknown";
}

std::vector<NormCoord> normalize_coords(const CoordSet& coords) {
    if (coords.empty()) throw ContractError("normalize_coords requires a non-empty set");
    std::int32_t min_x = coords[0].x, max_x = coords[0].x;
    std::int32_t min_y = coords[0].y, max_y = coords[0].y;
    for (const auto& c : coords) {
        min_x = std::min(min_x, c.x);
        max_x = std::max(max_x, c.x);
        min_y = std::min(min_y, c.y);
        max_y = std::max(max_y, c.y);
    }
    const std::int64_t span_x = static_cast<std::int64_t>(max_x) - min_x;
    const std::int64_t span_y = static_cast<std::int64_t>(max_y) - min_y;
    std::vector<NormCoord> out(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const std::int64_t dx = static_cast<std::int64_t>(coords[i].x) - min_x;
        const std::int64_t dy = static_cast<std::int64_t>(coords[i].y) - min_y;
        out[i].x = span_x == 0 ? 0.0 : static_cast<double>(dx) / static_cast<double>(span_x);
        out[i].y = span_y == 0 ? 0.0 : static_cast<double>(dy) / static_cast<double>(span_y);
    }
    return out;
}

std::vector<PolarCoord> to_polar(const std::vector<NormCoord>& norm, double lambda) {
    if (!(lambda > 0.0)) throw ConfigError("polar scaling factor lambda must be positive");
    std::vector<PolarCoord> out(norm.size());
    for (std::size_t i = 0; i < norm.size(); ++i) {
        out[i].rho = std::sqrt(norm[i].x * norm[i].x + norm[i].y * norm[i].y) * lambda;
        out[i].alpha = std::atan2(norm[i].y, norm[i].x);
    }
    return out;
}

}  // namespace sacmil
