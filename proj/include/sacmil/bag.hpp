#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sacmil/partition.hpp"

namespace sacmil {

// One slide: n instance feature vectors with their patch coordinates and a
// bag-level label. Instance labels exist only for synthetic data.
struct InstanceBag {
    std::string id;
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<float> features;  // n x d row-major
    CoordSet coords;              // n patch origins
    std::uint32_t label = 0;
    bool has_instance_labels = false;
    std::vector<std::uint8_t> instance_labels;
};

inline void validate_bag(const InstanceBag& bag) {
    if (bag.n == 0) throw ContractError("bag '" + bag.id + "' is empty (n = 0)");
    if (bag.features.size() != bag.n * bag.d)
        throw ContractError("bag '" + bag.id + "' feature payload does not match n*d");
    if (bag.coords.size() != bag.n)
        throw ContractError("bag '" + bag.id + "' coordinate count does not match n");
    if (bag.has_instance_labels) {
        if (bag.instance_labels.size() != bag.n)
            throw ContractError("bag '" + bag.id + "' instance label count does not match n");
        if (bag.label <= 1) {
            bool any_positive = false;
            for (auto y : bag.instance_labels) any_positive = any_positive || y != 0;
            if (any_positive != (bag.label == 1))
                throw ContractError("bag '" + bag.id +
                                    "' violates MIL consistency between bag and instance labels");
        }
    }
}

}  // namespace sacmil
