#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "sacmil/bag.hpp"
#include "sacmil/encoding.hpp"
#include "sacmil/model.hpp"

namespace sacmil {

// On-disk bag record, little-endian throughout; 17-byte header
//   "SACB" | version u8 = 1 | n u32 | d u32 | label u32
// followed by n*d float32 features and n pairs of int32 coords. A trailing
// block of n u8 instance labels is optional; its presence is determined by
// the remaining payload length, which must match one of the two layouts
// exactly.
inline constexpr char kBagMagic[4] = {'S', 'A', 'C', 'B'};
inline constexpr std::uint8_t kBagVersion = 1;
inline constexpr std::size_t kBagHeaderBytes = 17;

void save_bag(const InstanceBag& bag, const std::filesystem::path& path);
InstanceBag load_bag(const std::filesystem::path& path);

struct ManifestEntry {
    std::string bag_id;
    std::string path;  // relative to the manifest file
    std::uint32_t label = 0;
};

void save_manifest(const std::vector<ManifestEntry>& entries, const std::filesystem::path& path);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
std::vector<InstanceBag> load_bags(const std::filesystem::path& manifest_path);

// Flat key=value run configuration; unknown keys are rejected and all model
// invariants are revalidated on load.
struct RunConfig {
    ModelConfig model;
    TrainHyper train;
    std::string manifest;
    std::string out_dir;
};

RunConfig load_run_config(const std::filesystem::path& path);

struct SyntheticSpec {
    std::size_t bags = 200;
    std::size_t n_min = 32;
    std::size_t n_max = 64;
    std::size_t d = 32;
    double cluster_radius = 2.5;   // in grid-cell units
    double positive_fraction = 0.5;
    double shift = 0.9;            // per-instance tumor feature shift magnitude
    double distractor = 0.6;       // benign cluster strength relative to tumor
};

// Spatially structured synthetic MIL task: jittered grid inside an irregular
// tissue mask; positive bags carry one contiguous cluster whose feature
// shift is weak per instance but coherent within the cluster.
std::vector<InstanceBag> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

// generates, writes bag files plus manifest.csv into out_dir
std::filesystem::path write_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed,
                                              const std::filesystem::path& out_dir);

// atomic text write (temp file + rename)
void write_text_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace sacmil
