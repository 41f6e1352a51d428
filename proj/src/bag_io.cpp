#include "sacmil/bag_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "sacmil/rng.hpp"

namespace sacmil {

namespace {

void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off])) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off + 1])) << 8) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off + 2])) << 16) |
           (static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf[off + 3])) << 24);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
        os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!os) throw IoError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    write_file_atomic(path, content);
}

void save_bag(const InstanceBag& bag, const std::filesystem::path& path) {
    validate_bag(bag);
    std::string buf;
    buf.reserve(kBagHeaderBytes + 4 * bag.n * bag.d + 8 * bag.n +
                (bag.has_instance_labels ? bag.n : 0));
    buf.append(kBagMagic, 4);
    buf.push_back(static_cast<char>(kBagVersion));
    put_u32(buf, static_cast<std::uint32_t>(bag.n));
    put_u32(buf, static_cast<std::uint32_t>(bag.d));
    put_u32(buf, bag.label);
    for (float v : bag.features) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put_u32(buf, bits);
    }
    for (const auto& c : bag.coords) {
        put_u32(buf, static_cast<std::uint32_t>(c.x));
        put_u32(buf, static_cast<std::uint32_t>(c.y));
    }
    if (bag.has_instance_labels)
        for (auto y : bag.instance_labels) buf.push_back(static_cast<char>(y));
    write_file_atomic(path, buf);
}

InstanceBag load_bag(const std::filesystem::path& path) {
    const std::string buf = read_file(path);
    if (buf.size() < kBagHeaderBytes)
        throw FormatError("'" + path.string() + "': file shorter than the 17-byte header (" +
                          std::to_string(buf.size()) + " bytes)");
    if (std::memcmp(buf.data(), kBagMagic, 4) != 0)
        throw FormatError("'" + path.string() + "': bad magic at offset 0");
    if (static_cast<std::uint8_t>(buf[4]) != kBagVersion)
        throw FormatError("'" + path.string() + "': unsupported version " +
                          std::to_string(static_cast<int>(static_cast<std::uint8_t>(buf[4]))));

    InstanceBag bag;
    bag.id = path.stem().string();
    bag.n = get_u32(buf, 5);
    bag.d = get_u32(buf, 9);
    bag.label = get_u32(buf, 13);
    if (bag.n == 0) throw FormatError("'" + path.string() + "': empty bag (n = 0) rejected");

    // bound declared extents by the actual byte count before sizing math
    const std::size_t avail = buf.size() - kBagHeaderBytes;
    if (bag.n > avail / 8 || (bag.d > 0 && bag.d > avail / 4 / bag.n))
        throw FormatError("'" + path.string() + "': declared extents n=" + std::to_string(bag.n) +
                          " d=" + std::to_string(bag.d) + " exceed the " +
                          std::to_string(buf.size()) + "-byte payload");
    const std::size_t base = kBagHeaderBytes + 4 * bag.n * bag.d + 8 * bag.n;
    if (buf.size() == base) {
        bag.has_instance_labels = false;
    } else if (buf.size() == base + bag.n) {
        bag.has_instance_labels = true;
    } else {
        throw FormatError("'" + path.string() + "': payload length mismatch, expected " +
                          std::to_string(base) + " or " + std::to_string(base + bag.n) +
                          " bytes, got " + std::to_string(buf.size()));
    }

    std::size_t off = kBagHeaderBytes;
    bag.features.resize(bag.n * bag.d);
    for (auto& v : bag.features) {
        const std::uint32_t bits = get_u32(buf, off);
        std::memcpy(&v, &bits, 4);
        off += 4;
    }
    bag.coords.resize(bag.n);
    for (auto& c : bag.coords) {
        c.x = static_cast<std::int32_t>(get_u32(buf, off));
        c.y = static_cast<std::int32_t>(get_u32(buf, off + 4));
        off += 8;
    }
    if (bag.has_instance_labels) {
        bag.instance_labels.resize(bag.n);
        for (auto& y : bag.instance_labels) y = static_cast<std::uint8_t>(buf[off++]);
    }
    validate_bag(bag);
    return bag;
}

void save_manifest(const std::vector<ManifestEntry>& entries,
                   const std::filesystem::path& path) {
    std::string out = "bag_id,path,label\n";
    for (const auto& e : entries)
        out += e.bag_id + "," + e.path + "," + std::to_string(e.label) + "\n";
    write_file_atomic(path, out);
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open manifest '" + path.string() + "'");
    std::string line;
    if (!std::getline(is, line) || trim(line) != "bag_id,path,label")
        throw FormatError("manifest '" + path.string() +
                          "' must start with header 'bag_id,path,label'");
    std::vector<ManifestEntry> entries;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::istringstream row(line);
        ManifestEntry e;
        std::string label;
        if (!std::getline(row, e.bag_id, ',') || !std::getline(row, e.path, ',') ||
            !std::getline(row, label))
            throw FormatError("manifest '" + path.string() + "' line " + std::to_string(lineno) +
                              " is not bag_id,path,label");
        try {
            e.label = static_cast<std::uint32_t>(std::stoul(trim(label)));
        } catch (const std::exception&) {
            throw FormatError("manifest '" + path.string() + "' line " + std::to_string(lineno) +
                              " has a non-numeric label");
        }
        for (const auto& prev : entries)
            if (prev.bag_id == e.bag_id)
                throw FormatError("manifest '" + path.string() + "' has duplicate bag_id '" +
                                  e.bag_id + "'");
        entries.push_back(std::move(e));
    }
    return entries;
}

std::vector<InstanceBag> load_bags(const std::filesystem::path& manifest_path) {
    const auto entries = load_manifest(manifest_path);
    const auto base = manifest_path.parent_path();
    std::vector<InstanceBag> bags;
    bags.reserve(entries.size());
    for (const auto& e : entries) {
        InstanceBag bag = load_bag(base / e.path);
        bag.id = e.bag_id;
        if (bag.label != e.label)
            throw FormatError("bag '" + e.bag_id + "' label " + std::to_string(bag.label) +
                              " disagrees with manifest label " + std::to_string(e.label));
        bags.push_back(std::move(bag));
    }
    return bags;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config '" + path.string() + "'");
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw FormatError("config '" + path.string() + "' line " + std::to_string(lineno) +
                              " is not key = value");
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));
        try {
            if (key == "d_in") cfg.model.d_in = std::stoul(value);
            else if (key == "dim") cfg.model.dim = std::stoul(value);
            else if (key == "k") cfg.model.k = std::stoul(value);
            else if (key == "blocks") cfg.model.blocks = std::stoi(value);
            else if (key == "lambda") cfg.model.lambda = std::stod(value);
            else if (key == "encoder") cfg.model.encoder = encoder_from_string(value);
            else if (key == "classes") cfg.model.classes = std::stoul(value);
            else if (key == "residual") {
                if (value == "true" || value == "1") cfg.model.residual = true;
                else if (value == "false" || value == "0") cfg.model.residual = false;
                else throw ConfigError("residual must be true/false");
            }
            else if (key == "lr") cfg.train.lr = std::stod(value);
            else if (key == "epochs") cfg.train.epochs = std::stoi(value);
            else if (key == "seed") cfg.train.seed = std::stoull(value);
            else if (key == "manifest") cfg.manifest = value;
            else if (key == "out") cfg.out_dir = value;
            else
                throw ConfigError("config '" + path.string() + "' has unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("config '" + path.string() + "' key '" + key +
                              "' has invalid value '" + value + "'");
        }
    }
    cfg.model.validate();
    cfg.train.validate();
    return cfg;
}

std::vector<InstanceBag> generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
    if (spec.bags < 2) throw ContractError("synthetic spec needs at least 2 bags");
    if (spec.n_min < 4 || spec.n_max < spec.n_min)
        throw ContractError("synthetic spec needs 4 <= n_min <= n_max");
    if (spec.d < 1) throw ContractError("synthetic spec needs d >= 1");
    if (!(spec.positive_fraction > 0.0) || !(spec.positive_fraction < 1.0))
        throw ContractError("synthetic positive fraction must be inside (0, 1)");
    if (!(spec.cluster_radius > 0.0))
        throw ContractError("synthetic cluster radius must be positive");

    const std::size_t n_pos =
        static_cast<std::size_t>(std::lround(static_cast<double>(spec.bags) *
                                             spec.positive_fraction));
    if (n_pos == 0 || n_pos == spec.bags)
        throw ContractError("synthetic spec must request both classes");

    Rng rng(seed);
    // dataset-level coherent tumor direction, unit norm
    std::vector<double> direction(spec.d);
    double norm = 0.0;
    for (auto& v : direction) {
        v = rng.normal();
        norm += v * v;
    }
    norm = std::sqrt(norm);
    for (auto& v : direction) v /= norm;

    constexpr std::int32_t cell_px = 32;
    constexpr std::size_t grid = 14;

    std::vector<InstanceBag> bags;
    bags.reserve(spec.bags);
    for (std::size_t b = 0; b < spec.bags; ++b) {
        const bool positive = b < n_pos;
        InstanceBag bag;
        bag.label = positive ? 1u : 0u;
        bag.d = spec.d;
        bag.has_instance_labels = true;

        // irregular tissue mask: wobbled ellipse over the cell grid
        const double cx = grid / 2.0 + rng.uniform(-1.5, 1.5);
        const double cy = grid / 2.0 + rng.uniform(-1.5, 1.5);
        const double rx = rng.uniform(0.30, 0.48) * grid;
        const double ry = rng.uniform(0.30, 0.48) * grid;
        const double wobble = rng.uniform(0.10, 0.30);
        const double phase = rng.uniform(0.0, 6.283185307179586);

        std::vector<std::pair<std::size_t, std::size_t>> cells;
        for (std::size_t i = 0; i < grid; ++i)
            for (std::size_t j = 0; j < grid; ++j) {
                const double dx = (static_cast<double>(i) - cx) / rx;
                const double dy = (static_cast<double>(j) - cy) / ry;
                const double r = std::sqrt(dx * dx + dy * dy);
                const double ang = std::atan2(dy, dx);
                if (r < 1.0 + wobble * std::sin(3.0 * ang + phase))
                    cells.emplace_back(i, j);
            }

        std::size_t n = spec.n_min + rng.uniform_index(spec.n_max - spec.n_min + 1);
        if (cells.size() < n) n = std::max<std::size_t>(cells.size(), spec.n_min / 2 + 2);
        rng.shuffle(cells);
        if (cells.size() < n) {
            // degenerate mask draw; fall back to a dense block
            cells.clear();
            for (std::size_t i = 0; i < grid && cells.size() < n; ++i)
                for (std::size_t j = 0; j < grid && cells.size() < n; ++j)
                    cells.emplace_back(i, j);
        }
        cells.resize(n);

        bag.n = n;
        bag.coords.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            bag.coords[i].x = static_cast<std::int32_t>(cells[i].first) * cell_px +
                              static_cast<std::int32_t>(rng.uniform_index(8));
            bag.coords[i].y = static_cast<std::int32_t>(cells[i].second) * cell_px +
                              static_cast<std::int32_t>(rng.uniform_index(8));
        }

        bag.features.resize(n * spec.d);
        for (auto& v : bag.features) v = static_cast<float>(rng.normal());
        bag.instance_labels.assign(n, 0);

        const double radius_px = spec.cluster_radius * cell_px;
        // normalized radial distance from the slide's min corner, the same
        // geometry the polar encoder sees
        std::int32_t cmin_x = bag.coords[0].x, cmax_x = bag.coords[0].x;
        std::int32_t cmin_y = bag.coords[0].y, cmax_y = bag.coords[0].y;
        for (const auto& c : bag.coords) {
            cmin_x = std::min(cmin_x, c.x);
            cmax_x = std::max(cmax_x, c.x);
            cmin_y = std::min(cmin_y, c.y);
            cmax_y = std::max(cmax_y, c.y);
        }
        std::vector<double> rho(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double nx = cmax_x == cmin_x
                                  ? 0.0
                                  : double(bag.coords[i].x - cmin_x) / double(cmax_x - cmin_x);
            const double ny = cmax_y == cmin_y
                                  ? 0.0
                                  : double(bag.coords[i].y - cmin_y) / double(cmax_y - cmin_y);
            rho[i] = std::sqrt(nx * nx + ny * ny);
        }
        auto quantile = [&](double q) {
            std::vector<double> s(rho);
            std::sort(s.begin(), s.end());
            return s[static_cast<std::size_t>(q * double(n - 1))];
        };
        const double inner_band = quantile(0.30);
        const double outer_band = quantile(0.70);

        // densest neighborhood center inside a radial band; falls back to
        // the whole bag if the band is empty
        auto pick_center = [&](bool inner, const std::vector<char>& taken) -> std::size_t {
            std::size_t center = n;
            std::size_t best_count = 0;
            double best_rho = 0.0;
            for (bool band_only : {true, false}) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (taken[i]) continue;
                    if (band_only && (inner ? rho[i] > inner_band : rho[i] < outer_band))
                        continue;
                    std::size_t count = 0;
                    for (std::size_t j = 0; j < n; ++j)
                        if (static_cast<double>(dist2(bag.coords[i], bag.coords[j])) <=
                            radius_px * radius_px)
                            ++count;
                    if (center == n || count > best_count ||
                        (count == best_count && rho[i] < best_rho)) {
                        best_count = count;
                        best_rho = rho[i];
                        center = i;
                    }
                }
                if (center != n) break;
            }
            return center;
        };

        auto apply_cluster = [&](std::size_t center, bool tumor, std::vector<char>& taken) {
            const double strength = tumor ? 1.0 : spec.distractor;
            for (std::size_t i = 0; i < n; ++i) {
                const double d2 = static_cast<double>(dist2(bag.coords[i], bag.coords[center]));
                if (d2 > radius_px * radius_px) continue;
                taken[i] = 1;
                if (tumor) bag.instance_labels[i] = 1;
                const double gain = strength * spec.shift * rng.uniform(0.8, 1.2);
                for (std::size_t c = 0; c < spec.d; ++c)
                    bag.features[i * spec.d + c] += static_cast<float>(gain * direction[c]);
            }
        };

        // Background texture: 0-2 weaker benign clusters in the outer
        // radial band, in both classes. The tumor cluster (inner band,
        // positives only) determines the label, so cluster position helps
        // separate the classes beyond raw cluster mass.
        std::vector<char> taken(n, 0);
        const std::size_t benign_count = rng.uniform_index(3);
        for (std::size_t b2 = 0; b2 < benign_count; ++b2) {
            const std::size_t center = pick_center(/*inner*/ false, taken);
            if (center == n) break;
            apply_cluster(center, false, taken);
        }
        if (positive) {
            std::vector<char> fresh(n, 0);
            const std::size_t center = pick_center(/*inner*/ true, fresh);
            apply_cluster(center, true, taken);
        }
        validate_bag(bag);
        bags.push_back(std::move(bag));
    }
    return bags;
}

std::filesystem::path write_synthetic_dataset(const SyntheticSpec& spec, std::uint64_t seed,
                                              const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory '" + out_dir.string() + "'");
    auto bags = generate_synthetic(spec, seed);
    std::vector<ManifestEntry> entries;
    for (std::size_t i = 0; i < bags.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "bag_%04zu.sacb", i);
        bags[i].id = std::filesystem::path(name).stem().string();
        save_bag(bags[i], out_dir / name);
        entries.push_back({bags[i].id, name, bags[i].label});
    }
    const auto manifest = out_dir / "manifest.csv";
    save_manifest(entries, manifest);
    return manifest;
}

}  // namespace sacmil
