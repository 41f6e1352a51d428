#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sacmil/ecl.hpp"

using namespace sacmil;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int c = 0;
        path = fs::temp_directory_path() /
               ("sacmil_ecl_" + std::to_string(::getpid()) + "_" + std::to_string(c++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("channel-only stack changes exactly the perturbed instance") {
    EclOptions opt;
    opt.dim = 16;
    opt.layers = 3;
    auto rec = measure_ecl("none", 64, opt);
    CHECK(rec.changed == 1);
    CHECK(rec.perturb_index == 32);
    CHECK(rec.l2_diffs[32] > opt.tol);
}

TEST_CASE("sac k=4 n=3 covers L=64 entirely") {
    EclOptions opt;
    opt.dim = 32;
    opt.k = 4;
    opt.layers = 3;
    auto rec = measure_ecl("sac", 64, opt);
    CHECK(rec.changed == 64);
    for (double d : rec.l2_diffs) CHECK(d > opt.tol);
}

TEST_CASE("cycle changed count is identical across lengths") {
    EclOptions opt;
    opt.dim = 32;
    opt.cycle_step = 7;
    opt.layers = 3;
    auto a = measure_ecl("cycle", 256, opt);
    auto b = measure_ecl("cycle", 1024, opt);
    CHECK(a.changed == b.changed);
    CHECK(a.changed == 3 * (7 - 1) + 1);
}

TEST_CASE("changed counts are tol-robust") {
    for (double tol : {1e-12, 1e-9, 1e-6}) {
        EclOptions opt;
        opt.dim = 16;
        opt.k = 4;
        opt.layers = 2;
        opt.tol = tol;
        auto rec = measure_ecl("sac", 64, opt);
        CHECK(rec.changed == 16);
    }
}

TEST_CASE("perturbed instance always changes") {
    EclOptions opt;
    opt.dim = 16;
    opt.layers = 1;
    for (const char* mixer : {"sac", "chord", "cycle", "none"}) {
        EclOptions o = opt;
        o.k = 4;
        auto rec = measure_ecl(mixer, 64, o);
        CHECK(rec.changed >= 1);
        CHECK(rec.l2_diffs[rec.perturb_index] > o.tol);
    }
}

TEST_CASE("contract errors") {
    EclOptions opt;
    CHECK_THROWS_AS(measure_ecl("sac", 1, opt), ContractError);
    CHECK_THROWS_AS(measure_ecl("warp", 64, opt), ConfigError);
    opt.tol = -1.0;
    CHECK_THROWS_AS(measure_ecl("none", 64, opt), ContractError);
}

TEST_CASE("emit_report format and rerun determinism") {
    TempDir dir;
    EclOptions opt;
    opt.dim = 16;
    opt.k = 4;
    opt.layers = 2;
    auto records = ecl_sweep({"sac", "none"}, {16, 64}, opt);
    REQUIRE(records.size() == 4);
    emit_report(records, dir.path / "r1");
    emit_report(ecl_sweep({"sac", "none"}, {16, 64}, opt), dir.path / "r2");

    auto csv = slurp(dir.path / "r1" / "ecl.csv");
    CHECK(csv.rfind("mixer,L,layers,perturb_idx,changed,runtime_ms\n", 0) == 0);

    // re-parse the changed column and compare with the in-memory counts
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    std::size_t row = 0;
    while (std::getline(is, line)) {
        std::istringstream cells(line);
        std::string cell;
        for (int c = 0; c < 5; ++c) std::getline(cells, cell, ',');
        CHECK(std::stoul(cell) == records[row].changed);
        ++row;
    }
    CHECK(row == records.size());

    auto diffs = slurp(dir.path / "r1" / "diffs_sac_16.csv");
    CHECK(diffs.rfind("instance_index,l2_diff\n", 0) == 0);

    // bitwise-identical reruns for the diffs files (ecl.csv carries wall time)
    for (const char* name : {"diffs_sac_16.csv", "diffs_sac_64.csv", "diffs_none_16.csv",
                             "diffs_none_64.csv"}) {
        CHECK(slurp(dir.path / "r1" / name) == slurp(dir.path / "r2" / name));
    }
}
