#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "oscdom/config.hpp"
#include "oscdom/corpus.hpp"
#include "oscdom/suites.hpp"

using namespace oscdom;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Byte-compare two directories file by file.
bool directories_identical(const std::filesystem::path& a, const std::filesystem::path& b) {
    std::vector<std::filesystem::path> rel;
    for (const auto& e : std::filesystem::recursive_directory_iterator(a))
        if (e.is_regular_file()) rel.push_back(std::filesystem::relative(e.path(), a));
    std::sort(rel.begin(), rel.end());
    std::vector<std::filesystem::path> rel_b;
    for (const auto& e : std::filesystem::recursive_directory_iterator(b))
        if (e.is_regular_file()) rel_b.push_back(std::filesystem::relative(e.path(), b));
    std::sort(rel_b.begin(), rel_b.end());
    if (rel != rel_b) return false;
    for (const auto& r : rel)
        if (slurp(a / r) != slurp(b / r)) return false;
    return true;
}

}  // namespace

TEST_CASE("toml subset parser") {
    std::stringstream in(R"(
# oscdom experiment
operator = "hilbert"
n = 1
grid = 2048
seed = 7
out = "results"   # inline comment

[engine]
rings = 3
lambda = 0.0625

[probe]
radii = "10, 20, 40"
)");
    const ExperimentConfig cfg = config_from_map(parse_toml_subset(in));
    CHECK(cfg.operator_label == "hilbert");
    CHECK(cfg.dim == 1);
    CHECK(cfg.grid_n == 2048);
    CHECK(cfg.seed == 7);
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.engine.rings == 3);
    CHECK(cfg.engine.lambda == Catch::Approx(0.0625));
    REQUIRE(cfg.probe.radii.size() == 3);
    CHECK(cfg.probe.radii[1] == Catch::Approx(20.0));
}

TEST_CASE("toml subset parser rejects malformed input") {
    {
        std::stringstream in("[engine\nrings = 2\n");
        CHECK_THROWS_AS(parse_toml_subset(in), ConfigError);
    }
    {
        std::stringstream in("just a line\n");
        CHECK_THROWS_AS(parse_toml_subset(in), ConfigError);
    }
    {
        std::stringstream in("grid = twelve\n");
        CHECK_THROWS_AS(config_from_map(parse_toml_subset(in)), ConfigError);
    }
    {
        std::stringstream in("n = 3\n");
        CHECK_THROWS_AS(config_from_map(parse_toml_subset(in)), ConfigError);
    }
}

TEST_CASE("corpus: 12 members, compact support, deterministic sampling") {
    const auto members = corpus_1d(42);
    REQUIRE(members.size() == 12);
    for (const auto& m : members) {
        const Grid g(Cube::interval(-4.0, 4.0), 512);
        const GridFunction f = sample_member(m, g);
        for (std::int64_t i = 0; i < g.total_cells(); ++i) {
            if (f.at(i) != 0.0)
                REQUIRE(std::fabs(g.midpoint(0, i)) <= m.support_radius + 1e-12);
        }
    }
    // same seed, same samples
    const auto again = corpus_1d(42);
    const Grid g(Cube::interval(-4.0, 4.0), 256);
    for (std::size_t k = 0; k < members.size(); ++k) {
        const GridFunction a = sample_member(members[k], g);
        const GridFunction b = sample_member(again[k], g);
        CHECK(a.values == b.values);
    }
}

TEST_CASE("mr layout keeps every ring dilation inside the box") {
    EngineConfig cfg;
    for (std::int64_t n : {1024, 4096}) {
        const MrLayout lay = mr_layout(plateau_member(), n, cfg);
        CHECK(lay.grid.cells_per_axis == n);
        const CellRange s_range = lay.grid.snap(lay.S);
        CHECK((s_range.extent(0) & (s_range.extent(0) - 1)) == 0);  // power of two
        for (const Cube& q : detail::ring_partition(lay.S, cfg.rings == 0 ? 2 : cfg.rings))
            CHECK_NOTHROW(lay.grid.snap(dilate(q, 5.0)));
    }
    CHECK_THROWS_AS(mr_layout(plateau_member(), 64, cfg), DomainTooSmall);
}

TEST_CASE("suite runs are byte-identical for a fixed seed") {
    const auto tmp = std::filesystem::temp_directory_path() / "oscdom_determinism";
    std::filesystem::remove_all(tmp);
    for (const char* leg : {"a", "b"}) {
        ExperimentConfig cfg;
        cfg.seed = 1234;
        cfg.out_dir = (tmp / leg).string();
        run_suite("kernel-audit", cfg);
    }
    CHECK(directories_identical(tmp / "a", tmp / "b"));
    std::filesystem::remove_all(tmp);
}

TEST_CASE("suite summaries are written and reportable") {
    const auto tmp = std::filesystem::temp_directory_path() / "oscdom_report_test";
    std::filesystem::remove_all(tmp);
    ExperimentConfig cfg;
    cfg.out_dir = tmp.string();
    const SuiteResult res = run_suite("kernel-audit", cfg);
    CHECK(res.pass());
    CHECK(std::filesystem::exists(tmp / "kernel_audit.csv"));
    CHECK(std::filesystem::exists(tmp / "kernel-audit_summary.json"));
    const std::string printed = report_directory(tmp.string());
    CHECK(printed.find("kernel-audit") != std::string::npos);
    CHECK(printed.find("[PASS]") != std::string::npos);
    std::filesystem::remove_all(tmp);

    CHECK_THROWS_AS(run_suite("no-such-suite", cfg), ConfigError);
}

TEST_CASE("plot data emission shapes") {
    EngineConfig ecfg;
    const CorpusMember m = plateau_member();
    const MrLayout lay = mr_layout(m, 1024, ecfg);
    const GridFunction f = sample_member(m, lay.grid);
    const OperatorSpec T = make_operator("hilbert");
    const GlobalFamily G = assemble_global(f, T, ecfg, lay.S);
    const DominationReport rep = domination_report(T, f, G, BoundKind::oscillation, "");

    const auto tmp = std::filesystem::temp_directory_path() / "oscdom_plot_test";
    std::filesystem::remove_all(tmp);
    emit_plot_data(rep, tmp.string(), "unit");

    std::ifstream pointwise(tmp / "unit_pointwise.csv");
    std::string line;
    std::int64_t rows = 0;
    while (std::getline(pointwise, line)) ++rows;
    CHECK(rows == lay.grid.total_cells() + 1);  // header + one row per cell

    std::ifstream hist(tmp / "unit_ratio_hist.csv");
    std::int64_t total = 0, valid = -1;
    std::getline(hist, line);  // header
    while (std::getline(hist, line)) {
        const auto comma = line.find(',');
        const std::string key = line.substr(0, comma);
        const long long val = std::stoll(line.substr(comma + 1));
        if (key == "valid")
            valid = val;
        else
            total += val;
    }
    CHECK(total == valid);
    std::filesystem::remove_all(tmp);
}
