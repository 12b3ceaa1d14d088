#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dopoqb/experiments.hpp"

using namespace dopoqb;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

ExperimentConfig tiny_config() {
    ExperimentConfig cfg;
    cfg.dopo.n_s = 8;
    cfg.dopo.n_p = 3;
    cfg.dopo.f_p = 1.0;
    cfg.t_end = 2.0;
    cfg.sample_dt = 0.25;
    cfg.t0 = 1.0;
    cfg.discharge.n_s = 8;
    cfg.discharge_t_end = 0.4;
    cfg.discharge_sample_dt = 0.01;
    return cfg;
}

fs::path fresh_dir(const std::string& leaf) {
    const fs::path dir = fs::temp_directory_path() / "dopoqb_tests" / leaf;
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("custom charge run writes the documented artifacts", "[experiments]") {
    const auto cfg = tiny_config();
    const fs::path dir = fresh_dir("custom");
    const ExperimentResult res = run_experiment("custom", cfg, dir);
    REQUIRE(fs::exists(dir / "custom.csv"));
    REQUIRE(fs::exists(dir / "summary"));
    REQUIRE(fs::exists(dir / "manifest"));

    const std::string csv = slurp(dir / "custom.csv");
    REQUIRE(csv.rfind("t,W,W_c,W_i,P,n_s,n_p,re_alpha_s,im_alpha_s\n", 0) == 0);
    REQUIRE(res.summary.value_of("experiment") == "custom");
    REQUIRE(res.summary.passed("trace_drift"));
    REQUIRE(res.summary.passed("min_eigenvalue"));
    REQUIRE(res.summary.passed("ergotropy_additivity"));

    // the manifest echoes a parseable, fully resolved config
    const ExperimentConfig echoed = parse_config_string(slurp(dir / "manifest"));
    REQUIRE(echoed.dopo.n_s == cfg.dopo.n_s);
    REQUIRE(echoed.t_end == cfg.t_end);
}

TEST_CASE("undriven custom run emits all-zero ergotropy columns", "[experiments]") {
    auto cfg = tiny_config();
    cfg.dopo.f_p = 0.0;
    const fs::path dir = fresh_dir("custom_dark");
    run_experiment("custom", cfg, dir);
    std::ifstream in(dir / "custom.csv");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string cell;
        std::getline(ss, cell, ',');  // t
        std::getline(ss, cell, ',');  // W
        REQUIRE(std::abs(std::stod(cell)) < 1e-12);
    }
}

TEST_CASE("re-running a fixed config reproduces the artifacts byte for byte",
          "[experiments]") {
    const auto cfg = tiny_config();
    const fs::path a = fresh_dir("repro_a");
    const fs::path b = fresh_dir("repro_b");
    run_experiment("custom", cfg, a);
    run_experiment("custom", cfg, b);
    REQUIRE(slurp(a / "custom.csv") == slurp(b / "custom.csv"));
    REQUIRE(slurp(a / "summary") == slurp(b / "summary"));
    REQUIRE(slurp(a / "manifest") == slurp(b / "manifest"));
}

TEST_CASE("parallel and serial sweeps produce identical files", "[experiments]") {
    auto cfg = tiny_config();
    const fs::path serial = fresh_dir("sweep_serial");
    const fs::path parallel = fresh_dir("sweep_parallel");
    cfg.threads = 1;
    run_experiment("fig8", cfg, serial);
    cfg.threads = 3;
    run_experiment("fig8", cfg, parallel);
    for (const auto& entry : fs::directory_iterator(serial)) {
        const auto name = entry.path().filename();
        if (name == "manifest") continue;  // echoes the differing thread count
        INFO(name);
        REQUIRE(slurp(entry.path()) == slurp(parallel / name));
    }
}

TEST_CASE("discharge mode produces the discharge header", "[experiments]") {
    auto cfg = tiny_config();
    cfg.mode = "discharge";
    const fs::path dir = fresh_dir("custom_discharge");
    run_experiment("custom", cfg, dir);
    REQUIRE(slurp(dir / "custom.csv").rfind("t,kappa_s,kappa_a\n", 0) == 0);
}

TEST_CASE("unknown experiments are config errors", "[experiments]") {
    REQUIRE_THROWS_AS(run_experiment("fig9", tiny_config(), fresh_dir("unknown")),
                      ConfigError);
}

TEST_CASE("the experiment catalog lists every named experiment", "[experiments]") {
    const auto& cat = experiment_catalog();
    REQUIRE(cat.size() == 9);
    for (const std::string name :
         {"fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "custom"}) {
        const bool found = std::any_of(cat.begin(), cat.end(),
                                       [&](const ExperimentInfo& e) { return e.name == name; });
        INFO(name);
        REQUIRE(found);
    }
}

TEST_CASE("parallel_map preserves order and propagates failures", "[experiments]") {
    const std::vector<int> items = {1, 2, 3, 4, 5, 6, 7};
    const auto doubled =
        detail::parallel_map(4, items, [](int v) { return 2 * v; });
    for (std::size_t i = 0; i < items.size(); ++i) REQUIRE(doubled[i] == 2 * items[i]);
    REQUIRE_THROWS_AS(detail::parallel_map(3, items,
                                           [](int v) -> int {
                                               if (v == 5) throw std::runtime_error("boom");
                                               return v;
                                           }),
                      std::runtime_error);
}
