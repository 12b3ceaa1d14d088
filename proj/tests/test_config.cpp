#include <catch2/catch_amalgamated.hpp>

#include "dopoqb/config.hpp"

using namespace dopoqb;
using Catch::Approx;

TEST_CASE("defaults reproduce the reference parameter set", "[config]") {
    const ExperimentConfig c;
    REQUIRE(c.dopo.kappa == 0.5);
    REQUIRE(c.dopo.gamma_s == 1.0);
    REQUIRE(c.dopo.gamma_p == 16.0);
    REQUIRE(c.dopo.delta == 0.0);
    REQUIRE(c.dopo.f_p == 3.0);
    REQUIRE(c.dopo.n_s == 32);
    REQUIRE(c.dopo.n_p == 9);
    REQUIRE(c.discharge.omega_s == 1000.0);
    REQUIRE(c.discharge.omega_a == 1000.0);
    REQUIRE(c.discharge.gamma_a == 1.0);
    REQUIRE(c.rtol == 1e-8);
    REQUIRE(c.atol == 1e-10);
}

TEST_CASE("config parsing round-trips through its serialization", "[config]") {
    ExperimentConfig c;
    c.dopo.f_p = 2.5;
    c.dopo.n_s = 24;
    c.discharge.frame = Frame::lab;
    c.threads = 3;
    c.t_off = 35.0;
    c.mode = "switchoff";
    const ExperimentConfig back = parse_config_string(serialize_config(c));
    REQUIRE(back.dopo.f_p == 2.5);
    REQUIRE(back.dopo.n_s == 24);
    REQUIRE(back.discharge.frame == Frame::lab);
    REQUIRE(back.threads == 3);
    REQUIRE(back.t_off == 35.0);
    REQUIRE(back.mode == "switchoff");
    REQUIRE(serialize_config(back) == serialize_config(c));
}

TEST_CASE("comments and blank lines are ignored", "[config]") {
    const auto c = parse_config_string(
        "# leading comment\n"
        "\n"
        "[dopo]\n"
        "f_p = 1.5   # inline comment\n"
        "n_p = 7 ; another\n");
    REQUIRE(c.dopo.f_p == 1.5);
    REQUIRE(c.dopo.n_p == 7);
}

TEST_CASE("unknown keys and sections are hard errors", "[config]") {
    REQUIRE_THROWS_AS(parse_config_string("[dopo]\nkapa = 0.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_string("[dopo2]\nkappa = 0.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_string("kappa = 0.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_string("[dopo]\nkappa 0.5\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_string("[dopo]\nkappa = abc\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_string("[discharge]\nframe = rotating\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_string("[experiment]\nmode = replay\n"), ConfigError);
    REQUIRE_THROWS_AS(parse_config_string("[output]\nthreads = 0\n"), ConfigError);
}

TEST_CASE("physics lint flags out-of-regime parameters", "[config]") {
    REQUIRE(validate_config(ExperimentConfig{}).empty());

    ExperimentConfig low_trunc;
    low_trunc.dopo.n_s = 8;
    const auto warn1 = validate_config(low_trunc);
    REQUIRE(warn1.size() == 1);
    REQUIRE(warn1[0].find("n_s") != std::string::npos);

    ExperimentConfig hot;
    hot.dopo.f_p = 5.0;
    const auto warn2 = validate_config(hot);
    REQUIRE(warn2.size() == 1);
    REQUIRE(warn2[0].find("f_p") != std::string::npos);
}

TEST_CASE("hard config errors are rejected during validation", "[config]") {
    ExperimentConfig bad;
    bad.rtol = -1e-8;
    REQUIRE_THROWS_AS(validate_config(bad), ConfigError);
    ExperimentConfig bad2;
    bad2.decay_fit_start = 45.0;
    bad2.decay_fit_end = 41.0;
    REQUIRE_THROWS_AS(validate_config(bad2), ConfigError);
}
