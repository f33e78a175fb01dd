#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <string>

#include "parampkit/config.hpp"
#include "parampkit/material.hpp"

using namespace parampkit;

namespace {

const std::string kFixtures = PARAMPKIT_FIXTURE_DIR;

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& contents) {
        path = std::string("/tmp/parampkit_cfg_") + std::to_string(counter++) + ".cfg";
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
    static int counter;
};
int TempFile::counter = 0;

}  // namespace


TEST_CASE("paper device config parses and passes the design check") {
    const DeviceConfig cfg = parse_config(kFixtures + "/paper_device.cfg");
    REQUIRE(cfg.film.has_value());
    REQUIRE(cfg.dimer_spec.has_value());
    REQUIRE(cfg.chain.has_value());
    REQUIRE(cfg.field.has_value());
    CHECK_FALSE(cfg.kappa_vs_field.empty());

    CHECK(cfg.dimer_spec->hopping_mhz == doctest::Approx(99.0));
    CHECK(cfg.dimer_spec->left.strip.inductance_nh() == doctest::Approx(4.2));
    CHECK(design_check(*cfg.dimer_spec).pass());
    CHECK(cfg.kappa_vs_field.kappa_mhz_at(0.25) == doctest::Approx(53.85));
}

TEST_CASE("no-pad config parses but fails the hopping rule") {
    const DeviceConfig cfg = parse_config(kFixtures + "/no_pad_device.cfg");
    const DesignReport r = design_check(cfg.require_dimer());
    CHECK_FALSE(r.pass());
    bool hopping_flag = false;
    for (const auto& rule : r.rules) {
        if (rule.name == "hopping-vs-coupling" && !rule.ok) hopping_flag = true;
    }
    CHECK(hopping_flag);  // 341 > 2 x 107.5
}

TEST_CASE("empty config is an error") {
    TempFile f("");
    CHECK_THROWS_AS(parse_config(f.path), ConfigError);
    TempFile comments("# nothing here\n\n; still nothing\n");
    CHECK_THROWS_AS(parse_config(comments.path), ConfigError);
}

TEST_CASE("unknown keys are rejected with line context") {
    TempFile f("[film]\nresistivity = 830\nthickness = 40\nbogus_key = 1\n");
    try {
        parse_config(f.path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 4);
        CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
}

TEST_CASE("unknown sections are rejected") {
    TempFile f("[turbo]\nx = 1\n");
    CHECK_THROWS_WITH_AS(parse_config(f.path), doctest::Contains("unknown section"),
                         std::runtime_error);
}

TEST_CASE("malformed lines carry the line number") {
    TempFile f("[film]\nresistivity 830\n");
    try {
        parse_config(f.path);
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.line() == 2);
    }
}

TEST_CASE("duplicate keys are rejected") {
    TempFile f("[film]\nresistivity = 830\nresistivity = 900\nthickness = 40\n");
    CHECK_THROWS_WITH_AS(parse_config(f.path), doctest::Contains("duplicate"), ConfigError);
}

TEST_CASE("non-numeric values carry key context") {
    TempFile f("[film]\nresistivity = soup\nthickness = 40\n");
    CHECK_THROWS_WITH_AS(parse_config(f.path), doctest::Contains("resistivity"), ConfigError);
}

TEST_CASE("invariants are enforced at parse time") {
    TempFile f("[film]\nresistivity = -5\nthickness = 40\n");
    CHECK_THROWS_AS(parse_config(f.path), std::invalid_argument);
}

TEST_CASE("dimer section requires both resonators") {
    TempFile f(
        "[strip]\nwidth = 0.2\nlength = 7\nsheet_inductance = 0.12\ncritical_current = 14.4\n"
        "[resonator.left]\nfrequency = 8.29\npad_inductance = 1\nkerr = -2\n"
        "[dimer]\nhopping = 99\nexternal_coupling = 57.7\n"
        "internal_loss_plus = 5\ninternal_loss_minus = 6.7\n");
    CHECK_THROWS_WITH_AS(parse_config(f.path), doctest::Contains("resonator"),
                         std::runtime_error);
}

TEST_CASE("missing sections surface through the accessors") {
    TempFile f("[film]\nresistivity = 830\nthickness = 40\n");
    const DeviceConfig cfg = parse_config(f.path);
    CHECK_THROWS_WITH_AS(cfg.require_dimer(), doctest::Contains("[dimer]"), std::runtime_error);
    CHECK_THROWS_WITH_AS(cfg.require_chain(), doctest::Contains("[chain]"), std::runtime_error);
    CHECK_NOTHROW(cfg.require_film());
}
