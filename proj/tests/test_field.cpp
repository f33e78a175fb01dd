#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parampkit/field.hpp"
#include "parampkit/synth.hpp"

using namespace parampkit;

namespace {

FieldModel paper_model() {
    FieldModel m;
    m.critical_field_t = 3.0;
    m.zero_field_gap_uev = 362.0;
    m.zero_field_frequency_ghz = 8.31;
    return m;
}

}  // namespace

TEST_CASE("gap suppression at zero field and at B_c/3") {
    const FieldModel m = paper_model();
    CHECK(gap_vs_field_uev(m, 0.0) == doctest::Approx(362.0));
    // b^2 = 1/9: factor sqrt(0.8/1.111...) = 0.894427
    CHECK(gap_vs_field_uev(m, 1.0) == doctest::Approx(362.0 * 0.8944271910).epsilon(1e-9));
    CHECK_THROWS_AS(gap_vs_field_uev(m, 3.0), std::domain_error);
    CHECK_THROWS_AS(gap_vs_field_uev(m, -3.5), std::domain_error);
}

TEST_CASE("frequency shift at 1 T") {
    const FieldModel m = paper_model();
    CHECK(freq_vs_field_ghz(m, 0.0) == doctest::Approx(8.31));
    CHECK(freq_vs_field_ghz(m, 1.0) == doctest::Approx(7.859).epsilon(1e-3));
}

TEST_CASE("gap is monotone decreasing in |B|") {
    const FieldModel m = paper_model();
    double prev = gap_vs_field_uev(m, 0.0);
    for (int i = 1; i <= 100; ++i) {
        const double b = 2.9 * i / 100.0;
        const double g = gap_vs_field_uev(m, b);
        CHECK(g < prev);
        prev = g;
    }
}

TEST_CASE("frequency-gap identity holds pointwise") {
    const FieldModel m = paper_model();
    for (int i = 0; i <= 50; ++i) {
        const double b = 2.8 * i / 50.0;
        const double lhs = std::pow(freq_vs_field_ghz(m, b) / m.zero_field_frequency_ghz, 2);
        const double rhs = gap_vs_field_uev(m, b) / m.zero_field_gap_uev;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

TEST_CASE("critical-field fit round-trips noiseless data") {
    FieldSweepSynthParams p;
    p.zero_field_frequency_ghz = 8.31;
    p.critical_field_t = 3.0;
    p.points = 21;
    const CsvTable data = synth_field_sweep(p, 1);
    std::vector<std::pair<double, double>> pairs;
    const auto b = data.column("b_par_T");
    const auto f = data.column("freq_GHz");
    for (size_t i = 0; i < b.size(); ++i) pairs.emplace_back(b[i], f[i]);

    const CriticalFieldFit fit = fit_critical_field(pairs);
    CHECK(fit.critical_field_t == doctest::Approx(3.0).epsilon(1e-6));
    CHECK(fit.zero_field_frequency_ghz == doctest::Approx(8.31).epsilon(1e-6));
}

TEST_CASE("critical-field fit tolerates 0.1% noise across seeds") {
    int ok = 0;
    for (uint64_t seed = 1; seed <= 100; ++seed) {
        FieldSweepSynthParams p;
        p.noise_rel = 1e-3;
        const CsvTable data = synth_field_sweep(p, seed);
        std::vector<std::pair<double, double>> pairs;
        const auto b = data.column("b_par_T");
        const auto f = data.column("freq_GHz");
        for (size_t i = 0; i < b.size(); ++i) pairs.emplace_back(b[i], f[i]);
        const CriticalFieldFit fit = fit_critical_field(pairs);
        if (std::abs(fit.critical_field_t - 3.0) / 3.0 < 0.05) ++ok;
    }
    CHECK(ok == 100);
}

TEST_CASE("critical-field fit is scale-equivariant") {
    FieldSweepSynthParams p;
    const CsvTable data = synth_field_sweep(p, 7);
    std::vector<std::pair<double, double>> pairs, scaled;
    const auto b = data.column("b_par_T");
    const auto f = data.column("freq_GHz");
    for (size_t i = 0; i < b.size(); ++i) {
        pairs.emplace_back(b[i], f[i]);
        scaled.emplace_back(b[i], 2.5 * f[i]);
    }
    const CriticalFieldFit base = fit_critical_field(pairs);
    const CriticalFieldFit times = fit_critical_field(scaled);
    CHECK(times.critical_field_t == doctest::Approx(base.critical_field_t).epsilon(1e-8));
    CHECK(times.zero_field_frequency_ghz ==
          doctest::Approx(2.5 * base.zero_field_frequency_ghz).epsilon(1e-8));
}

TEST_CASE("underdetermined field fit is rejected") {
    CHECK_THROWS_AS(fit_critical_field({{0.0, 8.31}}), std::invalid_argument);
}

TEST_CASE("compensation analysis recovers a 1 mT/T vertex slope") {
    CompensationSynthParams p;
    p.vertex_slope_mt_per_t = 1.0;
    const CsvTable data = synth_compensation(p, 3);

    std::vector<CompensationSweep> sweeps;
    const auto bp = data.column("b_par_T");
    const auto bperp = data.column("b_perp_mT");
    const auto ph = data.column("dphase_rad");
    for (size_t i = 0; i < bp.size(); ++i) {
        if (sweeps.empty() || sweeps.back().b_par_t != bp[i]) {
            sweeps.push_back({bp[i], {}, {}});
        }
        sweeps.back().b_perp_mt.push_back(bperp[i]);
        sweeps.back().dphase_rad.push_back(ph[i]);
    }
    const CompensationResult r = compensation_analysis(sweeps);
    CHECK(r.slope_mt_per_t == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.misalignment_deg == doctest::Approx(0.0573).epsilon(1e-3));
    CHECK(r.misalignment_deg < 1.0);
    CHECK(r.excluded == 0);

    // Vertex invariance under a constant phase offset.
    for (auto& s : sweeps) {
        for (auto& v : s.dphase_rad) v += 0.7;
    }
    const CompensationResult shifted = compensation_analysis(sweeps);
    CHECK(shifted.slope_mt_per_t == doctest::Approx(r.slope_mt_per_t).epsilon(1e-9));
}

TEST_CASE("three-point parabola vertex is exact") {
    CompensationSweep s;
    s.b_par_t = 0.5;
    s.b_perp_mt = {-1.0, 0.0, 1.0};
    const double vertex = 0.35;
    for (double x : s.b_perp_mt) s.dphase_rad.push_back(-0.2 * (x - vertex) * (x - vertex));
    CompensationSweep other = s;
    other.b_par_t = 1.0;
    other.dphase_rad.clear();
    const double vertex2 = 0.7;
    for (double x : other.b_perp_mt) other.dphase_rad.push_back(-0.2 * (x - vertex2) * (x - vertex2));

    const CompensationResult r = compensation_analysis({s, other});
    CHECK(r.vertices[0].vertex_mt == doctest::Approx(vertex).epsilon(1e-10));
    CHECK(r.vertices[1].vertex_mt == doctest::Approx(vertex2).epsilon(1e-10));
}

TEST_CASE("degenerate and upward-opening sweeps are flagged") {
    CompensationSweep flat;
    flat.b_par_t = 0.0;
    flat.b_perp_mt = {-1.0, 0.0, 1.0, 2.0};
    flat.dphase_rad = {0.0, 0.0, 0.0, 0.0};

    CompensationSweep upward;
    upward.b_par_t = 0.5;
    upward.b_perp_mt = {-1.0, 0.0, 1.0, 2.0};
    for (double x : upward.b_perp_mt) upward.dphase_rad.push_back(0.3 * x * x);

    CompensationSweep good1, good2;
    good1.b_par_t = 0.2;
    good2.b_par_t = 0.8;
    good1.b_perp_mt = good2.b_perp_mt = {-2.0, -1.0, 0.0, 1.0, 2.0};
    for (double x : good1.b_perp_mt) good1.dphase_rad.push_back(-0.1 * (x - 0.2) * (x - 0.2));
    for (double x : good2.b_perp_mt) good2.dphase_rad.push_back(-0.1 * (x - 0.8) * (x - 0.8));

    const CompensationResult r = compensation_analysis({flat, upward, good1, good2});
    CHECK(r.excluded == 2);
    CHECK(r.vertices[0].flag == 2);
    CHECK(r.vertices[1].flag == 1);
    CHECK(r.slope_mt_per_t == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("pumped linewidth narrowing") {
    CHECK(pumped_linewidth_narrowing(18.0) == doctest::Approx(7.943).epsilon(1e-3));
    CHECK(pumped_linewidth_narrowing(0.0) == doctest::Approx(1.0));
    CHECK(pumped_linewidth_narrowing(20.0) == doctest::Approx(10.0));
    CHECK_THROWS_AS(pumped_linewidth_narrowing(-1.0), std::invalid_argument);
}

TEST_CASE("kappa(B) table interpolates linearly and clamps") {
    const KappaFieldTable table({{0.0, 57.7}, {0.5, 50.0}, {1.0, 40.0}});
    CHECK(table.kappa_mhz_at(0.0) == doctest::Approx(57.7));
    CHECK(table.kappa_mhz_at(0.25) == doctest::Approx(53.85));
    CHECK(table.kappa_mhz_at(0.75) == doctest::Approx(45.0));
    CHECK(table.kappa_mhz_at(2.0) == doctest::Approx(40.0));
    CHECK(table.kappa_mhz_at(-1.0) == doctest::Approx(57.7));
}
