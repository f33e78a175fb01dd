#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "parampkit/noise.hpp"
#include "parampkit/synth.hpp"
#include "parampkit/units.hpp"

using namespace parampkit;

namespace {

PSDTrace trace_from(const CsvTable& t, double pilot_dbm, double pilot_ghz) {
    PSDTrace trace;
    trace.offset_hz = t.column("offset_Hz");
    trace.psd_dbm_hz = t.column("psd_dBm_per_Hz");
    trace.pilot_power_dbm = pilot_dbm;
    trace.pilot_freq_ghz = pilot_ghz;
    return trace;
}

}  // namespace

TEST_CASE("synthetic PSD round-trips the injected floor temperature") {
    PsdSynthParams p;
    p.floor_temp_k = 4.0;
    p.chain_gain_db = 62.0;
    const auto result =
        psd_to_input_temperature(trace_from(synth_psd(p, 1), p.pilot_power_dbm, p.pilot_freq_ghz));
    CHECK(result.floor_temp_k == doctest::Approx(4.0).epsilon(1e-10));
    CHECK(result.chain_gain_db == doctest::Approx(62.0).epsilon(1e-10));
}

TEST_CASE("doubling the linear floor doubles the temperature") {
    PsdSynthParams p;
    p.floor_temp_k = 2.0;
    const auto base =
        psd_to_input_temperature(trace_from(synth_psd(p, 2), p.pilot_power_dbm, p.pilot_freq_ghz));
    p.floor_temp_k = 4.0;
    const auto twice =
        psd_to_input_temperature(trace_from(synth_psd(p, 2), p.pilot_power_dbm, p.pilot_freq_ghz));
    CHECK(twice.floor_temp_k == doctest::Approx(2.0 * base.floor_temp_k).epsilon(1e-10));
}

TEST_CASE("missing pilot raises a calibration error") {
    PsdSynthParams p;
    p.pilot_power_dbm = -220.0;  // buried under the floor
    CHECK_THROWS_WITH_AS(
        psd_to_input_temperature(trace_from(synth_psd(p, 3), p.pilot_power_dbm, p.pilot_freq_ghz)),
        doctest::Contains("pilot"), std::runtime_error);
}

TEST_CASE("pilot bins are excluded from the floor and the spectrum") {
    PsdSynthParams p;
    p.bins = 101;
    const auto result =
        psd_to_input_temperature(trace_from(synth_psd(p, 4), p.pilot_power_dbm, p.pilot_freq_ghz));
    CHECK(result.pilot_bin == 50);
    CHECK(result.offset_hz.size() == 101 - 7);
    for (double t : result.temp_k) CHECK(t == doctest::Approx(p.floor_temp_k).epsilon(1e-9));
}

TEST_CASE("photon-temperature conversion anchors") {
    CHECK(input_referred_photons(4.0, 8.193) == doctest::Approx(10.17).epsilon(1e-3));
    CHECK(input_referred_photons(0.393, 8.193) == doctest::Approx(1.0).epsilon(0.01));
    CHECK(input_referred_photons(0.0, 8.193) == doctest::Approx(0.0));
    CHECK(temperature_from_photons(1.0, 8.193) == doctest::Approx(0.3932).epsilon(1e-3));
    // Exact round trip.
    for (double t : {0.1, 0.4, 4.0, 77.0}) {
        CHECK(temperature_from_photons(input_referred_photons(t, 8.469), 8.469) ==
              doctest::Approx(t).epsilon(1e-14));
    }
}

TEST_CASE("quantum limit decomposes into vacuum and added halves") {
    const QuantumLimit ql = quantum_limit(8.193);
    CHECK(ql.vacuum_photons == doctest::Approx(0.5));
    CHECK(ql.added_photons == doctest::Approx(0.5));
    CHECK(ql.vacuum_photons + ql.added_photons == doctest::Approx(ql.total_photons));
    CHECK(ql.temp_k == doctest::Approx(0.3932).epsilon(1e-3));
}

TEST_CASE("delta SNR from floor temperatures") {
    CHECK(delta_snr_db(0.4, 4.0) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK(delta_snr_db(1.7, 1.7) == doctest::Approx(0.0));
    CHECK_THROWS_AS(delta_snr_db(0.0, 4.0), std::invalid_argument);
}

TEST_CASE("attenuator referral in the lossless limit") {
    NoiseChain chain;
    chain.insertion_loss = 1.0;
    chain.stage_temp_k = 0.015;
    chain.hemt_temp_k = 4.0;
    chain.paramp_gain_db = 20.0;
    chain.paramp_noise_k = 0.2;
    chain.source_noise_k = 0.015;
    const ReferredNoise r = refer_through_attenuator(chain);
    CHECK(r.attenuator_term_k == doctest::Approx(0.0));
    CHECK(r.t_in_k == doctest::Approx(0.015 + 0.2 + 4.0 / 100.0).epsilon(1e-12));
}

TEST_CASE("referral is monotone in insertion loss and paramp gain") {
    NoiseChain chain;
    chain.stage_temp_k = 0.015;
    chain.hemt_temp_k = 4.0;
    chain.paramp_noise_k = 0.2;
    chain.source_noise_k = 0.015;
    chain.paramp_gain_db = 20.0;

    double prev = 1e9;
    for (double lam : {0.2, 0.4, 0.6, 0.8, 1.0}) {
        chain.insertion_loss = lam;
        const double t = refer_through_attenuator(chain).t_in_k;
        CHECK(t < prev);
        prev = t;
    }
    chain.insertion_loss = 0.7;
    prev = 1e9;
    for (double g : {10.0, 15.0, 20.0, 30.0, 40.0}) {
        chain.paramp_gain_db = g;
        const double t = refer_through_attenuator(chain).t_in_k;
        CHECK(t < prev);
        prev = t;
    }
    // G0 -> infinity removes the HEMT contribution.
    chain.paramp_gain_db = 200.0;
    CHECK(refer_through_attenuator(chain).hemt_term_k < 1e-12);
}

TEST_CASE("solved insertion loss reproduces the secondary-setup estimate") {
    NoiseChain chain;
    chain.stage_temp_k = 0.015;
    chain.source_noise_k = 0.015;
    chain.hemt_temp_k = 4.0;
    chain.paramp_gain_db = 20.0;
    chain.paramp_noise_k = 0.5 * quantum_limit(8.469).temp_k;  // half photon added

    // Measured input-referred floor at the quantum limit (one photon).
    const double t_in = quantum_limit(8.469).temp_k;
    const double lambda_db = solve_insertion_loss_db(chain, t_in);
    CHECK(lambda_db == doctest::Approx(1.97).epsilon(0.01));
    CHECK(std::abs(lambda_db - 1.8) <= 0.2);

    // Feeding the solved lambda back reproduces T_in.
    chain.insertion_loss = db_to_linear(-lambda_db);
    CHECK(refer_through_attenuator(chain).t_in_k == doctest::Approx(t_in).epsilon(1e-10));
}

TEST_CASE("inconsistent chain rejects the solved loss") {
    NoiseChain chain;
    chain.stage_temp_k = 0.015;
    chain.source_noise_k = 0.015;
    chain.hemt_temp_k = 4.0;
    chain.paramp_gain_db = 20.0;
    chain.paramp_noise_k = 0.2;
    // Target colder than the unavoidable added noise: lambda would exceed 1.
    CHECK_THROWS_AS(solve_insertion_loss_db(chain, 0.05), std::runtime_error);
}

TEST_CASE("output-referred mode divides by the full chain gain") {
    NoiseChain chain;
    chain.insertion_loss = 0.5;
    chain.stage_temp_k = 0.015;
    chain.hemt_temp_k = 4.0;
    chain.hemt_gain_db = 40.0;
    chain.paramp_gain_db = 20.0;
    chain.paramp_noise_k = 0.2;
    chain.source_noise_k = 0.015;
    const double t_out = 4.2e6;
    const ReferredNoise r = refer_through_attenuator(chain, t_out);
    CHECK(r.t_in_k == doctest::Approx(t_out / (0.5 * 100.0 * 1e4)).epsilon(1e-12));
}
