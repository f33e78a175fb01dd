#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "parampkit/csv.hpp"
#include "parampkit/field.hpp"
#include "parampkit/fit.hpp"
#include "parampkit/noise.hpp"

namespace parampkit {

// Deterministic Gaussian stream (Box-Muller over the raw mt19937_64 output),
// so synthetic fixtures are reproducible byte-for-byte across platforms.
class GaussianStream {
public:
    explicit GaussianStream(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}
    double next();

private:
    double uniform();
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

struct CircleSynthParams {
    double f_r_ghz = 8.3;
    double q_i = 1e5;
    double q_c = 1e3;
    double span_linewidths = 8.0;
    int points = 401;
    double noise = 0.0;             // additive on Re/Im
    double env_scale = 1.0;         // environment transmission a e^{i phi}
    double env_phase_rad = 0.0;
};
CsvTable synth_circle(const CircleSynthParams& p, uint64_t seed);

struct LorentzianSynthParams {
    double g0_db = 20.0;
    double bw_mhz = 2.25;
    double center_ghz = 8.39;
    double span_mhz = 40.0;
    int points = 401;
    double noise = 0.0;             // multiplicative on linear power
};
CsvTable synth_lorentzian(const LorentzianSynthParams& p, uint64_t seed);

struct FluorescenceSynthParams {
    double f_ge_ghz = 8.287;
    double kappa_mhz = 0.828;
    double gamma_mhz = 0.155;
    double attenuation_db = -89.3;
    std::vector<double> p_rt_dbm = {-40, -38, -36, -34, -32, -30, -28, -26};
    double span_mhz = 12.0;
    int points = 201;
    double noise = 0.0;
};
struct FluorescenceSynthResult {
    std::vector<CsvTable> traces;    // one per drive power
    std::vector<double> p_rt_dbm;
    std::vector<double> rabi_mhz;    // generator truth
};
FluorescenceSynthResult synth_fluorescence(const FluorescenceSynthParams& p, uint64_t seed);

// Rabi frequency (MHz) implied by a room-temperature power and line attenuation.
double rabi_from_power_mhz(double p_rt_dbm, double attenuation_db, double f_ge_ghz,
                           double gamma_total_mhz);

struct PsdSynthParams {
    double floor_temp_k = 4.0;
    double chain_gain_db = 60.0;
    double pilot_power_dbm = -120.0;  // at the device input
    double pilot_freq_ghz = 8.193;
    int bins = 801;
    double bin_width_hz = 1e3;
    double noise_db = 0.0;            // additive on the dB floor
};
CsvTable synth_psd(const PsdSynthParams& p, uint64_t seed);

struct FieldSweepSynthParams {
    double zero_field_frequency_ghz = 8.31;
    double critical_field_t = 3.0;
    double b_max_t = 1.0;
    int points = 21;
    double noise_rel = 0.0;           // multiplicative on frequency
};
CsvTable synth_field_sweep(const FieldSweepSynthParams& p, uint64_t seed);

struct CompensationSynthParams {
    std::vector<double> b_par_t = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    double vertex_slope_mt_per_t = 1.0;
    double curvature_rad_per_mt2 = -0.05;
    double b_perp_span_mt = 4.0;
    int points_per_sweep = 21;
    double noise_rad = 0.0;
};
CsvTable synth_compensation(const CompensationSynthParams& p, uint64_t seed);

}  // namespace parampkit
