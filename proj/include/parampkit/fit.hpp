#pragma once

#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "parampkit/leastsq.hpp"

namespace parampkit {

struct ReflectionTrace {
    std::vector<double> freqs_ghz;
    std::vector<std::complex<double>> s11;

    void validate() const;  // >= 7 finite samples
};

struct CircleFitResult {
    double f_r_ghz = 0.0;
    double q_loaded = 0.0;
    double q_c = 0.0;
    double q_i = 0.0;
    double sigma_f_r_ghz = 0.0;
    double sigma_q_loaded = 0.0;
    double sigma_q_c = 0.0;
    double sigma_q_i = 0.0;
    double residual_norm = 0.0;
    bool overcoupled = false;       // Q_i reported as a lower bound
    double q_i_lower_bound = 0.0;   // Q_i / fano_inflation
    double q_i_upper_bound = 0.0;   // Q_i * fano_inflation
};

// Algebraic circle pre-fit plus phase-vs-frequency refinement of a single-port
// reflection trace. fano_inflation is a user-supplied multiplicative bound on
// Q_i covering interference with a background path.
CircleFitResult circle_fit(const ReflectionTrace& trace, double fano_inflation = 1.0);

// Forward model used by the circle fit and the synthetic generator:
// S11 = env * (1 - (2 Ql/Qc) / (1 + 2i Ql (f/fr - 1))).
std::complex<double> reflection_model(double f_ghz, double f_r_ghz, double q_loaded, double q_c,
                                      std::complex<double> env = {1.0, 0.0});

struct LorentzianFitResult {
    double g0_db = 0.0;        // peak above zero-dB reference
    double bw_mhz = 0.0;       // FWHM of the linear-power Lorentzian
    double center_ghz = 0.0;
    double baseline_db = 0.0;
    double residual_norm = 0.0;
    Eigen::MatrixXd covariance;
};

// Least squares of a linear-power Lorentzian on (freq GHz, gain dB) samples.
LorentzianFitResult lorentzian_fit(const std::vector<double>& freqs_ghz,
                                   const std::vector<double>& gain_db);

struct FluorescenceModel {
    double qubit_freq_ghz = 0.0;
    double external_mhz = 0.0;   // kappa/2pi
    double internal_mhz = 0.0;   // gamma/2pi
    double rabi_mhz = 0.0;       // Omega_R/2pi

    double total_mhz() const { return external_mhz + internal_mhz; }
};

// Two-level reflection with drive detuning df_ghz = f_drive - f_ge:
// S11 = 1 - (2k/G) (1 + 2i dq/G) / (1 + (2 dq/G)^2 + 2 (Om/G)^2).
std::complex<double> fluorescence_s11(const FluorescenceModel& model, double df_ghz);

struct FluorescenceFitResult {
    double rabi_mhz = 0.0;
    double sigma_rabi_mhz = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

// One-parameter fit of |Omega_R| with (kappa, gamma, f_ge) held fixed,
// jointly on the real and imaginary parts of the trace.
FluorescenceFitResult fluorescence_fit(const ReflectionTrace& trace, double kappa_mhz,
                                       double gamma_mhz, double f_ge_ghz);

struct AttenuationFitResult {
    double attenuation_db = 0.0;   // negative for net loss
    double sigma_db = 0.0;
    double slope = 0.0;            // Omega_R^2 (rad^2/s^2) per watt
    double residual_norm = 0.0;
};

// Regression of Omega_R^2 against room-temperature power through the origin;
// the slope gives the line attenuation via Omega_R^2 = 2 Gamma A P / (h f_ge).
AttenuationFitResult rabi_attenuation_fit(
    const std::vector<std::pair<double, double>>& p_rt_dbm_rabi_mhz, double f_ge_ghz,
    double gamma_total_mhz);

struct TransmonSpec {
    std::optional<double> charging_mhz;    // E_C/2pi
    std::optional<double> josephson_ghz;   // E_J/2pi
    std::optional<double> f_ge_ghz;
    std::optional<double> anharmonicity_mhz;
};

struct TransmonResult {
    double charging_mhz = 0.0;
    double josephson_ghz = 0.0;
    double f_ge_ghz = 0.0;
    double ej_over_ec = 0.0;
    bool transmon_regime = true;                 // warn when E_J/E_C < 50
    std::optional<double> f_gf_half_ghz;         // given the anharmonicity
};

// Completes {E_C, E_J, f_ge} from exactly two of the three via
// f_ge = sqrt(8 E_C E_J) - E_C.
TransmonResult transmon_relations(const TransmonSpec& spec);

struct AttenuationPoint {
    double freq_ghz = 0.0;
    double attenuation_db = 0.0;
    double sigma_db = 1.0;
};

struct AttenuationLine {
    double intercept_db = 0.0;
    double slope_db_per_ghz = 0.0;
    Eigen::MatrixXd covariance;
    double fmin_ghz = 0.0;
    double fmax_ghz = 0.0;

    struct Prediction {
        double attenuation_db = 0.0;
        double sigma_db = 0.0;
        bool extrapolated = false;
    };
    Prediction predict(double f_ghz) const;
};

AttenuationLine attenuation_vs_frequency(const std::vector<AttenuationPoint>& points);

}  // namespace parampkit
