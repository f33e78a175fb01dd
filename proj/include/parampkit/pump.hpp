#pragma once

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "parampkit/material.hpp"

namespace parampkit {

struct PumpDrive {
    double frequency_ghz = 0.0;
    double power_dbm = -300.0;  // -300 dBm is treated as pump off

    void validate() const;
    bool off() const { return power_dbm <= -250.0; }
};

struct SteadyBranch {
    std::complex<double> amp_left;   // pump-frame amplitude of the port resonator
    std::complex<double> amp_right;
    bool stable = false;
    double max_real_eigenvalue = 0.0;  // rad/s, of the 4x4 linearization

    double total_photons() const {
        return std::norm(amp_left) + std::norm(amp_right);
    }
};

struct SteadyState {
    std::vector<SteadyBranch> branches;  // sorted by total photon number
    bool multistable() const { return branches.size() > 1; }
    bool any_stable() const;
    // Lowest-amplitude stable branch: the state reached by ramping the pump
    // up from vacuum. Throws when every branch is unstable.
    const SteadyBranch& operating_branch() const;
};

// All pump-frame steady states of the driven dimer. The port (kappa) attaches
// to the left resonator only; internal losses enter as the mode-average
// gamma_bar = (gamma+ + gamma-)/2 on each bare resonator. Branches come from
// the real roots of the reduced steady-state polynomial in |a_R|^2; stability
// from the eigenvalues of the 4x4 fluctuation matrix.
SteadyState steady_state(const DimerSpec& dimer, const PumpDrive& drive);

// Pump-off single-port reflection at an absolute frequency.
std::complex<double> linear_reflection(const DimerSpec& dimer, double freq_ghz);

struct TwoToneReflection {
    std::complex<double> signal;  // S11 at the probe frequency, pump on
    std::complex<double> idler;   // conversion amplitude at 2 f_p - f_s
};

// Linearized signal/idler scattering around a steady branch.
TwoToneReflection small_signal_reflection(const DimerSpec& dimer, const PumpDrive& drive,
                                          const SteadyBranch& branch, double signal_freq_ghz);

// Gain = reflected power ratio pump on/off, in dB. Uses the operating branch.
double small_signal_gain_db(const DimerSpec& dimer, const PumpDrive& drive,
                            double signal_freq_ghz);

struct GainProfile {
    std::vector<double> signal_freqs_ghz;
    std::vector<double> gain_db;
    double fitted_g0_db = 0.0;
    double fitted_bw_mhz = 0.0;  // full width 3 dB below the peak
    double fitted_center_ghz = 0.0;
    bool fit_ok = false;
    std::string fit_message;

    double product_mhz() const;  // sqrt(G0) * BW
};

GainProfile gain_profile(const DimerSpec& dimer, const PumpDrive& drive,
                         const std::vector<double>& signal_freqs_ghz);

struct StarkModes {
    double freq_plus_ghz = 0.0;
    double freq_minus_ghz = 0.0;
};

// Dressed dimer frequencies at the operating branch, from the Stark-shifted
// linear block of the fluctuation matrix.
StarkModes stark_shifted_modes(const DimerSpec& dimer, const PumpDrive& drive);

enum class DimerMode { plus, minus };

// Resonantly driven mode population n = (4 P / hbar w) kappa / (kappa + gamma)^2.
double photon_population(DimerMode mode, double power_dbm, const HybridModes& modes,
                         double gamma_plus_mhz, double gamma_minus_mhz);

// Input power (dBm) that sustains a target resonant population; inverse of the above.
double power_for_population(DimerMode mode, double photons, const HybridModes& modes,
                            double gamma_plus_mhz, double gamma_minus_mhz);

struct KerrShiftSlopes {
    // Frequency shift per photon, kHz. Rows: shifted mode (+,-);
    // columns: populated mode (+,-). Analytic values follow the dressed
    // nonlinear Hamiltonian with every coefficient equal to K/2.
    double analytic_khz[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    double numeric_self_plus_khz = 0.0;   // dip-tracking spectroscopy slope
    double numeric_self_minus_khz = 0.0;
    bool mismatch_warning = false;
    double worst_relative_mismatch = 0.0;
};

// Analytic Kerr-shift coefficients plus a numeric cross-check that tracks the
// simulated single-tone resonance dip against the driven mode population.
KerrShiftSlopes kerr_shift_slopes(const DimerSpec& dimer, double max_photons = 10.0,
                                  double mismatch_tolerance = 0.2);

struct OperatingPoint {
    PumpDrive drive;
    double g0_db = 0.0;
    double peak_freq_ghz = 0.0;  // gain maximum of the upper mode
};

// Finds pump power (and a pump frequency tracking the Stark-shifted dimer
// center) that realizes a target peak gain.
OperatingPoint calibrate_pump(const DimerSpec& dimer, double target_g0_db,
                              std::optional<double> pump_freq_ghz = std::nullopt);

struct CompressionResult {
    double p1db_dbm = 0.0;
    double reference_gain_db = 0.0;
    double signal_freq_ghz = 0.0;
};

// Two-tone harmonic balance over {pump, signal, idler} with pump depletion;
// bisects the signal power at which the gain drops 1 dB below reference.
CompressionResult compression_point(const DimerSpec& dimer, const PumpDrive& drive,
                                    double signal_freq_ghz,
                                    std::optional<double> reference_gain_db = std::nullopt);

// Gain at a finite signal power from the same harmonic-balance model.
double saturated_gain_db(const DimerSpec& dimer, const PumpDrive& drive, double signal_freq_ghz,
                         double signal_power_dbm);

struct OpMapCell {
    double pump_freq_ghz = 0.0;
    double pump_power_dbm = 0.0;
    double g0_db = 0.0;
    double center_ghz = 0.0;
    bool multistable = false;
    bool stable_branch = true;
    bool ok = true;
    std::string error;
};

struct OpMap {
    std::vector<OpMapCell> cells;
    double ridge_tunability_mhz = 0.0;  // spread of gain centers along the 20 dB ridge
    int ridge_cells = 0;
};

struct GridSpec {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;
    std::vector<double> values() const;
};

OpMap operational_region(const DimerSpec& dimer, const GridSpec& pump_freq_ghz,
                         const GridSpec& pump_power_dbm, double ridge_g0_db = 20.0,
                         int max_threads = 0);

}  // namespace parampkit
