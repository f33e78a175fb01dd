#pragma once

#include <optional>
#include <string>
#include <vector>

namespace parampkit {

// Superconducting film parameters. Canonical units follow the device tables:
// resistivity in uOhm cm, thickness in nm, gap in ueV.
struct FilmSpec {
    double resistivity_uohm_cm = 0.0;
    double thickness_nm = 0.0;
    std::optional<double> gap_uev;

    double sheet_resistance_ohm() const;
    void validate() const;
};

struct StripSpec {
    double width_um = 0.0;
    double length_um = 0.0;
    double sheet_inductance_nh = 0.0;   // per square
    double critical_current_ua = 0.0;

    double squares() const { return length_um / width_um; }
    double inductance_nh() const { return squares() * sheet_inductance_nh; }
    void validate() const;
};

struct ResonatorSpec {
    double frequency_ghz = 0.0;
    double pad_inductance_nh = 0.0;
    StripSpec strip;
    double kerr_khz = 0.0;  // signed self-Kerr

    double participation() const;
    void validate() const;
};

struct DimerSpec {
    ResonatorSpec left;   // port-coupled resonator
    ResonatorSpec right;
    double hopping_mhz = 0.0;             // J/2pi
    double external_coupling_mhz = 0.0;   // kappa/2pi of the left resonator
    double internal_loss_plus_mhz = 0.0;  // gamma+/2pi (upper hybrid mode)
    double internal_loss_minus_mhz = 0.0;

    void validate() const;
};

struct HybridModes {
    double freq_plus_ghz = 0.0;
    double freq_minus_ghz = 0.0;
    double kappa_plus_mhz = 0.0;
    double kappa_minus_mhz = 0.0;
    double kappa_eq_mhz = 0.0;
    double asymmetry = 0.0;  // |k+ - k-| / kappa
};

// Bare-circuit parameters recovered from measured hybrid modes.
struct DimerCore {
    double omega_left_ghz = 0.0;
    double omega_right_ghz = 0.0;
    double hopping_mhz = 0.0;
    double kappa_mhz = 0.0;
};

// Kinetic sheet inductance L = R_sq * hbar / (pi * Delta), R_sq = rho / t.
// Requires the gap to be present; errors otherwise.
double sheet_inductance_nh(const FilmSpec& film);

// Inverse: gap (ueV) that yields a target sheet inductance for this film.
double gap_from_sheet_inductance_uev(const FilmSpec& film, double target_nh);

// Self-Kerr of a kinetic-inductance strip modeled as an effective junction
// array: L_J = Phi0/(2 pi Ic), N_J = L_strip/L_J, E_J = Phi0 Ic/(2 pi),
// K = -(E_J / 8 hbar N_J^3) (w_r L_strip / R_Q)^2. Returned in kHz, negative.
double jj_array_kerr_khz(const StripSpec& strip, double resonance_ghz);

HybridModes hybridize(const DimerSpec& dimer);
HybridModes hybridize(double omega_left_ghz, double omega_right_ghz, double hopping_mhz,
                      double kappa_mhz);

// Closed-form inversion of the hybridization relations. The sign of
// omega_L - omega_R follows the sign of kappa+ - kappa-.
DimerCore dehybridize(double freq_plus_ghz, double freq_minus_ghz, double kappa_plus_mhz,
                      double kappa_minus_mhz);

struct DesignRule {
    std::string name;
    bool ok = true;
    double value = 0.0;
    double bound = 0.0;
    std::string message;
};

struct DesignReport {
    std::vector<DesignRule> rules;
    bool pass() const;
    std::vector<std::string> warnings() const;
};

struct DesignCheckOptions {
    double asymmetry_threshold = 0.45;
    double kerr_min_khz = 1.0;
    double kerr_max_khz = 100.0;
};

DesignReport design_check(const DimerSpec& dimer, const DesignCheckOptions& opts = {});

}  // namespace parampkit
