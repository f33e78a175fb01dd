#include "parampkit/material.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "parampkit/units.hpp"

namespace parampkit {

double FilmSpec::sheet_resistance_ohm() const {
    // rho [uOhm cm] / t [nm]: 1 uOhm cm = 1e-8 Ohm m, 1 nm = 1e-9 m.
    return (resistivity_uohm_cm * 1e-8) / (thickness_nm * 1e-9);
}

void FilmSpec::validate() const {
    if (!(resistivity_uohm_cm > 0.0)) throw std::invalid_argument("film resistivity must be > 0");
    if (!(thickness_nm > 0.0)) throw std::invalid_argument("film thickness must be > 0");
    if (gap_uev && !(*gap_uev > 0.0)) throw std::invalid_argument("film gap must be > 0 when present");
}

void StripSpec::validate() const {
    if (!(width_um > 0.0) || !(length_um > 0.0)) {
        throw std::invalid_argument("strip width and length must be > 0");
    }
    if (!(sheet_inductance_nh > 0.0)) throw std::invalid_argument("strip sheet inductance must be > 0");
    if (!(critical_current_ua > 0.0)) throw std::invalid_argument("strip critical current must be > 0");
}

double ResonatorSpec::participation() const {
    const double ls = strip.inductance_nh();
    return ls / (ls + pad_inductance_nh);
}

void ResonatorSpec::validate() const {
    strip.validate();
    if (!(frequency_ghz > 0.0)) throw std::invalid_argument("resonator frequency must be > 0");
    if (pad_inductance_nh < 0.0) throw std::invalid_argument("pad inductance must be >= 0");
    const double p = participation();
    if (!(p > 0.0) || p > 1.0) throw std::invalid_argument("participation ratio must lie in (0, 1]");
}

void DimerSpec::validate() const {
    left.validate();
    right.validate();
    if (!(hopping_mhz > 0.0)) throw std::invalid_argument("hopping J must be > 0");
    if (!(external_coupling_mhz > 0.0)) throw std::invalid_argument("external coupling must be > 0");
    if (internal_loss_plus_mhz < 0.0 || internal_loss_minus_mhz < 0.0) {
        throw std::invalid_argument("internal losses must be >= 0");
    }
}

double sheet_inductance_nh(const FilmSpec& film) {
    film.validate();
    if (!film.gap_uev) {
        throw std::invalid_argument("gap required: sheet inductance needs the superconducting gap");
    }
    const double delta_j = uev_to_joule(*film.gap_uev);
    const double l_h = film.sheet_resistance_ohm() * phys::hbar / (M_PI * delta_j);
    return l_h * 1e9;
}

double gap_from_sheet_inductance_uev(const FilmSpec& film, double target_nh) {
    FilmSpec probe = film;
    probe.gap_uev.reset();
    if (!(target_nh > 0.0)) throw std::invalid_argument("target sheet inductance must be > 0");
    probe.validate();
    const double delta_j = probe.sheet_resistance_ohm() * phys::hbar / (M_PI * target_nh * 1e-9);
    return joule_to_uev(delta_j);
}

double jj_array_kerr_khz(const StripSpec& strip, double resonance_ghz) {
    strip.validate();
    if (!(resonance_ghz > 0.0)) throw std::invalid_argument("resonance frequency must be > 0");

    const double ic = strip.critical_current_ua * 1e-6;
    const double l_strip = strip.inductance_nh() * 1e-9;
    const double l_j = phys::flux_quantum / (two_pi * ic);
    const double n_j = l_strip / l_j;
    if (n_j < 1.0) {
        std::ostringstream msg;
        msg << "strip is less inductive than one effective junction (N_J = " << n_j << ")";
        throw std::invalid_argument(msg.str());
    }
    const double e_j = phys::flux_quantum * ic / two_pi;
    const double w_r = ang_from_ghz(resonance_ghz);
    const double ratio = w_r * l_strip / phys::resistance_quantum;
    const double kerr_rad = -(e_j / (8.0 * phys::hbar * n_j * n_j * n_j)) * ratio * ratio;
    return khz_from_ang(kerr_rad);
}

HybridModes hybridize(double wl_ghz, double wr_ghz, double j_mhz, double kappa_mhz) {
    const double mean = 0.5 * (wl_ghz + wr_ghz);
    const double half_det = 0.5 * (wl_ghz - wr_ghz);         // GHz
    const double j_ghz = j_mhz * 1e-3;
    const double split = std::sqrt(j_ghz * j_ghz + half_det * half_det);

    HybridModes m;
    m.freq_plus_ghz = mean + split;
    m.freq_minus_ghz = mean - split;

    const double det = wl_ghz - wr_ghz;
    const double denom = std::sqrt(4.0 * j_ghz * j_ghz + det * det);
    const double ratio = denom > 0.0 ? det / denom : 0.0;
    m.kappa_plus_mhz = 0.5 * kappa_mhz * (1.0 + ratio);
    m.kappa_minus_mhz = 0.5 * kappa_mhz * (1.0 - ratio);
    const double sum = m.kappa_plus_mhz + m.kappa_minus_mhz;
    m.kappa_eq_mhz = sum > 0.0 ? 2.0 * m.kappa_plus_mhz * m.kappa_minus_mhz / sum : 0.0;
    m.asymmetry = kappa_mhz > 0.0 ? std::abs(m.kappa_plus_mhz - m.kappa_minus_mhz) / kappa_mhz : 0.0;
    return m;
}

HybridModes hybridize(const DimerSpec& dimer) {
    dimer.validate();
    return hybridize(dimer.left.frequency_ghz, dimer.right.frequency_ghz, dimer.hopping_mhz,
                     dimer.external_coupling_mhz);
}

DimerCore dehybridize(double fp_ghz, double fm_ghz, double kp_mhz, double km_mhz) {
    if (!(fp_ghz > fm_ghz)) throw std::invalid_argument("freq_plus must exceed freq_minus");
    if (!(kp_mhz > 0.0) || !(km_mhz > 0.0)) throw std::invalid_argument("mode linewidths must be > 0");

    const double kappa = kp_mhz + km_mhz;
    const double split = fp_ghz - fm_ghz;  // sqrt(4J^2 + (wL - wR)^2), GHz
    const double ratio = (kp_mhz - km_mhz) / kappa;
    const double det = ratio * split;      // wL - wR carries the sign of k+ - k-

    DimerCore core;
    core.omega_left_ghz = 0.5 * (fp_ghz + fm_ghz) + 0.5 * det;
    core.omega_right_ghz = 0.5 * (fp_ghz + fm_ghz) - 0.5 * det;
    const double under = 1.0 - ratio * ratio;
    core.hopping_mhz = 0.5 * split * std::sqrt(std::max(under, 0.0)) * 1e3;
    core.kappa_mhz = kappa;
    return core;
}

bool DesignReport::pass() const {
    for (const auto& r : rules) {
        if (!r.ok) return false;
    }
    return true;
}

std::vector<std::string> DesignReport::warnings() const {
    std::vector<std::string> w;
    for (const auto& r : rules) {
        if (!r.ok) w.push_back(r.name + ": " + r.message);
    }
    return w;
}

DesignReport design_check(const DimerSpec& dimer, const DesignCheckOptions& opts) {
    dimer.validate();
    DesignReport report;

    const double j = dimer.hopping_mhz;
    const double kappa = dimer.external_coupling_mhz;
    {
        DesignRule r;
        r.name = "hopping-vs-coupling";
        r.value = j;
        r.bound = 2.0 * kappa;
        r.ok = j <= 2.0 * kappa;
        std::ostringstream msg;
        msg << "J/2pi = " << j << " MHz " << (r.ok ? "satisfies" : "violates")
            << " J <= 2 kappa (2 kappa = " << 2.0 * kappa << " MHz)";
        r.message = msg.str();
        report.rules.push_back(r);
    }
    {
        const HybridModes modes = hybridize(dimer);
        DesignRule r;
        r.name = "linewidth-asymmetry";
        r.value = modes.asymmetry;
        r.bound = opts.asymmetry_threshold;
        r.ok = modes.asymmetry <= opts.asymmetry_threshold;
        std::ostringstream msg;
        msg << "linewidth asymmetry " << modes.asymmetry << (r.ok ? " within " : " above ")
            << opts.asymmetry_threshold << "; high asymmetry suppresses non-degenerate gain";
        r.message = msg.str();
        report.rules.push_back(r);
    }
    for (const auto* res : {&dimer.left, &dimer.right}) {
        const double k = std::abs(res->kerr_khz);
        DesignRule r;
        r.name = res == &dimer.left ? "kerr-window-left" : "kerr-window-right";
        r.value = k;
        r.bound = opts.kerr_max_khz;
        r.ok = k >= opts.kerr_min_khz && k <= opts.kerr_max_khz;
        std::ostringstream msg;
        msg << "|K|/2pi = " << k << " kHz " << (r.ok ? "inside" : "outside") << " the ["
            << opts.kerr_min_khz << ", " << opts.kerr_max_khz << "] kHz window";
        r.message = msg.str();
        report.rules.push_back(r);
    }
    return report;
}

}  // namespace parampkit
