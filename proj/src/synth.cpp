#include "parampkit/synth.hpp"

#include <cmath>
#include <stdexcept>

#include "parampkit/units.hpp"

namespace parampkit {

double GaussianStream::uniform() {
    // splitmix64; keeps the stream independent of library distributions.
    state_ += 0x9e3779b97f4a7c15ull;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    z ^= z >> 31;
    return (static_cast<double>(z >> 11) + 0.5) * 0x1.0p-53;
}

double GaussianStream::next() {
    if (have_spare_) {
        have_spare_ = false;
        return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(two_pi * u2);
    have_spare_ = true;
    return r * std::cos(two_pi * u2);
}

CsvTable synth_circle(const CircleSynthParams& p, uint64_t seed) {
    if (p.points < 7) throw std::invalid_argument("circle synth needs >= 7 points");
    GaussianStream rng(seed);
    const double q_loaded = 1.0 / (1.0 / p.q_i + 1.0 / p.q_c);
    const double fwhm_ghz = p.f_r_ghz / q_loaded;
    const double span = p.span_linewidths * fwhm_ghz;
    const std::complex<double> env =
        p.env_scale * std::complex<double>(std::cos(p.env_phase_rad), std::sin(p.env_phase_rad));

    CsvTable t;
    t.columns = {"freq_GHz", "re_s11", "im_s11"};
    for (int i = 0; i < p.points; ++i) {
        const double f = p.f_r_ghz - span / 2.0 + span * i / (p.points - 1);
        auto s = reflection_model(f, p.f_r_ghz, q_loaded, p.q_c, env);
        if (p.noise > 0.0) s += std::complex<double>(p.noise * rng.next(), p.noise * rng.next());
        t.rows.push_back({f, s.real(), s.imag()});
    }
    return t;
}

CsvTable synth_lorentzian(const LorentzianSynthParams& p, uint64_t seed) {
    if (p.points < 5) throw std::invalid_argument("lorentzian synth needs >= 5 points");
    GaussianStream rng(seed);
    const double peak = db_to_linear(p.g0_db);

    CsvTable t;
    t.columns = {"freq_GHz", "gain_dB"};
    for (int i = 0; i < p.points; ++i) {
        const double f =
            p.center_ghz + (-p.span_mhz / 2.0 + p.span_mhz * i / (p.points - 1)) * 1e-3;
        const double x = 2.0 * (f - p.center_ghz) * 1e3 / p.bw_mhz;
        double lin = 1.0 + (peak - 1.0) / (1.0 + x * x);
        if (p.noise > 0.0) lin *= 1.0 + p.noise * rng.next();
        t.rows.push_back({f, linear_to_db(std::max(lin, 1e-12))});
    }
    return t;
}

double rabi_from_power_mhz(double p_rt_dbm, double attenuation_db, double f_ge_ghz,
                           double gamma_total_mhz) {
    const double p_w = dbm_to_watt(p_rt_dbm);
    const double a_lin = db_to_linear(attenuation_db);
    const double gamma = ang_from_mhz(gamma_total_mhz);
    const double om2 = 2.0 * gamma * a_lin * p_w / (phys::hbar * ang_from_ghz(f_ge_ghz));
    return mhz_from_ang(std::sqrt(om2));
}

FluorescenceSynthResult synth_fluorescence(const FluorescenceSynthParams& p, uint64_t seed) {
    if (p.points < 7) throw std::invalid_argument("fluorescence synth needs >= 7 points per trace");
    if (p.p_rt_dbm.empty()) throw std::invalid_argument("fluorescence synth needs drive powers");
    GaussianStream rng(seed);

    FluorescenceSynthResult out;
    out.p_rt_dbm = p.p_rt_dbm;
    for (double p_rt : p.p_rt_dbm) {
        FluorescenceModel model;
        model.qubit_freq_ghz = p.f_ge_ghz;
        model.external_mhz = p.kappa_mhz;
        model.internal_mhz = p.gamma_mhz;
        model.rabi_mhz =
            rabi_from_power_mhz(p_rt, p.attenuation_db, p.f_ge_ghz, p.kappa_mhz + p.gamma_mhz);
        out.rabi_mhz.push_back(model.rabi_mhz);

        CsvTable t;
        t.columns = {"freq_GHz", "re_s11", "im_s11"};
        for (int i = 0; i < p.points; ++i) {
            const double df = (-p.span_mhz / 2.0 + p.span_mhz * i / (p.points - 1)) * 1e-3;
            auto s = fluorescence_s11(model, df);
            if (p.noise > 0.0) {
                s += std::complex<double>(p.noise * rng.next(), p.noise * rng.next());
            }
            t.rows.push_back({p.f_ge_ghz + df, s.real(), s.imag()});
        }
        out.traces.push_back(std::move(t));
    }
    return out;
}

CsvTable synth_psd(const PsdSynthParams& p, uint64_t seed) {
    if (p.bins < 8) throw std::invalid_argument("psd synth needs >= 8 bins");
    GaussianStream rng(seed);
    const double floor_w_hz = phys::boltzmann * p.floor_temp_k * db_to_linear(p.chain_gain_db);
    const double floor_dbm_hz = watt_to_dbm(floor_w_hz);
    const int pilot_bin = p.bins / 2;

    CsvTable t;
    t.columns = {"offset_Hz", "psd_dBm_per_Hz"};
    for (int i = 0; i < p.bins; ++i) {
        const double offset = (i - pilot_bin) * p.bin_width_hz;
        double psd = floor_dbm_hz;
        if (p.noise_db > 0.0) psd += p.noise_db * rng.next();
        if (i == pilot_bin) {
            const double pilot_out_w =
                dbm_to_watt(p.pilot_power_dbm) * db_to_linear(p.chain_gain_db);
            const double total_w_hz = pilot_out_w / p.bin_width_hz + dbm_to_watt(psd);
            psd = watt_to_dbm(total_w_hz);
        }
        t.rows.push_back({offset, psd});
    }
    return t;
}

CsvTable synth_field_sweep(const FieldSweepSynthParams& p, uint64_t seed) {
    if (p.points < 3) throw std::invalid_argument("field sweep synth needs >= 3 points");
    if (!(p.b_max_t < p.critical_field_t)) {
        throw std::invalid_argument("field sweep must stay below the critical field");
    }
    GaussianStream rng(seed);
    FieldModel model;
    model.critical_field_t = p.critical_field_t;
    model.zero_field_frequency_ghz = p.zero_field_frequency_ghz;
    model.zero_field_gap_uev = 1.0;

    CsvTable t;
    t.columns = {"b_par_T", "freq_GHz"};
    for (int i = 0; i < p.points; ++i) {
        const double b = p.b_max_t * i / (p.points - 1);
        double f = freq_vs_field_ghz(model, b);
        if (p.noise_rel > 0.0) f *= 1.0 + p.noise_rel * rng.next();
        t.rows.push_back({b, f});
    }
    return t;
}

CsvTable synth_compensation(const CompensationSynthParams& p, uint64_t seed) {
    if (p.points_per_sweep < 3) throw std::invalid_argument("compensation synth needs >= 3 points");
    if (!(p.curvature_rad_per_mt2 < 0.0)) {
        throw std::invalid_argument("compensation parabola must open downward");
    }
    GaussianStream rng(seed);

    CsvTable t;
    t.columns = {"b_par_T", "b_perp_mT", "dphase_rad"};
    for (double b_par : p.b_par_t) {
        const double vertex = p.vertex_slope_mt_per_t * b_par;
        for (int i = 0; i < p.points_per_sweep; ++i) {
            const double b_perp =
                vertex - p.b_perp_span_mt / 2.0 + p.b_perp_span_mt * i / (p.points_per_sweep - 1);
            double phase = p.curvature_rad_per_mt2 * (b_perp - vertex) * (b_perp - vertex);
            if (p.noise_rad > 0.0) phase += p.noise_rad * rng.next();
            t.rows.push_back({b_par, b_perp, phase});
        }
    }
    return t;
}

}  // namespace parampkit
