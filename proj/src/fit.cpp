#include "parampkit/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "parampkit/units.hpp"

namespace parampkit {

void ReflectionTrace::validate() const {
    if (freqs_ghz.size() != s11.size()) {
        throw std::invalid_argument("trace frequency and S11 arrays differ in length");
    }
    if (freqs_ghz.size() < 7) throw std::invalid_argument("trace needs at least 7 points");
    for (size_t i = 0; i < freqs_ghz.size(); ++i) {
        if (!std::isfinite(freqs_ghz[i]) || !std::isfinite(s11[i].real()) ||
            !std::isfinite(s11[i].imag())) {
            throw std::invalid_argument("trace contains non-finite values");
        }
    }
}

std::complex<double> reflection_model(double f_ghz, double f_r_ghz, double q_loaded, double q_c,
                                      std::complex<double> env) {
    const std::complex<double> den(1.0, 2.0 * q_loaded * (f_ghz / f_r_ghz - 1.0));
    return env * (1.0 - (2.0 * q_loaded / q_c) / den);
}

namespace {

struct Circle {
    double cx = 0.0, cy = 0.0, r = 0.0;
};

// Taubin algebraic circle fit.
Circle algebraic_circle(const std::vector<std::complex<double>>& pts) {
    const size_t n = pts.size();
    double mx = 0, my = 0;
    for (const auto& p : pts) {
        mx += p.real();
        my += p.imag();
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);

    double mxx = 0, myy = 0, mxy = 0, mxz = 0, myz = 0, mzz = 0;
    for (const auto& p : pts) {
        const double x = p.real() - mx;
        const double y = p.imag() - my;
        const double z = x * x + y * y;
        mxx += x * x;
        myy += y * y;
        mxy += x * y;
        mxz += x * z;
        myz += y * z;
        mzz += z * z;
    }
    mxx /= n; myy /= n; mxy /= n; mxz /= n; myz /= n; mzz /= n;

    const double mz = mxx + myy;
    const double cov_xy = mxx * myy - mxy * mxy;
    const double a3 = 4.0 * mz;
    const double a2 = -3.0 * mz * mz - mzz;
    const double a1 = mzz * mz + 4.0 * cov_xy * mz - mxz * mxz - myz * myz - mz * mz * mz;
    const double a0 = mxz * mxz * myy + myz * myz * mxx - mzz * cov_xy - 2.0 * mxz * myz * mxy +
                      mz * mz * cov_xy;

    // Newton from t = 0 onto the characteristic polynomial.
    double t = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double f = a0 + t * (a1 + t * (a2 + t * a3));
        const double df = a1 + t * (2.0 * a2 + 3.0 * t * a3);
        if (df == 0.0) break;
        const double t_new = t - f / df;
        if (!std::isfinite(t_new) || std::abs(t_new - t) < 1e-14 * (1.0 + std::abs(t))) {
            t = t_new;
            break;
        }
        t = t_new;
    }

    const double det = cov_xy - t * (mz - t);
    if (std::abs(det) < 1e-300) throw FitError("degenerate (collinear) samples in circle fit", 0.0);
    const double xc = (mxz * (myy - t) - myz * mxy) / det / 2.0;
    const double yc = (myz * (mxx - t) - mxz * mxy) / det / 2.0;

    Circle c;
    c.cx = xc + mx;
    c.cy = yc + my;
    c.r = std::sqrt(xc * xc + yc * yc + mz - 2.0 * t);
    if (!std::isfinite(c.r) || c.r <= 0.0) {
        throw FitError("degenerate circle fit (zero radius)", 0.0);
    }
    return c;
}

double wrap_to_pi(double a) {
    while (a > M_PI) a -= 2.0 * M_PI;
    while (a < -M_PI) a += 2.0 * M_PI;
    return a;
}

}  // namespace

CircleFitResult circle_fit(const ReflectionTrace& trace, double fano_inflation) {
    trace.validate();
    if (fano_inflation < 1.0) throw std::invalid_argument("fano inflation factor must be >= 1");

    const Circle circ = algebraic_circle(trace.s11);

    // Unwrapped phase around the circle center.
    const size_t n = trace.freqs_ghz.size();
    std::vector<double> theta(n);
    for (size_t i = 0; i < n; ++i) {
        const auto z = trace.s11[i] - std::complex<double>(circ.cx, circ.cy);
        theta[i] = std::atan2(z.imag(), z.real());
        if (i > 0) theta[i] = theta[i - 1] + wrap_to_pi(theta[i] - theta[i - 1]);
    }

    const double f_lo = *std::min_element(trace.freqs_ghz.begin(), trace.freqs_ghz.end());
    const double f_hi = *std::max_element(trace.freqs_ghz.begin(), trace.freqs_ghz.end());
    const double f_mid = 0.5 * (f_lo + f_hi);

    // theta(f) = theta0 + 2 atan(2 Ql (1 - f/fr)).
    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<long>(n));
        const double theta0 = p[0];
        const double ql = p[1];
        const double fr = p[2];
        for (size_t i = 0; i < n; ++i) {
            const double model = theta0 + 2.0 * std::atan(2.0 * ql * (1.0 - trace.freqs_ghz[i] / fr));
            r[static_cast<long>(i)] = wrap_to_pi(model - theta[i]);
        }
        return r;
    };

    // Seed Ql from the frequency span (phase swings over ~1/Ql), fr from the
    // point farthest from the off-resonant cluster.
    Eigen::VectorXd init(3);
    init << theta[n / 2], f_mid / std::max(f_hi - f_lo, 1e-9) * 2.0, f_mid;
    FitOptions opts;
    opts.throw_on_failure = false;
    FitResult res = least_squares(residual, init, opts);
    for (double scale : {10.0, 0.1, 100.0}) {
        if (res.converged && res.residual_norm < 1e-2 * std::sqrt(static_cast<double>(n))) break;
        Eigen::VectorXd retry = init;
        retry[1] *= scale;
        FitResult alt = least_squares(residual, retry, opts);
        if (alt.residual_norm < res.residual_norm) res = alt;
    }
    if (!res.converged) {
        throw FitError("circle phase fit did not converge; residual " +
                           std::to_string(res.residual_norm),
                       res.residual_norm);
    }

    const double theta0 = res.params[0];
    const double q_loaded = std::abs(res.params[1]);
    const double f_r = res.params[2];

    // Off-resonant point: antipode of the resonance point through the center.
    const std::complex<double> center(circ.cx, circ.cy);
    const std::complex<double> res_point =
        center + circ.r * std::complex<double>(std::cos(theta0), std::sin(theta0));
    const std::complex<double> p_off = 2.0 * center - res_point;
    const double p_off_mag = std::abs(p_off);
    if (p_off_mag < 1e-12) throw FitError("off-resonant point at the origin; cannot normalize", 0.0);

    const double diameter_norm = 2.0 * circ.r / p_off_mag;  // 2 Ql / Qc
    const double q_c = 2.0 * q_loaded / diameter_norm;

    CircleFitResult out;
    out.f_r_ghz = f_r;
    out.q_loaded = q_loaded;
    out.q_c = q_c;
    out.residual_norm = res.residual_norm;
    out.sigma_f_r_ghz = res.sigma[2];
    out.sigma_q_loaded = res.sigma[1];

    const double inv_qi = 1.0 / q_loaded - 1.0 / q_c;
    if (inv_qi <= 0.0) {
        out.q_i = std::numeric_limits<double>::infinity();
        out.overcoupled = true;
    } else {
        out.q_i = 1.0 / inv_qi;
        out.overcoupled = q_c < 0.99 * out.q_i;
    }

    // Propagate the loaded-Q uncertainty; the circle radius enters Q_c linearly.
    const double rel_ql = q_loaded > 0 ? res.sigma[1] / q_loaded : 0.0;
    out.sigma_q_c = q_c * rel_ql;
    if (std::isfinite(out.q_i)) {
        const double qi2 = out.q_i * out.q_i;
        const double dql = qi2 / (q_loaded * q_loaded) * res.sigma[1];
        const double dqc = qi2 / (q_c * q_c) * out.sigma_q_c;
        out.sigma_q_i = std::sqrt(dql * dql + dqc * dqc);
    }
    out.q_i_lower_bound = out.q_i / fano_inflation;
    out.q_i_upper_bound = out.q_i * fano_inflation;
    return out;
}

LorentzianFitResult lorentzian_fit(const std::vector<double>& freqs_ghz,
                                   const std::vector<double>& gain_db) {
    if (freqs_ghz.size() != gain_db.size() || freqs_ghz.size() < 5) {
        throw std::invalid_argument("lorentzian fit needs >= 5 (freq, gain) samples");
    }
    const size_t n = freqs_ghz.size();
    std::vector<double> lin(n);
    for (size_t i = 0; i < n; ++i) lin[i] = db_to_linear(gain_db[i]);

    const size_t ipk = static_cast<size_t>(
        std::distance(lin.begin(), std::max_element(lin.begin(), lin.end())));
    std::vector<double> sorted_lin = lin;
    std::sort(sorted_lin.begin(), sorted_lin.end());
    const double base0 = sorted_lin[n / 10];  // low decile as baseline seed
    const double peak0 = lin[ipk];
    if (linear_to_db(peak0 / std::max(base0, 1e-300)) < 3.0) {
        throw FitError("no peak: maximum is less than 3 dB above the baseline", 0.0);
    }

    // FWHM seed from half-max crossings.
    const double half = 0.5 * (peak0 + base0);
    size_t lo = ipk, hi = ipk;
    while (lo > 0 && lin[lo] > half) --lo;
    while (hi + 1 < n && lin[hi] > half) ++hi;
    double bw0 = std::abs(freqs_ghz[hi] - freqs_ghz[lo]) * 1e3;  // MHz
    if (!(bw0 > 0.0)) bw0 = std::abs(freqs_ghz.back() - freqs_ghz.front()) * 1e3 / 10.0;

    // p = (baseline, amplitude, center GHz, fwhm MHz), model in linear power.
    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<long>(n));
        for (size_t i = 0; i < n; ++i) {
            const double x = 2.0 * (freqs_ghz[i] - p[2]) * 1e3 / p[3];
            const double model = p[0] + p[1] / (1.0 + x * x);
            r[static_cast<long>(i)] = (model - lin[i]) / peak0;
        }
        return r;
    };
    Eigen::VectorXd init(4);
    init << base0, peak0 - base0, freqs_ghz[ipk], bw0;
    const FitResult res = least_squares(residual, init);

    LorentzianFitResult out;
    out.baseline_db = linear_to_db(std::max(res.params[0], 1e-300));
    out.g0_db = linear_to_db(std::max(res.params[0] + res.params[1], 1e-300));
    out.center_ghz = res.params[2];
    out.bw_mhz = std::abs(res.params[3]);
    out.residual_norm = res.residual_norm * peak0;
    out.covariance = res.covariance;
    if (!(out.bw_mhz > 0.0) || res.params[1] <= 0.0) {
        throw FitError("lorentzian fit collapsed (non-positive width or amplitude)",
                       out.residual_norm);
    }
    return out;
}

std::complex<double> fluorescence_s11(const FluorescenceModel& m, double df_ghz) {
    const double gamma_tot = ang_from_mhz(m.total_mhz());
    if (!(gamma_tot > 0.0)) throw std::invalid_argument("total linewidth must be > 0");
    const double dq = ang_from_ghz(df_ghz);
    const double om = ang_from_mhz(m.rabi_mhz);
    const double x = 2.0 * dq / gamma_tot;
    const double s = om / gamma_tot;
    const std::complex<double> num(1.0, x);
    const double den = 1.0 + x * x + 2.0 * s * s;
    return 1.0 - (2.0 * ang_from_mhz(m.external_mhz) / gamma_tot) * num / den;
}

FluorescenceFitResult fluorescence_fit(const ReflectionTrace& trace, double kappa_mhz,
                                       double gamma_mhz, double f_ge_ghz) {
    trace.validate();
    const size_t n = trace.freqs_ghz.size();
    FluorescenceModel model;
    model.qubit_freq_ghz = f_ge_ghz;
    model.external_mhz = kappa_mhz;
    model.internal_mhz = gamma_mhz;

    const auto residual = [&](const Eigen::VectorXd& p) {
        FluorescenceModel m = model;
        m.rabi_mhz = p[0];
        Eigen::VectorXd r(static_cast<long>(2 * n));
        for (size_t i = 0; i < n; ++i) {
            const auto s = fluorescence_s11(m, trace.freqs_ghz[i] - f_ge_ghz);
            r[static_cast<long>(2 * i)] = s.real() - trace.s11[i].real();
            r[static_cast<long>(2 * i + 1)] = s.imag() - trace.s11[i].imag();
        }
        return r;
    };

    Eigen::VectorXd init(1);
    init << (kappa_mhz + gamma_mhz);
    FitOptions opts;
    opts.throw_on_failure = false;
    FitResult best = least_squares(residual, init, opts);
    // The objective is even in Omega_R and flat near zero; retry from spread seeds.
    for (double seed : {0.05, 0.3, 3.0, 10.0}) {
        Eigen::VectorXd alt_init(1);
        alt_init << seed * (kappa_mhz + gamma_mhz);
        const FitResult alt = least_squares(residual, alt_init, opts);
        if (alt.residual_norm < best.residual_norm) best = alt;
    }
    if (!best.converged) {
        throw FitError("fluorescence fit did not converge; residual " +
                           std::to_string(best.residual_norm),
                       best.residual_norm);
    }
    FluorescenceFitResult out;
    out.rabi_mhz = std::abs(best.params[0]);
    out.sigma_rabi_mhz = best.sigma[0];
    out.residual_norm = best.residual_norm;
    out.iterations = best.iterations;
    return out;
}

AttenuationFitResult rabi_attenuation_fit(const std::vector<std::pair<double, double>>& points,
                                          double f_ge_ghz, double gamma_total_mhz) {
    if (points.size() < 3) throw std::invalid_argument("attenuation fit needs >= 3 points");
    if (!(f_ge_ghz > 0.0) || !(gamma_total_mhz > 0.0)) {
        throw std::invalid_argument("qubit frequency and linewidth must be > 0");
    }
    // Slope of Omega_R^2 [rad^2/s^2] vs P_RT [W], through the origin.
    double sxx = 0.0, sxy = 0.0;
    size_t distinct = 0;
    for (size_t i = 0; i < points.size(); ++i) {
        const double p_w = dbm_to_watt(points[i].first);
        const double om2 = std::pow(ang_from_mhz(points[i].second), 2);
        if (i == 0 || points[i].first != points[0].first) ++distinct;
        sxx += p_w * p_w;
        sxy += p_w * om2;
    }
    if (distinct < 2) throw std::invalid_argument("underdetermined: need at least two distinct powers");
    const double slope = sxy / sxx;
    if (slope <= 0.0) throw FitError("negative slope in Omega_R^2 vs power regression", 0.0);

    double chi2 = 0.0;
    for (const auto& [p_dbm, rabi] : points) {
        const double p_w = dbm_to_watt(p_dbm);
        const double r = std::pow(ang_from_mhz(rabi), 2) - slope * p_w;
        chi2 += r * r;
    }
    const double dof = std::max<double>(static_cast<double>(points.size()) - 1.0, 1.0);
    const double sigma_slope = std::sqrt(chi2 / dof / sxx);

    // Omega_R^2 = 2 Gamma A P / (hbar w_ge)  =>  A = slope hbar w_ge / (2 Gamma).
    const double gamma_tot = ang_from_mhz(gamma_total_mhz);
    const double a_lin = slope * phys::hbar * ang_from_ghz(f_ge_ghz) / (2.0 * gamma_tot);

    AttenuationFitResult out;
    out.slope = slope;
    out.attenuation_db = linear_to_db(a_lin);
    out.sigma_db = 10.0 / std::log(10.0) * sigma_slope / slope;
    out.residual_norm = std::sqrt(chi2);
    return out;
}

TransmonResult transmon_relations(const TransmonSpec& spec) {
    const int supplied = static_cast<int>(spec.charging_mhz.has_value()) +
                         static_cast<int>(spec.josephson_ghz.has_value()) +
                         static_cast<int>(spec.f_ge_ghz.has_value());
    if (supplied != 2) {
        throw std::invalid_argument("exactly two of {E_C, E_J, f_ge} must be supplied");
    }

    TransmonResult out;
    // Work in GHz; f_ge = sqrt(8 E_C E_J) - E_C.
    if (spec.charging_mhz && spec.josephson_ghz) {
        const double ec = *spec.charging_mhz * 1e-3;
        const double ej = *spec.josephson_ghz;
        if (!(ec > 0.0) || !(ej > 0.0)) throw std::invalid_argument("E_C and E_J must be > 0");
        out.f_ge_ghz = std::sqrt(8.0 * ec * ej) - ec;
        out.charging_mhz = *spec.charging_mhz;
        out.josephson_ghz = ej;
        if (out.f_ge_ghz <= 0.0) throw std::invalid_argument("inputs give non-positive f_ge");
    } else if (spec.charging_mhz && spec.f_ge_ghz) {
        const double ec = *spec.charging_mhz * 1e-3;
        const double f = *spec.f_ge_ghz;
        if (!(ec > 0.0) || !(f > 0.0)) throw std::invalid_argument("E_C and f_ge must be > 0");
        out.charging_mhz = *spec.charging_mhz;
        out.f_ge_ghz = f;
        out.josephson_ghz = (f + ec) * (f + ec) / (8.0 * ec);
    } else {
        const double ej = *spec.josephson_ghz;
        const double f = *spec.f_ge_ghz;
        if (!(ej > 0.0) || !(f > 0.0)) throw std::invalid_argument("E_J and f_ge must be > 0");
        // E_C^2 - (8 E_J - 2 f) E_C + f^2 = 0; the physical root is the small one.
        const double b = 8.0 * ej - 2.0 * f;
        const double disc = b * b - 4.0 * f * f;
        if (disc < 0.0 || b <= 0.0) {
            throw std::invalid_argument("no transmon-regime solution for E_C from (E_J, f_ge)");
        }
        const double ec = (b - std::sqrt(disc)) / 2.0;
        if (!(ec > 0.0)) throw std::invalid_argument("solved E_C is non-positive");
        out.charging_mhz = ec * 1e3;
        out.josephson_ghz = ej;
        out.f_ge_ghz = f;
    }

    out.ej_over_ec = out.josephson_ghz / (out.charging_mhz * 1e-3);
    out.transmon_regime = out.ej_over_ec >= 50.0;
    if (spec.anharmonicity_mhz) {
        out.f_gf_half_ghz = out.f_ge_ghz - 0.5 * (*spec.anharmonicity_mhz) * 1e-3;
    }
    return out;
}

AttenuationLine attenuation_vs_frequency(const std::vector<AttenuationPoint>& points) {
    if (points.size() < 2) throw std::invalid_argument("attenuation line fit needs >= 2 points");
    std::vector<double> f, a, s;
    for (const auto& p : points) {
        f.push_back(p.freq_ghz);
        a.push_back(p.attenuation_db);
        s.push_back(p.sigma_db);
    }
    const FitResult res = weighted_line_fit(f, a, s);
    AttenuationLine line;
    line.intercept_db = res.params[0];
    line.slope_db_per_ghz = res.params[1];
    line.covariance = res.covariance;
    line.fmin_ghz = *std::min_element(f.begin(), f.end());
    line.fmax_ghz = *std::max_element(f.begin(), f.end());
    return line;
}

AttenuationLine::Prediction AttenuationLine::predict(double f_ghz) const {
    Prediction p;
    p.attenuation_db = intercept_db + slope_db_per_ghz * f_ghz;
    const double var = covariance(0, 0) + 2.0 * f_ghz * covariance(0, 1) +
                       f_ghz * f_ghz * covariance(1, 1);
    p.sigma_db = std::sqrt(std::max(var, 0.0));
    p.extrapolated = f_ghz < fmin_ghz || f_ghz > fmax_ghz;
    return p;
}

}  // namespace parampkit
