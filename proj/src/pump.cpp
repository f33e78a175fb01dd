#include "parampkit/pump.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "parampkit/fit.hpp"
#include "parampkit/units.hpp"

namespace parampkit {

namespace {

using cplx = std::complex<double>;
constexpr cplx I{0.0, 1.0};

// Angular-frequency view of the dimer around a pump tone.
struct Frame {
    double delta_left;    // w_L - w_p
    double delta_right;   // w_R - w_p
    double j;             // hopping
    double kappa;         // port coupling, left resonator
    double gamma_bar;     // internal loss per resonator
    double kerr_left;     // signed, rad/s per photon
    double kerr_right;
    double gamma_left() const { return 0.5 * (kappa + gamma_bar); }   // half width, left
    double gamma_right() const { return 0.5 * gamma_bar; }
};

Frame make_frame(const DimerSpec& dimer, double pump_freq_ghz) {
    Frame f;
    const double wp = ang_from_ghz(pump_freq_ghz);
    f.delta_left = ang_from_ghz(dimer.left.frequency_ghz) - wp;
    f.delta_right = ang_from_ghz(dimer.right.frequency_ghz) - wp;
    f.j = ang_from_mhz(dimer.hopping_mhz);
    f.kappa = ang_from_mhz(dimer.external_coupling_mhz);
    f.gamma_bar = ang_from_mhz(0.5 * (dimer.internal_loss_plus_mhz + dimer.internal_loss_minus_mhz));
    f.kerr_left = ang_from_khz(dimer.left.kerr_khz);
    f.kerr_right = ang_from_khz(dimer.right.kerr_khz);
    return f;
}

double drive_photon_flux(const PumpDrive& drive) {
    if (drive.off()) return 0.0;
    return dbm_to_watt(drive.power_dbm) / (phys::hbar * ang_from_ghz(drive.frequency_ghz));
}

// Dense polynomial helpers, coefficients in ascending powers.
using Poly = std::vector<double>;

Poly pmul(const Poly& a, const Poly& b) {
    Poly out(a.size() + b.size() - 1, 0.0);
    for (size_t i = 0; i < a.size(); ++i) {
        for (size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    }
    return out;
}

Poly padd(Poly a, const Poly& b) {
    if (b.size() > a.size()) a.resize(b.size(), 0.0);
    for (size_t i = 0; i < b.size(); ++i) a[i] += b[i];
    return a;
}

Poly pscale(Poly a, double s) {
    for (double& c : a) c *= s;
    return a;
}

double peval(const Poly& a, double x) {
    double acc = 0.0;
    for (size_t i = a.size(); i-- > 0;) acc = acc * x + a[i];
    return acc;
}

Poly pderiv(const Poly& a) {
    if (a.size() <= 1) return {0.0};
    Poly d(a.size() - 1);
    for (size_t i = 1; i < a.size(); ++i) d[i - 1] = a[i] * static_cast<double>(i);
    return d;
}

// Real roots of a polynomial via companion-matrix candidates plus Newton
// polish. Extra seeds (e.g. the linear-response estimate) keep tiny roots
// that the eigensolver resolves poorly.
std::vector<double> real_positive_roots(const Poly& poly, const std::vector<double>& seeds) {
    double cmax = 0.0;
    for (double c : poly) cmax = std::max(cmax, std::abs(c));
    if (cmax == 0.0) return {};
    size_t deg = poly.size() - 1;
    while (deg > 0 && std::abs(poly[deg]) < 1e-13 * cmax) --deg;
    if (deg == 0) return {};

    std::vector<double> candidates = seeds;
    if (deg == 1) {
        candidates.push_back(-poly[0] / poly[1]);
    } else {
        Eigen::MatrixXd companion =
            Eigen::MatrixXd::Zero(static_cast<long>(deg), static_cast<long>(deg));
        for (size_t i = 0; i < deg; ++i) {
            companion(static_cast<long>(i), static_cast<long>(deg) - 1) = -poly[i] / poly[deg];
            if (i + 1 < deg) companion(static_cast<long>(i) + 1, static_cast<long>(i)) = 1.0;
        }
        const Eigen::EigenSolver<Eigen::MatrixXd> es(companion, false);
        for (long i = 0; i < es.eigenvalues().size(); ++i) {
            const cplx z = es.eigenvalues()[i];
            if (std::abs(z.imag()) > 1e-3 * (1.0 + std::abs(z.real()))) continue;
            candidates.push_back(z.real());
        }
    }

    std::vector<double> roots;
    const Poly dpoly = pderiv(poly);
    for (double x : candidates) {
        if (!std::isfinite(x)) continue;
        // Newton polish; double roots stall but stay put.
        for (int it = 0; it < 60; ++it) {
            const double f = peval(poly, x);
            const double df = peval(dpoly, x);
            if (df == 0.0) break;
            const double step = f / df;
            x -= step;
            if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
        }
        if (!(x > 0.0) || !std::isfinite(x)) continue;
        bool dup = false;
        for (double r : roots) {
            if (std::abs(r - x) < 1e-8 * (1.0 + std::abs(x))) dup = true;
        }
        if (!dup) roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    return roots;
}

// Linear steady state in determinant form; finite even when the pump sits
// exactly on a lossless bare resonance.
std::pair<cplx, cplx> linear_amplitudes(const Frame& f, double beta) {
    const cplx det = (I * f.delta_left + f.gamma_left()) * (I * f.delta_right + f.gamma_right()) +
                     f.j * f.j;
    const cplx a_left = std::sqrt(f.kappa) * beta * (I * f.delta_right + f.gamma_right()) / det;
    const cplx a_right = -I * f.j * std::sqrt(f.kappa) * beta / det;
    return {a_left, a_right};
}

// 4x4 fluctuation matrix around (aL, aR), basis (daL, daR, daL*, daR*).
Eigen::Matrix4cd fluctuation_matrix(const Frame& f, cplx a_left, cplx a_right) {
    const double n_left = std::norm(a_left);
    const double n_right = std::norm(a_right);
    const double dl = f.delta_left + 2.0 * f.kerr_left * n_left;
    const double dr = f.delta_right + 2.0 * f.kerr_right * n_right;

    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = -I * dl - f.gamma_left();
    m(0, 1) = -I * f.j;
    m(0, 2) = -I * f.kerr_left * a_left * a_left;
    m(1, 1) = -I * dr - f.gamma_right();
    m(1, 0) = -I * f.j;
    m(1, 3) = -I * f.kerr_right * a_right * a_right;
    m(2, 2) = I * dl - f.gamma_left();
    m(2, 3) = I * f.j;
    m(2, 0) = I * f.kerr_left * std::conj(a_left) * std::conj(a_left);
    m(3, 3) = I * dr - f.gamma_right();
    m(3, 2) = I * f.j;
    m(3, 1) = I * f.kerr_right * std::conj(a_right) * std::conj(a_right);
    return m;
}

double max_real_eigenvalue(const Eigen::Matrix4cd& m) {
    const Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(m, false);
    double mx = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < 4; ++i) mx = std::max(mx, es.eigenvalues()[i].real());
    return mx;
}

// Residual of the original steady-state equations, scaled to the drive.
double steady_residual(const Frame& f, cplx a_left, cplx a_right, double beta) {
    const cplx r1 = (I * (f.delta_left + f.kerr_left * std::norm(a_left)) + f.gamma_left()) * a_left +
                    I * f.j * a_right - std::sqrt(f.kappa) * beta;
    const cplx r2 =
        (I * (f.delta_right + f.kerr_right * std::norm(a_right)) + f.gamma_right()) * a_right +
        I * f.j * a_left;
    const double scale = std::sqrt(f.kappa) * beta +
                         f.kappa * (std::abs(a_left) + std::abs(a_right)) + 1e-300;
    return (std::abs(r1) + std::abs(r2)) / scale;
}

// Newton on the full steady-state equations (4 real unknowns). The reduced
// polynomial can be near-degenerate where its spurious factor approaches a
// genuine branch; the original system stays regular there.
bool polish_on_eom(const Frame& f, double beta, cplx& a_left, cplx& a_right) {
    const auto eval = [&](const Eigen::Vector4d& v, Eigen::Vector4d& r) {
        const cplx al(v[0], v[1]), ar(v[2], v[3]);
        const cplx r1 =
            (I * (f.delta_left + f.kerr_left * std::norm(al)) + f.gamma_left()) * al +
            I * f.j * ar - std::sqrt(f.kappa) * beta;
        const cplx r2 =
            (I * (f.delta_right + f.kerr_right * std::norm(ar)) + f.gamma_right()) * ar +
            I * f.j * al;
        r << r1.real(), r1.imag(), r2.real(), r2.imag();
    };

    Eigen::Vector4d v(a_left.real(), a_left.imag(), a_right.real(), a_right.imag());
    const double scale = std::sqrt(f.kappa) * beta + f.kappa * v.norm() + 1e-300;
    Eigen::Vector4d r;
    eval(v, r);
    for (int it = 0; it < 40; ++it) {
        if (r.norm() < 1e-10 * scale) break;
        Eigen::Matrix4d jac;
        const double vmax = std::max(v.lpNorm<Eigen::Infinity>(), 1.0);
        for (int j = 0; j < 4; ++j) {
            const double h = 1e-7 * std::max(std::abs(v[j]), 1e-6 * vmax);
            Eigen::Vector4d vp = v, vm = v, rp, rm;
            vp[j] += h;
            vm[j] -= h;
            eval(vp, rp);
            eval(vm, rm);
            jac.col(j) = (rp - rm) / (2.0 * h);
        }
        const Eigen::Vector4d step = jac.partialPivLu().solve(-r);
        if (!step.allFinite()) return false;
        double damp = 1.0;
        bool moved = false;
        for (int half = 0; half < 10; ++half) {
            Eigen::Vector4d v_try = v + damp * step;
            Eigen::Vector4d r_try;
            eval(v_try, r_try);
            if (r_try.norm() < r.norm()) {
                v = v_try;
                r = r_try;
                moved = true;
                break;
            }
            damp *= 0.5;
        }
        if (!moved) break;
    }
    if (!(r.norm() < 1e-8 * scale)) return false;
    a_left = cplx(v[0], v[1]);
    a_right = cplx(v[2], v[3]);
    return true;
}

}  // namespace

void PumpDrive::validate() const {
    if (!(frequency_ghz > 0.0)) throw std::invalid_argument("pump frequency must be > 0");
    if (!std::isfinite(power_dbm)) throw std::invalid_argument("pump power must be finite");
}

bool SteadyState::any_stable() const {
    for (const auto& b : branches) {
        if (b.stable) return true;
    }
    return false;
}

const SteadyBranch& SteadyState::operating_branch() const {
    for (const auto& b : branches) {
        if (b.stable) return b;  // branches are sorted by amplitude
    }
    throw std::runtime_error("no stable steady branch: operate below the multistable boundary");
}

SteadyState steady_state(const DimerSpec& dimer, const PumpDrive& drive) {
    dimer.validate();
    drive.validate();
    const Frame f = make_frame(dimer, drive.frequency_ghz);
    const double flux = drive_photon_flux(drive);
    const double beta = std::sqrt(flux);

    SteadyState out;
    const double stability_tol = 1e-9 * f.kappa;

    if (flux == 0.0) {
        SteadyBranch b;
        b.amp_left = b.amp_right = 0.0;
        const auto m = fluctuation_matrix(f, b.amp_left, b.amp_right);
        b.max_real_eigenvalue = max_real_eigenvalue(m);
        b.stable = b.max_real_eigenvalue <= stability_tol;
        out.branches.push_back(b);
        return out;
    }

    // Linear dimer: closed form, single branch.
    if (f.kerr_left == 0.0 && f.kerr_right == 0.0) {
        SteadyBranch b;
        std::tie(b.amp_left, b.amp_right) = linear_amplitudes(f, beta);
        const auto m = fluctuation_matrix(f, b.amp_left, b.amp_right);
        b.max_real_eigenvalue = max_real_eigenvalue(m);
        b.stable = b.max_real_eigenvalue <= stability_tol;
        out.branches.push_back(b);
        return out;
    }

    // Eliminate the undriven resonator: with D(n) = delta_R + K_R n and
    // g = gamma_R/2, every branch satisfies a polynomial in n = |a_R|^2.
    // Scale rates by u = kappa and populations by n0 so coefficients stay O(1).
    const double u = f.kappa;
    const double kerr_scale = std::max(std::abs(f.kerr_left), std::abs(f.kerr_right));
    const double n0 = u / kerr_scale;

    const Poly d_poly{f.delta_right / u, f.kerr_right * n0 / u};
    const Poly q = padd(pmul(d_poly, d_poly), {std::pow(f.gamma_right() / u, 2)});
    const double j_u = f.j / u;
    const Poly a1 = padd(pscale(q, f.gamma_left() / u), {j_u * j_u * (f.gamma_right() / u)});
    // n_L/n0 = x * Q * (u/J)^2
    const Poly n_left_poly = pscale(pmul({0.0, 1.0}, q), 1.0 / (j_u * j_u));
    const Poly t = padd({f.delta_left / u}, pscale(n_left_poly, f.kerr_left * n0 / u));
    const Poly b_poly = padd(pmul(t, q), pscale(d_poly, -(j_u * j_u)));
    const double c = f.kappa * flux * j_u * j_u / (n0 * u * u);
    const Poly reduced =
        padd(pmul({0.0, 1.0}, padd(pmul(a1, a1), pmul(b_poly, b_poly))), pscale(q, -c));

    const std::vector<double> seeds = {std::norm(linear_amplitudes(f, beta).second) / n0};

    for (double x : real_positive_roots(reduced, seeds)) {
        const double n_right = x * n0;
        const double d = f.delta_right + f.kerr_right * n_right;
        const double n_left = n_right * (d * d + f.gamma_right() * f.gamma_right()) / (f.j * f.j);
        const cplx det = (I * (f.delta_left + f.kerr_left * n_left) + f.gamma_left()) *
                             (I * d + f.gamma_right()) +
                         f.j * f.j;
        if (std::abs(det) < 1e-9 * u * u) continue;
        SteadyBranch b;
        b.amp_left = std::sqrt(f.kappa) * beta * (I * d + f.gamma_right()) / det;
        b.amp_right = -I * f.j * std::sqrt(f.kappa) * beta / det;
        // Spurious elimination roots reconstruct near (or away from) a genuine
        // branch; Newton on the original equations settles the distinction.
        if (!polish_on_eom(f, beta, b.amp_left, b.amp_right)) continue;
        if (steady_residual(f, b.amp_left, b.amp_right, beta) > 1e-6) continue;
        const auto m = fluctuation_matrix(f, b.amp_left, b.amp_right);
        b.max_real_eigenvalue = max_real_eigenvalue(m);
        b.stable = b.max_real_eigenvalue <= stability_tol;
        bool dup = false;
        for (const auto& prev : out.branches) {
            const double dist = std::abs(std::norm(prev.amp_left) - std::norm(b.amp_left)) +
                                std::abs(std::norm(prev.amp_right) - std::norm(b.amp_right));
            if (dist < 1e-6 * (1.0 + b.total_photons())) dup = true;
        }
        if (!dup) out.branches.push_back(b);
    }

    if (out.branches.empty()) {
        throw std::runtime_error("steady-state continuation found no physical branch");
    }
    std::sort(out.branches.begin(), out.branches.end(),
              [](const SteadyBranch& a, const SteadyBranch& b) {
                  return a.total_photons() < b.total_photons();
              });
    return out;
}

std::complex<double> linear_reflection(const DimerSpec& dimer, double freq_ghz) {
    const Frame f = make_frame(dimer, freq_ghz);  // probe frame: deltas relative to the tone
    const cplx det = (I * f.delta_left + f.gamma_left()) * (I * f.delta_right + f.gamma_right()) +
                     f.j * f.j;
    return 1.0 - f.kappa * (I * f.delta_right + f.gamma_right()) / det;
}

TwoToneReflection small_signal_reflection(const DimerSpec& dimer, const PumpDrive& drive,
                                          const SteadyBranch& branch, double signal_freq_ghz) {
    const Frame f = make_frame(dimer, drive.frequency_ghz);
    const double delta = ang_from_ghz(signal_freq_ghz) - ang_from_ghz(drive.frequency_ghz);

    const Eigen::Matrix4cd a = fluctuation_matrix(f, branch.amp_left, branch.amp_right);
    Eigen::Matrix4cd m = -I * delta * Eigen::Matrix4cd::Identity() - a;
    Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();
    rhs(0) = std::sqrt(f.kappa);
    const Eigen::Vector4cd x = m.partialPivLu().solve(rhs);

    TwoToneReflection out;
    out.signal = 1.0 - std::sqrt(f.kappa) * x(0);
    out.idler = -std::sqrt(f.kappa) * x(2);
    return out;
}

double small_signal_gain_db(const DimerSpec& dimer, const PumpDrive& drive,
                            double signal_freq_ghz) {
    if (drive.off()) return 0.0;
    const SteadyState ss = steady_state(dimer, drive);
    const auto& branch = ss.operating_branch();
    const auto two_tone = small_signal_reflection(dimer, drive, branch, signal_freq_ghz);
    const auto off = linear_reflection(dimer, signal_freq_ghz);
    return linear_to_db(std::norm(two_tone.signal) / std::norm(off));
}

double GainProfile::product_mhz() const {
    return std::sqrt(db_to_linear(fitted_g0_db)) * fitted_bw_mhz;
}

GainProfile gain_profile(const DimerSpec& dimer, const PumpDrive& drive,
                         const std::vector<double>& grid) {
    if (grid.size() < 5) throw std::invalid_argument("gain profile needs a grid of >= 5 points");
    GainProfile out;
    out.signal_freqs_ghz = grid;
    out.gain_db.reserve(grid.size());

    if (drive.off()) {
        out.gain_db.assign(grid.size(), 0.0);
        out.fit_message = "pump off: gain is identically 0 dB";
        return out;
    }

    const SteadyState ss = steady_state(dimer, drive);
    const auto& branch = ss.operating_branch();
    for (double fs : grid) {
        const auto tt = small_signal_reflection(dimer, drive, branch, fs);
        const auto off = linear_reflection(dimer, fs);
        out.gain_db.push_back(linear_to_db(std::norm(tt.signal) / std::norm(off)));
    }

    try {
        const auto fit = lorentzian_fit(grid, out.gain_db);
        out.fitted_g0_db = fit.g0_db;
        out.fitted_bw_mhz = fit.bw_mhz;
        out.fitted_center_ghz = fit.center_ghz;
        out.fit_ok = true;
    } catch (const std::exception& e) {
        out.fit_message = e.what();
        return out;
    }

    // Instantaneous bandwidth: full width 3 dB below the peak, interpolated
    // from the profile itself. At moderate gain the exact lineshape is
    // squarer than a Lorentzian and the fit width underestimates it.
    const size_t n = grid.size();
    size_t ipk = 0;
    for (size_t i = 1; i < n; ++i) {
        if (out.gain_db[i] > out.gain_db[ipk]) ipk = i;
    }
    const double level_db = out.fitted_g0_db - linear_to_db(2.0);
    const auto cross = [&](long from, long step) -> std::optional<double> {
        for (long i = from; i + step >= 0 && i + step < static_cast<long>(n); i += step) {
            const long next = i + step;
            if (out.gain_db[static_cast<size_t>(next)] <= level_db) {
                const double gi = out.gain_db[static_cast<size_t>(i)];
                const double gn = out.gain_db[static_cast<size_t>(next)];
                const double t = (gi - level_db) / (gi - gn);
                return grid[static_cast<size_t>(i)] +
                       t * (grid[static_cast<size_t>(next)] - grid[static_cast<size_t>(i)]);
            }
        }
        return std::nullopt;
    };
    const auto lo = cross(static_cast<long>(ipk), -1);
    const auto hi = cross(static_cast<long>(ipk), +1);
    if (lo && hi) {
        out.fitted_bw_mhz = (*hi - *lo) * 1e3;
    } else {
        out.fit_message = "3 dB crossings outside the grid; bandwidth from the Lorentzian width";
    }
    return out;
}

namespace {

// Stark-shifted linear block; eigenfrequencies of the dressed dimer.
StarkModes dressed_modes(const Frame& f, double pump_freq_ghz, cplx a_left, cplx a_right) {
    const double dl = f.delta_left + 2.0 * f.kerr_left * std::norm(a_left);
    const double dr = f.delta_right + 2.0 * f.kerr_right * std::norm(a_right);
    const double mean = 0.5 * (dl + dr);
    const double split = std::sqrt(f.j * f.j + 0.25 * (dl - dr) * (dl - dr));
    StarkModes m;
    m.freq_plus_ghz = pump_freq_ghz + ghz_from_ang(mean + split);
    m.freq_minus_ghz = pump_freq_ghz + ghz_from_ang(mean - split);
    return m;
}

}  // namespace

StarkModes stark_shifted_modes(const DimerSpec& dimer, const PumpDrive& drive) {
    const Frame f = make_frame(dimer, drive.frequency_ghz);
    const SteadyState ss = steady_state(dimer, drive);
    const auto& b = ss.operating_branch();
    return dressed_modes(f, drive.frequency_ghz, b.amp_left, b.amp_right);
}

double photon_population(DimerMode mode, double power_dbm, const HybridModes& modes,
                         double gamma_plus_mhz, double gamma_minus_mhz) {
    const double p_w = dbm_to_watt(power_dbm);
    if (!(p_w > 0.0)) throw std::invalid_argument("input power must be > 0");
    const double w = ang_from_ghz(mode == DimerMode::plus ? modes.freq_plus_ghz
                                                          : modes.freq_minus_ghz);
    const double kap = ang_from_mhz(mode == DimerMode::plus ? modes.kappa_plus_mhz
                                                            : modes.kappa_minus_mhz);
    const double gam = ang_from_mhz(mode == DimerMode::plus ? gamma_plus_mhz : gamma_minus_mhz);
    const double total = kap + gam;
    return 4.0 * p_w / (phys::hbar * w) * kap / (total * total);
}

double power_for_population(DimerMode mode, double photons, const HybridModes& modes,
                            double gamma_plus_mhz, double gamma_minus_mhz) {
    if (!(photons > 0.0)) throw std::invalid_argument("photon number must be > 0");
    const double w = ang_from_ghz(mode == DimerMode::plus ? modes.freq_plus_ghz
                                                          : modes.freq_minus_ghz);
    const double kap = ang_from_mhz(mode == DimerMode::plus ? modes.kappa_plus_mhz
                                                            : modes.kappa_minus_mhz);
    const double gam = ang_from_mhz(mode == DimerMode::plus ? gamma_plus_mhz : gamma_minus_mhz);
    const double total = kap + gam;
    const double p_w = photons * phys::hbar * w * total * total / (4.0 * kap);
    return watt_to_dbm(p_w);
}

KerrShiftSlopes kerr_shift_slopes(const DimerSpec& dimer, double max_photons,
                                  double mismatch_tolerance) {
    dimer.validate();
    const double k_left = dimer.left.kerr_khz;
    const double k_right = dimer.right.kerr_khz;
    if (std::abs(k_left - k_right) > 0.2 * std::max(std::abs(k_left), std::abs(k_right))) {
        throw std::invalid_argument("kerr_shift_slopes assumes nearly equal Kerr coefficients");
    }
    const double k = 0.5 * (k_left + k_right);

    KerrShiftSlopes out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) out.analytic_khz[i][j] = 0.5 * k;
    }

    const HybridModes modes = hybridize(dimer);

    // Numeric self-slopes: track the single-tone resonance (the drive frequency
    // maximizing the driven-mode population) while the probe itself populates
    // the mode, then regress resonance frequency on population. The backbone
    // shift is a few kHz against an MHz-wide response, so the maximum is
    // located by golden-section search.
    const auto numeric_slope = [&](DimerMode mode) {
        const double mode_freq =
            mode == DimerMode::plus ? modes.freq_plus_ghz : modes.freq_minus_ghz;
        const double kappa_mode =
            mode == DimerMode::plus ? modes.kappa_plus_mhz : modes.kappa_minus_mhz;
        const double width = kappa_mode * 1e-3;  // GHz

        const auto population_at = [&](double fd, double p_dbm) {
            const SteadyState ss = steady_state(dimer, {fd, p_dbm});
            if (!ss.any_stable()) return -1.0;
            return ss.operating_branch().total_photons();
        };

        std::vector<double> pops, dips;
        for (double target : {0.25 * max_photons, 0.5 * max_photons, max_photons}) {
            const double p_dbm = power_for_population(mode, target, modes,
                                                      dimer.internal_loss_plus_mhz,
                                                      dimer.internal_loss_minus_mhz);
            const double pull = std::abs(k) * target * 1e-6;  // GHz
            double lo = mode_freq - 0.4 * width - 4.0 * pull;
            double hi = mode_freq + 0.4 * width;
            constexpr double golden = 0.61803398874989484;
            double x1 = hi - golden * (hi - lo);
            double x2 = lo + golden * (hi - lo);
            double f1 = population_at(x1, p_dbm);
            double f2 = population_at(x2, p_dbm);
            for (int it = 0; it < 70 && hi - lo > 1e-12; ++it) {
                if (f1 < f2) {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + golden * (hi - lo);
                    f2 = population_at(x2, p_dbm);
                } else {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - golden * (hi - lo);
                    f1 = population_at(x1, p_dbm);
                }
            }
            const double fd = 0.5 * (lo + hi);
            const double n = population_at(fd, p_dbm);
            if (n > 0.0) {
                pops.push_back(n);
                dips.push_back(fd);
            }
        }
        if (pops.size() < 2) {
            throw std::runtime_error("kerr slope tracking lost the resonance dip");
        }
        const FitResult line = weighted_line_fit(pops, dips, {});
        return line.params[1] * 1e6;  // GHz/photon -> kHz/photon
    };

    out.numeric_self_plus_khz = numeric_slope(DimerMode::plus);
    out.numeric_self_minus_khz = numeric_slope(DimerMode::minus);

    const double self = out.analytic_khz[0][0];
    const double mp = std::abs(out.numeric_self_plus_khz - self) / std::abs(self);
    const double mm = std::abs(out.numeric_self_minus_khz - self) / std::abs(self);
    out.worst_relative_mismatch = std::max(mp, mm);
    out.mismatch_warning = out.worst_relative_mismatch > mismatch_tolerance;
    return out;
}

namespace {

// Raw peak gain on an adaptive grid around the upper dressed mode.
struct PeakGain {
    double g0_db;
    double freq_ghz;
};

PeakGain peak_gain(const DimerSpec& dimer, const PumpDrive& drive) {
    const SteadyState ss = steady_state(dimer, drive);
    const auto& branch = ss.operating_branch();
    const Frame f = make_frame(dimer, drive.frequency_ghz);
    const StarkModes dressed =
        dressed_modes(f, drive.frequency_ghz, branch.amp_left, branch.amp_right);

    double lo = dressed.freq_plus_ghz - 0.02;
    double hi = dressed.freq_plus_ghz + 0.02;
    PeakGain best{-1e9, dressed.freq_plus_ghz};
    for (int round = 0; round < 4; ++round) {
        const int n = 160;
        for (int i = 0; i <= n; ++i) {
            const double fs = lo + (hi - lo) * i / n;
            const auto tt = small_signal_reflection(dimer, drive, branch, fs);
            const auto off = linear_reflection(dimer, fs);
            const double g = linear_to_db(std::norm(tt.signal) / std::norm(off));
            if (g > best.g0_db) best = {g, fs};
        }
        const double step = (hi - lo) / n;
        lo = best.freq_ghz - 2.0 * step;
        hi = best.freq_ghz + 2.0 * step;
    }
    return best;
}

// Pump frequency tracking the Stark-shifted dimer center at a given power.
// The self-consistency gap center(fp) - fp is steep near threshold and can
// have several crossings; a sign-bracketing bisection seeded near `hint`
// follows one fixed point continuously as the power changes.
std::optional<double> tracked_pump_freq(const DimerSpec& dimer, double power_dbm, double hint) {
    const double bare_center = 0.5 * (dimer.left.frequency_ghz + dimer.right.frequency_ghz);
    const double kerr_mean = 0.5 * (dimer.left.kerr_khz + dimer.right.kerr_khz);
    const double dir = kerr_mean < 0.0 ? -1.0 : 1.0;

    const auto center_gap = [&](double fp) -> std::optional<double> {
        try {
            const SteadyState ss = steady_state(dimer, {fp, power_dbm});
            if (!ss.any_stable()) return std::nullopt;
            const auto& b = ss.operating_branch();
            const Frame f = make_frame(dimer, fp);
            const StarkModes m = dressed_modes(f, fp, b.amp_left, b.amp_right);
            return 0.5 * (m.freq_plus_ghz + m.freq_minus_ghz) - fp;
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };
    // "No stable branch" counts as the overdriven (near) side of the crossing.
    const auto near_side = [&](const std::optional<double>& g) {
        return !g || dir * (*g) > 0.0;
    };

    const auto g_hint = center_gap(hint);
    if (g_hint && std::abs(*g_hint) < 1e-8) return hint;

    // Expand a local bracket around the hint until the gap changes side.
    const double limit_near = bare_center + 0.05 * -dir;
    const double limit_far = bare_center + 0.35 * dir;
    double near = hint, far = hint;
    bool bracketed = false;
    for (double w = 2.5e-4; w <= 0.45; w *= 2.0) {
        near = dir < 0.0 ? std::min(hint + w, limit_near) : std::max(hint - w, limit_near);
        far = dir < 0.0 ? std::max(hint - w, limit_far) : std::min(hint + w, limit_far);
        if (near_side(center_gap(near)) && !near_side(center_gap(far))) {
            bracketed = true;
            break;
        }
    }
    if (!bracketed) return std::nullopt;

    for (int it = 0; it < 60 && std::abs(far - near) > 1e-8; ++it) {
        const double mid = 0.5 * (near + far);
        if (near_side(center_gap(mid))) {
            near = mid;
        } else {
            far = mid;
        }
    }
    const auto g_final = center_gap(far);
    if (!g_final || std::abs(*g_final) > 1e-4) return std::nullopt;
    return far;
}

}  // namespace

OperatingPoint calibrate_pump(const DimerSpec& dimer, double target_g0_db,
                              std::optional<double> pump_freq_ghz) {
    dimer.validate();
    if (!(target_g0_db > 0.0)) throw std::invalid_argument("target gain must be > 0 dB");
    if (dimer.left.kerr_khz == 0.0 && dimer.right.kerr_khz == 0.0) {
        throw std::invalid_argument("zero-Kerr dimer cannot amplify");
    }

    double hint = 0.5 * (dimer.left.frequency_ghz + dimer.right.frequency_ghz);
    const auto gain_at = [&](double p_dbm) -> std::optional<PeakGain> {
        double fp;
        if (pump_freq_ghz) {
            fp = *pump_freq_ghz;
        } else {
            const auto tracked = tracked_pump_freq(dimer, p_dbm, hint);
            if (!tracked) return std::nullopt;
            fp = *tracked;
            hint = fp;
        }
        const PumpDrive drive{fp, p_dbm};
        try {
            const SteadyState ss = steady_state(dimer, drive);
            if (!ss.any_stable()) return std::nullopt;
            return peak_gain(dimer, drive);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    };

    // March up in power until the target is bracketed.
    double lo = -110.0, hi = 0.0;
    bool bracketed = false;
    double prev = -110.0;
    for (double p = -110.0; p <= -20.0; p += 2.0) {
        const auto g = gain_at(p);
        if (!g || !std::isfinite(g->g0_db)) {
            hi = p;
            bracketed = prev > -110.0;
            break;
        }
        if (g->g0_db >= target_g0_db) {
            lo = prev;
            hi = p;
            bracketed = true;
            break;
        }
        prev = p;
        lo = p;
    }
    if (!bracketed) {
        throw std::runtime_error("could not bracket the requested gain below the multistable boundary");
    }

    for (int it = 0; it < 48; ++it) {
        const double mid = 0.5 * (lo + hi);
        const auto g = gain_at(mid);
        if (g && g->g0_db < target_g0_db) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 5e-4) break;
    }

    const auto g = gain_at(lo);
    if (!g) throw std::runtime_error("pump calibration lost the stable branch");
    OperatingPoint op;
    op.drive.power_dbm = lo;
    op.drive.frequency_ghz = pump_freq_ghz ? *pump_freq_ghz : hint;
    op.g0_db = g->g0_db;
    op.peak_freq_ghz = g->freq_ghz;
    return op;
}

namespace {

// Three-frequency harmonic balance state: pump (a), signal (s), idler (w)
// amplitudes on both resonators, packed as 12 reals.
struct HbProblem {
    Frame f;
    double delta;  // signal detuning from the pump, rad/s
    double beta_pump;
    double beta_signal;

    Eigen::VectorXd residual(const Eigen::VectorXd& v) const {
        const cplx a_l(v[0], v[1]), a_r(v[2], v[3]);
        const cplx s_l(v[4], v[5]), s_r(v[6], v[7]);
        const cplx w_l(v[8], v[9]), w_r(v[10], v[11]);

        const auto kerr_terms = [](double kerr, cplx a, cplx s, cplx w) {
            const double na = std::norm(a), ns = std::norm(s), nw = std::norm(w);
            const cplx pump = kerr * ((na + 2.0 * ns + 2.0 * nw) * a + 2.0 * std::conj(a) * s * w);
            const cplx sig = kerr * ((2.0 * na + ns + 2.0 * nw) * s + a * a * std::conj(w));
            const cplx idl = kerr * ((2.0 * na + nw + 2.0 * ns) * w + a * a * std::conj(s));
            return std::array<cplx, 3>{pump, sig, idl};
        };
        const auto nl_l = kerr_terms(f.kerr_left, a_l, s_l, w_l);
        const auto nl_r = kerr_terms(f.kerr_right, a_r, s_r, w_r);

        const double root_kappa = std::sqrt(f.kappa);
        const cplx rp_l = (I * f.delta_left + f.gamma_left()) * a_l + I * nl_l[0] + I * f.j * a_r -
                          root_kappa * beta_pump;
        const cplx rp_r = (I * f.delta_right + f.gamma_right()) * a_r + I * nl_r[0] + I * f.j * a_l;
        const cplx rs_l = (I * (f.delta_left - delta) + f.gamma_left()) * s_l + I * nl_l[1] +
                          I * f.j * s_r - root_kappa * beta_signal;
        const cplx rs_r =
            (I * (f.delta_right - delta) + f.gamma_right()) * s_r + I * nl_r[1] + I * f.j * s_l;
        const cplx rw_l =
            (I * (f.delta_left + delta) + f.gamma_left()) * w_l + I * nl_l[2] + I * f.j * w_r;
        const cplx rw_r =
            (I * (f.delta_right + delta) + f.gamma_right()) * w_r + I * nl_r[2] + I * f.j * w_l;

        Eigen::VectorXd r(12);
        int k = 0;
        for (const cplx& c : {rp_l, rp_r, rs_l, rs_r, rw_l, rw_r}) {
            r[k++] = c.real();
            r[k++] = c.imag();
        }
        return r;
    }
};

// Newton with numeric Jacobian on the 12-real harmonic-balance system.
bool hb_solve(const HbProblem& prob, Eigen::VectorXd& v) {
    const double scale = std::max({std::sqrt(prob.f.kappa) * prob.beta_pump,
                                   std::sqrt(prob.f.kappa) * prob.beta_signal, 1.0});
    Eigen::VectorXd r = prob.residual(v);
    for (int it = 0; it < 80; ++it) {
        if (r.lpNorm<Eigen::Infinity>() < 1e-9 * scale) return true;
        Eigen::MatrixXd jac(12, 12);
        for (int j = 0; j < 12; ++j) {
            const double h = 1e-7 * std::max(std::abs(v[j]), 1e-3 * v.lpNorm<Eigen::Infinity>() + 1e-30);
            Eigen::VectorXd vp = v, vm = v;
            vp[j] += h;
            vm[j] -= h;
            jac.col(j) = (prob.residual(vp) - prob.residual(vm)) / (2.0 * h);
        }
        const Eigen::VectorXd step = jac.partialPivLu().solve(-r);
        double damp = 1.0;
        for (int half = 0; half < 12; ++half) {
            const Eigen::VectorXd v_try = v + damp * step;
            const Eigen::VectorXd r_try = prob.residual(v_try);
            if (r_try.norm() < r.norm()) {
                v = v_try;
                r = r_try;
                break;
            }
            damp *= 0.5;
            if (half == 11) return false;
        }
    }
    return r.lpNorm<Eigen::Infinity>() < 1e-7 * scale;
}

Eigen::VectorXd hb_seed(const DimerSpec& dimer, const PumpDrive& drive, double signal_freq_ghz,
                        double beta_signal) {
    const SteadyState ss = steady_state(dimer, drive);
    const auto& b = ss.operating_branch();
    const Frame f = make_frame(dimer, drive.frequency_ghz);
    const double delta = ang_from_ghz(signal_freq_ghz) - ang_from_ghz(drive.frequency_ghz);

    const Eigen::Matrix4cd a = fluctuation_matrix(f, b.amp_left, b.amp_right);
    const Eigen::Matrix4cd m = -I * delta * Eigen::Matrix4cd::Identity() - a;
    Eigen::Vector4cd rhs = Eigen::Vector4cd::Zero();
    rhs(0) = std::sqrt(f.kappa) * beta_signal;
    const Eigen::Vector4cd x = m.partialPivLu().solve(rhs);

    Eigen::VectorXd v(12);
    v << b.amp_left.real(), b.amp_left.imag(), b.amp_right.real(), b.amp_right.imag(),
        x(0).real(), x(0).imag(), x(1).real(), x(1).imag(),
        // idler amplitudes are the conjugates of the daggered components
        x(2).real(), -x(2).imag(), x(3).real(), -x(3).imag();
    return v;
}

}  // namespace

double saturated_gain_db(const DimerSpec& dimer, const PumpDrive& drive, double signal_freq_ghz,
                         double signal_power_dbm) {
    dimer.validate();
    drive.validate();
    HbProblem prob;
    prob.f = make_frame(dimer, drive.frequency_ghz);
    prob.delta = ang_from_ghz(signal_freq_ghz) - ang_from_ghz(drive.frequency_ghz);
    prob.beta_pump = std::sqrt(drive_photon_flux(drive));
    prob.beta_signal =
        std::sqrt(dbm_to_watt(signal_power_dbm) / (phys::hbar * ang_from_ghz(signal_freq_ghz)));

    // Continuation in signal power from the linear regime.
    Eigen::VectorXd v = hb_seed(dimer, drive, signal_freq_ghz, prob.beta_signal * 1e-3);
    for (double frac : {1e-3, 1e-2, 0.1, 0.3, 0.6, 1.0}) {
        HbProblem stage = prob;
        stage.beta_signal = prob.beta_signal * frac;
        if (!hb_solve(stage, v)) {
            throw std::runtime_error("harmonic balance failed to converge during signal ramp");
        }
    }
    const cplx s_l(v[4], v[5]);
    const cplx s_out = 1.0 - std::sqrt(prob.f.kappa) * s_l / prob.beta_signal;
    const auto off = linear_reflection(dimer, signal_freq_ghz);
    return linear_to_db(std::norm(s_out) / std::norm(off));
}

CompressionResult compression_point(const DimerSpec& dimer, const PumpDrive& drive,
                                    double signal_freq_ghz,
                                    std::optional<double> reference_gain_db) {
    const double g_ref = reference_gain_db
                             ? *reference_gain_db
                             : small_signal_gain_db(dimer, drive, signal_freq_ghz);
    const double target = g_ref - 1.0;

    double lo = -160.0;
    double hi = lo;
    double g_lo = saturated_gain_db(dimer, drive, signal_freq_ghz, lo);
    if (g_lo < target) {
        throw std::runtime_error("gain already compressed at the scan floor of -160 dBm");
    }
    bool found = false;
    for (double p = -150.0; p <= -60.0; p += 2.0) {
        const double g = saturated_gain_db(dimer, drive, signal_freq_ghz, p);
        if (g <= target) {
            hi = p;
            found = true;
            break;
        }
        lo = p;
    }
    if (!found) {
        throw std::runtime_error("no 1 dB compression found for signal powers up to -60 dBm");
    }
    for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = saturated_gain_db(dimer, drive, signal_freq_ghz, mid);
        if (g > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    CompressionResult out;
    out.p1db_dbm = 0.5 * (lo + hi);
    out.reference_gain_db = g_ref;
    out.signal_freq_ghz = signal_freq_ghz;
    return out;
}

std::vector<double> GridSpec::values() const {
    if (n < 1) throw std::invalid_argument("grid needs at least one point");
    std::vector<double> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        v[static_cast<size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    }
    return v;
}

OpMap operational_region(const DimerSpec& dimer, const GridSpec& pump_freq_ghz,
                         const GridSpec& pump_power_dbm, double ridge_g0_db, int max_threads) {
    dimer.validate();
    const auto freqs = pump_freq_ghz.values();
    const auto powers = pump_power_dbm.values();

    OpMap map;
    map.cells.resize(freqs.size() * powers.size());

    const auto eval_cell = [&](size_t idx) {
        OpMapCell cell;
        cell.pump_freq_ghz = freqs[idx / powers.size()];
        cell.pump_power_dbm = powers[idx % powers.size()];
        try {
            const PumpDrive drive{cell.pump_freq_ghz, cell.pump_power_dbm};
            const SteadyState ss = steady_state(dimer, drive);
            cell.multistable = ss.multistable();
            cell.stable_branch = ss.any_stable();
            if (cell.stable_branch) {
                const PeakGain pg = peak_gain(dimer, drive);
                cell.g0_db = pg.g0_db;
                cell.center_ghz = pg.freq_ghz;
            }
        } catch (const std::exception& e) {
            cell.ok = false;
            cell.error = e.what();
        }
        map.cells[idx] = cell;
    };

    int threads = max_threads;
    if (threads <= 0) {
        threads = static_cast<int>(std::min<unsigned>(std::thread::hardware_concurrency(), 8));
        if (const char* env = std::getenv("PARAMPKIT_THREADS")) {
            threads = std::max(1, std::atoi(env));
        }
    }
    threads = std::max(1, std::min<int>(threads, static_cast<int>(map.cells.size())));

    if (threads == 1) {
        for (size_t i = 0; i < map.cells.size(); ++i) eval_cell(i);
    } else {
        std::atomic<size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < map.cells.size(); i = next.fetch_add(1)) {
                    eval_cell(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    double c_lo = 0.0, c_hi = 0.0;
    for (const auto& cell : map.cells) {
        if (!cell.ok || !cell.stable_branch) continue;
        if (std::abs(cell.g0_db - ridge_g0_db) <= 1.0) {
            if (map.ridge_cells == 0) {
                c_lo = c_hi = cell.center_ghz;
            } else {
                c_lo = std::min(c_lo, cell.center_ghz);
                c_hi = std::max(c_hi, cell.center_ghz);
            }
            ++map.ridge_cells;
        }
    }
    map.ridge_tunability_mhz = (c_hi - c_lo) * 1e3;
    return map;
}

}  // namespace parampkit
