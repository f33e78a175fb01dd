#include "parampkit/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "parampkit/leastsq.hpp"
#include "parampkit/units.hpp"

namespace parampkit {

void FieldModel::validate() const {
    if (!(critical_field_t > 0.0)) throw std::invalid_argument("critical field must be > 0");
    if (zero_field_gap_uev < 0.0) throw std::invalid_argument("zero-field gap must be >= 0");
    if (zero_field_frequency_ghz < 0.0) throw std::invalid_argument("zero-field frequency must be >= 0");
}

namespace {

double suppression(double b, double bc) {
    const double x = (b / bc) * (b / bc);
    return (1.0 - x) / (1.0 + x);
}

}  // namespace

double gap_vs_field_uev(const FieldModel& model, double b_par_t) {
    model.validate();
    if (std::abs(b_par_t) >= model.critical_field_t) {
        throw std::domain_error("field magnitude must stay below the critical field");
    }
    return model.zero_field_gap_uev * std::sqrt(suppression(b_par_t, model.critical_field_t));
}

double freq_vs_field_ghz(const FieldModel& model, double b_par_t) {
    model.validate();
    if (std::abs(b_par_t) >= model.critical_field_t) {
        throw std::domain_error("field magnitude must stay below the critical field");
    }
    return model.zero_field_frequency_ghz *
           std::pow(suppression(b_par_t, model.critical_field_t), 0.25);
}

CriticalFieldFit fit_critical_field(const std::vector<std::pair<double, double>>& data) {
    if (data.size() < 3) {
        throw std::invalid_argument("critical-field fit needs at least 3 (B, f) points");
    }
    double bmax = 0.0, f0 = 0.0;
    for (const auto& [b, f] : data) {
        bmax = std::max(bmax, std::abs(b));
        f0 = std::max(f0, f);
    }
    if (!(f0 > 0.0)) throw std::invalid_argument("frequencies must be positive");

    const auto residual = [&](const Eigen::VectorXd& p) {
        Eigen::VectorXd r(static_cast<long>(data.size()));
        const double w0 = p[0];
        const double bc = p[1];
        for (size_t i = 0; i < data.size(); ++i) {
            const auto& [b, f] = data[i];
            if (bc <= std::abs(b) || w0 <= 0.0) {
                r[static_cast<long>(i)] = 1e6 * (1.0 + std::abs(b) - bc);
                continue;
            }
            const double model = w0 * std::pow(suppression(b, bc), 0.25);
            r[static_cast<long>(i)] = (model - f) / f0;
        }
        return r;
    };

    Eigen::VectorXd init(2);
    init << f0, 2.0 * std::max(bmax, 0.1);
    FitOptions opts;
    opts.throw_on_failure = false;
    const FitResult res = least_squares(residual, init, opts);
    if (!res.converged) {
        throw FitError("critical-field fit did not converge; residual norm " +
                           std::to_string(res.residual_norm),
                       res.residual_norm);
    }

    CriticalFieldFit out;
    out.zero_field_frequency_ghz = res.params[0];
    out.critical_field_t = res.params[1];
    // Residuals were scaled by f0.
    out.sigma_zero_field_frequency_ghz = res.sigma[0];
    out.sigma_critical_field_t = res.sigma[1];
    out.residual_norm = res.residual_norm * f0;
    out.iterations = res.iterations;
    return out;
}

void CompensationSweep::validate() const {
    if (b_perp_mt.size() != dphase_rad.size()) {
        throw std::invalid_argument("compensation sweep arrays must have equal length");
    }
    if (b_perp_mt.size() < 3) {
        throw std::invalid_argument("compensation sweep needs at least 3 points");
    }
    for (size_t i = 1; i < b_perp_mt.size(); ++i) {
        if (!(b_perp_mt[i] > b_perp_mt[i - 1])) {
            throw std::invalid_argument("perpendicular fields must be strictly increasing");
        }
    }
}

std::string_view SweepVertex::reason() const {
    switch (flag) {
        case 1: return "upward-opening quadratic (no maximum)";
        case 2: return "degenerate quadratic";
        default: return "ok";
    }
}

CompensationResult compensation_analysis(const std::vector<CompensationSweep>& sweeps) {
    if (sweeps.empty()) throw std::invalid_argument("no compensation sweeps supplied");

    CompensationResult out;
    std::vector<double> bpars, vertices;
    for (const auto& sweep : sweeps) {
        sweep.validate();
        // Ordinary least squares for phi = c0 + c1 x + c2 x^2.
        const size_t n = sweep.b_perp_mt.size();
        Eigen::MatrixXd design(static_cast<long>(n), 3);
        Eigen::VectorXd y(static_cast<long>(n));
        double scale = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double x = sweep.b_perp_mt[i];
            design(static_cast<long>(i), 0) = 1.0;
            design(static_cast<long>(i), 1) = x;
            design(static_cast<long>(i), 2) = x * x;
            y[static_cast<long>(i)] = sweep.dphase_rad[i];
            scale = std::max(scale, std::abs(sweep.dphase_rad[i]));
        }
        const Eigen::VectorXd c = design.colPivHouseholderQr().solve(y);

        SweepVertex v;
        v.b_par_t = sweep.b_par_t;
        const double span = sweep.b_perp_mt.back() - sweep.b_perp_mt.front();
        const double curvature_floor = 1e-12 * std::max(scale, 1e-30) / (span * span);
        if (scale <= 0.0 || std::abs(c[2]) < curvature_floor) {
            v.flag = 2;
        } else if (c[2] > 0.0) {
            v.flag = 1;
        } else {
            v.usable = true;
            v.vertex_mt = -c[1] / (2.0 * c[2]);
        }
        if (v.usable) {
            bpars.push_back(v.b_par_t);
            vertices.push_back(v.vertex_mt);
        } else {
            ++out.excluded;
        }
        out.vertices.push_back(v);
    }

    if (bpars.size() < 2) {
        throw FitError("fewer than two usable compensation sweeps; cannot fit alignment line", 0.0);
    }
    const FitResult line = weighted_line_fit(bpars, vertices, {});
    out.slope_mt_per_t = line.params[1];
    out.misalignment_deg = std::atan(out.slope_mt_per_t * 1e-3) * 180.0 / M_PI;
    return out;
}

double pumped_linewidth_narrowing(double g0_db) {
    if (g0_db < 0.0) throw std::invalid_argument("gain must be >= 0 dB");
    return std::pow(10.0, g0_db / 20.0);
}

KappaFieldTable::KappaFieldTable(std::vector<std::pair<double, double>> points)
    : points_(std::move(points)) {
    std::sort(points_.begin(), points_.end());
    for (size_t i = 1; i < points_.size(); ++i) {
        if (points_[i].first == points_[i - 1].first) {
            throw std::invalid_argument("duplicate field point in kappa(B) table");
        }
    }
}

double KappaFieldTable::kappa_mhz_at(double b) const {
    if (points_.empty()) throw std::logic_error("kappa(B) table is empty");
    if (points_.size() == 1) return points_.front().second;
    if (b <= points_.front().first) return points_.front().second;
    if (b >= points_.back().first) return points_.back().second;
    const auto hi = std::upper_bound(points_.begin(), points_.end(), std::make_pair(b, 0.0));
    const auto lo = hi - 1;
    const double t = (b - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

}  // namespace parampkit
