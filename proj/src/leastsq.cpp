#include "parampkit/leastsq.hpp"

#include <algorithm>
#include <cmath>

namespace parampkit {

namespace {

Eigen::MatrixXd numeric_jacobian(const ResidualFn& f, const Eigen::VectorXd& p,
                                 const Eigen::VectorXd& r0, double rel_step) {
    const int n = static_cast<int>(p.size());
    const int m = static_cast<int>(r0.size());
    Eigen::MatrixXd jac(m, n);
    for (int j = 0; j < n; ++j) {
        const double h = rel_step * std::max(std::abs(p[j]), 1.0);
        Eigen::VectorXd pp = p, pm = p;
        pp[j] += h;
        pm[j] -= h;
        jac.col(j) = (f(pp) - f(pm)) / (2.0 * h);
    }
    return jac;
}

}  // namespace

FitResult least_squares(const ResidualFn& residuals, Eigen::VectorXd p, const FitOptions& opts) {
    FitResult out;
    Eigen::VectorXd r = residuals(p);
    double cost = r.squaredNorm();
    double lambda = 1e-3;

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const Eigen::MatrixXd jac = numeric_jacobian(residuals, p, r, opts.jacobian_step);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd jtr = jac.transpose() * r;

        if (jtr.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + cost)) {
            out.converged = true;
            break;
        }

        bool stepped = false;
        for (int attempt = 0; attempt < 24 && !stepped; ++attempt) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
            const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
            const Eigen::VectorXd r_try = residuals(p + step);
            const double cost_try = r_try.squaredNorm();
            if (std::isfinite(cost_try) && cost_try <= cost) {
                p += step;
                r = r_try;
                cost = cost_try;
                lambda = std::max(lambda * 0.3, 1e-14);
                stepped = true;
                if (step.lpNorm<Eigen::Infinity>() < opts.parameter_tol) {
                    out.converged = true;
                }
            } else {
                lambda *= 10.0;
            }
        }
        if (!stepped) {
            // Damping exhausted: accept as converged only at a genuine stationary point.
            out.converged = jtr.lpNorm<Eigen::Infinity>() < 1e-6 * (1.0 + cost);
            break;
        }
        if (out.converged) break;
    }

    out.params = p;
    out.iterations = it;
    out.residual_norm = std::sqrt(cost);

    const Eigen::MatrixXd jac = numeric_jacobian(residuals, p, r, opts.jacobian_step);
    const int m = static_cast<int>(r.size());
    const int n = static_cast<int>(p.size());
    const double dof = std::max(m - n, 1);
    const double s2 = cost / dof;
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    out.covariance = s2 * jtj.completeOrthogonalDecomposition().pseudoInverse();
    out.sigma = out.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();

    if (!out.converged && opts.throw_on_failure) {
        throw FitError("least-squares did not converge after " + std::to_string(it) +
                           " iterations, residual norm " + std::to_string(out.residual_norm),
                       out.residual_norm);
    }
    return out;
}

FitResult weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& sigma_y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::invalid_argument("line fit needs >= 2 (x, y) points");
    }
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double s = sigma_y.empty() ? 1.0 : sigma_y[i];
        if (s <= 0) throw std::invalid_argument("non-positive sigma in line fit");
        const double w = 1.0 / (s * s);
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
        swxx += w * x[i] * x[i];
        swxy += w * x[i] * y[i];
    }
    const double det = sw * swxx - swx * swx;
    if (std::abs(det) < 1e-300) {
        throw FitError("degenerate line fit (identical abscissae)", 0.0);
    }
    FitResult out;
    out.params = Eigen::VectorXd(2);
    out.params[0] = (swxx * swy - swx * swxy) / det;  // intercept
    out.params[1] = (sw * swxy - swx * swy) / det;    // slope
    out.covariance = Eigen::MatrixXd(2, 2);
    out.covariance << swxx / det, -swx / det, -swx / det, sw / det;

    double chi2 = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        const double s = sigma_y.empty() ? 1.0 : sigma_y[i];
        const double r = (y[i] - out.params[0] - out.params[1] * x[i]) / s;
        chi2 += r * r;
    }
    // Without per-point errors, scale the covariance by the residual variance.
    if (sigma_y.empty() && x.size() > 2) {
        out.covariance *= chi2 / (static_cast<double>(x.size()) - 2.0);
    }
    out.sigma = out.covariance.diagonal().cwiseSqrt();
    out.residual_norm = std::sqrt(chi2);
    out.converged = true;
    out.iterations = 1;
    return out;
}

}  // namespace parampkit
