#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace parampkit {

class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, double residual_norm)
        : std::runtime_error(what), residual_norm_(residual_norm) {}
    double residual_norm() const { return residual_norm_; }

private:
    double residual_norm_ = 0.0;
};

struct FitOptions {
    int max_iterations = 200;
    double parameter_tol = 1e-10;   // absolute step tolerance
    double jacobian_step = 1e-7;    // relative finite-difference step
    bool throw_on_failure = true;
};

struct FitResult {
    Eigen::VectorXd params;
    Eigen::VectorXd sigma;         // 1-sigma parameter uncertainties
    Eigen::MatrixXd covariance;
    double residual_norm = 0.0;
    int iterations = 0;
    bool converged = false;
};

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Damped Gauss-Newton (Levenberg) with numeric Jacobians. All fit routines
// in the toolkit run through this; models are small and smooth.
FitResult least_squares(const ResidualFn& residuals, Eigen::VectorXd initial,
                        const FitOptions& opts = {});

// Weighted straight-line fit y = a + b*x; returns (a, b) with covariance.
FitResult weighted_line_fit(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& sigma_y);

}  // namespace parampkit
