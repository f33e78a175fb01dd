#pragma once

#include <string_view>
#include <utility>
#include <vector>

namespace parampkit {

// In-plane field response of a kinetic-inductance resonator.
struct FieldModel {
    double critical_field_t = 0.0;       // B_c
    double zero_field_gap_uev = 0.0;     // Delta(0)
    double zero_field_frequency_ghz = 0.0;

    void validate() const;
};

// Delta(B) = Delta(0) sqrt((1 - b^2) / (1 + b^2)), b = B/B_c. Valid for |B| < B_c.
double gap_vs_field_uev(const FieldModel& model, double b_par_t);

// w(B) = w(0) ((1 - b^2) / (1 + b^2))^(1/4).
double freq_vs_field_ghz(const FieldModel& model, double b_par_t);

struct CriticalFieldFit {
    double critical_field_t = 0.0;
    double sigma_critical_field_t = 0.0;
    double zero_field_frequency_ghz = 0.0;
    double sigma_zero_field_frequency_ghz = 0.0;
    double residual_norm = 0.0;
    int iterations = 0;
};

// Least squares of the frequency-vs-field model with free (w(0), B_c).
CriticalFieldFit fit_critical_field(const std::vector<std::pair<double, double>>& field_freq_pairs);

struct CompensationSweep {
    double b_par_t = 0.0;
    std::vector<double> b_perp_mt;    // strictly increasing
    std::vector<double> dphase_rad;

    void validate() const;
};

struct SweepVertex {
    double b_par_t = 0.0;
    double vertex_mt = 0.0;
    bool usable = false;     // false for upward-opening or degenerate quadratics
    std::string_view reason() const;
    int flag = 0;            // 0 ok, 1 upward-opening, 2 degenerate
};

struct CompensationResult {
    std::vector<SweepVertex> vertices;
    double slope_mt_per_t = 0.0;
    double misalignment_deg = 0.0;
    int excluded = 0;
};

// Quadratic fit per sweep (vertex = compensation field), then a linear fit of
// vertex vs B_par; the slope gives the misalignment angle.
CompensationResult compensation_analysis(const std::vector<CompensationSweep>& sweeps);

// Amplitude narrowing factor sqrt(G0) of a pumped mode, G0 in dB.
double pumped_linewidth_narrowing(double g0_db);

// User-supplied kappa(B) table with linear interpolation; the field decoupling
// itself is an environmental effect taken as input, not modeled.
class KappaFieldTable {
public:
    KappaFieldTable() = default;
    explicit KappaFieldTable(std::vector<std::pair<double, double>> points_b_t_kappa_mhz);

    bool empty() const { return points_.empty(); }
    double kappa_mhz_at(double b_par_t) const;

private:
    std::vector<std::pair<double, double>> points_;
};

}  // namespace parampkit
