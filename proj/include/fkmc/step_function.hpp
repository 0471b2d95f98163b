#pragma once

#include <cstddef>
#include <vector>

namespace fkmc {

/// Compactly supported step function: value levels[i] on
/// [breakpoints[i], breakpoints[i+1]) and 0 outside
/// [breakpoints.front(), breakpoints.back()).
struct StepFunction {
    std::vector<double> breakpoints;  // k+1 strictly increasing abscissae
    std::vector<double> levels;       // k piece values

    /// Throws std::invalid_argument unless breakpoints are strictly
    /// increasing and sized one more than levels (and at least one piece).
    void validate() const;

    std::size_t pieces() const { return levels.size(); }
    double support_lo() const { return breakpoints.front(); }
    double support_hi() const { return breakpoints.back(); }

    /// Pointwise evaluation (0 outside the support; right-open pieces).
    double operator()(double x) const;

    /// ∫ f dx.
    double integral() const;
    /// ∫ f² dx.
    double l2_norm_sq() const;
    /// ∫ |f| dx.
    double l1_norm() const;

    /// Indicator of [a, b).
    static StepFunction indicator(double a, double b);
};

}  // namespace fkmc
