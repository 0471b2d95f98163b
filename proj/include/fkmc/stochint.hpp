#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "fkmc/noise.hpp"
#include "fkmc/step_function.hpp"

namespace fkmc {

/// Diagnostic record of the adaptive-threshold integration scheme: one entry
/// per refinement level n, where the integrand is replaced by a step
/// function that moves only when f has drifted by at least 2^{-n} from its
/// value at the previous stopping abscissa.
struct KarandikarTrace {
    /// Per level: stopping abscissae, including both support endpoints.
    std::vector<std::vector<double>> stops;
    /// Per level: integral of that level's step approximant.
    std::vector<double> level_values;
    /// True when the last two level-to-level differences are below 1e-6.
    bool converged = false;

    /// Two-column CSV (level, value) for convergence plots.
    void write_csv(const std::string& path) const;
};

/// Piecewise-C^1 compactly supported test function with evaluable
/// derivative; `kinks` lists interior abscissae where smoothness may fail
/// (quadrature panels are split there).
struct PiecewiseC1 {
    std::function<double(double)> value;
    std::function<double(double)> derivative;
    double support_lo = 0.0;
    double support_hi = 0.0;
    std::vector<double> kinks;
};

/// Pathwise integral of a step function against the noise antiderivative:
/// sum of c_i (Xi(x_{i+1}) - Xi(x_i)) with Xi linearly interpolated between
/// grid abscissae. Throws std::invalid_argument if the support of f exceeds
/// the path span. Built from grid-cell increments only, so adding an exact
/// constant to all path values leaves the result bitwise unchanged.
double integrate_step(const StepFunction& f, const GridNoisePath& path);

/// Adaptive pathwise integral of a piecewise-continuous f over
/// [support_lo, support_hi]: for each level n = 1..n_max, stopping abscissae
/// are placed where |f - f(previous stop)| first reaches 2^{-n} (located by
/// scan plus bisection, returning the right endpoint at jumps so step
/// integrands are reproduced exactly), the resulting step function is
/// integrated, and the last level's value is returned with the full trace.
/// `refine` adds known breakpoints of f to the scan grid. Non-convergence at
/// n_max is reported through the trace flag, never as a silent zero. Levels
/// whose stop count exceeds an internal work budget are abandoned, so the
/// reported value always comes from a completely scanned level.
std::pair<double, KarandikarTrace> karandikar_integrate(
    const std::function<double(double)>& f, double support_lo, double support_hi,
    const GridNoisePath& path, int n_max = 16, const std::vector<double>& refine = {});

/// Step-function convenience overload; every level reproduces f exactly once
/// 2^{-n} is below the smallest jump.
std::pair<double, KarandikarTrace> karandikar_integrate(const StepFunction& f,
                                                        const GridNoisePath& path,
                                                        int n_max = 16);

/// Riemann-Stieltjes cross-check via integration by parts:
/// -∫ f'(x) Xi(x) dx by composite Gauss quadrature on the union of f's
/// kinks and the path grid. Throws std::invalid_argument if the support
/// exceeds the path span.
double riemann_stieltjes(const PiecewiseC1& f, const GridNoisePath& path);

}  // namespace fkmc
