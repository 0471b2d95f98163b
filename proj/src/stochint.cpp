#include "fkmc/stochint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "fkmc/quadrature.hpp"

namespace fkmc {

// ---------------------------------------------------------------------------
// StepFunction
// ---------------------------------------------------------------------------

void StepFunction::validate() const {
    if (levels.empty() || breakpoints.size() != levels.size() + 1)
        throw std::invalid_argument("step function needs k levels and k+1 breakpoints");
    for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
        if (!(breakpoints[i] < breakpoints[i + 1]))
            throw std::invalid_argument("step function breakpoints must be strictly increasing");
    }
}

double StepFunction::operator()(double x) const {
    if (x < breakpoints.front() || x >= breakpoints.back()) return 0.0;
    auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), x);
    return levels[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

double StepFunction::integral() const {
    double s = 0.0;
    for (std::size_t i = 0; i < pieces(); ++i)
        s += levels[i] * (breakpoints[i + 1] - breakpoints[i]);
    return s;
}

double StepFunction::l2_norm_sq() const {
    double s = 0.0;
    for (std::size_t i = 0; i < pieces(); ++i)
        s += levels[i] * levels[i] * (breakpoints[i + 1] - breakpoints[i]);
    return s;
}

double StepFunction::l1_norm() const {
    double s = 0.0;
    for (std::size_t i = 0; i < pieces(); ++i)
        s += std::abs(levels[i]) * (breakpoints[i + 1] - breakpoints[i]);
    return s;
}

StepFunction StepFunction::indicator(double a, double b) {
    if (!(a < b)) throw std::invalid_argument("indicator requires a < b");
    StepFunction f;
    f.breakpoints = {a, b};
    f.levels = {1.0};
    return f;
}

// ---------------------------------------------------------------------------
// integrate_step
// ---------------------------------------------------------------------------

static void require_within_span(double lo, double hi, const GridNoisePath& path,
                                const char* what) {
    if (lo < path.span_lo() - 1e-12 || hi > path.span_hi() + 1e-12)
        throw std::invalid_argument(std::string(what) + ": support exceeds the path span");
}

double integrate_step(const StepFunction& f, const GridNoisePath& path) {
    f.validate();
    require_within_span(f.support_lo(), f.support_hi(), path, "integrate_step");
    double s = 0.0;
    for (std::size_t i = 0; i < f.pieces(); ++i) {
        if (f.levels[i] == 0.0) continue;
        s += f.levels[i] * path.increment(f.breakpoints[i], f.breakpoints[i + 1]);
    }
    return s;
}

// ---------------------------------------------------------------------------
// karandikar_integrate
// ---------------------------------------------------------------------------

void KarandikarTrace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "level,value\n";
    char buf[64];
    for (std::size_t n = 0; n < level_values.size(); ++n) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", n + 1, level_values[n]);
        out << buf;
    }
}

std::pair<double, KarandikarTrace> karandikar_integrate(const std::function<double(double)>& f,
                                                        double support_lo, double support_hi,
                                                        const GridNoisePath& path, int n_max,
                                                        const std::vector<double>& refine) {
    if (!(support_lo < support_hi))
        throw std::invalid_argument("karandikar_integrate: empty support");
    if (n_max < 1) throw std::invalid_argument("karandikar_integrate: n_max must be >= 1");
    require_within_span(support_lo, support_hi, path, "karandikar_integrate");

    // Scan grid: uniform refinement of the support merged with the path grid
    // and any caller-supplied breakpoints of f.
    const std::size_t target = std::max<std::size_t>(4096, 4 * path.grid.size());
    std::vector<double> scan;
    scan.reserve(target + path.grid.size() + refine.size());
    for (std::size_t i = 0; i <= target; ++i)
        scan.push_back(support_lo + (support_hi - support_lo) * static_cast<double>(i) /
                                        static_cast<double>(target));
    for (double g : path.grid)
        if (g > support_lo && g < support_hi) scan.push_back(g);
    for (double g : refine)
        if (g > support_lo && g < support_hi) scan.push_back(g);
    scan = quad::merge_breakpoints(std::move(scan), support_lo, support_hi);

    const double span = support_hi - support_lo;
    const std::size_t stop_cap = 16 * scan.size() + 1024;

    KarandikarTrace trace;
    for (int n = 1; n <= n_max; ++n) {
        const double thr = std::ldexp(1.0, -n);
        std::vector<double> stops = {support_lo};
        std::vector<double> anchor_values = {f(support_lo)};
        double pos = support_lo;
        double fa = anchor_values.back();
        std::size_t j = 1;
        bool capped = false;
        while (j < scan.size()) {
            if (std::abs(f(scan[j]) - fa) < thr) {
                ++j;
                continue;
            }
            // First threshold crossing lies in (max(pos, scan[j-1]), scan[j]];
            // bisect keeping the right end on the crossing side, so that at a
            // clean jump located on the scan grid the abscissa is exact.
            double blo = std::max(pos, scan[j - 1]);
            double bhi = scan[j];
            for (int it = 0; it < 100 && bhi - blo > 1e-15 * span; ++it) {
                double mid = 0.5 * (blo + bhi);
                if (std::abs(f(mid) - fa) >= thr)
                    bhi = mid;
                else
                    blo = mid;
            }
            pos = bhi;
            fa = f(bhi);
            stops.push_back(bhi);
            anchor_values.push_back(fa);
            if (stops.size() > stop_cap) {
                capped = true;
                break;
            }
            // Do not advance j: the next crossing may sit in the same cell.
            if (bhi == scan[j]) ++j;
        }
        // A level whose scan exceeds the stop budget is abandoned: its partial
        // stop set would integrate the tail with a stale anchor value.  The
        // deepest fully-scanned level is what gets reported (a truncated first
        // level is kept only so the result is never empty).
        if (capped && !trace.level_values.empty()) break;
        if (stops.back() < support_hi) stops.push_back(support_hi);
        double value = 0.0;
        for (std::size_t k = 0; k + 1 < stops.size(); ++k)
            value += anchor_values[k] * path.increment(stops[k], stops[k + 1]);
        trace.stops.push_back(std::move(stops));
        trace.level_values.push_back(value);
        if (capped) break;
    }

    const auto& v = trace.level_values;
    if (v.size() >= 3 && static_cast<int>(v.size()) == n_max) {
        trace.converged = std::abs(v[v.size() - 1] - v[v.size() - 2]) < 1e-6 &&
                          std::abs(v[v.size() - 2] - v[v.size() - 3]) < 1e-6;
    }
    return {v.back(), trace};
}

std::pair<double, KarandikarTrace> karandikar_integrate(const StepFunction& f,
                                                        const GridNoisePath& path, int n_max) {
    f.validate();
    return karandikar_integrate([&f](double x) { return f(x); }, f.support_lo(), f.support_hi(),
                                path, n_max, f.breakpoints);
}

// ---------------------------------------------------------------------------
// riemann_stieltjes
// ---------------------------------------------------------------------------

double riemann_stieltjes(const PiecewiseC1& f, const GridNoisePath& path) {
    if (!f.value || !f.derivative)
        throw std::invalid_argument("riemann_stieltjes: value and derivative must be evaluable");
    if (!(f.support_lo < f.support_hi))
        throw std::invalid_argument("riemann_stieltjes: empty support");
    require_within_span(f.support_lo, f.support_hi, path, "riemann_stieltjes");
    std::vector<double> pts = f.kinks;
    for (double g : path.grid)
        if (g > f.support_lo && g < f.support_hi) pts.push_back(g);
    std::vector<double> panels = quad::merge_breakpoints(pts, f.support_lo, f.support_hi);
    double s = quad::integrate_composite(
        [&](double x) { return f.derivative(x) * path.value_at(x); }, panels, 8);
    return -s;
}

}  // namespace fkmc
