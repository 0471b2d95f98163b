#pragma once

#include <functional>
#include <vector>

namespace fkmc::quad {

/// A one-dimensional quadrature rule: paired nodes and weights.
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Gauss–Legendre rule with n points on [-1, 1] (Newton iteration on the
/// Legendre polynomial; nodes accurate to machine precision). Results are
/// cached per n.
const Rule& gauss_legendre(int n);

/// Gauss–Legendre rule mapped to [a, b].
Rule gauss_legendre(int n, double a, double b);

/// ∫_a^b f dx with one n-point Gauss panel.
double integrate_panel(const std::function<double(double)>& f, double a, double b, int n);

/// Composite integration over consecutive panels [pts[0],pts[1]], ... with an
/// n-point Gauss rule per panel. `pts` must be nondecreasing.
double integrate_composite(const std::function<double(double)>& f,
                           const std::vector<double>& pts, int n);

/// Geometrically graded breakpoints from `from` toward the point `to`
/// (exclusive), halving the distance `levels` times. Used to resolve
/// integrable endpoint singularities such as |x|^{-r}, r < 1.
std::vector<double> graded_toward(double from, double to, int levels);

/// Merge-and-sort helper: union of breakpoint sets clipped to [lo, hi].
std::vector<double> merge_breakpoints(std::vector<double> pts, double lo, double hi);

}  // namespace fkmc::quad
