#pragma once

#include <random>
#include <string>
#include <vector>

#include "fkmc/step_function.hpp"

namespace fkmc {

enum class DomainCase { FullLine, HalfLine, Interval };

struct BoundaryCondition {
    enum class Kind { Dirichlet, Robin };
    Kind kind = Kind::Dirichlet;
    double coefficient = 0.0;  // Robin weight; ignored for Dirichlet

    static BoundaryCondition dirichlet() { return {Kind::Dirichlet, 0.0}; }
    static BoundaryCondition robin(double coefficient) {
        return {Kind::Robin, coefficient};
    }
    bool is_dirichlet() const { return kind == Kind::Dirichlet; }
};

/// One of the three domain shapes: the full line (no boundary), the half
/// line [0, inf) with a condition at 0, or the interval [0, b] with
/// conditions at both ends. Robin conditions carry no killing; they act
/// downstream as exponential weights on the boundary local time, with
/// effective weight -inf standing in for Dirichlet (a path touching the
/// boundary contributes zero).
struct DomainSpec {
    DomainCase kind = DomainCase::FullLine;
    double b = 0.0;  // interval length (Interval only)
    BoundaryCondition bc0;
    BoundaryCondition bcb;

    static DomainSpec full_line();
    static DomainSpec half_line(BoundaryCondition bc0);
    static DomainSpec interval(double b, BoundaryCondition bc0, BoundaryCondition bcb);

    void validate() const;
    bool has_boundary0() const { return kind != DomainCase::FullLine; }
    bool has_boundaryb() const { return kind == DomainCase::Interval; }

    /// Exponential weight on the boundary local time at 0: -inf for
    /// Dirichlet, the Robin coefficient otherwise.
    double alpha_bar() const;
    /// Same at b (Interval only).
    double beta_bar() const;

    bool contains(double x) const;    // open domain
    bool in_closure(double x) const;  // domain closure

    /// {"case":..., "b":..., "bc0":..., "bcb":..., "alpha":..., "beta":...}
    std::string to_json() const;
};

/// A discretized conditioned (or free) path over a uniform time grid.
/// `free_positions` holds the unreflected Brownian path to the selected
/// signed/translated target; `positions` holds its image in the domain
/// closure under the reflection coupling. Survival corrections and boundary
/// occupation read the free path, whose law near the boundary lattice is
/// exactly Brownian.
struct BridgePath {
    double t = 0.0;  // horizon
    double x = 0.0;  // prescribed start
    double y = 0.0;  // prescribed end (in the domain closure)
    double target = 0.0;  // signed/translated endpoint of the free path
    std::vector<double> free_positions;  // n+1 values
    std::vector<double> positions;       // n+1 values in the closure
    DomainSpec domain;

    std::size_t n_steps() const { return positions.size() - 1; }
    double dt() const { return t / static_cast<double>(n_steps()); }

    /// Two-column CSV (time, position) of the folded path.
    void write_csv(const std::string& path) const;
};

/// Occupation record of one path: interior occupation masses over uniform
/// bins plus boundary occupation rates and hit indicators.
struct LocalTimeProfile {
    double t = 0.0;          // total time carried by the path
    double bin_width = 0.0;  // actual bin width (adjusted to divide b on intervals)
    std::vector<double> edges;   // k+1 ascending bin edges, multiples of bin_width
    std::vector<double> masses;  // k occupation times, summing to t
    double boundary0 = 0.0;  // boundary occupation rate at 0 (time per length)
    double boundaryb = 0.0;  // same at b (Interval only)
    bool hit0 = false;       // free path touched the boundary lattice of 0
    bool hitb = false;       // same for b

    double center(std::size_t i) const { return 0.5 * (edges[i] + edges[i + 1]); }
    /// Occupation density as a step function (mass / bin width per bin).
    StepFunction to_step() const;
};

namespace detail {
/// Fault-injection knob for the consistency suite: when >= 0, caps the
/// number of image pairs summed by the interval transition density, breaking
/// its advertised accuracy on purpose. Negative (default) keeps the exact
/// truncation rule. Tests only; not thread-safe to flip mid-run.
extern int interval_image_cap;
}  // namespace detail

/// Transition density of the domain's reflected Brownian motion:
/// FullLine -> G_t(x-y); HalfLine -> G_t(x-y) + G_t(x+y); Interval -> the
/// image sum over z in 2b*Z +/- y, truncated once a term falls below 1e-16
/// of the running sum (with a floor on the number of images). Throws
/// std::invalid_argument for t <= 0.
double transition_kernel(const DomainSpec& domain, double t, double x, double y);

/// Gaussian heat kernel G_t(u).
double gauss_kernel(double t, double u);

/// Conditioned path from x to y over horizon t with n_steps uniform steps:
/// selects the free target (sign for the half line, lattice translate for
/// the interval) by its Gaussian weight, samples the exact Brownian bridge
/// to it, and folds. Consumes one uniform for the target choice (half
/// line/interval) plus n_steps-1 normals. Endpoints on a Dirichlet boundary
/// are rejected (the kernel vanishes there).
BridgePath sample_bridge(const DomainSpec& domain, double t, double x, double y,
                         std::size_t n_steps, std::mt19937_64& rng);

/// Unconditioned path started at x (free Brownian increments, then folded);
/// consumes n_steps normals.
BridgePath sample_free_path(const DomainSpec& domain, double t, double x, std::size_t n_steps,
                            std::mt19937_64& rng);

/// Occupation profile of the folded linear interpolant of the free path
/// (segments are split at fold points, so the chord geometry matches the
/// reflection coupling exactly). Bin edges are multiples of the bin width,
/// which is adjusted to divide b exactly on intervals. Boundary occupation
/// uses the same window estimator as boundary_local_time with window equal
/// to the bin width.
LocalTimeProfile local_time(const BridgePath& path, double bin_width);

/// Window estimator of the boundary occupation rate at boundary c: the
/// occupation time of the pre-fold symmetric window (the union of
/// (l - eps, l + eps) over the boundary's reflection lattice l, visited by
/// the free path's interpolant), divided by 2*eps. The symmetric pre-fold
/// window keeps the estimator consistent for windows below the step
/// resolution, where a post-fold one-sided window would degenerate.
double boundary_local_time(const BridgePath& path, double c, double eps);

/// Killing indicator at a Dirichlet boundary: 0 if any free position
/// touches or crosses the boundary's reflection lattice; otherwise 1 with
/// probability prod_i (1 - exp(-2 d_i d_{i+1} / dt)), the per-step
/// Brownian-bridge crossing correction, realized by one auxiliary uniform
/// per step (always consuming exactly n_steps draws). On the full line, c
/// is read as an arbitrary absorbing level.
int dirichlet_survival(const BridgePath& path, double c, std::mt19937_64& rng);

}  // namespace fkmc
