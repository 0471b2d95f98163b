#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "fkmc/feynman_kac.hpp"
#include "fkmc/noise.hpp"
#include "fkmc/paths.hpp"

namespace fkmc {

/// Finite-difference quadratic form -1/2 d2/dx2 + V + xi on a uniform grid,
/// reduced to a symmetric tridiagonal matrix. Construction: piecewise-linear
/// kinetic energy 1/2 sum (f_{i+1}-f_i)^2/h, trapezoid-weighted potential,
/// and Robin boundary terms -(coeff/2) f^2 taken directly from the Rayleigh
/// quotient; the generalized problem A f = lambda M f with the lumped
/// (diagonal) mass M is symmetrized as M^{-1/2} A M^{-1/2}. Dirichlet
/// endpoints are eliminated from the unknowns. Unbounded domains are
/// truncated at the supplied radius with artificial Dirichlet walls.
struct DiscreteForm {
    std::vector<double> nodes;    // active grid nodes (Dirichlet ends removed)
    std::vector<double> weights;  // trapezoid masses of the active nodes
    std::vector<double> diag;     // main diagonal of the symmetrized matrix
    std::vector<double> off;      // subdiagonal (size nodes.size() - 1)
    double h = 0.0;               // grid spacing
    double radius = 0.0;          // truncation radius (0 on bounded domains)

    std::size_t size() const { return nodes.size(); }
    /// y = B x for the symmetrized tridiagonal matrix.
    std::vector<double> apply(const std::vector<double>& x) const;
};

/// Smallest eigenpairs of a DiscreteForm. Eigenvector columns hold nodal
/// function values normalized to unit discrete (trapezoid) L2 norm; they are
/// orthonormal in that weighted inner product. `max_residual` is the largest
/// ||B psi - lambda psi||_2 over the returned pairs, measured on the
/// symmetrized matrix with unit-2-norm psi.
struct SpectralResult {
    std::vector<double> eigenvalues;            // ascending
    std::vector<std::vector<double>> vectors;   // vectors[k][i] at nodes[i]
    std::vector<double> nodes;
    std::vector<double> weights;
    double h = 0.0;
    double max_residual = 0.0;

    /// Largest deviation of the weighted Gram matrix from the identity.
    double orthonormality_defect() const;
    /// CSV rows "k,lambda" with full precision.
    void write_csv(const std::string& path) const;
};

/// Partial spectral sum sum_{k<=k_used} e^{-t lambda_k} with a geometric
/// tail estimate read off the last available eigenvalue gap. The estimate is
/// flagged unreliable when the gap is nonpositive or the tail exceeds
/// 1e-4 x the partial sum.
struct SpectralTraceResult {
    double value = 0.0;
    double tail = 0.0;
    bool unreliable = false;
};

/// Build the discrete form for the domain's boundary conditions.
/// `xi_at_nodes` (optional) supplies smoothed-noise derivative values at all
/// n+1 grid nodes, added to the potential diagonal. `xi_boundary_b` is an
/// optional extra boundary value added to the Robin term at b (diagnostic
/// variant of the interval Robin/Dirichlet case; the smoothed form proper
/// carries none). `n` is the number of grid cells (n >= 16, n+1 nodes);
/// unbounded domains require `radius` > 0.
DiscreteForm discretize_form(const DomainSpec& domain, const PotentialSpec& V,
                             const std::vector<double>* xi_at_nodes, std::size_t n,
                             double radius, double xi_boundary_b = 0.0);

/// Smallest k eigenpairs of the form's symmetric tridiagonal matrix
/// (bisection + inverse iteration via LAPACK). Requires 1 <= k <= size/4,
/// the trust range of the discretization. Residuals above 1e-8 are an error.
SpectralResult eigen_solve(const DiscreteForm& form, std::size_t k);

/// Trace of the discrete semigroup from the first k_used eigenvalues.
SpectralTraceResult spectral_trace(const SpectralResult& result, double t,
                                   std::size_t k_used);

/// Sampling budgets for the path-vs-spectrum comparison.
struct EquivalenceBudget {
    std::size_t n_nodes = 32;          // trace quadrature nodes (path side)
    std::size_t paths_per_node = 400;  // Monte Carlo paths per node
    std::size_t fd_cells = 2000;       // grid cells (spectral side)
    std::size_t k_used = 24;           // eigenvalues summed in the trace
    double radius = 0.0;               // truncation radius (unbounded domains)
    Resolution res;                    // path-side resolution knobs
};

/// One seed's comparison row.
struct EquivalenceSeed {
    std::uint64_t seed = 0;
    double path_trace = 0.0;      // Monte Carlo semigroup trace
    double path_se = 0.0;
    double spectral_value = 0.0;  // eigenvalue-sum trace, same noise draw
    double spectral_tail = 0.0;
    double diff = 0.0;
    bool agree = false;           // |diff| <= 3 joint standard errors
    bool tail_unreliable = false;
};

/// Verdict over all seeds: pass when at least 95% agree.
struct EquivalenceReport {
    std::vector<EquivalenceSeed> seeds;
    std::size_t n_agree = 0;
    bool pass = false;
    double epsilon = 0.0;
    double t = 0.0;

    nlohmann::json to_json() const;
};

/// For each seed: draw one noise path, smooth it with the bump of width
/// eps, estimate the semigroup trace two ways — Monte Carlo over conditioned
/// paths and the eigenvalue sum of the discrete form — on the SAME noise
/// realization, and compare within 3 joint standard errors (the spectral
/// side contributes its tail estimate as a systematic term). `cov == nullptr`
/// runs the noise-free comparison. Unbounded domains need budget.radius.
EquivalenceReport oracle_equivalence(const DomainSpec& domain, const PotentialSpec& V,
                                     const CovarianceModel* cov, double eps, double t,
                                     const std::vector<std::uint64_t>& seeds,
                                     const EquivalenceBudget& budget, int workers = 1);

}  // namespace fkmc
