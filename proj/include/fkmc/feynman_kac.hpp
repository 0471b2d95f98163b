#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fkmc/noise.hpp"
#include "fkmc/paths.hpp"

namespace fkmc {

enum class PotentialKind { Zero, Linear, Harmonic, Tabulated, Callable };

/// Nonnegative potential on the domain closure. A constant offset c is NOT
/// folded into the pointwise values: set `constant_shift` instead, and every
/// estimator multiplies its final mean by the single factor e^{-c t} — the
/// exact semigroup shift identity — so shifted and unshifted runs with
/// shared seeds scale bitwise. `growth_certificate` is the caller's
/// assertion that a Callable potential is bounded below and grows at
/// infinity; validation demands it for callables on unbounded domains (the
/// engine cannot introspect them), while the other kinds carry known tails.
/// Trace estimators additionally verify a quantitative tail certificate and
/// fail hard when the tail cannot be certified.
struct PotentialSpec {
    PotentialKind kind = PotentialKind::Zero;
    std::vector<double> grid;    // Tabulated
    std::vector<double> values;  // Tabulated
    std::function<double(double)> fn;  // Callable
    bool growth_certificate = false;
    double constant_shift = 0.0;

    static PotentialSpec zero();
    static PotentialSpec linear();    // V(x) = x (half-line use)
    static PotentialSpec harmonic();  // V(x) = x^2 / 2
    static PotentialSpec tabulated(std::vector<double> grid, std::vector<double> values);
    static PotentialSpec callable(std::function<double(double)> fn);

    /// Pointwise base value (without the constant shift).
    double operator()(double x) const;
    /// inf of V over {|x| >= R} intersected with the domain, used by the
    /// trace truncation certificate (sampled estimate for Tabulated/Callable).
    double tail_inf(double R) const;
    void validate(const DomainSpec& domain) const;
};

/// Spatial/temporal resolution knobs; zeros select defaults
/// (n_steps = max(64, 2048 t); bin width b/max(16, min(n_steps/10, 256)) on
/// the interval, sqrt(t)/16 otherwise; window = bin width).
struct Resolution {
    std::size_t n_steps = 0;
    double bin_width = 0.0;
    double window = 0.0;

    Resolution resolved(const DomainSpec& domain, double t) const;
};

/// Monte Carlo estimate with bookkeeping. `std_error` is the sample standard
/// deviation of the per-path weights divided by sqrt(replicates), scaled by
/// the same deterministic prefactors as the mean.
struct KernelEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t replicates = 0;  // paths actually averaged
    std::size_t discards = 0;    // paths rejected (escaped the noise span)
    bool warning = false;        // discard fraction exceeded 1%
    double certificate = 0.0;    // trace truncation bound / running integral
    std::string note;
    std::size_t n_steps = 0;
    double bin_width = 0.0;
    double window = 0.0;
};

/// Two estimated sides of an identity with their standard errors.
struct CheckResult {
    double lhs = 0.0, lhs_se = 0.0;
    double rhs = 0.0, rhs_se = 0.0;
    std::string note;

    double joint_se() const;
    bool within(double n_se) const;
};

/// K(t;x,y): transition density times the mean of exp(-<L,V> + boundary
/// weights) over conditioned paths, with per-step survival corrections at
/// Dirichlet boundaries. Endpoints on a Dirichlet boundary return 0 with
/// zero error. Replicates run on substreams derived from (seed, replicate
/// index) and reduce in fixed chunk order, so results are bitwise identical
/// for any worker count.
KernelEstimate deterministic_kernel(const DomainSpec& domain, const PotentialSpec& V, double t,
                                    double x, double y, std::size_t n_paths,
                                    const Resolution& res, std::uint64_t seed, int workers = 1);

/// K(t;x,y) conditional on a noise realization: adds the per-path factor
/// exp(-xi(L)) with xi(L) evaluated by integrate_step on the occupation
/// profile. Paths whose profile leaves the noise span are discarded and
/// counted; a discard fraction above 1% sets the warning flag.
KernelEstimate random_kernel(const DomainSpec& domain, const PotentialSpec& V,
                             const GridNoisePath& noise, double t, double x, double y,
                             std::size_t n_paths, const Resolution& res, std::uint64_t seed,
                             int workers = 1);

/// Mollified kernel: the per-path weight uses <L, V + Xi'_eps> with the
/// smoothed noise derivative evaluated at bin centers.
KernelEstimate mollified_kernel(const DomainSpec& domain, const PotentialSpec& V,
                                const GridNoisePath& noise, const MollifierSpec& moll, double t,
                                double x, double y, std::size_t n_paths, const Resolution& res,
                                std::uint64_t seed, int workers = 1);

/// Trace integral of the diagonal kernel over the domain by Gauss-Legendre
/// quadrature with per-node seed substreams. On unbounded domains the
/// domain is truncated at `radius` (auto-selected when 0) subject to the
/// logged certificate Pi(t;R,R) e^{-t inf_{|x|>=R} V} < 1e-3 x running
/// integral; a violated certificate is an error, not a silent answer.
/// Pass `noise` (and optionally `moll`) for the conditional trace.
KernelEstimate trace_estimate(const DomainSpec& domain, const PotentialSpec& V,
                              const GridNoisePath* noise, const MollifierSpec* moll, double t,
                              std::size_t n_nodes, double radius, std::size_t paths_per_node,
                              const Resolution& res, std::uint64_t seed, int workers = 1);

/// Squared Hilbert-Schmidt norm of K(t/2) against the trace of K(t):
/// lhs = double quadrature of K(t/2;x,y)^2 with each squared value estimated
/// without bias as the product of two independent half-budget estimates;
/// rhs = trace_estimate at t. Quadrature needs at least 8 nodes.
CheckResult hs_norm_check(const DomainSpec& domain, const PotentialSpec& V,
                          const GridNoisePath* noise, const MollifierSpec* moll, double t,
                          std::size_t n_nodes, double radius, std::size_t paths_per_pair,
                          const Resolution& res, std::uint64_t seed, int workers = 1);

/// Semigroup identity: lhs = int K(t;x,z) K(tbar;z,y) dz with independent
/// substreams per (node, factor); rhs = K(t+tbar;x,y).
CheckResult semigroup_check(const DomainSpec& domain, const PotentialSpec& V,
                            const GridNoisePath* noise, const MollifierSpec* moll, double t,
                            double tbar, double x, double y, std::size_t n_nodes, double radius,
                            std::size_t paths_per_node, const Resolution& res,
                            std::uint64_t seed, int workers = 1);

/// E[prod_i Tr e^{-t_i H}] over the noise law: outer Monte Carlo over
/// sampled noise paths, one independent inner trace substream per
/// (noise, time) so the product is unbiased. `cov == nullptr` disables the
/// noise (degenerate outer average = product of deterministic traces). The
/// note reports the between-noise / within-estimate variance decomposition.
KernelEstimate laplace_transform_moment(const DomainSpec& domain, const PotentialSpec& V,
                                        const CovarianceModel* cov,
                                        const std::vector<double>& times, std::size_t n_noise,
                                        std::size_t n_nodes, std::size_t paths_per_node,
                                        const Resolution& res, std::uint64_t seed,
                                        int workers = 1);

}  // namespace fkmc
