#pragma once

#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "fkmc/step_function.hpp"

namespace fkmc {

/// The four stationary covariance families the engine knows how to sample
/// and integrate against. `gamma` denotes the (possibly singular) covariance
/// density of the noise: Cov(noise(f), noise(g)) = ∬ f(x) γ(x−y) g(y) dx dy.
enum class NoiseKind { Bounded, White, Fractional, LpSingular };

/// Immutable description of one noise family instance.
///
/// - White: γ = σ²·δ₀ (independent-increment antiderivative).
/// - Fractional: γ(x) = σ²·H(2H−1)|x|^{2H−2} with H ∈ (1/2, 1); the
///   antiderivative is two-sided fractional Brownian motion.
/// - Bounded: user-supplied bounded even density.
/// - LpSingular: even density with one integrable power singularity at 0,
///   declared via singular_exponent r ∈ (0,1) so quadratures can grade
///   their meshes toward the diagonal.
struct CovarianceModel {
    NoiseKind kind = NoiseKind::White;
    double sigma2 = 1.0;        // scale for White / Fractional
    double hurst = 0.75;        // Fractional only
    std::function<double(double)> density;  // Bounded / LpSingular: γ(x)
    double singular_exponent = 0.0;         // LpSingular: γ ~ |x|^{-r} near 0
    std::string label = "white";            // serialization tag

    static CovarianceModel white(double sigma2);
    static CovarianceModel fractional(double sigma2, double hurst);
    static CovarianceModel bounded(std::function<double(double)> density,
                                   std::string label = "bounded");
    static CovarianceModel lp_singular(std::function<double(double)> density,
                                       double singular_exponent,
                                       std::string label = "lp_singular");

    /// Throws std::invalid_argument on parameter violations
    /// (σ² ≤ 0, H outside (1/2,1), missing density, r outside [0,1)).
    void validate() const;

    /// γ evaluated pointwise; only meaningful for Bounded/LpSingular.
    double gamma(double x) const;
};

/// A sampled antiderivative path: values of Ξ on a fixed abscissa grid,
/// pinned to Ξ(0)=0, linearly interpolated in between. Immutable after
/// construction and safe to share across workers.
struct GridNoisePath {
    std::vector<double> grid;    // strictly increasing, contains 0
    std::vector<double> values;  // Ξ(grid[i])
    std::size_t anchor = 0;      // index with grid[anchor] == 0
    std::shared_ptr<const CovarianceModel> covariance;  // generating model (may be null for synthetic paths)

    /// Validating factory: grid strictly increasing with ≥ 2 points and an
    /// exact 0 entry; values[anchor] must be exactly 0.
    static GridNoisePath make(std::vector<double> grid, std::vector<double> values,
                              std::shared_ptr<const CovarianceModel> cov = nullptr);

    /// Non-validating factory for increment experiments (e.g. constant
    /// shifts, which deliberately break the Ξ(0)=0 pin). The grid must
    /// still be strictly increasing and contain 0.
    static GridNoisePath make_unchecked(std::vector<double> grid, std::vector<double> values,
                                        std::shared_ptr<const CovarianceModel> cov = nullptr);

    double span_lo() const { return grid.front(); }
    double span_hi() const { return grid.back(); }

    /// Linear interpolation of Ξ at x ∈ [span_lo, span_hi].
    double value_at(double x) const;

    /// Ξ(b) − Ξ(a) via the interpolant; exact at grid abscissae.
    double increment(double a, double b) const;

    /// Export as two-column CSV (abscissa, value).
    void write_csv(const std::string& path) const;
};

/// Compactly supported even mollifier ρ_ε(x) = ρ(x/ε)/ε. The default
/// profile is ρ(x) = (315/256)(1−x²)⁴ on [−1,1] (unit integral in closed
/// form, inexpensive derivative, C³ smoothness).
struct MollifierSpec {
    double epsilon = 0.1;
    std::function<double(double)> profile;             // ρ on [−1,1]
    std::function<double(double)> profile_derivative;  // ρ'
    double profile_support = 1.0;

    explicit MollifierSpec(double eps = 0.1);

    /// ρ_ε(x).
    double rho(double x) const;
    /// d/dx ρ_ε(x).
    double drho(double x) const;

    /// Checks ∫ρ_ε = 1 within 1e−10 and evenness on a probe grid; throws
    /// std::invalid_argument otherwise or when ε ≤ 0.
    void validate() const;

    /// (ρ_ε ∗ ρ_ε)(u): self-convolution, supported on [−2ε, 2ε].
    double self_convolution(double u) const;
};

/// Bilinear form ⟨f, g⟩_γ = ∬ f(x) γ(x−y) g(y) dx dy for step functions.
/// White and Fractional are closed-form; Bounded/LpSingular reduce the
/// double integral to ∫ γ(w)·(f⋆g)(w) dw against the exact piecewise-linear
/// cross-correlation, with a mesh graded toward w = 0 and split at |w| = 1
/// for the singular families.
double gamma_inner(const StepFunction& f, const StepFunction& g, const CovarianceModel& cov);

/// ‖f‖²_γ = Var(Σ cᵢ·(Ξ(x_{i+1})−Ξ(xᵢ))). Throws on invalid input; singular
/// quadrature failure raises std::runtime_error carrying the residual.
double gamma_seminorm_sq(const StepFunction& f, const CovarianceModel& cov);

/// E[Ξ(x)Ξ(y)] via the four-quadrant indicator formula (signed indicators
/// I_x = 1_{[0,x)} for x ≥ 0 and −1_{[x,0)} for x < 0 fed to gamma_inner).
double xi_covariance(double x, double y, const CovarianceModel& cov);

/// Draw one antiderivative path on `grid` (strictly increasing, containing
/// 0). White: independent Gaussian increments (exact). Fractional: exact
/// increment-covariance factorization — dense Cholesky below 4096 points,
/// circulant embedding (uniform grids) above. Bounded/LpSingular: dense
/// factorization of the value covariance with diagonal jitter ≤ 1e−10.
/// Indefiniteness beyond the jitter rejects the model, reporting the
/// offending eigenvalue.
GridNoisePath sample_noise_path(const CovarianceModel& cov, std::vector<double> grid,
                                std::mt19937_64& rng);

/// Ξ'_ε at each query point: ∫ Ξ(x−z) ρ'_ε(z) dz integrated exactly over
/// the path's linear interpolant (panel-wise Gauss, polynomial-exact).
/// Each query must lie ≥ ε inside the path span.
std::vector<double> mollified_derivative(const GridNoisePath& path, const MollifierSpec& m,
                                         const std::vector<double>& query);

/// (γ ∗ ρ_ε^{∗2})(lag): the stationary covariance of Ξ'_ε. White is exact
/// (σ²·ρ_ε^{∗2}(lag)); the others integrate γ against the self-convolution
/// with singularity-aware panels.
double mollified_covariance(const CovarianceModel& cov, double eps, double lag);

}  // namespace fkmc
