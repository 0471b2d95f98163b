#include "fkmc/noise.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>

#include "fkmc/quadrature.hpp"

namespace fkmc {

// ---------------------------------------------------------------------------
// CovarianceModel
// ---------------------------------------------------------------------------

CovarianceModel CovarianceModel::white(double sigma2) {
    CovarianceModel m;
    m.kind = NoiseKind::White;
    m.sigma2 = sigma2;
    m.label = "white";
    m.validate();
    return m;
}

CovarianceModel CovarianceModel::fractional(double sigma2, double hurst) {
    CovarianceModel m;
    m.kind = NoiseKind::Fractional;
    m.sigma2 = sigma2;
    m.hurst = hurst;
    m.label = "fractional";
    m.validate();
    return m;
}

CovarianceModel CovarianceModel::bounded(std::function<double(double)> density,
                                         std::string label) {
    CovarianceModel m;
    m.kind = NoiseKind::Bounded;
    m.density = std::move(density);
    m.label = std::move(label);
    m.validate();
    return m;
}

CovarianceModel CovarianceModel::lp_singular(std::function<double(double)> density,
                                             double singular_exponent, std::string label) {
    CovarianceModel m;
    m.kind = NoiseKind::LpSingular;
    m.density = std::move(density);
    m.singular_exponent = singular_exponent;
    m.label = std::move(label);
    m.validate();
    return m;
}

void CovarianceModel::validate() const {
    switch (kind) {
        case NoiseKind::White:
            if (!(sigma2 > 0.0)) throw std::invalid_argument("white noise requires sigma2 > 0");
            break;
        case NoiseKind::Fractional:
            if (!(sigma2 > 0.0)) throw std::invalid_argument("fractional noise requires sigma2 > 0");
            if (!(hurst > 0.5 && hurst < 1.0))
                throw std::invalid_argument("fractional noise requires hurst in (1/2, 1)");
            break;
        case NoiseKind::Bounded:
            if (!density) throw std::invalid_argument("bounded noise requires a density");
            break;
        case NoiseKind::LpSingular:
            if (!density) throw std::invalid_argument("lp-singular noise requires a density");
            if (!(singular_exponent >= 0.0 && singular_exponent < 1.0))
                throw std::invalid_argument(
                    "lp-singular noise requires singular_exponent in [0, 1)");
            break;
    }
}

double CovarianceModel::gamma(double x) const {
    switch (kind) {
        case NoiseKind::Bounded:
        case NoiseKind::LpSingular:
            return density(x);
        case NoiseKind::Fractional:
            return sigma2 * hurst * (2.0 * hurst - 1.0) *
                   std::pow(std::abs(x), 2.0 * hurst - 2.0);
        case NoiseKind::White:
            throw std::logic_error("white noise has no pointwise covariance density");
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// GridNoisePath
// ---------------------------------------------------------------------------

static std::size_t find_anchor(const std::vector<double>& grid) {
    if (grid.size() < 2) throw std::invalid_argument("noise grid needs at least 2 points");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i] < grid[i + 1]))
            throw std::invalid_argument("noise grid must be strictly increasing");
    }
    auto it = std::lower_bound(grid.begin(), grid.end(), 0.0);
    if (it == grid.end() || *it != 0.0)
        throw std::invalid_argument("noise grid must contain the abscissa 0");
    return static_cast<std::size_t>(it - grid.begin());
}

GridNoisePath GridNoisePath::make(std::vector<double> grid, std::vector<double> values,
                                  std::shared_ptr<const CovarianceModel> cov) {
    GridNoisePath p = make_unchecked(std::move(grid), std::move(values), std::move(cov));
    if (p.values[p.anchor] != 0.0)
        throw std::invalid_argument("noise path must have value exactly 0 at abscissa 0");
    return p;
}

GridNoisePath GridNoisePath::make_unchecked(std::vector<double> grid, std::vector<double> values,
                                            std::shared_ptr<const CovarianceModel> cov) {
    if (grid.size() != values.size())
        throw std::invalid_argument("noise path grid/values size mismatch");
    GridNoisePath p;
    p.anchor = find_anchor(grid);
    p.grid = std::move(grid);
    p.values = std::move(values);
    p.covariance = std::move(cov);
    return p;
}

// Index of the cell [grid[j], grid[j+1]] containing x.
static std::size_t cell_index(const std::vector<double>& grid, double x) {
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    std::size_t j = (it == grid.begin()) ? 0 : static_cast<std::size_t>(it - grid.begin()) - 1;
    if (j + 1 >= grid.size()) j = grid.size() - 2;
    return j;
}

double GridNoisePath::value_at(double x) const {
    if (x < grid.front() - 1e-12 || x > grid.back() + 1e-12)
        throw std::invalid_argument("noise path evaluated outside its span");
    std::size_t j = cell_index(grid, x);
    double theta = (x - grid[j]) / (grid[j + 1] - grid[j]);
    return values[j] + theta * (values[j + 1] - values[j]);
}

double GridNoisePath::increment(double a, double b) const {
    // Built purely from grid-cell increments so that exactly-shifted value
    // arrays produce bitwise-identical results (increment-only dependence).
    if (a > b) return -increment(b, a);
    if (a < grid.front() - 1e-12 || b > grid.back() + 1e-12)
        throw std::invalid_argument("noise increment outside the path span");
    std::size_t ja = cell_index(grid, a);
    std::size_t jb = cell_index(grid, b);
    auto cell_delta = [&](std::size_t j) { return values[j + 1] - values[j]; };
    auto frac = [&](std::size_t j, double x) { return (x - grid[j]) / (grid[j + 1] - grid[j]); };
    if (ja == jb) return (frac(ja, b) - frac(ja, a)) * cell_delta(ja);
    double s = (1.0 - frac(ja, a)) * cell_delta(ja);
    for (std::size_t j = ja + 1; j < jb; ++j) s += cell_delta(j);
    s += frac(jb, b) * cell_delta(jb);
    return s;
}

void GridNoisePath::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "abscissa,value\n";
    char buf[64];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", grid[i], values[i]);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// MollifierSpec
// ---------------------------------------------------------------------------

// Default bump (315/256)(1-x^2)^4 on [-1,1]; the constant 315/256 makes the
// integral exactly 1 (∫(1-x^2)^4 = 256/315).
static double default_bump(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    double u = 1.0 - x * x;
    double u2 = u * u;
    return (315.0 / 256.0) * u2 * u2;
}

static double default_bump_derivative(double x) {
    if (std::abs(x) >= 1.0) return 0.0;
    double u = 1.0 - x * x;
    return (315.0 / 256.0) * 4.0 * u * u * u * (-2.0 * x);
}

MollifierSpec::MollifierSpec(double eps)
    : epsilon(eps), profile(default_bump), profile_derivative(default_bump_derivative) {}

double MollifierSpec::rho(double x) const { return profile(x / epsilon) / epsilon; }

double MollifierSpec::drho(double x) const {
    return profile_derivative(x / epsilon) / (epsilon * epsilon);
}

void MollifierSpec::validate() const {
    if (!(epsilon > 0.0)) throw std::invalid_argument("mollifier width must be positive");
    if (!profile || !profile_derivative)
        throw std::invalid_argument("mollifier profile and derivative must be evaluable");
    double mass = quad::integrate_panel([this](double x) { return rho(x); }, -epsilon, epsilon, 64);
    if (std::abs(mass - 1.0) > 1e-10)
        throw std::invalid_argument("mollifier integral deviates from 1 beyond 1e-10");
    for (double u : {0.13, 0.47, 0.82}) {
        if (std::abs(profile(u) - profile(-u)) > 1e-12)
            throw std::invalid_argument("mollifier profile must be even");
    }
}

double MollifierSpec::self_convolution(double u) const {
    double lo = std::max(-epsilon, u - epsilon);
    double hi = std::min(epsilon, u + epsilon);
    if (lo >= hi) return 0.0;
    // Product of two degree-8 polynomial pieces: one 9-point panel is exact.
    return quad::integrate_panel([&](double v) { return rho(v) * rho(u - v); }, lo, hi, 9);
}

// ---------------------------------------------------------------------------
// gamma_inner / gamma_seminorm_sq / xi_covariance
// ---------------------------------------------------------------------------

// Exact cross-correlation (f ⋆ g)(w) = ∫ f(u) g(u−w) du of two step
// functions: piecewise linear in w; evaluated directly from piece overlaps.
static double cross_correlation(const StepFunction& f, const StepFunction& g, double w) {
    double s = 0.0;
    for (std::size_t i = 0; i < f.pieces(); ++i) {
        const double fa = f.breakpoints[i], fb = f.breakpoints[i + 1];
        if (f.levels[i] == 0.0) continue;
        for (std::size_t j = 0; j < g.pieces(); ++j) {
            if (g.levels[j] == 0.0) continue;
            const double ga = g.breakpoints[j] + w, gb = g.breakpoints[j + 1] + w;
            const double overlap = std::min(fb, gb) - std::max(fa, ga);
            if (overlap > 0.0) s += f.levels[i] * g.levels[j] * overlap;
        }
    }
    return s;
}

// ∫ f·g for two step functions (used by the white-noise closed form).
static double step_product_integral(const StepFunction& f, const StepFunction& g) {
    return cross_correlation(f, g, 0.0);
}

// Covariance of two antiderivative increments for fractional noise:
// Cov(Ξ(b)−Ξ(a), Ξ(d)−Ξ(c)) from the two-sided fBm covariance.
static double fbm_increment_cov(double a, double b, double c, double d, double sigma2,
                                double H) {
    auto p = [H](double u) { return std::pow(std::abs(u), 2.0 * H); };
    return 0.5 * sigma2 * (p(b - c) + p(a - d) - p(b - d) - p(a - c));
}

// ∫_{lo}^{hi} h(w) dw where h ~ |w−c|^{−r} × smooth at the endpoint c
// (c must equal lo or hi). The substitution w = c ± v^{1/(1−r)} removes the
// power singularity exactly, leaving a smooth integrand in v.
static double integrate_endpoint_singular(const std::function<double(double)>& h, double lo,
                                          double hi, double c, double r, int n_panels,
                                          int gauss_n) {
    if (hi <= lo) return 0.0;
    const double s = 1.0 / (1.0 - r);
    const double span = hi - lo;
    const double T = std::pow(span, 1.0 - r);
    const double sign = (c == lo) ? 1.0 : -1.0;
    auto g = [&](double v) {
        double w = c + sign * std::pow(v, s);
        return h(w) * s * std::pow(v, s - 1.0);
    };
    std::vector<double> panels(n_panels + 1);
    for (int i = 0; i <= n_panels; ++i) panels[i] = T * i / n_panels;
    return quad::integrate_composite(g, panels, gauss_n);
}

// Quadrature of ∫ γ(w)·A(w) dw for the density families, where A is the
// piecewise-linear cross-correlation. Splits at w = 0 and |w| = 1; the two
// panels touching w = 0 use the power substitution when γ is singular there.
static double density_inner(const StepFunction& f, const StepFunction& g,
                            const CovarianceModel& cov, int n_panels, int gauss_n) {
    std::vector<double> pts;
    for (double a : f.breakpoints)
        for (double c : g.breakpoints) pts.push_back(a - c);
    double lo = *std::min_element(pts.begin(), pts.end());
    double hi = *std::max_element(pts.begin(), pts.end());
    if (lo >= hi) return 0.0;
    const bool singular = cov.kind == NoiseKind::LpSingular && cov.singular_exponent > 0.0;
    pts.push_back(0.0);
    pts.push_back(1.0);
    pts.push_back(-1.0);
    std::vector<double> panels = quad::merge_breakpoints(pts, lo, hi);
    auto integrand = [&](double w) { return cov.gamma(w) * cross_correlation(f, g, w); };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < panels.size(); ++i) {
        const double a = panels[i], b = panels[i + 1];
        if (singular && b == 0.0) {
            total += integrate_endpoint_singular(integrand, a, b, b, cov.singular_exponent,
                                                 n_panels, gauss_n);
        } else if (singular && a == 0.0) {
            total += integrate_endpoint_singular(integrand, a, b, a, cov.singular_exponent,
                                                 n_panels, gauss_n);
        } else {
            total += quad::integrate_panel(integrand, a, b, gauss_n);
        }
    }
    return total;
}

double gamma_inner(const StepFunction& f, const StepFunction& g, const CovarianceModel& cov) {
    f.validate();
    g.validate();
    cov.validate();
    switch (cov.kind) {
        case NoiseKind::White:
            return cov.sigma2 * step_product_integral(f, g);
        case NoiseKind::Fractional: {
            double s = 0.0;
            for (std::size_t i = 0; i < f.pieces(); ++i) {
                if (f.levels[i] == 0.0) continue;
                for (std::size_t j = 0; j < g.pieces(); ++j) {
                    if (g.levels[j] == 0.0) continue;
                    s += f.levels[i] * g.levels[j] *
                         fbm_increment_cov(f.breakpoints[i], f.breakpoints[i + 1],
                                           g.breakpoints[j], g.breakpoints[j + 1], cov.sigma2,
                                           cov.hurst);
                }
            }
            return s;
        }
        case NoiseKind::Bounded:
            return density_inner(f, g, cov, 4, 8);
        case NoiseKind::LpSingular: {
            // Two resolutions; disagreement is a non-convergence diagnostic.
            double coarse = density_inner(f, g, cov, 6, 8);
            double fine = density_inner(f, g, cov, 10, 12);
            double residual = std::abs(fine - coarse);
            if (residual > 1e-6 * std::max(1.0, std::abs(fine))) {
                std::ostringstream msg;
                msg << "singular covariance quadrature did not converge; residual " << residual;
                throw std::runtime_error(msg.str());
            }
            return fine;
        }
    }
    return 0.0;
}

double gamma_seminorm_sq(const StepFunction& f, const CovarianceModel& cov) {
    if (!std::isfinite(f.support_lo()) || !std::isfinite(f.support_hi()))
        throw std::invalid_argument("gamma_seminorm_sq requires compact support");
    return gamma_inner(f, f, cov);
}

// Var(Ξ(L)) for L ≥ 0; stationary γ makes this a function of |L| only.
static double value_variance(double L, const CovarianceModel& cov) {
    L = std::abs(L);
    if (L == 0.0) return 0.0;
    StepFunction ind = StepFunction::indicator(0.0, L);
    return gamma_inner(ind, ind, cov);
}

double xi_covariance(double x, double y, const CovarianceModel& cov) {
    cov.validate();
    if (x == 0.0 || y == 0.0) return 0.0;
    switch (cov.kind) {
        case NoiseKind::White: {
            // Signed indicators overlap only when x and y share a sign.
            if ((x > 0.0) != (y > 0.0)) return 0.0;
            return cov.sigma2 * std::min(std::abs(x), std::abs(y));
        }
        case NoiseKind::Fractional: {
            auto p = [&](double u) { return std::pow(std::abs(u), 2.0 * cov.hurst); };
            return 0.5 * cov.sigma2 * (p(x) + p(y) - p(x - y));
        }
        case NoiseKind::Bounded:
        case NoiseKind::LpSingular: {
            // Stationary increments: E[Ξ(x)Ξ(y)] = (v(x)+v(y)−v(x−y))/2,
            // the indicator-pair inner product in closed variance form.
            return 0.5 * (value_variance(x, cov) + value_variance(y, cov) -
                          value_variance(x - y, cov));
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// sample_noise_path
// ---------------------------------------------------------------------------

namespace {

// Values from increments, anchored at Ξ(0)=0 (anchor index a).
std::vector<double> values_from_increments(const std::vector<double>& inc, std::size_t a,
                                           std::size_t n) {
    std::vector<double> v(n);
    v[a] = 0.0;
    for (std::size_t i = a; i + 1 < n; ++i) v[i + 1] = v[i] + inc[i];
    for (std::size_t i = a; i > 0; --i) v[i - 1] = v[i] - inc[i - 1];
    return v;
}

bool is_uniform(const std::vector<double>& grid, double* dx_out) {
    double dx = grid[1] - grid[0];
    for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
        if (std::abs((grid[i + 1] - grid[i]) - dx) > 1e-9 * dx) return false;
    }
    *dx_out = dx;
    return true;
}

// Cholesky with an escalating relative diagonal jitter capped at 1e-10.
// Returns the factor; throws with the offending eigenvalue when the matrix
// is indefinite beyond the cap.
Eigen::MatrixXd cholesky_with_jitter(Eigen::MatrixXd m, const char* what) {
    const double scale = m.diagonal().maxCoeff();
    for (double jitter : {0.0, 1e-13, 1e-12, 1e-11, 1e-10}) {
        Eigen::MatrixXd shifted = m;
        shifted.diagonal().array() += jitter * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) return llt.matrixL();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << what << " covariance matrix is indefinite beyond the 1e-10 jitter; "
        << "smallest eigenvalue " << es.eigenvalues().minCoeff();
    throw std::runtime_error(msg.str());
}

std::vector<double> sample_white_increments(const CovarianceModel& cov,
                                            const std::vector<double>& grid,
                                            std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> inc(grid.size() - 1);
    const double sigma = std::sqrt(cov.sigma2);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        inc[i] = sigma * std::sqrt(grid[i + 1] - grid[i]) * normal(rng);
    return inc;
}

std::vector<double> sample_fractional_dense(const CovarianceModel& cov,
                                            const std::vector<double>& grid,
                                            std::mt19937_64& rng) {
    const std::size_t m = grid.size() - 1;
    Eigen::MatrixXd C(m, m);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i; j < m; ++j) {
            double v = fbm_increment_cov(grid[i], grid[i + 1], grid[j], grid[j + 1], cov.sigma2,
                                         cov.hurst);
            C(i, j) = v;
            C(j, i) = v;
        }
    Eigen::MatrixXd L = cholesky_with_jitter(std::move(C), "fractional increment");
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(m);
    for (std::size_t i = 0; i < m; ++i) z(i) = normal(rng);
    Eigen::VectorXd inc = L * z;
    return std::vector<double>(inc.data(), inc.data() + m);
}

// Circulant embedding of the stationary increment sequence on a uniform
// grid (Dietrich–Newsam). Exact when the embedded circulant is PSD, which
// holds for these autocovariances; tiny negative rounding is clamped.
std::vector<double> sample_fractional_circulant(const CovarianceModel& cov, std::size_t m,
                                                double dx, std::mt19937_64& rng) {
    const double H = cov.hurst;
    auto autocov = [&](std::size_t k) {
        double kk = static_cast<double>(k);
        return 0.5 * cov.sigma2 * std::pow(dx, 2.0 * H) *
               (std::pow(kk + 1.0, 2.0 * H) - 2.0 * std::pow(kk, 2.0 * H) +
                std::pow(std::abs(kk - 1.0), 2.0 * H));
    };
    const std::size_t M = 2 * (m - 1);
    std::vector<std::complex<double>> c(M), freq(M);
    for (std::size_t j = 0; j < m; ++j) c[j] = autocov(j);
    for (std::size_t j = m; j < M; ++j) c[j] = autocov(M - j);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(M),
                                      reinterpret_cast<fftw_complex*>(c.data()),
                                      reinterpret_cast<fftw_complex*>(freq.data()),
                                      FFTW_FORWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    double max_ev = 0.0;
    for (auto& f : freq) max_ev = std::max(max_ev, f.real());
    std::vector<double> lambda(M);
    for (std::size_t j = 0; j < M; ++j) {
        double ev = freq[j].real();
        if (ev < -1e-10 * max_ev) {
            std::ostringstream msg;
            msg << "circulant embedding indefinite beyond tolerance; eigenvalue " << ev;
            throw std::runtime_error(msg.str());
        }
        lambda[j] = std::max(ev, 0.0);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::complex<double>> w(M), synth(M);
    for (std::size_t j = 0; j < M; ++j) {
        double a = normal(rng), b = normal(rng);
        double amp = std::sqrt(lambda[j] / (2.0 * M));
        w[j] = std::complex<double>(amp * a, amp * b);
    }
    plan = fftw_plan_dft_1d(static_cast<int>(M), reinterpret_cast<fftw_complex*>(w.data()),
                            reinterpret_cast<fftw_complex*>(synth.data()), FFTW_FORWARD,
                            FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    std::vector<double> inc(m);
    for (std::size_t i = 0; i < m; ++i) inc[i] = std::sqrt(2.0) * synth[i].real();
    return inc;
}

std::vector<double> sample_density_values(const CovarianceModel& cov,
                                          const std::vector<double>& grid, std::size_t anchor,
                                          std::mt19937_64& rng) {
    // Value covariance V_ij = E[Ξ(g_i)Ξ(g_j)] over the non-anchor nodes,
    // assembled from the stationary variance profile and factorized.
    const std::size_t n = grid.size();
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
        if (i != anchor) idx.push_back(i);
    const std::size_t p = idx.size();

    std::map<long long, double> vcache;  // distance (in 1e-12 quanta) -> variance
    auto variance_of = [&](double L) {
        L = std::abs(L);
        long long key = std::llround(L * 1e12);
        auto it = vcache.find(key);
        if (it != vcache.end()) return it->second;
        double v = value_variance(L, cov);
        vcache.emplace(key, v);
        return v;
    };
    Eigen::MatrixXd V(p, p);
    for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = a; b < p; ++b) {
            double x = grid[idx[a]], y = grid[idx[b]];
            double v = 0.5 * (variance_of(x) + variance_of(y) - variance_of(x - y));
            V(a, b) = v;
            V(b, a) = v;
        }
    }
    Eigen::MatrixXd L = cholesky_with_jitter(std::move(V), cov.label.c_str());
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(p);
    for (std::size_t i = 0; i < p; ++i) z(i) = normal(rng);
    Eigen::VectorXd vals = L * z;
    std::vector<double> out(n, 0.0);
    for (std::size_t a = 0; a < p; ++a) out[idx[a]] = vals(a);
    return out;
}

}  // namespace

GridNoisePath sample_noise_path(const CovarianceModel& cov, std::vector<double> grid,
                                std::mt19937_64& rng) {
    cov.validate();
    const std::size_t anchor = find_anchor(grid);
    const std::size_t n = grid.size();
    std::vector<double> values;
    switch (cov.kind) {
        case NoiseKind::White:
            values = values_from_increments(sample_white_increments(cov, grid, rng), anchor, n);
            break;
        case NoiseKind::Fractional: {
            double dx = 0.0;
            if (n >= 4096 && is_uniform(grid, &dx)) {
                values = values_from_increments(sample_fractional_circulant(cov, n - 1, dx, rng),
                                                anchor, n);
            } else {
                values = values_from_increments(sample_fractional_dense(cov, grid, rng), anchor, n);
            }
            break;
        }
        case NoiseKind::Bounded:
        case NoiseKind::LpSingular:
            values = sample_density_values(cov, grid, anchor, rng);
            break;
    }
    values[anchor] = 0.0;
    return GridNoisePath::make(std::move(grid), std::move(values),
                               std::make_shared<CovarianceModel>(cov));
}

// ---------------------------------------------------------------------------
// mollified_derivative / mollified_covariance
// ---------------------------------------------------------------------------

std::vector<double> mollified_derivative(const GridNoisePath& path, const MollifierSpec& m,
                                         const std::vector<double>& query) {
    m.validate();
    const double eps = m.epsilon;
    std::vector<double> out;
    out.reserve(query.size());
    for (double x : query) {
        if (x - eps < path.span_lo() - 1e-12 || x + eps > path.span_hi() + 1e-12)
            throw std::invalid_argument(
                "mollified_derivative query must lie at least eps inside the path span");
        // Panels split where x - z crosses a path grid abscissa; on each
        // panel the integrand (linear Ξ) × (polynomial ρ') has degree ≤ 8,
        // so 5-point Gauss is exact.
        std::vector<double> pts;
        pts.push_back(-eps);
        pts.push_back(eps);
        auto lo_it = std::lower_bound(path.grid.begin(), path.grid.end(), x - eps);
        auto hi_it = std::upper_bound(path.grid.begin(), path.grid.end(), x + eps);
        for (auto it = lo_it; it != hi_it; ++it) pts.push_back(x - *it);
        std::vector<double> panels = quad::merge_breakpoints(pts, -eps, eps);
        double s = quad::integrate_composite(
            [&](double z) { return path.value_at(x - z) * m.drho(z); }, panels, 5);
        out.push_back(s);
    }
    return out;
}

double mollified_covariance(const CovarianceModel& cov, double eps, double lag) {
    cov.validate();
    if (!(eps > 0.0)) throw std::invalid_argument("mollified_covariance requires eps > 0");
    MollifierSpec m(eps);
    if (cov.kind == NoiseKind::White) return cov.sigma2 * m.self_convolution(lag);
    // ∫ ρ_ε^{∗2}(s) γ(lag − s) ds over s ∈ [−2ε, 2ε]; the panels touching
    // s = lag use the power substitution when γ is singular at 0.
    const double lo = -2.0 * eps, hi = 2.0 * eps;
    double r = 0.0;
    if (cov.kind == NoiseKind::Fractional) r = 2.0 - 2.0 * cov.hurst;
    if (cov.kind == NoiseKind::LpSingular) r = cov.singular_exponent;
    std::vector<double> pts = {lo, -eps, 0.0, eps, hi, lag};
    std::vector<double> panels = quad::merge_breakpoints(pts, lo, hi);
    auto integrand = [&](double s) { return m.self_convolution(s) * cov.gamma(lag - s); };
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < panels.size(); ++i) {
        const double a = panels[i], b = panels[i + 1];
        if (r > 0.0 && b == lag) {
            total += integrate_endpoint_singular(integrand, a, b, b, r, 6, 10);
        } else if (r > 0.0 && a == lag) {
            total += integrate_endpoint_singular(integrand, a, b, a, r, 6, 10);
        } else {
            total += quad::integrate_panel(integrand, a, b, 10);
        }
    }
    return total;
}

}  // namespace fkmc
