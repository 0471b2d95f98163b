#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fkmc/noise.hpp"
#include "fkmc/quadrature.hpp"
#include "fkmc/rng.hpp"
#include "oracles.hpp"

using namespace fkmc;

namespace {

std::vector<double> uniform_grid(double lo, double hi, int cells) {
    std::vector<double> g(cells + 1);
    for (int i = 0; i <= cells; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / cells;
    // Pin an exact zero if the grid straddles it.
    for (double& v : g)
        if (std::abs(v) < 0.5 * (hi - lo) / cells) v = 0.0;
    return g;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double var_se = 0.0;  // standard error of the sample variance
};

Moments sample_moments(const std::vector<double>& xs) {
    double s1 = 0.0, s2 = 0.0;
    for (double v : xs) {
        s1 += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(xs.size());
    Moments m;
    m.mean = s1 / n;
    m.var = (s2 - s1 * s1 / n) / (n - 1.0);
    m.var_se = m.var * std::sqrt(2.0 / (n - 1.0));
    return m;
}

}  // namespace

TEST_CASE("covariance model parameter validation") {
    CHECK_THROWS_AS(CovarianceModel::white(0.0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(CovarianceModel::white(-1.0).validate(), std::invalid_argument);
    CHECK_NOTHROW(CovarianceModel::white(2.0).validate());

    CHECK_THROWS_AS(CovarianceModel::fractional(1.0, 0.5).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS(CovarianceModel::fractional(1.0, 1.0).validate(),
                    std::invalid_argument);
    CHECK_NOTHROW(CovarianceModel::fractional(1.0, 0.75).validate());

    CovarianceModel broken;
    broken.kind = NoiseKind::Bounded;
    broken.density = nullptr;
    CHECK_THROWS_AS(broken.validate(), std::invalid_argument);

    CHECK_THROWS_AS(
        CovarianceModel::lp_singular([](double) { return 1.0; }, 1.2).validate(),
        std::invalid_argument);
}

TEST_CASE("white inner products reduce to L2 overlaps") {
    const StepFunction f = StepFunction::indicator(0.0, 1.0);
    const StepFunction g = StepFunction::indicator(0.5, 1.5);
    const CovarianceModel w1 = CovarianceModel::white(1.0);
    const CovarianceModel w2 = CovarianceModel::white(2.0);
    CHECK(gamma_inner(f, g, w1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(gamma_inner(f, g, w2) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gamma_seminorm_sq(f, w1) == doctest::Approx(1.0).epsilon(1e-12));
    const StepFunction h{{0.0, 0.5, 1.0}, {1.0, -1.0}};
    CHECK(gamma_seminorm_sq(h, w1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(gamma_inner(f, h, w1) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("fractional inner products match the fBm covariance") {
    const CovarianceModel cov = CovarianceModel::fractional(1.0, 0.75);
    const StepFunction f = StepFunction::indicator(0.0, 1.0);
    CHECK(gamma_seminorm_sq(f, cov) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(xi_covariance(0.5, 1.0, cov) ==
          doctest::Approx(oracle::fbm_covariance(0.5, 1.0, 0.75)).epsilon(1e-7));
    // Two-sided: negative abscissae use the same stationary-increment form.
    const double expect =
        0.5 * (std::pow(0.5, 1.5) + 1.0 - std::pow(1.5, 1.5));
    CHECK(xi_covariance(-0.5, 1.0, cov) == doctest::Approx(expect).epsilon(1e-7));
}

TEST_CASE("constant bounded density factorizes the inner product") {
    const CovarianceModel cov =
        CovarianceModel::bounded([](double) { return 2.0; }, "constant");
    const StepFunction f = StepFunction::indicator(0.0, 1.0);
    const StepFunction g{{0.0, 0.5}, {2.0}};
    // <f,g> = c * (int f)(int g) when gamma is constant.
    CHECK(gamma_inner(f, g, cov) == doctest::Approx(2.0 * 1.0 * 1.0).epsilon(1e-8));
    CHECK(gamma_seminorm_sq(f, cov) == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("integrable power singularity integrates to the closed form") {
    // gamma(x) = |x|^{-1/2}: int_0^1 int_0^1 |x-y|^{-1/2} dx dy = 8/3.
    const CovarianceModel cov = CovarianceModel::lp_singular(
        [](double u) { return 1.0 / std::sqrt(std::abs(u)); }, 0.5, "inv_sqrt");
    const StepFunction f = StepFunction::indicator(0.0, 1.0);
    CHECK(gamma_seminorm_sq(f, cov) == doctest::Approx(8.0 / 3.0).epsilon(2e-5));
}

TEST_CASE("noise path factories validate their pins") {
    CHECK_THROWS_AS(GridNoisePath::make({0.5, 1.0}, {0.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(GridNoisePath::make({0.0, 0.0, 1.0}, {0.0, 0.1, 1.0}),
                    std::invalid_argument);
    CHECK_THROWS_AS(GridNoisePath::make({0.0, 1.0}, {0.5, 1.0}), std::invalid_argument);
    const GridNoisePath shifted = GridNoisePath::make_unchecked({0.0, 1.0}, {3.0, 4.0});
    CHECK(shifted.value_at(0.5) == doctest::Approx(3.5));
    CHECK(shifted.increment(0.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("white path increments are independent Gaussians") {
    const CovarianceModel cov = CovarianceModel::white(1.0);
    const std::vector<double> grid{0.0, 0.25, 0.5, 1.0};
    const std::size_t n_draws = 4000;
    std::vector<double> inc1, inc2;
    inc1.reserve(n_draws);
    inc2.reserve(n_draws);
    for (std::size_t i = 0; i < n_draws; ++i) {
        auto stream = rng::make_stream(2024, {i});
        const GridNoisePath p = sample_noise_path(cov, grid, stream);
        CHECK(p.values[p.anchor] == 0.0);
        inc1.push_back(p.increment(0.0, 0.25));
        inc2.push_back(p.increment(0.5, 1.0));
    }
    const Moments m1 = sample_moments(inc1);
    const Moments m2 = sample_moments(inc2);
    CHECK(std::abs(m1.var - 0.25) <= 4.0 * m1.var_se);
    CHECK(std::abs(m2.var - 0.5) <= 4.0 * m2.var_se);
    double cross = 0.0;
    for (std::size_t i = 0; i < n_draws; ++i)
        cross += (inc1[i] - m1.mean) * (inc2[i] - m2.mean);
    cross /= static_cast<double>(n_draws - 1);
    CHECK(std::abs(cross) <= 4.0 * std::sqrt(0.25 * 0.5 / n_draws));

    // Same stream labels, same draw: bitwise reproducible.
    auto s1 = rng::make_stream(2024, {7});
    auto s2 = rng::make_stream(2024, {7});
    const GridNoisePath a = sample_noise_path(cov, grid, s1);
    const GridNoisePath b = sample_noise_path(cov, grid, s2);
    CHECK(a.values == b.values);
}

TEST_CASE("fractional path sampling reproduces the covariance (dense path)") {
    const CovarianceModel cov = CovarianceModel::fractional(1.0, 0.75);
    const std::vector<double> grid = uniform_grid(-1.0, 1.0, 32);
    const std::size_t n_draws = 4000;
    std::vector<double> at1, at_half, at_m1;
    for (std::size_t i = 0; i < n_draws; ++i) {
        auto stream = rng::make_stream(99, {i});
        const GridNoisePath p = sample_noise_path(cov, grid, stream);
        at1.push_back(p.value_at(1.0));
        at_half.push_back(p.value_at(0.5));
        at_m1.push_back(p.value_at(-1.0));
    }
    const Moments v1 = sample_moments(at1);
    const Moments vh = sample_moments(at_half);
    const Moments vm = sample_moments(at_m1);
    CHECK(std::abs(v1.var - 1.0) <= 4.0 * v1.var_se);
    CHECK(std::abs(vm.var - 1.0) <= 4.0 * vm.var_se);
    double cross = 0.0;
    for (std::size_t i = 0; i < n_draws; ++i)
        cross += (at1[i] - v1.mean) * (at_half[i] - vh.mean);
    cross /= static_cast<double>(n_draws - 1);
    CHECK(std::abs(cross - oracle::fbm_covariance(0.5, 1.0, 0.75)) <= 0.08);
}

TEST_CASE("large uniform grids go through the circulant sampler") {
    const CovarianceModel cov = CovarianceModel::fractional(1.0, 0.75);
    const std::vector<double> grid = uniform_grid(0.0, 4.2, 4200);  // > dense cutoff
    const std::size_t n_draws = 400;
    std::vector<double> at1;
    for (std::size_t i = 0; i < n_draws; ++i) {
        auto stream = rng::make_stream(4242, {i});
        const GridNoisePath p = sample_noise_path(cov, grid, stream);
        at1.push_back(p.value_at(1.0));
    }
    const Moments m = sample_moments(at1);
    CHECK(std::abs(m.var - 1.0) <= 4.0 * m.var_se);
}

TEST_CASE("mollifier bump: unit mass, compact support, frozen L2 norm") {
    const MollifierSpec m(0.1);
    CHECK_NOTHROW(m.validate());
    const double mass = quad::integrate_panel([&](double x) { return m.rho(x); },
                                              -0.1, 0.1, 64);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(m.rho(0.1) == doctest::Approx(0.0));
    CHECK(m.rho(-0.1) == doctest::Approx(0.0));
    CHECK(m.rho(0.05) == doctest::Approx(m.rho(-0.05)).epsilon(1e-14));
    CHECK(m.drho(0.05) == doctest::Approx(-m.drho(-0.05)).epsilon(1e-12));
    CHECK(m.self_convolution(0.0) ==
          doctest::Approx(oracle::kBumpL2Sq / 0.1).epsilon(1e-9));
    CHECK(m.self_convolution(0.21) == doctest::Approx(0.0));
    MollifierSpec bad(0.1);
    bad.epsilon = -1.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("smoothed derivative: variance matches the smoothed covariance") {
    const CovarianceModel cov = CovarianceModel::white(1.0);
    const double eps = 0.1;
    const MollifierSpec moll(eps);
    const std::vector<double> grid = uniform_grid(-0.5, 1.5, 160);  // spacing eps/8
    const std::vector<double> query{0.5};
    const std::size_t n_draws = 3000;
    std::vector<double> vals;
    vals.reserve(n_draws);
    for (std::size_t i = 0; i < n_draws; ++i) {
        auto stream = rng::make_stream(31, {i});
        const GridNoisePath p = sample_noise_path(cov, grid, stream);
        vals.push_back(mollified_derivative(p, moll, query)[0]);
    }
    const Moments m = sample_moments(vals);
    const double target = mollified_covariance(cov, eps, 0.0);
    CHECK(target == doctest::Approx(moll.self_convolution(0.0)).epsilon(1e-12));
    CHECK(std::abs(m.var - target) <= 4.0 * m.var_se);

    // Constant shifts of Xi do not move the derivative (int rho' = 0).
    auto stream = rng::make_stream(31, {0});
    const GridNoisePath p = sample_noise_path(cov, grid, stream);
    std::vector<double> shifted_values = p.values;
    for (double& v : shifted_values) v += 3.0;
    const GridNoisePath q = GridNoisePath::make_unchecked(p.grid, shifted_values);
    const double d0 = mollified_derivative(p, moll, query)[0];
    const double d1 = mollified_derivative(q, moll, query)[0];
    CHECK(std::abs(d0 - d1) <= 1e-10);

    // Queries must keep the whole bump inside the span.
    CHECK_THROWS_AS(mollified_derivative(p, moll, {-0.45}), std::invalid_argument);
}
