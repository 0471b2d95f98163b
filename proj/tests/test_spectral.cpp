#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <vector>

#include "fkmc/rng.hpp"
#include "fkmc/spectral.hpp"
#include "oracles.hpp"

using namespace fkmc;

namespace {

DomainSpec box() {
    return DomainSpec::interval(1.0, BoundaryCondition::dirichlet(),
                                BoundaryCondition::dirichlet());
}

// Second zero of the Airy function (handbook value), scaled like the first.
constexpr double kAirySecondZero = 4.08794944413097;

}  // namespace

TEST_CASE("absorbing box spectrum matches the sine modes") {
    const DiscreteForm form = discretize_form(box(), PotentialSpec::zero(), nullptr,
                                              2000, 0.0);
    const SpectralResult sr = eigen_solve(form, 5);
    for (int k = 1; k <= 4; ++k) {
        const double target = 0.5 * std::pow(k * std::numbers::pi, 2);
        CHECK(std::abs(sr.eigenvalues[k - 1] - target) <= 1e-3 * target);
    }
    CHECK(sr.max_residual <= 1e-8);
    CHECK(sr.orthonormality_defect() <= 1e-8);

    // Unit discrete L2 norm and the sine shape of the ground mode.
    double norm = 0.0;
    for (std::size_t i = 0; i < sr.nodes.size(); ++i)
        norm += sr.vectors[0][i] * sr.vectors[0][i] * sr.weights[i];
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-8));
    std::size_t mid = 0;
    for (std::size_t i = 0; i < sr.nodes.size(); ++i)
        if (std::abs(sr.nodes[i] - 0.5) < std::abs(sr.nodes[mid] - 0.5)) mid = i;
    CHECK(std::abs(sr.vectors[0][mid]) ==
          doctest::Approx(std::numbers::sqrt2).epsilon(1e-3));
}

TEST_CASE("reflecting box: exact zero mode and the cosine gap") {
    const DomainSpec neumann = DomainSpec::interval(1.0, BoundaryCondition::robin(0.0),
                                                    BoundaryCondition::robin(0.0));
    const DiscreteForm form =
        discretize_form(neumann, PotentialSpec::zero(), nullptr, 2000, 0.0);
    const SpectralResult sr = eigen_solve(form, 3);
    CHECK(std::abs(sr.eigenvalues[0]) <= 1e-8);
    const double gap = 0.5 * std::numbers::pi * std::numbers::pi;
    CHECK(std::abs(sr.eigenvalues[1] - gap) <= 1e-3 * gap);
}

TEST_CASE("attractive boundary weight lowers the ground level") {
    const DomainSpec neutral = DomainSpec::interval(1.0, BoundaryCondition::robin(0.0),
                                                    BoundaryCondition::robin(0.0));
    const DomainSpec attract = DomainSpec::interval(1.0, BoundaryCondition::robin(1.0),
                                                    BoundaryCondition::robin(0.0));
    const SpectralResult a =
        eigen_solve(discretize_form(neutral, PotentialSpec::zero(), nullptr, 1000, 0.0), 2);
    const SpectralResult b =
        eigen_solve(discretize_form(attract, PotentialSpec::zero(), nullptr, 1000, 0.0), 2);
    CHECK(b.eigenvalues[0] < a.eigenvalues[0]);
}

TEST_CASE("linear potential on the absorbing half line: scaled Airy zeros") {
    const DiscreteForm form =
        discretize_form(DomainSpec::half_line(BoundaryCondition::dirichlet()),
                        PotentialSpec::linear(), nullptr, 6000, 12.0);
    const SpectralResult sr = eigen_solve(form, 3);
    CHECK(std::abs(sr.eigenvalues[0] - oracle::kAiryGroundLevel) <= 1e-3);
    const double second = kAirySecondZero / std::cbrt(2.0);
    CHECK(std::abs(sr.eigenvalues[1] - second) <= 2e-3);
}

TEST_CASE("harmonic oscillator levels on the truncated full line") {
    const DiscreteForm form = discretize_form(DomainSpec::full_line(),
                                              PotentialSpec::harmonic(), nullptr, 4000,
                                              8.0);
    const SpectralResult sr = eigen_solve(form, 5);
    for (int k = 1; k <= 4; ++k)
        CHECK(std::abs(sr.eigenvalues[k - 1] - (k - 0.5)) <= 1e-3);
}

TEST_CASE("noise values on the diagonal act exactly like a potential") {
    const std::size_t n = 400;
    std::vector<double> xi(n + 1);
    PotentialSpec vq = PotentialSpec::callable([](double x) { return x * (1.0 - x); });
    for (std::size_t i = 0; i <= n; ++i) {
        const double x = static_cast<double>(i) / n;
        xi[i] = x * (1.0 - x);
    }
    const DiscreteForm with_v = discretize_form(box(), vq, nullptr, n, 0.0);
    const DiscreteForm with_xi =
        discretize_form(box(), PotentialSpec::zero(), &xi, n, 0.0);
    REQUIRE(with_v.diag.size() == with_xi.diag.size());
    for (std::size_t i = 0; i < with_v.diag.size(); ++i)
        CHECK(with_v.diag[i] == with_xi.diag[i]);
    const SpectralResult a = eigen_solve(with_v, 3);
    const SpectralResult b = eigen_solve(with_xi, 3);
    for (int k = 0; k < 3; ++k) CHECK(a.eigenvalues[k] == b.eigenvalues[k]);
}

TEST_CASE("guard rails: trust range, radii, boundary diagnostics") {
    const DiscreteForm form = discretize_form(box(), PotentialSpec::zero(), nullptr, 100,
                                              0.0);
    CHECK_THROWS_AS(eigen_solve(form, 60), std::invalid_argument);
    CHECK_THROWS_AS(discretize_form(DomainSpec::full_line(), PotentialSpec::harmonic(),
                                    nullptr, 100, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(discretize_form(box(), PotentialSpec::zero(), nullptr, 100, 0.0,
                                    /*xi_boundary_b=*/1.0),
                    std::invalid_argument);
}

TEST_CASE("partial spectral sums report their truncation honestly") {
    const DiscreteForm form = discretize_form(box(), PotentialSpec::zero(), nullptr,
                                              2000, 0.0);
    const SpectralResult sr = eigen_solve(form, 24);
    const SpectralTraceResult good = spectral_trace(sr, 0.5, 24);
    CHECK(std::abs(good.value - oracle::kBoxTraceHalf) <= 1e-5);
    CHECK_FALSE(good.unreliable);
    CHECK(good.tail <= 1e-4 * good.value);

    // Two modes at small t leave a visible tail: flagged.
    const SpectralTraceResult thin = spectral_trace(sr, 0.1, 2);
    CHECK(thin.unreliable);
}

TEST_CASE("path and spectrum agree on shared noise realizations (desk scale)") {
    const CovarianceModel cov = CovarianceModel::white(1.0);
    std::vector<std::uint64_t> seeds(5);
    for (std::size_t i = 0; i < seeds.size(); ++i)
        seeds[i] = rng::derive_key(4100, {i});
    EquivalenceBudget budget;
    budget.n_nodes = 16;
    budget.paths_per_node = 200;
    budget.fd_cells = 1000;
    budget.k_used = 16;
    const EquivalenceReport rep = oracle_equivalence(box(), PotentialSpec::zero(), &cov,
                                                     0.1, 0.5, seeds, budget, 1);
    CHECK(rep.seeds.size() == 5);
    CHECK(rep.epsilon == doctest::Approx(0.1));
    CHECK(rep.t == doctest::Approx(0.5));
    CHECK(rep.n_agree >= 4);
    const nlohmann::json j = rep.to_json();
    CHECK(j.at("seeds").size() == 5);
    CHECK(j.at("n_agree").get<std::size_t>() == rep.n_agree);
    for (const EquivalenceSeed& s : rep.seeds) {
        CHECK(s.path_se > 0.0);
        CHECK(s.spectral_value > 0.0);
        CHECK(std::abs(s.diff) == doctest::Approx(std::abs(s.path_trace - s.spectral_value)));
    }
}

TEST_CASE("spectrum export writes one row per eigenvalue") {
    const DiscreteForm form = discretize_form(box(), PotentialSpec::zero(), nullptr, 200,
                                              0.0);
    const SpectralResult sr = eigen_solve(form, 4);
    const std::string file =
        (std::filesystem::temp_directory_path() / "fkmc_test_modes.csv").string();
    sr.write_csv(file);
    CHECK(std::filesystem::file_size(file) > 0);
    std::filesystem::remove(file);
}
