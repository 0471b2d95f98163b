#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "fkmc/feynman_kac.hpp"
#include "fkmc/noise.hpp"
#include "fkmc/rng.hpp"
#include "oracles.hpp"

using namespace fkmc;

namespace {

DomainSpec box() {
    return DomainSpec::interval(1.0, BoundaryCondition::dirichlet(),
                                BoundaryCondition::dirichlet());
}

GridNoisePath white_on(double lo, double hi, int cells, std::uint64_t seed) {
    std::vector<double> grid(cells + 1);
    for (int i = 0; i <= cells; ++i) {
        double x = lo + (hi - lo) * static_cast<double>(i) / cells;
        if (std::abs(x) < 0.25 * (hi - lo) / cells) x = 0.0;
        grid[i] = x;
    }
    auto stream = rng::make_stream(seed, {0});
    return sample_noise_path(CovarianceModel::white(1.0), grid, stream);
}

}  // namespace

TEST_CASE("resolution defaults scale with the horizon and domain") {
    Resolution res;
    const Resolution r = res.resolved(box(), 0.5);
    CHECK(r.n_steps == 1024);
    CHECK(r.bin_width == doctest::Approx(1.0 / 102.0));
    CHECK(r.window == doctest::Approx(r.bin_width));
    const Resolution tiny = res.resolved(box(), 1e-4);
    CHECK(tiny.n_steps == 64);
    Resolution forced;
    forced.n_steps = 2000;
    forced.bin_width = 0.02;
    forced.window = 0.05;
    const Resolution f = forced.resolved(box(), 0.5);
    CHECK(f.n_steps == 2000);
    CHECK(f.bin_width == doctest::Approx(0.02));
    CHECK(f.window == doctest::Approx(0.05));
}

TEST_CASE("potential validation rejects what the estimator cannot certify") {
    CHECK_THROWS_AS(PotentialSpec::linear().validate(DomainSpec::full_line()),
                    std::invalid_argument);
    CHECK_NOTHROW(PotentialSpec::linear().validate(
        DomainSpec::half_line(BoundaryCondition::dirichlet())));
    CHECK_NOTHROW(PotentialSpec::harmonic().validate(DomainSpec::full_line()));

    PotentialSpec cb = PotentialSpec::callable([](double x) { return x * x; });
    cb.growth_certificate = false;
    CHECK_THROWS_AS(cb.validate(DomainSpec::full_line()), std::invalid_argument);
    CHECK_NOTHROW(cb.validate(box()));

    CHECK_THROWS_AS(PotentialSpec::tabulated({0.0, 0.5, 0.4}, {1.0, 1.0, 1.0})
                        .validate(box()),
                    std::invalid_argument);
    CHECK_THROWS_AS(PotentialSpec::tabulated({0.0, 0.5, 1.0}, {1.0, -0.1, 1.0})
                        .validate(box()),
                    std::invalid_argument);
}

TEST_CASE("absorbing-box kernel matches the sine series") {
    const KernelEstimate diag = deterministic_kernel(box(), PotentialSpec::zero(), 0.5,
                                                     0.5, 0.5, 20000, Resolution{}, 101);
    CHECK(std::abs(diag.mean - oracle::kBoxDiagHalf) <= 4.0 * diag.std_error);
    CHECK(diag.replicates == 20000);
    CHECK(diag.discards == 0);

    const KernelEstimate off = deterministic_kernel(box(), PotentialSpec::zero(), 0.5,
                                                    0.3, 0.6, 20000, Resolution{}, 102);
    CHECK(std::abs(off.mean - oracle::box_kernel(0.5, 0.3, 0.6)) <=
          4.0 * off.std_error);
}

TEST_CASE("kernel vanishes at an absorbing endpoint") {
    const KernelEstimate e = deterministic_kernel(box(), PotentialSpec::zero(), 0.5, 0.0,
                                                  0.5, 100, Resolution{}, 103);
    CHECK(e.mean == 0.0);
    CHECK(e.std_error == 0.0);
    CHECK_FALSE(e.note.empty());
}

TEST_CASE("constant potential shifts scale the estimate bitwise") {
    PotentialSpec shifted = PotentialSpec::zero();
    shifted.constant_shift = 0.7;
    const KernelEstimate a = deterministic_kernel(box(), PotentialSpec::zero(), 0.5, 0.3,
                                                  0.6, 4000, Resolution{}, 104);
    const KernelEstimate b =
        deterministic_kernel(box(), shifted, 0.5, 0.3, 0.6, 4000, Resolution{}, 104);
    CHECK(b.mean == std::exp(-0.7 * 0.5) * a.mean);
}

TEST_CASE("harmonic-oscillator kernel at the origin") {
    const KernelEstimate e =
        deterministic_kernel(DomainSpec::full_line(), PotentialSpec::harmonic(), 1.0, 0.0,
                             0.0, 20000, Resolution{}, 105);
    CHECK(std::abs(e.mean - oracle::kMehlerDiagOne) <= 4.0 * e.std_error);
    CHECK(e.std_error < 2e-3);
}

TEST_CASE("reflecting half line with zero potential reproduces the density exactly") {
    // With V = 0 and a weightless reflecting boundary every path weight is
    // exactly 1, so the estimate collapses to the transition density factor.
    const DomainSpec half = DomainSpec::half_line(BoundaryCondition::robin(0.0));
    const KernelEstimate e = deterministic_kernel(half, PotentialSpec::zero(), 1.0, 1.0,
                                                  1.0, 500, Resolution{}, 106);
    CHECK(e.mean == doctest::Approx(oracle::kHalfLineNeumannDiag).epsilon(1e-12));
    CHECK(e.std_error == 0.0);
}

TEST_CASE("boundary weights are pathwise monotone in the coefficient") {
    // Coupled on the same seed, e^{beta L} is increasing in beta path by
    // path, so the three means are strictly ordered.
    const std::uint64_t seed = 107;
    auto kernel_with = [&](double beta) {
        const DomainSpec half = DomainSpec::half_line(BoundaryCondition::robin(beta));
        return deterministic_kernel(half, PotentialSpec::zero(), 0.5, 0.2, 0.3, 2000,
                                    Resolution{}, seed)
            .mean;
    };
    const double low = kernel_with(-0.5);
    const double mid = kernel_with(0.0);
    const double high = kernel_with(0.5);
    CHECK(low < mid);
    CHECK(mid < high);
}

TEST_CASE("box trace against the eigenvalue series (reduced budget)") {
    const KernelEstimate e = trace_estimate(box(), PotentialSpec::zero(), nullptr,
                                            nullptr, 0.5, 16, 0.0, 260, Resolution{}, 108);
    CHECK(std::abs(e.mean - oracle::kBoxTraceHalf) <= 4.0 * e.std_error);
}

TEST_CASE("unbounded traces certify their truncation radius") {
    const KernelEstimate e =
        trace_estimate(DomainSpec::full_line(), PotentialSpec::harmonic(), nullptr,
                       nullptr, 1.0, 24, 0.0, 200, Resolution{}, 109);
    CHECK(std::abs(e.mean - oracle::kHarmonicTraceOne) <= 4.0 * e.std_error);
    CHECK(e.certificate > 0.0);          // truncation bound / running integral
    CHECK(e.certificate < 1e-3);         // and it satisfied the criterion
    CHECK(e.note.find("radius") != std::string::npos);

    // A potential with no growth gives no certified radius: hard error.
    CHECK_THROWS_AS(trace_estimate(DomainSpec::full_line(), PotentialSpec::zero(),
                                   nullptr, nullptr, 1.0, 16, 0.0, 100, Resolution{}, 110),
                    std::runtime_error);
}

TEST_CASE("squared-norm check agrees with the trace on the box") {
    const CheckResult c = hs_norm_check(box(), PotentialSpec::zero(), nullptr, nullptr,
                                        0.5, 8, 0.0, 120, Resolution{}, 111);
    CHECK(c.within(3.0));
    CHECK(c.lhs > 0.0);
    CHECK(c.rhs > 0.0);
    CHECK_THROWS_AS(hs_norm_check(box(), PotentialSpec::zero(), nullptr, nullptr, 0.5, 4,
                                  0.0, 50, Resolution{}, 112),
                    std::invalid_argument);
}

TEST_CASE("semigroup composition on the reflecting half line") {
    const DomainSpec half = DomainSpec::half_line(BoundaryCondition::robin(0.3));
    const CheckResult c = semigroup_check(half, PotentialSpec::zero(), nullptr, nullptr,
                                          0.3, 0.2, 0.4, 0.7, 24, 6.0, 400, Resolution{},
                                          113);
    CHECK(c.within(3.0));
}

TEST_CASE("paths leaving the noise span are discarded and counted") {
    const GridNoisePath narrow = white_on(-0.02, 0.52, 108, 114);
    const KernelEstimate e = random_kernel(box(), PotentialSpec::zero(), narrow, 0.5, 0.3,
                                           0.3, 2000, Resolution{}, 115);
    CHECK(e.discards > 0);
    CHECK(e.replicates + e.discards == 2000);
    CHECK(e.warning);  // far more than 1% of bridges wander past 0.52
}

TEST_CASE("noise-conditioned estimates are bitwise reproducible across workers") {
    const GridNoisePath noise = white_on(-0.3, 1.3, 320, 116);
    const MollifierSpec moll(0.1);
    const KernelEstimate a = mollified_kernel(box(), PotentialSpec::zero(), noise, moll,
                                              0.5, 0.3, 0.6, 4000, Resolution{}, 117, 1);
    const KernelEstimate b = mollified_kernel(box(), PotentialSpec::zero(), noise, moll,
                                              0.5, 0.3, 0.6, 4000, Resolution{}, 117, 3);
    CHECK(a.mean == b.mean);
    CHECK(a.std_error == b.std_error);

    const KernelEstimate c = random_kernel(box(), PotentialSpec::zero(), noise, 0.5, 0.3,
                                           0.6, 4000, Resolution{}, 118, 1);
    const KernelEstimate d = random_kernel(box(), PotentialSpec::zero(), noise, 0.5, 0.3,
                                           0.6, 4000, Resolution{}, 118, 4);
    CHECK(c.mean == d.mean);
}

TEST_CASE("noise averaging inflates the estimate (Jensen separation)") {
    // With a shared seed the replicate paths are identical across estimators
    // (the exponential weight consumes no extra randomness), so averaging a
    // noise draw with its negation bounds the noiseless run from below path
    // by path: (e^{-I} + e^{+I})/2 = cosh(I) >= 1. The separation is
    // deterministic, not statistical.
    const GridNoisePath noise = white_on(-0.3, 1.3, 320, 119);
    std::vector<double> negated = noise.values;
    for (double& v : negated) v = -v;
    const GridNoisePath mirrored = GridNoisePath::make_unchecked(noise.grid, negated);
    const std::uint64_t kseed = 1190;
    const KernelEstimate plus = random_kernel(box(), PotentialSpec::zero(), noise, 0.5,
                                              0.4, 0.4, 2000, Resolution{}, kseed);
    const KernelEstimate minus = random_kernel(box(), PotentialSpec::zero(), mirrored, 0.5,
                                               0.4, 0.4, 2000, Resolution{}, kseed);
    const KernelEstimate det = deterministic_kernel(box(), PotentialSpec::zero(), 0.5, 0.4,
                                                    0.4, 2000, Resolution{}, kseed);
    CHECK(0.5 * (plus.mean + minus.mean) > det.mean);

    // The noise-averaged moment reports its variance decomposition and the
    // degenerate (no-covariance) arm stays on the eigenvalue-series value.
    const CovarianceModel cov = CovarianceModel::white(1.0);
    const KernelEstimate avg = laplace_transform_moment(
        box(), PotentialSpec::zero(), &cov, {0.5}, 16, 12, 60, Resolution{}, 119);
    const KernelEstimate alone = laplace_transform_moment(
        box(), PotentialSpec::zero(), nullptr, {0.5}, 1, 12, 200, Resolution{}, 119);
    CHECK(avg.mean > 0.0);
    CHECK(avg.note.find("variance") != std::string::npos);
    CHECK(std::abs(alone.mean - oracle::kBoxTraceHalf) <= 5.0 * alone.std_error);
}

TEST_CASE("an absorbing start annihilates every replicate gracefully") {
    const KernelEstimate e = deterministic_kernel(box(), PotentialSpec::zero(), 0.5,
                                                  1e-9, 0.5, 200, Resolution{}, 120);
    CHECK(e.mean == 0.0);
    CHECK_FALSE(e.note.empty());
}
