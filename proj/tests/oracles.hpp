#pragma once

// Frozen reference values and closed-form series used across the test
// suite. Every constant below was computed once offline with 50-digit
// arithmetic from the stated formula and is pinned here so that a
// regression shows up as a numeric diff, not as a silently moving target.

#include <cmath>
#include <numbers>

namespace oracle {

// sum_{k>=1} exp(-0.25 k^2 pi^2): trace of the unit-interval absorbing
// semigroup at t = 0.5.
inline constexpr double kBoxTraceHalf = 0.084856695884195;

// Diagonal of the same kernel at x = 1/2: sum_k 2 sin^2(k pi/2) e^{-k^2 pi^2/4}.
inline constexpr double kBoxDiagHalf = 0.169609945395983;

// 1 / (2 sinh(1/2)): trace of the harmonic-oscillator semigroup at t = 1.
inline constexpr double kHarmonicTraceOne = 0.959517375667472;

// sqrt(1 / (2 pi sinh 1)): harmonic-oscillator kernel at t = 1, x = y = 0.
inline constexpr double kMehlerDiagOne = 0.368005198707561;

// Reflecting half-line transition density at t = 1, x = y = 1:
// G_1(0) + G_1(2) = (1 + e^{-2}) / sqrt(2 pi).
inline constexpr double kHalfLineNeumannDiag = 0.452933246914621;

// 1 / (1 + e^2): Gaussian weight of the reflected target -1 against +1
// for a half-line bridge from 1 to 1 at t = 1.
inline constexpr double kImageTargetWeight = 0.119202922022118;

// Reflecting unit-interval transition density at t = 1, x = y = 1/2
// (image sum; within 6e-9 of 1 because t >> b^2).
inline constexpr double kIntervalNeumannDiag = 1.00000000535058;

// 1 - e^{-2}: probability that a standard Brownian bridge from 0 to 0 over
// [0, 1] stays below the level a = 1.
inline constexpr double kBridgeBelowOne = 0.864664716763387;

// First zero of the Airy function (negated).
inline constexpr double kAiryFirstZero = 2.33810741045977;

// Ground level of -f''/2 + x f on [0, inf) with an absorbing origin:
// kAiryFirstZero / 2^{1/3}.
inline constexpr double kAiryGroundLevel = 1.85575708148924;

// sqrt(2/pi): mean boundary occupation density at time 1 for reflecting
// Brownian motion started at the origin.
inline constexpr double kSqrt2OverPi = 0.797884560802865;

// pi^2 / 2: ground level of the absorbing unit interval.
inline constexpr double kBoxGroundLevel = 4.93480220054468;

// Squared L2 norm of the quartic bump (315/256)(1-x^2)^4 on [-1, 1];
// equals the self-convolution at 0, so Var Xi'_eps = sigma2 * this / eps
// for white noise.
inline constexpr double kBumpL2Sq = 0.907034142328260;

// --- closed-form series helpers -------------------------------------------

// Absorbing-interval heat trace: sum_{k>=1} e^{-t (k pi / b)^2 / 2}.
inline double box_trace(double t, double b = 1.0) {
    double sum = 0.0;
    for (int k = 1;; ++k) {
        const double term = std::exp(-0.5 * t * std::pow(std::numbers::pi * k / b, 2));
        sum += term;
        if (term < 1e-22 * (sum + 1e-300)) return sum;
    }
}

// Absorbing-interval heat kernel: sum_k (2/b) sin(k pi x / b) sin(k pi y / b) e^{-t lambda_k}.
inline double box_kernel(double t, double x, double y, double b = 1.0) {
    double sum = 0.0;
    for (int k = 1;; ++k) {
        const double lam = 0.5 * std::pow(std::numbers::pi * k / b, 2);
        const double term = (2.0 / b) * std::sin(k * std::numbers::pi * x / b) *
                            std::sin(k * std::numbers::pi * y / b) * std::exp(-t * lam);
        sum += term;
        if (std::exp(-t * lam) < 1e-22) return sum;
    }
}

// Harmonic-oscillator kernel (V = x^2/2) on the full line.
inline double mehler_kernel(double t, double x, double y) {
    const double s = std::sinh(t);
    const double c = std::cosh(t);
    return std::sqrt(1.0 / (2.0 * std::numbers::pi * s)) *
           std::exp(-((x * x + y * y) * c - 2.0 * x * y) / (2.0 * s));
}

// Gaussian heat kernel G_t(u).
inline double heat_kernel(double t, double u) {
    return std::exp(-u * u / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

// Covariance of two-sided fractional Brownian motion at s, u >= 0.
inline double fbm_covariance(double s, double u, double hurst, double sigma2 = 1.0) {
    return 0.5 * sigma2 *
           (std::pow(std::abs(s), 2 * hurst) + std::pow(std::abs(u), 2 * hurst) -
            std::pow(std::abs(s - u), 2 * hurst));
}

}  // namespace oracle
