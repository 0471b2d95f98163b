#include "fkmc/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fkmc::quad {

static Rule compute_gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    Rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    // Newton iteration from the Chebyshev-like initial guess; standard
    // Golub-Welsch-free construction, exact symmetry enforced by mirroring.
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            // Evaluate P_n(x) and P_n'(x) by the three-term recurrence.
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[i] = w;
        r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

const Rule& gauss_legendre(int n) {
    static std::mutex mu;
    static std::map<int, Rule> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss_legendre(n)).first;
    return it->second;
}

Rule gauss_legendre(int n, double a, double b) {
    const Rule& base = gauss_legendre(n);
    Rule r = base;
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = mid + half * base.nodes[i];
        r.weights[i] = half * base.weights[i];
    }
    return r;
}

double integrate_panel(const std::function<double(double)>& f, double a, double b, int n) {
    if (a == b) return 0.0;
    const Rule& base = gauss_legendre(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += base.weights[i] * f(mid + half * base.nodes[i]);
    return half * s;
}

double integrate_composite(const std::function<double(double)>& f,
                           const std::vector<double>& pts, int n) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (pts[i + 1] > pts[i]) s += integrate_panel(f, pts[i], pts[i + 1], n);
    }
    return s;
}

std::vector<double> graded_toward(double from, double to, int levels) {
    std::vector<double> pts;
    pts.push_back(from);
    double d = from - to;
    for (int k = 1; k <= levels; ++k) {
        d *= 0.5;
        pts.push_back(to + d);
    }
    pts.push_back(to);
    if (from < to) {
        // already ascending
    } else {
        std::reverse(pts.begin(), pts.end());
    }
    return pts;
}

std::vector<double> merge_breakpoints(std::vector<double> pts, double lo, double hi) {
    pts.push_back(lo);
    pts.push_back(hi);
    std::sort(pts.begin(), pts.end());
    std::vector<double> out;
    for (double p : pts) {
        if (p < lo || p > hi) continue;
        if (out.empty() || p > out.back()) out.push_back(p);
    }
    return out;
}

}  // namespace fkmc::quad
