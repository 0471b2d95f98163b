#include "fkmc/paths.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "json.hpp"

namespace fkmc {

// ---------------------------------------------------------------------------
// DomainSpec
// ---------------------------------------------------------------------------

DomainSpec DomainSpec::full_line() {
    DomainSpec d;
    d.kind = DomainCase::FullLine;
    return d;
}

DomainSpec DomainSpec::half_line(BoundaryCondition bc0) {
    DomainSpec d;
    d.kind = DomainCase::HalfLine;
    d.bc0 = bc0;
    return d;
}

DomainSpec DomainSpec::interval(double b, BoundaryCondition bc0, BoundaryCondition bcb) {
    DomainSpec d;
    d.kind = DomainCase::Interval;
    d.b = b;
    d.bc0 = bc0;
    d.bcb = bcb;
    d.validate();
    return d;
}

void DomainSpec::validate() const {
    if (kind == DomainCase::Interval && !(b > 0.0))
        throw std::invalid_argument("interval domain requires length b > 0");
}

double DomainSpec::alpha_bar() const {
    if (!has_boundary0()) throw std::logic_error("full line has no boundary weight");
    return bc0.is_dirichlet() ? -std::numeric_limits<double>::infinity() : bc0.coefficient;
}

double DomainSpec::beta_bar() const {
    if (!has_boundaryb()) throw std::logic_error("only the interval has a boundary at b");
    return bcb.is_dirichlet() ? -std::numeric_limits<double>::infinity() : bcb.coefficient;
}

bool DomainSpec::contains(double x) const {
    switch (kind) {
        case DomainCase::FullLine: return true;
        case DomainCase::HalfLine: return x > 0.0;
        case DomainCase::Interval: return x > 0.0 && x < b;
    }
    return false;
}

bool DomainSpec::in_closure(double x) const {
    switch (kind) {
        case DomainCase::FullLine: return true;
        case DomainCase::HalfLine: return x >= 0.0;
        case DomainCase::Interval: return x >= 0.0 && x <= b;
    }
    return false;
}

std::string DomainSpec::to_json() const {
    nlohmann::json j;
    switch (kind) {
        case DomainCase::FullLine: j["case"] = "full_line"; break;
        case DomainCase::HalfLine: j["case"] = "half_line"; break;
        case DomainCase::Interval: j["case"] = "interval"; break;
    }
    j["b"] = (kind == DomainCase::Interval) ? b : 0.0;
    auto bc_name = [](const BoundaryCondition& bc) {
        return bc.is_dirichlet() ? "dirichlet" : "robin";
    };
    if (has_boundary0()) {
        j["bc0"] = bc_name(bc0);
        j["alpha"] = bc0.is_dirichlet() ? 0.0 : bc0.coefficient;
    }
    if (has_boundaryb()) {
        j["bcb"] = bc_name(bcb);
        j["beta"] = bcb.is_dirichlet() ? 0.0 : bcb.coefficient;
    }
    return j.dump();
}

// ---------------------------------------------------------------------------
// Transition kernels
// ---------------------------------------------------------------------------

double gauss_kernel(double t, double u) {
    return std::exp(-u * u / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi * t);
}

// Reflection lattice of a boundary: the set of pre-images of c under the
// folding map. Single point for the half line (and the full-line level
// reinterpretation); offset + 2b*Z on the interval.
namespace {

struct BoundaryLattice {
    bool periodic = false;
    double point = 0.0;   // single-point case
    double offset = 0.0;  // periodic case
    double period = 0.0;
};

BoundaryLattice boundary_lattice(const DomainSpec& d, double c) {
    BoundaryLattice lat;
    switch (d.kind) {
        case DomainCase::FullLine:
            lat.point = c;  // arbitrary absorbing level
            return lat;
        case DomainCase::HalfLine:
            if (c != 0.0) throw std::invalid_argument("half-line boundary is at 0");
            lat.point = 0.0;
            return lat;
        case DomainCase::Interval:
            if (c != 0.0 && c != d.b)
                throw std::invalid_argument("interval boundaries are at 0 and b");
            lat.periodic = true;
            lat.offset = c;  // 2b*Z for c=0; b + 2b*Z for c=b
            lat.period = 2.0 * d.b;
            return lat;
    }
    throw std::logic_error("unreachable");
}

double lattice_distance(const BoundaryLattice& lat, double z) {
    if (!lat.periodic) return std::abs(z - lat.point);
    return std::abs(std::remainder(z - lat.offset, lat.period));
}

bool segment_touches_lattice(const BoundaryLattice& lat, double z0, double z1) {
    const double lo = std::min(z0, z1), hi = std::max(z0, z1);
    if (!lat.periodic) return lat.point >= lo && lat.point <= hi;
    const double klo = std::ceil((lo - lat.offset) / lat.period - 1e-12);
    const double khi = std::floor((hi - lat.offset) / lat.period + 1e-12);
    return klo <= khi;
}

double fold_interval(double u, double b) {
    double w = std::fmod(u, 2.0 * b);
    if (w < 0.0) w += 2.0 * b;
    return (w <= b) ? w : 2.0 * b - w;
}

double fold_into(const DomainSpec& d, double u) {
    switch (d.kind) {
        case DomainCase::FullLine: return u;
        case DomainCase::HalfLine: return std::abs(u);
        case DomainCase::Interval: return fold_interval(u, d.b);
    }
    return u;
}

}  // namespace

namespace detail {
int interval_image_cap = -1;
}

double transition_kernel(const DomainSpec& domain, double t, double x, double y) {
    if (!(t > 0.0)) throw std::invalid_argument("transition_kernel requires t > 0");
    domain.validate();
    switch (domain.kind) {
        case DomainCase::FullLine:
            return gauss_kernel(t, x - y);
        case DomainCase::HalfLine:
            return gauss_kernel(t, x - y) + gauss_kernel(t, x + y);
        case DomainCase::Interval: {
            const double b = domain.b;
            double sum = gauss_kernel(t, x - y) + gauss_kernel(t, x + y);
            const long k_floor =
                static_cast<long>(std::ceil((std::abs(x) + std::abs(y)) / (2.0 * b))) +
                static_cast<long>(std::ceil(6.0 * std::sqrt(t) / (2.0 * b)));
            for (long k = 1;; ++k) {
                if (detail::interval_image_cap >= 0 && k > detail::interval_image_cap) break;
                const double shift = 2.0 * b * static_cast<double>(k);
                const double term = gauss_kernel(t, x - y - shift) + gauss_kernel(t, x - y + shift) +
                                    gauss_kernel(t, x + y - shift) + gauss_kernel(t, x + y + shift);
                sum += term;
                if (k >= k_floor && term < 1e-16 * sum) break;
            }
            return sum;
        }
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Bridge and free-path sampling
// ---------------------------------------------------------------------------

namespace {

void check_endpoint(const DomainSpec& d, double v, const char* name) {
    if (!d.in_closure(v))
        throw std::invalid_argument(std::string("sample point ") + name + " outside the domain");
    if (d.has_boundary0() && v == 0.0 && d.bc0.is_dirichlet())
        throw std::invalid_argument(
            std::string(name) + " sits on a Dirichlet boundary where the kernel vanishes");
    if (d.has_boundaryb() && v == d.b && d.bcb.is_dirichlet())
        throw std::invalid_argument(
            std::string(name) + " sits on a Dirichlet boundary where the kernel vanishes");
}

// Free target for the folded endpoint: identity, sign choice, or lattice
// translate choice, weighted by the Gaussian kernel from x. Consumes one
// uniform draw except on the full line.
double select_target(const DomainSpec& d, double t, double x, double y, std::mt19937_64& rng) {
    if (d.kind == DomainCase::FullLine) return y;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    if (d.kind == DomainCase::HalfLine) {
        const double w_plus = gauss_kernel(t, x - y);
        const double w_minus = gauss_kernel(t, x + y);
        return (unif(rng) * (w_plus + w_minus) < w_minus) ? -y : y;
    }
    // Interval: enumerate image points ring by ring with the same floor and
    // relative cutoff as the kernel sum.
    const double b = d.b;
    std::vector<double> zs = {y, -y};
    std::vector<double> ws = {gauss_kernel(t, x - y), gauss_kernel(t, x + y)};
    double sum = ws[0] + ws[1];
    const long k_floor = static_cast<long>(std::ceil((std::abs(x) + std::abs(y)) / (2.0 * b))) +
                         static_cast<long>(std::ceil(6.0 * std::sqrt(t) / (2.0 * b)));
    for (long k = 1;; ++k) {
        const double shift = 2.0 * b * static_cast<double>(k);
        double ring = 0.0;
        for (double z : {shift + y, shift - y, -shift + y, -shift - y}) {
            zs.push_back(z);
            ws.push_back(gauss_kernel(t, x - z));
            ring += ws.back();
        }
        sum += ring;
        if (k >= k_floor && ring < 1e-16 * sum) break;
    }
    double u = unif(rng) * sum;
    for (std::size_t i = 0; i < zs.size(); ++i) {
        u -= ws[i];
        if (u <= 0.0) return zs[i];
    }
    return zs.back();
}

}  // namespace

BridgePath sample_bridge(const DomainSpec& domain, double t, double x, double y,
                         std::size_t n_steps, std::mt19937_64& rng) {
    if (!(t > 0.0)) throw std::invalid_argument("sample_bridge requires t > 0");
    if (n_steps < 2) throw std::invalid_argument("sample_bridge requires n_steps >= 2");
    domain.validate();
    check_endpoint(domain, x, "x");
    check_endpoint(domain, y, "y");

    BridgePath p;
    p.t = t;
    p.x = x;
    p.y = y;
    p.domain = domain;
    p.target = select_target(domain, t, x, y, rng);

    const std::size_t n = n_steps;
    const double dt = t / static_cast<double>(n);
    p.free_positions.resize(n + 1);
    p.free_positions[0] = x;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 1; i < n; ++i) {
        const double tau_rem = t - static_cast<double>(i - 1) * dt;
        const double prev = p.free_positions[i - 1];
        const double mean = prev + (p.target - prev) * dt / tau_rem;
        const double var = dt * (tau_rem - dt) / tau_rem;
        p.free_positions[i] = mean + std::sqrt(var) * normal(rng);
    }
    p.free_positions[n] = p.target;

    p.positions.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) p.positions[i] = fold_into(domain, p.free_positions[i]);
    p.positions[0] = x;
    p.positions[n] = y;
    return p;
}

BridgePath sample_free_path(const DomainSpec& domain, double t, double x, std::size_t n_steps,
                            std::mt19937_64& rng) {
    if (!(t > 0.0)) throw std::invalid_argument("sample_free_path requires t > 0");
    if (n_steps < 1) throw std::invalid_argument("sample_free_path requires n_steps >= 1");
    domain.validate();
    if (!domain.in_closure(x))
        throw std::invalid_argument("sample_free_path start outside the domain closure");

    BridgePath p;
    p.t = t;
    p.x = x;
    p.domain = domain;
    const std::size_t n = n_steps;
    const double dt = t / static_cast<double>(n);
    const double step_sd = std::sqrt(dt);
    p.free_positions.resize(n + 1);
    p.free_positions[0] = x;
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 1; i <= n; ++i)
        p.free_positions[i] = p.free_positions[i - 1] + step_sd * normal(rng);
    p.target = p.free_positions[n];
    p.positions.resize(n + 1);
    for (std::size_t i = 0; i <= n; ++i) p.positions[i] = fold_into(domain, p.free_positions[i]);
    p.y = p.positions[n];
    return p;
}

void BridgePath::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "time,position\n";
    char buf[64];
    const double step = dt();
    for (std::size_t i = 0; i < positions.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", static_cast<double>(i) * step,
                      positions[i]);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Local times
// ---------------------------------------------------------------------------

StepFunction LocalTimeProfile::to_step() const {
    StepFunction f;
    f.breakpoints = edges;
    f.levels.resize(masses.size());
    for (std::size_t i = 0; i < masses.size(); ++i) f.levels[i] = masses[i] / bin_width;
    return f;
}

namespace {

// Fold kink abscissae of the free line inside (lo, hi): multiples of b for
// the interval, the origin for the half line, none for the full line.
void collect_fold_kinks(const DomainSpec& d, double lo, double hi, std::vector<double>& out) {
    out.clear();
    if (d.kind == DomainCase::FullLine || hi <= lo) return;
    if (d.kind == DomainCase::HalfLine) {
        if (lo < 0.0 && hi > 0.0) out.push_back(0.0);
        return;
    }
    const double b = d.b;
    for (long k = static_cast<long>(std::floor(lo / b)) + 1;
         static_cast<double>(k) * b < hi; ++k) {
        const double kb = static_cast<double>(k) * b;
        if (kb > lo) out.push_back(kb);
    }
}

struct BinGrid {
    double width = 0.0;
    long k_min = 0;
    std::size_t count = 0;

    std::size_t index(double pos) const {
        long k = static_cast<long>(std::floor(pos / width)) - k_min;
        if (k < 0) k = 0;
        if (k >= static_cast<long>(count)) k = static_cast<long>(count) - 1;
        return static_cast<std::size_t>(k);
    }
    double edge(std::size_t i) const {
        return (static_cast<double>(k_min) + static_cast<double>(i)) * width;
    }
};

// Distribute tau over the bins covered by the monotone folded piece
// [lo, hi], proportionally to overlap length (exact for linear pieces).
void deposit(const BinGrid& grid, std::vector<double>& masses, double lo, double hi,
             double tau) {
    if (hi <= lo) {
        masses[grid.index(lo)] += tau;
        return;
    }
    const double inv_len = 1.0 / (hi - lo);
    std::size_t j0 = grid.index(lo);
    std::size_t j1 = grid.index(std::nextafter(hi, lo));
    if (j1 < j0) j1 = j0;
    for (std::size_t j = j0; j <= j1; ++j) {
        const double a = std::max(lo, grid.edge(j));
        const double b = std::min(hi, grid.edge(j + 1));
        if (b > a) masses[j] += tau * (b - a) * inv_len;
    }
}

}  // namespace

LocalTimeProfile local_time(const BridgePath& path, double bin_width) {
    if (!(bin_width > 0.0)) throw std::invalid_argument("local_time requires bin width > 0");
    const DomainSpec& d = path.domain;
    const std::size_t n = path.n_steps();
    const double dt = path.dt();

    BinGrid grid;
    if (d.kind == DomainCase::Interval) {
        const std::size_t nb =
            std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(d.b / bin_width)));
        grid.width = d.b / static_cast<double>(nb);
        grid.k_min = 0;
        grid.count = nb;
    } else {
        grid.width = bin_width;
        double fmin = path.positions[0], fmax = path.positions[0];
        for (double v : path.positions) {
            fmin = std::min(fmin, v);
            fmax = std::max(fmax, v);
        }
        if (d.kind == DomainCase::HalfLine) fmin = 0.0;
        grid.k_min = static_cast<long>(std::floor(fmin / grid.width));
        const long k_hi = static_cast<long>(std::floor(fmax / grid.width));
        grid.count = static_cast<std::size_t>(k_hi - grid.k_min + 1);
    }

    LocalTimeProfile prof;
    prof.t = path.t;
    prof.bin_width = grid.width;
    prof.edges.resize(grid.count + 1);
    for (std::size_t i = 0; i <= grid.count; ++i) prof.edges[i] = grid.edge(i);
    prof.masses.assign(grid.count, 0.0);

    std::vector<double> kinks;
    for (std::size_t i = 0; i < n; ++i) {
        const double z0 = path.free_positions[i];
        const double z1 = path.free_positions[i + 1];
        const double seg_lo = std::min(z0, z1), seg_hi = std::max(z0, z1);
        collect_fold_kinks(d, seg_lo, seg_hi, kinks);
        if (kinks.empty() || z0 == z1) {
            const double a = fold_into(d, z0), b = fold_into(d, z1);
            deposit(grid, prof.masses, std::min(a, b), std::max(a, b), dt);
            continue;
        }
        // Walk the segment in travel order, splitting at fold kinks; each
        // sub-piece folds to a monotone linear piece.
        if (z1 < z0) std::reverse(kinks.begin(), kinks.end());
        const double inv_span = 1.0 / (z1 - z0);
        double prev = z0;
        for (std::size_t k = 0; k <= kinks.size(); ++k) {
            const double next = (k < kinks.size()) ? kinks[k] : z1;
            const double tau = dt * (next - prev) * inv_span;
            const double a = fold_into(d, prev), b = fold_into(d, next);
            if (tau > 0.0) deposit(grid, prof.masses, std::min(a, b), std::max(a, b), tau);
            prev = next;
        }
    }

    if (d.has_boundary0()) {
        prof.boundary0 = boundary_local_time(path, 0.0, grid.width);
        const BoundaryLattice lat = boundary_lattice(d, 0.0);
        for (std::size_t i = 0; i < n && !prof.hit0; ++i)
            prof.hit0 = segment_touches_lattice(lat, path.free_positions[i],
                                                path.free_positions[i + 1]);
    }
    if (d.has_boundaryb()) {
        prof.boundaryb = boundary_local_time(path, d.b, grid.width);
        const BoundaryLattice lat = boundary_lattice(d, d.b);
        for (std::size_t i = 0; i < n && !prof.hitb; ++i)
            prof.hitb = segment_touches_lattice(lat, path.free_positions[i],
                                                path.free_positions[i + 1]);
    }
    return prof;
}

double boundary_local_time(const BridgePath& path, double c, double eps) {
    const DomainSpec& d = path.domain;
    if (d.kind == DomainCase::FullLine)
        throw std::invalid_argument("boundary_local_time: the full line has no boundary");
    if (!(eps > 0.0)) throw std::invalid_argument("boundary_local_time requires eps > 0");
    if (d.kind == DomainCase::Interval && !(eps < d.b))
        throw std::invalid_argument("boundary_local_time window must be smaller than b");
    const BoundaryLattice lat = boundary_lattice(d, c);

    const std::size_t n = path.n_steps();
    const double dt = path.dt();
    double occupation = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double z0 = path.free_positions[i];
        const double z1 = path.free_positions[i + 1];
        const double lo = std::min(z0, z1), hi = std::max(z0, z1);
        if (hi == lo) {
            if (lattice_distance(lat, lo) < eps) occupation += dt;
            continue;
        }
        const double inv_len = 1.0 / (hi - lo);
        if (!lat.periodic) {
            const double a = std::max(lo, lat.point - eps);
            const double b = std::min(hi, lat.point + eps);
            if (b > a) occupation += dt * (b - a) * inv_len;
        } else {
            const long klo = static_cast<long>(std::ceil((lo - eps - lat.offset) / lat.period));
            const long khi = static_cast<long>(std::floor((hi + eps - lat.offset) / lat.period));
            for (long k = klo; k <= khi; ++k) {
                const double pt = lat.offset + lat.period * static_cast<double>(k);
                const double a = std::max(lo, pt - eps);
                const double b = std::min(hi, pt + eps);
                if (b > a) occupation += dt * (b - a) * inv_len;
            }
        }
    }
    return occupation / (2.0 * eps);
}

// ---------------------------------------------------------------------------
// Dirichlet survival
// ---------------------------------------------------------------------------

int dirichlet_survival(const BridgePath& path, double c, std::mt19937_64& rng) {
    const DomainSpec& d = path.domain;
    if (d.kind == DomainCase::HalfLine || d.kind == DomainCase::Interval) {
        const bool at0 = (c == 0.0) && d.bc0.is_dirichlet();
        const bool atb = d.has_boundaryb() && (c == d.b) && d.bcb.is_dirichlet();
        if (!at0 && !atb)
            throw std::invalid_argument("dirichlet_survival: c is not a Dirichlet boundary");
    }
    const BoundaryLattice lat = boundary_lattice(d, c);
    const std::size_t n = path.n_steps();
    const double dt = path.dt();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    bool alive = true;
    for (std::size_t i = 0; i < n; ++i) {
        const double u = unif(rng);  // always consumed: fixed stream layout
        const double z0 = path.free_positions[i];
        const double z1 = path.free_positions[i + 1];
        if (segment_touches_lattice(lat, z0, z1)) {
            alive = false;
            continue;
        }
        const double d0 = lattice_distance(lat, z0);
        const double d1 = lattice_distance(lat, z1);
        if (u < std::exp(-2.0 * d0 * d1 / dt)) alive = false;
    }
    return alive ? 1 : 0;
}

}  // namespace fkmc
