#include "fkmc/feynman_kac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "fkmc/parallel.hpp"
#include "fkmc/quadrature.hpp"
#include "fkmc/rng.hpp"
#include "fkmc/stochint.hpp"

namespace fkmc {

// ---------------------------------------------------------------------------
// PotentialSpec
// ---------------------------------------------------------------------------

PotentialSpec PotentialSpec::zero() { return PotentialSpec{}; }

PotentialSpec PotentialSpec::linear() {
    PotentialSpec p;
    p.kind = PotentialKind::Linear;
    p.growth_certificate = true;
    return p;
}

PotentialSpec PotentialSpec::harmonic() {
    PotentialSpec p;
    p.kind = PotentialKind::Harmonic;
    p.growth_certificate = true;
    return p;
}

PotentialSpec PotentialSpec::tabulated(std::vector<double> grid, std::vector<double> values) {
    PotentialSpec p;
    p.kind = PotentialKind::Tabulated;
    p.grid = std::move(grid);
    p.values = std::move(values);
    return p;
}

PotentialSpec PotentialSpec::callable(std::function<double(double)> fn) {
    PotentialSpec p;
    p.kind = PotentialKind::Callable;
    p.fn = std::move(fn);
    return p;
}

double PotentialSpec::operator()(double x) const {
    switch (kind) {
        case PotentialKind::Zero: return 0.0;
        case PotentialKind::Linear: return x;
        case PotentialKind::Harmonic: return 0.5 * x * x;
        case PotentialKind::Tabulated: {
            if (x <= grid.front()) return values.front();
            if (x >= grid.back()) return values.back();
            auto it = std::upper_bound(grid.begin(), grid.end(), x);
            std::size_t j = static_cast<std::size_t>(it - grid.begin()) - 1;
            double theta = (x - grid[j]) / (grid[j + 1] - grid[j]);
            return values[j] + theta * (values[j + 1] - values[j]);
        }
        case PotentialKind::Callable: return fn(x);
    }
    return 0.0;
}

double PotentialSpec::tail_inf(double R) const {
    R = std::max(R, 0.0);
    switch (kind) {
        case PotentialKind::Zero: return 0.0;
        case PotentialKind::Linear: return R;  // half-line use: x >= R
        case PotentialKind::Harmonic: return 0.5 * R * R;
        case PotentialKind::Tabulated: {
            double m = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < grid.size(); ++i)
                if (std::abs(grid[i]) >= R) m = std::min(m, values[i]);
            // Flat extension beyond the table.
            m = std::min(m, std::min(values.front(), values.back()));
            return m;
        }
        case PotentialKind::Callable: {
            // Sampled estimate over |x| in [R, 4R + 1].
            double m = std::numeric_limits<double>::infinity();
            const double hi = 4.0 * R + 1.0;
            for (int i = 0; i <= 64; ++i) {
                const double u = R + (hi - R) * i / 64.0;
                m = std::min(m, std::min(fn(u), fn(-u)));
            }
            return m;
        }
    }
    return 0.0;
}

void PotentialSpec::validate(const DomainSpec& domain) const {
    if (kind == PotentialKind::Tabulated) {
        if (grid.size() < 2 || grid.size() != values.size())
            throw std::invalid_argument("tabulated potential needs matching grid/values, >= 2");
        for (std::size_t i = 0; i + 1 < grid.size(); ++i)
            if (!(grid[i] < grid[i + 1]))
                throw std::invalid_argument("tabulated potential grid must be increasing");
        for (double v : values)
            if (v < 0.0)
                throw std::invalid_argument("potential values must be nonnegative "
                                            "(use constant_shift for offsets)");
    }
    if (kind == PotentialKind::Callable && !fn)
        throw std::invalid_argument("callable potential must be evaluable");
    if (kind == PotentialKind::Linear && domain.kind == DomainCase::FullLine)
        throw std::invalid_argument("linear potential is negative on the full line");
    // Only callable potentials need the caller's growth assertion: the engine
    // cannot introspect them, while the other kinds have known tails (flat
    // tails then fail honestly at truncation-radius resolution, and kernel
    // estimates at fixed endpoints never need a tail at all).
    const bool unbounded =
        domain.kind == DomainCase::FullLine || domain.kind == DomainCase::HalfLine;
    if (unbounded && kind == PotentialKind::Callable && !growth_certificate)
        throw std::invalid_argument("growth certificate required on unbounded domains");
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

Resolution Resolution::resolved(const DomainSpec& domain, double t) const {
    Resolution r = *this;
    if (r.n_steps == 0)
        r.n_steps = std::max<std::size_t>(
            64, static_cast<std::size_t>(std::llround(2048.0 * t)));
    if (r.bin_width == 0.0) {
        if (domain.kind == DomainCase::Interval) {
            const std::size_t nb = std::clamp<std::size_t>(r.n_steps / 10, 16, 256);
            r.bin_width = domain.b / static_cast<double>(nb);
        } else {
            r.bin_width = std::sqrt(t) / 16.0;
        }
    }
    if (r.window == 0.0) r.window = r.bin_width;
    return r;
}

double CheckResult::joint_se() const {
    return std::sqrt(lhs_se * lhs_se + rhs_se * rhs_se);
}

bool CheckResult::within(double n_se) const { return std::abs(lhs - rhs) <= n_se * joint_se(); }

// ---------------------------------------------------------------------------
// Replicate engine
// ---------------------------------------------------------------------------

namespace {

struct EngineContext {
    const DomainSpec* domain = nullptr;
    const PotentialSpec* V = nullptr;
    const GridNoisePath* noise = nullptr;  // raw coupling when moll == nullptr
    const MollifierSpec* moll = nullptr;   // smoothed coupling (needs noise)
    double t = 0.0;
    std::size_t n_steps = 0;
    double bin_width = 0.0;      // requested width
    double bin_width_eff = 0.0;  // width after interval adjustment
    double window = 0.0;
};

struct Accum {
    double sum_w = 0.0;
    double sum_w2 = 0.0;
    std::size_t n = 0;
    std::size_t discards = 0;
};

EngineContext make_context(const DomainSpec& domain, const PotentialSpec& V,
                           const GridNoisePath* noise, const MollifierSpec* moll, double t,
                           const Resolution& res_in) {
    if (!(t > 0.0)) throw std::invalid_argument("time horizon must be positive");
    domain.validate();
    V.validate(domain);
    if (moll) {
        moll->validate();
        if (!noise) throw std::invalid_argument("mollified weight requires a noise path");
    }
    const Resolution res = res_in.resolved(domain, t);
    EngineContext ctx;
    ctx.domain = &domain;
    ctx.V = &V;
    ctx.noise = noise;
    ctx.moll = moll;
    ctx.t = t;
    ctx.n_steps = res.n_steps;
    ctx.bin_width = res.bin_width;
    ctx.window = res.window;
    if (domain.kind == DomainCase::Interval) {
        const std::size_t nb = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(domain.b / res.bin_width)));
        ctx.bin_width_eff = domain.b / static_cast<double>(nb);
    } else {
        ctx.bin_width_eff = res.bin_width;
    }
    return ctx;
}

// Per-chunk memo of the smoothed noise derivative at bin centers; centers
// sit on the lattice (k + 1/2) * bin_width_eff shared by all replicates.
struct XiCache {
    std::unordered_map<long long, double> table;

    double value(const EngineContext& ctx, double center) {
        const long long key = std::llround(center / ctx.bin_width_eff - 0.5);
        auto it = table.find(key);
        if (it != table.end()) return it->second;
        const double v = mollified_derivative(*ctx.noise, *ctx.moll, {center})[0];
        table.emplace(key, v);
        return v;
    }
};

// One conditioned-path weight; returns false when the path escapes the
// noise span (replicate discarded).
bool replicate_weight(const EngineContext& ctx, double x, double y, std::mt19937_64& stream,
                      XiCache& cache, double* w_out) {
    const DomainSpec& d = *ctx.domain;
    BridgePath path = sample_bridge(d, ctx.t, x, y, ctx.n_steps, stream);
    LocalTimeProfile prof = local_time(path, ctx.bin_width);

    if (ctx.noise) {
        double need_lo = prof.edges.front();
        double need_hi = prof.edges.back();
        if (ctx.moll) {
            need_lo += 0.5 * prof.bin_width - ctx.moll->epsilon;
            need_hi -= 0.5 * prof.bin_width;
            need_hi += ctx.moll->epsilon;
        }
        if (need_lo < ctx.noise->span_lo() - 1e-12 || need_hi > ctx.noise->span_hi() + 1e-12)
            return false;
    }

    double a_exp = 0.0;
    for (std::size_t i = 0; i < prof.masses.size(); ++i) {
        const double mass = prof.masses[i];
        if (mass == 0.0) continue;
        const double c = prof.center(i);
        const double v = (*ctx.V)(c);
        if (v < 0.0)
            throw std::runtime_error("potential evaluated negative; callers must keep the "
                                     "base potential nonnegative and use constant_shift");
        const double extra = ctx.moll ? cache.value(ctx, c) : 0.0;
        a_exp -= mass * (v + extra);
    }

    int survival = 1;
    if (d.has_boundary0()) {
        if (d.bc0.is_dirichlet()) {
            survival &= dirichlet_survival(path, 0.0, stream);
        } else {
            const double l0 = (ctx.window == prof.bin_width)
                                  ? prof.boundary0
                                  : boundary_local_time(path, 0.0, ctx.window);
            a_exp += d.bc0.coefficient * l0;
        }
    }
    if (d.has_boundaryb()) {
        if (d.bcb.is_dirichlet()) {
            survival &= dirichlet_survival(path, d.b, stream);
        } else {
            const double lb = (ctx.window == prof.bin_width)
                                  ? prof.boundaryb
                                  : boundary_local_time(path, d.b, ctx.window);
            a_exp += d.bcb.coefficient * lb;
        }
    }
    if (ctx.noise && !ctx.moll) a_exp -= integrate_step(prof.to_step(), *ctx.noise);

    *w_out = survival ? std::exp(a_exp) : 0.0;
    return true;
}

Accum run_engine(const EngineContext& ctx, double x, double y, std::size_t n_paths,
                 std::uint64_t seed, int workers) {
    constexpr std::size_t kChunk = 1024;
    const std::size_t n_chunks = (n_paths + kChunk - 1) / kChunk;
    std::vector<Accum> parts(n_chunks);
    parallel_chunks(n_paths, workers, kChunk,
                    [&](std::size_t c, std::size_t begin, std::size_t end) {
                        XiCache cache;
                        Accum a;
                        for (std::size_t r = begin; r < end; ++r) {
                            auto stream = rng::make_stream(seed, {r});
                            double w = 0.0;
                            if (replicate_weight(ctx, x, y, stream, cache, &w)) {
                                a.sum_w += w;
                                a.sum_w2 += w * w;
                                ++a.n;
                            } else {
                                ++a.discards;
                            }
                        }
                        parts[c] = a;
                    });
    Accum total;
    for (const Accum& a : parts) {  // fixed reduction order
        total.sum_w += a.sum_w;
        total.sum_w2 += a.sum_w2;
        total.n += a.n;
        total.discards += a.discards;
    }
    return total;
}

bool on_dirichlet_boundary(const DomainSpec& d, double v) {
    if (d.has_boundary0() && v == 0.0 && d.bc0.is_dirichlet()) return true;
    if (d.has_boundaryb() && v == d.b && d.bcb.is_dirichlet()) return true;
    return false;
}

KernelEstimate assemble(const EngineContext& ctx, double pi_factor, const Accum& acc) {
    KernelEstimate e;
    e.replicates = acc.n;
    e.discards = acc.discards;
    e.n_steps = ctx.n_steps;
    e.bin_width = ctx.bin_width_eff;
    e.window = ctx.window;
    if (acc.discards > 0 && 100 * acc.discards > acc.n + acc.discards) {
        e.warning = true;
        e.note = "discard fraction exceeds 1% (noise span too narrow for the paths)";
    }
    if (acc.n == 0) {
        if (!e.note.empty()) e.note += "; ";
        e.note += "no surviving replicates";
        return e;
    }
    if (acc.sum_w == 0.0) {
        // Weights are strictly positive unless a survival factor vanished, so
        // a zero sum means absorption annihilated every replicate.
        if (!e.note.empty()) e.note += "; ";
        e.note += "every replicate was annihilated at an absorbing boundary";
    }
    const double n = static_cast<double>(acc.n);
    double mean = acc.sum_w / n;
    double se = 0.0;
    if (acc.n >= 2) {
        const double var = std::max(0.0, (acc.sum_w2 - acc.sum_w * acc.sum_w / n) / (n - 1.0));
        se = std::sqrt(var / n);
    }
    // Deterministic prefactors applied one multiply at a time, in a fixed
    // order, so shifted runs scale bitwise against unshifted ones.
    mean = pi_factor * mean;
    se = pi_factor * se;
    if (ctx.V->constant_shift != 0.0) {
        const double f = std::exp(-ctx.V->constant_shift * ctx.t);
        mean = f * mean;
        se = f * se;
    }
    e.mean = mean;
    e.std_error = se;
    return e;
}

KernelEstimate kernel_estimate_impl(const DomainSpec& domain, const PotentialSpec& V,
                                    const GridNoisePath* noise, const MollifierSpec* moll,
                                    double t, double x, double y, std::size_t n_paths,
                                    const Resolution& res, std::uint64_t seed, int workers) {
    EngineContext ctx = make_context(domain, V, noise, moll, t, res);
    if (!domain.in_closure(x) || !domain.in_closure(y))
        throw std::invalid_argument("kernel endpoints must lie in the domain closure");
    if (on_dirichlet_boundary(domain, x) || on_dirichlet_boundary(domain, y)) {
        KernelEstimate e;
        e.note = "kernel vanishes on a Dirichlet boundary";
        e.n_steps = ctx.n_steps;
        e.bin_width = ctx.bin_width_eff;
        e.window = ctx.window;
        return e;
    }
    if (n_paths == 0) throw std::invalid_argument("n_paths must be positive");
    const double pi_factor = transition_kernel(domain, t, x, y);
    const Accum acc = run_engine(ctx, x, y, n_paths, seed, workers);
    return assemble(ctx, pi_factor, acc);
}

}  // namespace

KernelEstimate deterministic_kernel(const DomainSpec& domain, const PotentialSpec& V, double t,
                                    double x, double y, std::size_t n_paths,
                                    const Resolution& res, std::uint64_t seed, int workers) {
    return kernel_estimate_impl(domain, V, nullptr, nullptr, t, x, y, n_paths, res, seed,
                                workers);
}

KernelEstimate random_kernel(const DomainSpec& domain, const PotentialSpec& V,
                             const GridNoisePath& noise, double t, double x, double y,
                             std::size_t n_paths, const Resolution& res, std::uint64_t seed,
                             int workers) {
    return kernel_estimate_impl(domain, V, &noise, nullptr, t, x, y, n_paths, res, seed,
                                workers);
}

KernelEstimate mollified_kernel(const DomainSpec& domain, const PotentialSpec& V,
                                const GridNoisePath& noise, const MollifierSpec& moll, double t,
                                double x, double y, std::size_t n_paths, const Resolution& res,
                                std::uint64_t seed, int workers) {
    return kernel_estimate_impl(domain, V, &noise, &moll, t, x, y, n_paths, res, seed, workers);
}

// ---------------------------------------------------------------------------
// Trace quadrature
// ---------------------------------------------------------------------------

namespace {

struct TraceQuadrature {
    std::vector<double> nodes;
    std::vector<double> weights;
    double radius = 0.0;  // 0 on bounded domains
};

double domain_lo(const DomainSpec& d, double R) {
    return d.kind == DomainCase::FullLine ? -R : 0.0;
}

double domain_hi(const DomainSpec& d, double R) {
    return d.kind == DomainCase::Interval ? d.b : R;
}

// Deterministic proxy for the running trace integral, used to pre-select
// the truncation radius before any sampling.
double proxy_integral(const DomainSpec& d, const PotentialSpec& V, double t, double R) {
    const quad::Rule rule = quad::gauss_legendre(64, domain_lo(d, R), domain_hi(d, R));
    double s = 0.0;
    for (int i = 0; i < 64; ++i) {
        const double u = rule.nodes[i];
        s += rule.weights[i] * transition_kernel(d, t, u, u) * std::exp(-t * V(u));
    }
    return s;
}

double truncation_bound(const DomainSpec& d, const PotentialSpec& V, double t, double R) {
    return transition_kernel(d, t, R, R) * std::exp(-t * V.tail_inf(R));
}

double resolve_radius(const DomainSpec& d, const PotentialSpec& V, double t, double radius) {
    if (d.kind == DomainCase::Interval) return 0.0;
    if (radius > 0.0) return radius;
    double R = std::max(2.0, 4.0 * std::sqrt(t));
    while (true) {
        if (truncation_bound(d, V, t, R) < 1e-3 * proxy_integral(d, V, t, R)) return R;
        R *= 1.25;
        if (R > 64.0)
            throw std::runtime_error(
                "trace truncation criterion unreachable: potential growth too slow for a "
                "certified radius");
    }
}

TraceQuadrature trace_quadrature(const DomainSpec& d, const PotentialSpec& V, double t,
                                 std::size_t n_nodes, double radius) {
    if (n_nodes < 1) throw std::invalid_argument("quadrature needs at least one node");
    TraceQuadrature q;
    q.radius = resolve_radius(d, V, t, radius);
    const quad::Rule rule =
        quad::gauss_legendre(static_cast<int>(n_nodes), domain_lo(d, q.radius),
                             domain_hi(d, q.radius));
    q.nodes = rule.nodes;
    q.weights = rule.weights;
    return q;
}

}  // namespace

KernelEstimate trace_estimate(const DomainSpec& domain, const PotentialSpec& V,
                              const GridNoisePath* noise, const MollifierSpec* moll, double t,
                              std::size_t n_nodes, double radius, std::size_t paths_per_node,
                              const Resolution& res, std::uint64_t seed, int workers) {
    EngineContext ctx = make_context(domain, V, noise, moll, t, res);
    const TraceQuadrature q = trace_quadrature(domain, V, t, n_nodes, radius);

    KernelEstimate total;
    total.n_steps = ctx.n_steps;
    total.bin_width = ctx.bin_width_eff;
    total.window = ctx.window;
    double var = 0.0;
    for (std::size_t j = 0; j < q.nodes.size(); ++j) {
        const std::uint64_t node_seed = rng::derive_key(seed, {static_cast<std::uint64_t>(j)});
        KernelEstimate e = kernel_estimate_impl(domain, V, noise, moll, t, q.nodes[j],
                                                q.nodes[j], paths_per_node, res, node_seed,
                                                workers);
        total.mean += q.weights[j] * e.mean;
        var += q.weights[j] * q.weights[j] * e.std_error * e.std_error;
        total.replicates += e.replicates;
        total.discards += e.discards;
        total.warning = total.warning || e.warning;
    }
    total.std_error = std::sqrt(var);

    if (domain.kind != DomainCase::Interval) {
        double bound = truncation_bound(domain, V, t, q.radius);
        if (V.constant_shift != 0.0) bound *= std::exp(-V.constant_shift * t);
        total.certificate = bound;
        std::ostringstream note;
        note << "truncation radius " << q.radius << "; tail bound " << bound;
        if (!(bound < 1e-3 * total.mean)) {
            note << " violates 1e-3 x running integral " << total.mean;
            throw std::runtime_error(note.str());
        }
        note << " < 1e-3 x running integral " << total.mean;
        if (!total.note.empty()) total.note += "; ";
        total.note += note.str();
    }
    return total;
}

// ---------------------------------------------------------------------------
// Identity checks
// ---------------------------------------------------------------------------

CheckResult hs_norm_check(const DomainSpec& domain, const PotentialSpec& V,
                          const GridNoisePath* noise, const MollifierSpec* moll, double t,
                          std::size_t n_nodes, double radius, std::size_t paths_per_pair,
                          const Resolution& res, std::uint64_t seed, int workers) {
    if (n_nodes < 8)
        throw std::invalid_argument("hs_norm_check quadrature must have at least 8 nodes");
    const TraceQuadrature q = trace_quadrature(domain, V, t, n_nodes, radius);
    const double t_half = 0.5 * t;
    const std::size_t n_a = std::max<std::size_t>(2, paths_per_pair / 2);
    const std::size_t n_b = std::max<std::size_t>(2, paths_per_pair - n_a);

    CheckResult out;
    double var = 0.0;
    for (std::size_t i = 0; i < q.nodes.size(); ++i) {
        for (std::size_t j = i; j < q.nodes.size(); ++j) {
            const double w = q.weights[i] * q.weights[j] * (i == j ? 1.0 : 2.0);
            const std::uint64_t sa = rng::derive_key(
                seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), 0});
            const std::uint64_t sb = rng::derive_key(
                seed, {static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j), 1});
            // Two independent half-budget estimates: their product is an
            // unbiased estimate of the squared kernel value.
            KernelEstimate ea = kernel_estimate_impl(domain, V, noise, moll, t_half, q.nodes[i],
                                                     q.nodes[j], n_a, res, sa, workers);
            KernelEstimate eb = kernel_estimate_impl(domain, V, noise, moll, t_half, q.nodes[i],
                                                     q.nodes[j], n_b, res, sb, workers);
            out.lhs += w * ea.mean * eb.mean;
            var += w * w *
                   (ea.mean * ea.mean * eb.std_error * eb.std_error +
                    eb.mean * eb.mean * ea.std_error * ea.std_error);
        }
    }
    out.lhs_se = std::sqrt(var);

    KernelEstimate tr = trace_estimate(
        domain, V, noise, moll, t, n_nodes, q.radius > 0.0 ? q.radius : radius, paths_per_pair,
        res, rng::derive_key(seed, {static_cast<std::uint64_t>(rng::OpLabel::kTrace)}),
        workers);
    out.rhs = tr.mean;
    out.rhs_se = tr.std_error;
    std::ostringstream note;
    note << "squared-norm quadrature " << n_nodes << " nodes";
    if (q.radius > 0.0) note << ", radius " << q.radius;
    out.note = note.str();
    return out;
}

CheckResult semigroup_check(const DomainSpec& domain, const PotentialSpec& V,
                            const GridNoisePath* noise, const MollifierSpec* moll, double t,
                            double tbar, double x, double y, std::size_t n_nodes, double radius,
                            std::size_t paths_per_node, const Resolution& res,
                            std::uint64_t seed, int workers) {
    if (!(t > 0.0) || !(tbar > 0.0))
        throw std::invalid_argument("semigroup_check requires positive times");
    const TraceQuadrature q = trace_quadrature(domain, V, t + tbar, n_nodes, radius);

    CheckResult out;
    double var = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
        const double z = q.nodes[k];
        const std::uint64_t s1 =
            rng::derive_key(seed, {static_cast<std::uint64_t>(k), 0});
        const std::uint64_t s2 =
            rng::derive_key(seed, {static_cast<std::uint64_t>(k), 1});
        KernelEstimate ea =
            kernel_estimate_impl(domain, V, noise, moll, t, x, z, paths_per_node, res, s1,
                                 workers);
        KernelEstimate eb =
            kernel_estimate_impl(domain, V, noise, moll, tbar, z, y, paths_per_node, res, s2,
                                 workers);
        out.lhs += q.weights[k] * ea.mean * eb.mean;
        var += q.weights[k] * q.weights[k] *
               (ea.mean * ea.mean * eb.std_error * eb.std_error +
                eb.mean * eb.mean * ea.std_error * ea.std_error);
    }
    out.lhs_se = std::sqrt(var);

    KernelEstimate er = kernel_estimate_impl(
        domain, V, noise, moll, t + tbar, x, y, n_nodes * paths_per_node, res,
        rng::derive_key(seed, {static_cast<std::uint64_t>(rng::OpLabel::kSemigroup)}), workers);
    out.rhs = er.mean;
    out.rhs_se = er.std_error;
    return out;
}

// ---------------------------------------------------------------------------
// Laplace-transform moments
// ---------------------------------------------------------------------------

KernelEstimate laplace_transform_moment(const DomainSpec& domain, const PotentialSpec& V,
                                        const CovarianceModel* cov,
                                        const std::vector<double>& times, std::size_t n_noise,
                                        std::size_t n_nodes, std::size_t paths_per_node,
                                        const Resolution& res, std::uint64_t seed,
                                        int workers) {
    if (times.empty()) throw std::invalid_argument("laplace moment needs at least one time");
    for (double t : times)
        if (!(t > 0.0)) throw std::invalid_argument("laplace moment times must be positive");
    domain.validate();
    V.validate(domain);
    if (n_noise < 1) throw std::invalid_argument("n_noise must be positive");
    if (!cov) n_noise = 1;  // degenerate outer average

    const double t_max = *std::max_element(times.begin(), times.end());
    double radius_max = 0.0;
    std::vector<double> radii(times.size(), 0.0);
    for (std::size_t i = 0; i < times.size(); ++i) {
        radii[i] = resolve_radius(domain, V, times[i], 0.0);
        radius_max = std::max(radius_max, radii[i]);
    }

    // Noise grid covering every reachable occupation bin, anchored at 0.
    std::vector<double> grid;
    if (cov) {
        const Resolution r = res.resolved(domain, t_max);
        const double spacing = 0.5 * r.bin_width;
        double lo, hi;
        if (domain.kind == DomainCase::Interval) {
            lo = 0.0;
            hi = domain.b;
        } else {
            hi = radius_max + 8.0 * std::sqrt(t_max);
            lo = domain.kind == DomainCase::FullLine ? -hi : 0.0;
        }
        const long n_lo = static_cast<long>(std::ceil(-lo / spacing));
        const long n_hi = static_cast<long>(std::ceil(hi / spacing));
        for (long k = -n_lo; k <= n_hi; ++k) grid.push_back(spacing * static_cast<double>(k));
    }

    double sum_p = 0.0, sum_p2 = 0.0, sum_inner_var = 0.0;
    std::size_t discards = 0;
    bool warning = false;
    KernelEstimate meta;
    for (std::size_t j = 0; j < n_noise; ++j) {
        GridNoisePath path;
        if (cov) {
            auto stream = rng::make_stream(
                seed, {static_cast<std::uint64_t>(rng::OpLabel::kNoiseSample), j});
            path = sample_noise_path(*cov, grid, stream);
        }
        double product = 1.0;
        double rel_var = 0.0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            const std::uint64_t inner_seed = rng::derive_key(seed, {j, i});
            KernelEstimate tr =
                trace_estimate(domain, V, cov ? &path : nullptr, nullptr, times[i], n_nodes,
                               radii[i], paths_per_node, res, inner_seed, workers);
            product *= tr.mean;
            if (tr.mean > 0.0) rel_var += (tr.std_error / tr.mean) * (tr.std_error / tr.mean);
            discards += tr.discards;
            warning = warning || tr.warning;
            meta.n_steps = tr.n_steps;
            meta.bin_width = tr.bin_width;
            meta.window = tr.window;
        }
        sum_p += product;
        sum_p2 += product * product;
        sum_inner_var += product * product * rel_var;
    }

    KernelEstimate out = meta;
    const double n = static_cast<double>(n_noise);
    out.mean = sum_p / n;
    out.replicates = n_noise;
    out.discards = discards;
    out.warning = warning;
    double total_var = 0.0;
    if (n_noise >= 2) {
        total_var = std::max(0.0, (sum_p2 - sum_p * sum_p / n) / (n - 1.0));
        out.std_error = std::sqrt(total_var / n);
    } else {
        // Single outer draw: only the inner estimator error is available.
        out.std_error = std::sqrt(sum_inner_var);
    }
    std::ostringstream note;
    note << "variance decomposition: total " << total_var << ", mean within-estimate "
         << sum_inner_var / n;
    out.note = note.str();
    return out;
}

}  // namespace fkmc
