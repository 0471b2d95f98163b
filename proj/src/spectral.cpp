#include "fkmc/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <lapacke.h>

#include "fkmc/rng.hpp"

namespace fkmc {

// ---------------------------------------------------------------------------
// DiscreteForm
// ---------------------------------------------------------------------------

std::vector<double> DiscreteForm::apply(const std::vector<double>& x) const {
    const std::size_t n = size();
    if (x.size() != n) throw std::invalid_argument("apply: dimension mismatch");
    std::vector<double> y(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double v = diag[i] * x[i];
        if (i > 0) v += off[i - 1] * x[i - 1];
        if (i + 1 < n) v += off[i] * x[i + 1];
        y[i] = v;
    }
    return y;
}

DiscreteForm discretize_form(const DomainSpec& domain, const PotentialSpec& V,
                             const std::vector<double>* xi_at_nodes, std::size_t n,
                             double radius, double xi_boundary_b) {
    domain.validate();
    V.validate(domain);
    if (n < 16) throw std::invalid_argument("discretize_form needs n >= 16 cells");

    double lo = 0.0, hi = 0.0;
    bool dirichlet_lo = false, dirichlet_hi = false;
    double robin_lo = 0.0, robin_hi = 0.0;
    switch (domain.kind) {
        case DomainCase::FullLine:
            if (!(radius > 0.0))
                throw std::invalid_argument("unbounded domain requires a truncation radius");
            lo = -radius;
            hi = radius;
            dirichlet_lo = dirichlet_hi = true;  // artificial walls
            break;
        case DomainCase::HalfLine:
            if (!(radius > 0.0))
                throw std::invalid_argument("unbounded domain requires a truncation radius");
            lo = 0.0;
            hi = radius;
            dirichlet_lo = domain.bc0.is_dirichlet();
            if (!dirichlet_lo) robin_lo = domain.bc0.coefficient;
            dirichlet_hi = true;  // artificial wall
            break;
        case DomainCase::Interval:
            lo = 0.0;
            hi = domain.b;
            radius = 0.0;
            dirichlet_lo = domain.bc0.is_dirichlet();
            if (!dirichlet_lo) robin_lo = domain.bc0.coefficient;
            dirichlet_hi = domain.bcb.is_dirichlet();
            if (!dirichlet_hi) robin_hi = domain.bcb.coefficient;
            break;
    }
    if (xi_boundary_b != 0.0 && dirichlet_hi)
        throw std::invalid_argument("boundary noise value applies only to a Robin endpoint");
    robin_hi += xi_boundary_b;

    if (xi_at_nodes && xi_at_nodes->size() != n + 1)
        throw std::invalid_argument("xi_at_nodes must hold one value per grid node");

    const double h = (hi - lo) / static_cast<double>(n);
    const std::size_t i0 = dirichlet_lo ? 1 : 0;
    const std::size_t i1 = dirichlet_hi ? n - 1 : n;

    DiscreteForm form;
    form.h = h;
    form.radius = radius;
    const std::size_t m = i1 - i0 + 1;
    form.nodes.resize(m);
    form.weights.resize(m);
    form.diag.resize(m);
    form.off.resize(m - 1);

    for (std::size_t a = 0; a < m; ++a) {
        const std::size_t i = i0 + a;
        const double x = lo + h * static_cast<double>(i);
        const bool end = (i == 0 || i == n);  // only reachable when not eliminated
        const double w = end ? 0.5 * h : h;
        const double kinetic = end ? 0.5 / h : 1.0 / h;
        double vi = V(x) + V.constant_shift;
        if (xi_at_nodes) vi += (*xi_at_nodes)[i];
        double aii = kinetic + w * vi;
        if (i == 0 && !dirichlet_lo) aii -= 0.5 * robin_lo;
        if (i == n && !dirichlet_hi) aii -= 0.5 * robin_hi;
        form.nodes[a] = x;
        form.weights[a] = w;
        form.diag[a] = aii / w;
    }
    for (std::size_t a = 0; a + 1 < m; ++a)
        form.off[a] = -0.5 / h / std::sqrt(form.weights[a] * form.weights[a + 1]);
    return form;
}

// ---------------------------------------------------------------------------
// Eigen solve
// ---------------------------------------------------------------------------

SpectralResult eigen_solve(const DiscreteForm& form, std::size_t k) {
    const std::size_t n = form.size();
    if (k < 1) throw std::invalid_argument("eigen_solve needs k >= 1");
    if (4 * k > n)
        throw std::invalid_argument("eigen_solve: k exceeds the trusted quarter of the grid");

    std::vector<double> d = form.diag;  // dstevr overwrites its inputs
    std::vector<double> e = form.off;
    e.resize(n, 0.0);  // lapacke expects n-1 used entries; keep a safe tail
    std::vector<double> w(n, 0.0);
    std::vector<double> z(n * k, 0.0);
    std::vector<lapack_int> isuppz(2 * std::max<std::size_t>(1, k), 0);
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dstevr(
        LAPACK_COL_MAJOR, 'V', 'I', static_cast<lapack_int>(n), d.data(), e.data(), 0.0, 0.0,
        1, static_cast<lapack_int>(k), 0.0, &found, w.data(), z.data(),
        static_cast<lapack_int>(n), isuppz.data());
    if (info != 0 || found != static_cast<lapack_int>(k)) {
        std::ostringstream msg;
        msg << "tridiagonal eigensolve failed (info " << info << ", found " << found << ")";
        throw std::runtime_error(msg.str());
    }

    SpectralResult out;
    out.eigenvalues.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(k));
    out.nodes = form.nodes;
    out.weights = form.weights;
    out.h = form.h;
    out.vectors.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        std::vector<double> psi(z.begin() + static_cast<std::ptrdiff_t>(j * n),
                                z.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
        const std::vector<double> bpsi = form.apply(psi);
        double r2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = bpsi[i] - out.eigenvalues[j] * psi[i];
            r2 += r * r;
        }
        out.max_residual = std::max(out.max_residual, std::sqrt(r2));
        out.vectors[j].resize(n);
        for (std::size_t i = 0; i < n; ++i)
            out.vectors[j][i] = psi[i] / std::sqrt(form.weights[i]);
    }
    if (!(out.max_residual <= 1e-8)) {
        std::ostringstream msg;
        msg << "eigenpair residual " << out.max_residual << " exceeds 1e-8";
        throw std::runtime_error(msg.str());
    }
    return out;
}

double SpectralResult::orthonormality_defect() const {
    double worst = 0.0;
    for (std::size_t a = 0; a < vectors.size(); ++a) {
        for (std::size_t b = a; b < vectors.size(); ++b) {
            double g = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i)
                g += weights[i] * vectors[a][i] * vectors[b][i];
            worst = std::max(worst, std::abs(g - (a == b ? 1.0 : 0.0)));
        }
    }
    return worst;
}

void SpectralResult::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << "k,lambda\n";
    char buf[64];
    for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i + 1, eigenvalues[i]);
        out << buf;
    }
}

// ---------------------------------------------------------------------------
// Spectral trace
// ---------------------------------------------------------------------------

SpectralTraceResult spectral_trace(const SpectralResult& result, double t,
                                   std::size_t k_used) {
    if (!(t > 0.0)) throw std::invalid_argument("spectral_trace needs t > 0");
    if (k_used < 1 || k_used > result.eigenvalues.size())
        throw std::invalid_argument("spectral_trace: k_used out of range");
    SpectralTraceResult out;
    for (std::size_t i = 0; i < k_used; ++i)
        out.value += std::exp(-t * result.eigenvalues[i]);
    if (k_used >= 2) {
        const double gap =
            result.eigenvalues[k_used - 1] - result.eigenvalues[k_used - 2];
        if (gap > 0.0) {
            const double rho = std::exp(-t * gap);
            out.tail = std::exp(-t * result.eigenvalues[k_used - 1]) * rho / (1.0 - rho);
        } else {
            out.tail = out.value;
            out.unreliable = true;
        }
    } else {
        out.tail = out.value;
        out.unreliable = true;
    }
    if (out.tail > 1e-4 * out.value) out.unreliable = true;
    return out;
}

// ---------------------------------------------------------------------------
// Path-vs-spectrum comparison
// ---------------------------------------------------------------------------

nlohmann::json EquivalenceReport::to_json() const {
    nlohmann::json j;
    j["epsilon"] = epsilon;
    j["t"] = t;
    j["n_agree"] = n_agree;
    j["n_seeds"] = seeds.size();
    j["pass"] = pass;
    j["seeds"] = nlohmann::json::array();
    for (const EquivalenceSeed& s : seeds) {
        nlohmann::json row;
        row["seed"] = s.seed;
        row["path_trace"] = s.path_trace;
        row["path_se"] = s.path_se;
        row["spectral_value"] = s.spectral_value;
        row["spectral_tail"] = s.spectral_tail;
        row["diff"] = s.diff;
        row["agree"] = s.agree;
        row["tail_unreliable"] = s.tail_unreliable;
        j["seeds"].push_back(row);
    }
    return j;
}

EquivalenceReport oracle_equivalence(const DomainSpec& domain, const PotentialSpec& V,
                                     const CovarianceModel* cov, double eps, double t,
                                     const std::vector<std::uint64_t>& seeds,
                                     const EquivalenceBudget& budget, int workers) {
    domain.validate();
    V.validate(domain);
    if (seeds.empty()) throw std::invalid_argument("oracle_equivalence needs seeds");
    if (cov && !(eps > 0.0))
        throw std::invalid_argument("oracle_equivalence needs a positive mollifier width");
    const bool bounded = domain.kind == DomainCase::Interval;
    if (!bounded && !(budget.radius > 0.0))
        throw std::invalid_argument("oracle_equivalence on an unbounded domain needs a radius");

    const double lo = domain.kind == DomainCase::FullLine ? -budget.radius : 0.0;
    const double hi = bounded ? domain.b : budget.radius;
    const double fd_h = (hi - lo) / static_cast<double>(budget.fd_cells);
    std::vector<double> fd_nodes(budget.fd_cells + 1);
    for (std::size_t i = 0; i < fd_nodes.size(); ++i)
        fd_nodes[i] = lo + fd_h * static_cast<double>(i);

    MollifierSpec moll;
    moll.epsilon = eps;

    // Noise grid: multiples of eps/8 covering every query's mollifier window
    // (path-side occupation-bin centers and spectral nodes both lie in
    // [lo, hi]); anchored so that 0 is a grid point exactly.
    std::vector<double> noise_grid;
    if (cov) {
        const double spacing = eps / 8.0;
        const long klo = static_cast<long>(std::floor((lo - eps) / spacing)) - 4;
        const long khi = static_cast<long>(std::ceil((hi + eps) / spacing)) + 4;
        noise_grid.reserve(static_cast<std::size_t>(khi - klo + 1));
        for (long k = klo; k <= khi; ++k)
            noise_grid.push_back(spacing * static_cast<double>(k));
    }

    EquivalenceReport report;
    report.epsilon = cov ? eps : 0.0;
    report.t = t;
    for (std::uint64_t seed : seeds) {
        EquivalenceSeed row;
        row.seed = seed;

        GridNoisePath noise;
        std::vector<double> xi;
        if (cov) {
            auto stream = rng::make_stream(
                seed, {static_cast<std::uint64_t>(rng::OpLabel::kNoiseSample)});
            noise = sample_noise_path(*cov, noise_grid, stream);
            xi = mollified_derivative(noise, moll, fd_nodes);
        }

        const KernelEstimate tr = trace_estimate(
            domain, V, cov ? &noise : nullptr, cov ? &moll : nullptr, t, budget.n_nodes,
            budget.radius, budget.paths_per_node, budget.res,
            rng::derive_key(seed, {static_cast<std::uint64_t>(rng::OpLabel::kTrace)}),
            workers);
        row.path_trace = tr.mean;
        row.path_se = tr.std_error;

        const DiscreteForm form =
            discretize_form(domain, V, cov ? &xi : nullptr, budget.fd_cells, budget.radius);
        const SpectralResult spec = eigen_solve(form, budget.k_used);
        const SpectralTraceResult st = spectral_trace(spec, t, budget.k_used);
        row.spectral_value = st.value;
        row.spectral_tail = st.tail;
        row.tail_unreliable = st.unreliable;

        row.diff = row.path_trace - row.spectral_value;
        row.agree = std::abs(row.diff) <= 3.0 * row.path_se + st.tail;
        if (row.agree) ++report.n_agree;
        report.seeds.push_back(row);
    }
    report.pass = 100 * report.n_agree >= 95 * report.seeds.size();
    return report;
}

}  // namespace fkmc
