#include "fkmc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "fkmc/quadrature.hpp"
#include "fkmc/rng.hpp"
#include "fkmc/stochint.hpp"
#include "fkmc/toml_lite.hpp"

namespace fkmc {

namespace {

double now_seconds() {
    using clock = std::chrono::steady_clock;
    static const clock::time_point start = clock::now();
    return std::chrono::duration<double>(clock::now() - start).count();
}

std::string join_fields(const std::vector<std::string>& fields) {
    std::string out;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ", ";
        out += fields[i];
    }
    return out;
}

}  // namespace

ConfigError::ConfigError(const std::string& message, std::vector<std::string> offending)
    : std::runtime_error(message + ": " + join_fields(offending)),
      fields(std::move(offending)) {}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

nlohmann::json covariance_to_json(const CovarianceModel& cov) {
    nlohmann::json j;
    switch (cov.kind) {
        case NoiseKind::White:
            j["kind"] = "white";
            j["parameters"] = {{"sigma2", cov.sigma2}};
            break;
        case NoiseKind::Fractional:
            j["kind"] = "fractional";
            j["parameters"] = {{"sigma2", cov.sigma2}, {"hurst", cov.hurst}};
            break;
        case NoiseKind::Bounded:
            j["kind"] = "bounded";
            j["parameters"] = {{"label", cov.label}};
            break;
        case NoiseKind::LpSingular:
            j["kind"] = "lp_singular";
            j["parameters"] = {{"label", cov.label},
                               {"exponent", cov.singular_exponent}};
            break;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Config decoding
// ---------------------------------------------------------------------------

namespace {

/// Collects field-path errors while pulling typed values out of the parsed
/// document, so one pass reports every problem.
struct Decoder {
    const nlohmann::json& doc;
    std::vector<std::string> errors;

    const nlohmann::json* find(const std::string& block, const std::string& key) const {
        const nlohmann::json* node = &doc;
        if (!block.empty()) {
            auto it = doc.find(block);
            if (it == doc.end()) return nullptr;
            node = &*it;
        }
        auto it = node->find(key);
        return it == node->end() ? nullptr : &*it;
    }

    static std::string path_of(const std::string& block, const std::string& key) {
        return block.empty() ? key : block + "." + key;
    }

    double number(const std::string& block, const std::string& key, double fallback) {
        const nlohmann::json* v = find(block, key);
        if (!v) return fallback;
        if (!v->is_number()) {
            errors.push_back(path_of(block, key));
            return fallback;
        }
        return v->get<double>();
    }

    std::size_t count(const std::string& block, const std::string& key,
                      std::size_t fallback) {
        const nlohmann::json* v = find(block, key);
        if (!v) return fallback;
        if (!v->is_number_integer() || v->get<long long>() < 0) {
            errors.push_back(path_of(block, key));
            return fallback;
        }
        return static_cast<std::size_t>(v->get<long long>());
    }

    std::string text(const std::string& block, const std::string& key,
                     const std::string& fallback) {
        const nlohmann::json* v = find(block, key);
        if (!v) return fallback;
        if (!v->is_string()) {
            errors.push_back(path_of(block, key));
            return fallback;
        }
        return v->get<std::string>();
    }

    bool flag(const std::string& block, const std::string& key, bool fallback) {
        const nlohmann::json* v = find(block, key);
        if (!v) return fallback;
        if (!v->is_boolean()) {
            errors.push_back(path_of(block, key));
            return fallback;
        }
        return v->get<bool>();
    }

    std::vector<double> numbers(const std::string& block, const std::string& key) {
        const nlohmann::json* v = find(block, key);
        std::vector<double> out;
        if (!v) return out;
        if (!v->is_array()) {
            errors.push_back(path_of(block, key));
            return out;
        }
        for (const auto& item : *v) {
            if (!item.is_number()) {
                errors.push_back(path_of(block, key));
                return {};
            }
            out.push_back(item.get<double>());
        }
        return out;
    }
};

BoundaryCondition decode_bc(Decoder& dec, const std::string& which_kind,
                            const std::string& which_coeff, double fallback_coeff) {
    const std::string kind = dec.text("domain", which_kind, "dirichlet");
    const double coeff = dec.number("domain", which_coeff, fallback_coeff);
    if (kind == "dirichlet") return BoundaryCondition::dirichlet();
    if (kind == "robin") return BoundaryCondition::robin(coeff);
    dec.errors.push_back("domain." + which_kind);
    return BoundaryCondition::dirichlet();
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a table", {"(root)"});
    Decoder dec{doc, {}};
    ExperimentConfig cfg;
    cfg.raw = doc;

    cfg.operation = dec.text("", "operation", "trace");
    if (cfg.operation != "kernel" && cfg.operation != "trace" &&
        cfg.operation != "spectrum" && cfg.operation != "check")
        dec.errors.push_back("operation");
    {
        const nlohmann::json* v = dec.find("", "seed");
        if (v) {
            if (!v->is_number_integer() || v->get<long long>() < 0)
                dec.errors.push_back("seed");
            else
                cfg.seed = static_cast<std::uint64_t>(v->get<long long>());
        }
    }

    // --- domain ----------------------------------------------------------
    const std::string dkind = dec.text("domain", "kind", "interval");
    const double b = dec.number("domain", "b", 1.0);
    const BoundaryCondition bc0 = decode_bc(dec, "bc0", "alpha", 0.0);
    const BoundaryCondition bcb = decode_bc(dec, "bcb", "beta", 0.0);
    if (dkind == "full_line") {
        cfg.domain = DomainSpec::full_line();
    } else if (dkind == "half_line") {
        cfg.domain = DomainSpec::half_line(bc0);
    } else if (dkind == "interval") {
        if (!(b > 0.0)) dec.errors.push_back("domain.b");
        cfg.domain = DomainSpec::interval(b > 0.0 ? b : 1.0, bc0, bcb);
    } else {
        dec.errors.push_back("domain.kind");
    }

    // --- potential --------------------------------------------------------
    const std::string pkind = dec.text("potential", "kind", "zero");
    if (pkind == "zero")
        cfg.potential = PotentialSpec::zero();
    else if (pkind == "linear")
        cfg.potential = PotentialSpec::linear();
    else if (pkind == "harmonic")
        cfg.potential = PotentialSpec::harmonic();
    else
        dec.errors.push_back("potential.kind");
    cfg.potential.constant_shift = dec.number("potential", "shift", 0.0);
    cfg.potential.growth_certificate =
        dec.flag("potential", "growth_certificate", cfg.potential.growth_certificate);

    // --- covariance -------------------------------------------------------
    if (doc.contains("covariance")) {
        const std::string ckind = dec.text("covariance", "kind", "white");
        const double sigma2 = dec.number("covariance", "sigma2", 1.0);
        if (ckind == "white") {
            cfg.covariance = CovarianceModel::white(sigma2);
        } else if (ckind == "fractional") {
            cfg.covariance =
                CovarianceModel::fractional(sigma2, dec.number("covariance", "hurst", 0.75));
        } else if (ckind == "bounded") {
            const double level = dec.number("covariance", "level", 1.0);
            if (!(level >= 0.0)) dec.errors.push_back("covariance.level");
            cfg.covariance =
                CovarianceModel::bounded([level](double) { return level; }, "constant");
        } else if (ckind == "lp_singular") {
            const double r = dec.number("covariance", "exponent", 0.5);
            if (!(r >= 0.0 && r < 1.0)) dec.errors.push_back("covariance.exponent");
            const double scale = sigma2;
            cfg.covariance = CovarianceModel::lp_singular(
                [scale, r](double u) {
                    const double a = std::abs(u);
                    return a >= 1.0 ? 0.0 : scale * std::pow(a, -r) * (1.0 - a);
                },
                r, "truncated_power");
        } else {
            dec.errors.push_back("covariance.kind");
        }
        if (cfg.covariance) {
            try {
                cfg.covariance->validate();
            } catch (const std::exception&) {
                dec.errors.push_back("covariance");
            }
        }
    }

    // --- mollifier ---------------------------------------------------------
    if (doc.contains("mollifier")) {
        MollifierSpec m;
        m.epsilon = dec.number("mollifier", "epsilon", 0.1);
        if (!(m.epsilon > 0.0))
            dec.errors.push_back("mollifier.epsilon");
        else
            cfg.mollifier = m;
        if (!doc.contains("covariance")) dec.errors.push_back("mollifier");
    }

    // --- run / budget / resolution -----------------------------------------
    cfg.t = dec.number("run", "t", cfg.t);
    cfg.tbar = dec.number("run", "tbar", cfg.tbar);
    cfg.x = dec.number("run", "x", cfg.x);
    cfg.y = dec.number("run", "y", cfg.y);
    cfg.times = dec.numbers("run", "times");
    if (!(cfg.t > 0.0)) dec.errors.push_back("run.t");
    for (double ti : cfg.times)
        if (!(ti > 0.0)) {
            dec.errors.push_back("run.times");
            break;
        }

    cfg.paths = dec.count("budget", "paths", cfg.paths);
    cfg.nodes = dec.count("budget", "nodes", cfg.nodes);
    cfg.radius = dec.number("budget", "radius", cfg.radius);
    cfg.noise_draws = dec.count("budget", "noise_draws", cfg.noise_draws);
    cfg.k_used = dec.count("budget", "k_used", cfg.k_used);
    cfg.fd_cells = dec.count("budget", "fd_cells", cfg.fd_cells);
    cfg.n_seeds = dec.count("budget", "n_seeds", cfg.n_seeds);
    if (cfg.paths == 0) dec.errors.push_back("budget.paths");
    if (cfg.nodes == 0) dec.errors.push_back("budget.nodes");
    if (cfg.radius < 0.0) dec.errors.push_back("budget.radius");

    cfg.res.n_steps = dec.count("resolution", "n_steps", 0);
    cfg.res.bin_width = dec.number("resolution", "bin_width", 0.0);
    cfg.res.window = dec.number("resolution", "window", 0.0);
    if (cfg.res.bin_width < 0.0) dec.errors.push_back("resolution.bin_width");
    if (cfg.res.window < 0.0) dec.errors.push_back("resolution.window");

    if (cfg.operation == "check") {
        cfg.check_kind = dec.text("check", "kind", "");
        if (cfg.check_kind != "hs_norm" && cfg.check_kind != "semigroup" &&
            cfg.check_kind != "equivalence")
            dec.errors.push_back("check.kind");
        if (cfg.check_kind == "semigroup" && !(cfg.tbar > 0.0))
            dec.errors.push_back("run.tbar");
        if (cfg.check_kind == "hs_norm" && cfg.nodes < 8)
            dec.errors.push_back("budget.nodes");
    }
    if (cfg.operation == "spectrum" && cfg.covariance && !cfg.mollifier)
        dec.errors.push_back("mollifier");

    const bool unbounded = cfg.domain.kind != DomainCase::Interval;
    if (unbounded && cfg.covariance && !(cfg.radius > 0.0))
        dec.errors.push_back("budget.radius");

    if (doc.contains("sweep")) {
        cfg.sweep_axis = dec.text("sweep", "axis", "");
        cfg.sweep_values = dec.numbers("sweep", "values");
    }

    // --- module-level validation -------------------------------------------
    try {
        cfg.domain.validate();
    } catch (const std::exception&) {
        dec.errors.push_back("domain");
    }
    try {
        cfg.potential.validate(cfg.domain);
    } catch (const std::exception&) {
        dec.errors.push_back("potential");
    }

    if (!dec.errors.empty()) {
        std::sort(dec.errors.begin(), dec.errors.end());
        dec.errors.erase(std::unique(dec.errors.begin(), dec.errors.end()),
                         dec.errors.end());
        throw ConfigError("config invalid", dec.errors);
    }
    return cfg;
}

ExperimentConfig ExperimentConfig::from_toml_file(const std::string& path) {
    return from_json(toml::parse_file(path));
}

std::string ExperimentConfig::digest() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(raw.dump())));
    return buf;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

nlohmann::json CheckRecord::to_json() const {
    return nlohmann::json{{"name", name},         {"pass", pass},
                          {"observed", observed}, {"expected", expected},
                          {"tolerance", tolerance}, {"detail", detail},
                          {"seconds", seconds}};
}

nlohmann::json RunReport::to_json() const {
    return nlohmann::json{{"operation", operation},
                          {"seed", seed},
                          {"config_digest", config_digest},
                          {"records", records},
                          {"wall_seconds", wall_seconds},
                          {"discards", discards},
                          {"warnings", warnings},
                          {"pass", pass},
                          {"payload_digest", payload_digest()}};
}

std::string RunReport::payload_digest() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(records.dump())));
    return buf;
}

void RunReport::append_jsonl(const std::string& path) const {
    std::ofstream out(path, std::ios::app);
    if (!out) throw std::runtime_error("cannot open report log " + path);
    out << to_json().dump() << "\n";
}

// ---------------------------------------------------------------------------
// run()
// ---------------------------------------------------------------------------

namespace {

/// Sample one noise path whose span covers every mollifier window and
/// occupation bin the configured operation can touch within horizon t_max.
GridNoisePath sample_config_noise(const ExperimentConfig& cfg, double t_max,
                                  std::uint64_t stream_root) {
    const double eps = cfg.mollifier ? cfg.mollifier->epsilon : 0.0;
    const Resolution r = cfg.res.resolved(cfg.domain, t_max);
    double spacing = 0.5 * r.bin_width;
    if (cfg.mollifier) spacing = std::min(spacing, eps / 8.0);
    double lo, hi;
    if (cfg.domain.kind == DomainCase::Interval) {
        lo = 0.0;
        hi = cfg.domain.b;
    } else {
        const double reach =
            std::max({cfg.radius, std::abs(cfg.x), std::abs(cfg.y)}) +
            8.0 * std::sqrt(t_max);
        hi = reach;
        lo = cfg.domain.kind == DomainCase::FullLine ? -reach : 0.0;
    }
    const long klo = static_cast<long>(std::floor((lo - eps) / spacing)) - 4;
    const long khi = static_cast<long>(std::ceil((hi + eps) / spacing)) + 4;
    std::vector<double> grid;
    grid.reserve(static_cast<std::size_t>(khi - klo + 1));
    for (long k = klo; k <= khi; ++k) grid.push_back(spacing * static_cast<double>(k));
    auto stream = rng::make_stream(
        stream_root, {static_cast<std::uint64_t>(rng::OpLabel::kNoiseSample)});
    return sample_noise_path(*cfg.covariance, grid, stream);
}

nlohmann::json estimate_to_json(const KernelEstimate& e) {
    return nlohmann::json{{"mean", e.mean},
                          {"std_error", e.std_error},
                          {"replicates", e.replicates},
                          {"discards", e.discards},
                          {"warning", e.warning},
                          {"certificate", e.certificate},
                          {"note", e.note},
                          {"n_steps", e.n_steps},
                          {"bin_width", e.bin_width},
                          {"window", e.window}};
}

std::size_t per_node_budget(const ExperimentConfig& cfg) {
    return (cfg.paths + cfg.nodes - 1) / cfg.nodes;
}

void run_kernel(const ExperimentConfig& cfg, int workers, RunReport& rep) {
    KernelEstimate e;
    const std::uint64_t kseed =
        rng::derive_key(cfg.seed, {static_cast<std::uint64_t>(rng::OpLabel::kKernel)});
    if (cfg.covariance) {
        const GridNoisePath noise = sample_config_noise(cfg, cfg.t, cfg.seed);
        if (cfg.mollifier)
            e = mollified_kernel(cfg.domain, cfg.potential, noise, *cfg.mollifier, cfg.t,
                                 cfg.x, cfg.y, cfg.paths, cfg.res, kseed, workers);
        else
            e = random_kernel(cfg.domain, cfg.potential, noise, cfg.t, cfg.x, cfg.y,
                              cfg.paths, cfg.res, kseed, workers);
    } else {
        e = deterministic_kernel(cfg.domain, cfg.potential, cfg.t, cfg.x, cfg.y, cfg.paths,
                                 cfg.res, kseed, workers);
    }
    nlohmann::json rec = estimate_to_json(e);
    rec["t"] = cfg.t;
    rec["x"] = cfg.x;
    rec["y"] = cfg.y;
    rec["conditional_on_noise"] = cfg.covariance.has_value();
    rep.records.push_back(rec);
    rep.discards += e.discards;
    rep.warnings += e.warning ? 1 : 0;
}

void run_trace(const ExperimentConfig& cfg, int workers, RunReport& rep) {
    KernelEstimate e;
    nlohmann::json rec;
    if (cfg.covariance) {
        const std::vector<double> times = cfg.times.empty()
                                              ? std::vector<double>{cfg.t}
                                              : cfg.times;
        e = laplace_transform_moment(
            cfg.domain, cfg.potential, &*cfg.covariance, times, cfg.noise_draws, cfg.nodes,
            per_node_budget(cfg), cfg.res,
            rng::derive_key(cfg.seed, {static_cast<std::uint64_t>(rng::OpLabel::kLaplace)}),
            workers);
        rec = estimate_to_json(e);
        rec["times"] = times;
        rec["noise_draws"] = cfg.noise_draws;
    } else {
        e = trace_estimate(
            cfg.domain, cfg.potential, nullptr, nullptr, cfg.t, cfg.nodes, cfg.radius,
            per_node_budget(cfg), cfg.res,
            rng::derive_key(cfg.seed, {static_cast<std::uint64_t>(rng::OpLabel::kTrace)}),
            workers);
        rec = estimate_to_json(e);
        rec["t"] = cfg.t;
    }
    rec["nodes"] = cfg.nodes;
    rep.records.push_back(rec);
    rep.discards += e.discards;
    rep.warnings += e.warning ? 1 : 0;
}

void run_spectrum(const ExperimentConfig& cfg, int workers, RunReport& rep) {
    (void)workers;  // eigensolves are single-threaded and deterministic
    std::vector<double> xi;
    const std::vector<double>* xi_ptr = nullptr;
    if (cfg.covariance) {
        const GridNoisePath noise = sample_config_noise(cfg, cfg.t, cfg.seed);
        const double lo = cfg.domain.kind == DomainCase::FullLine ? -cfg.radius : 0.0;
        const double hi =
            cfg.domain.kind == DomainCase::Interval ? cfg.domain.b : cfg.radius;
        const double h = (hi - lo) / static_cast<double>(cfg.fd_cells);
        std::vector<double> nodes(cfg.fd_cells + 1);
        for (std::size_t i = 0; i < nodes.size(); ++i)
            nodes[i] = lo + h * static_cast<double>(i);
        xi = mollified_derivative(noise, *cfg.mollifier, nodes);
        xi_ptr = &xi;
    }
    const DiscreteForm form =
        discretize_form(cfg.domain, cfg.potential, xi_ptr, cfg.fd_cells, cfg.radius);
    const SpectralResult sr = eigen_solve(form, cfg.k_used);
    nlohmann::json rec;
    rec["eigenvalues"] = sr.eigenvalues;
    rec["max_residual"] = sr.max_residual;
    rec["h"] = sr.h;
    rec["k_used"] = cfg.k_used;
    const SpectralTraceResult st = spectral_trace(sr, cfg.t, cfg.k_used);
    rec["trace"] = st.value;
    rec["trace_tail"] = st.tail;
    rec["trace_unreliable"] = st.unreliable;
    rep.records.push_back(rec);
}

void run_check(const ExperimentConfig& cfg, int workers, RunReport& rep) {
    const GridNoisePath* noise_ptr = nullptr;
    const MollifierSpec* moll_ptr = nullptr;
    GridNoisePath noise;
    if (cfg.covariance && cfg.check_kind != "equivalence") {
        noise = sample_config_noise(cfg, cfg.t + std::max(0.0, cfg.tbar), cfg.seed);
        noise_ptr = &noise;
        if (cfg.mollifier) moll_ptr = &*cfg.mollifier;
    }
    if (cfg.check_kind == "hs_norm") {
        const CheckResult c = hs_norm_check(
            cfg.domain, cfg.potential, noise_ptr, moll_ptr, cfg.t, cfg.nodes, cfg.radius,
            cfg.paths, cfg.res,
            rng::derive_key(cfg.seed, {static_cast<std::uint64_t>(rng::OpLabel::kHsNorm)}),
            workers);
        rep.pass = c.within(3.0);
        rep.records.push_back(nlohmann::json{{"kind", "hs_norm"},
                                             {"lhs", c.lhs},
                                             {"lhs_se", c.lhs_se},
                                             {"rhs", c.rhs},
                                             {"rhs_se", c.rhs_se},
                                             {"pass", rep.pass},
                                             {"note", c.note}});
    } else if (cfg.check_kind == "semigroup") {
        const CheckResult c = semigroup_check(
            cfg.domain, cfg.potential, noise_ptr, moll_ptr, cfg.t, cfg.tbar, cfg.x, cfg.y,
            cfg.nodes, cfg.radius, cfg.paths, cfg.res,
            rng::derive_key(cfg.seed,
                            {static_cast<std::uint64_t>(rng::OpLabel::kSemigroup)}),
            workers);
        rep.pass = c.within(3.0);
        rep.records.push_back(nlohmann::json{{"kind", "semigroup"},
                                             {"lhs", c.lhs},
                                             {"lhs_se", c.lhs_se},
                                             {"rhs", c.rhs},
                                             {"rhs_se", c.rhs_se},
                                             {"pass", rep.pass},
                                             {"note", c.note}});
    } else {  // equivalence
        std::vector<std::uint64_t> seeds(cfg.n_seeds);
        for (std::size_t i = 0; i < seeds.size(); ++i)
            seeds[i] = rng::derive_key(
                cfg.seed, {static_cast<std::uint64_t>(rng::OpLabel::kEquivalence), i});
        EquivalenceBudget budget;
        budget.n_nodes = cfg.nodes;
        budget.paths_per_node = per_node_budget(cfg);
        budget.fd_cells = cfg.fd_cells;
        budget.k_used = cfg.k_used;
        budget.radius = cfg.radius;
        budget.res = cfg.res;
        const double eps = cfg.mollifier ? cfg.mollifier->epsilon : 0.1;
        const EquivalenceReport report =
            oracle_equivalence(cfg.domain, cfg.potential,
                               cfg.covariance ? &*cfg.covariance : nullptr, eps, cfg.t,
                               seeds, budget, workers);
        rep.pass = report.pass;
        rep.records.push_back(report.to_json());
    }
}

}  // namespace

RunReport run(const ExperimentConfig& cfg, int workers) {
    RunReport rep;
    rep.operation = cfg.operation;
    rep.seed = cfg.seed;
    rep.config_digest = cfg.digest();
    const double t0 = now_seconds();
    if (cfg.operation == "kernel")
        run_kernel(cfg, workers, rep);
    else if (cfg.operation == "trace")
        run_trace(cfg, workers, rep);
    else if (cfg.operation == "spectrum")
        run_spectrum(cfg, workers, rep);
    else if (cfg.operation == "check")
        run_check(cfg, workers, rep);
    else
        throw ConfigError("config invalid", {"operation"});
    rep.wall_seconds = now_seconds() - t0;
    return rep;
}

// ---------------------------------------------------------------------------
// sweep()
// ---------------------------------------------------------------------------

std::vector<RunReport> sweep(const ExperimentConfig& cfg, const std::string& axis,
                             const std::vector<double>& values, int workers,
                             const std::string& csv_path) {
    if (values.empty()) throw ConfigError("sweep needs at least one value", {"sweep.values"});
    std::string pointer = "/" + axis;
    for (char& c : pointer)
        if (c == '.') c = '/';
    const nlohmann::json::json_pointer ptr(pointer);
    if (!cfg.raw.contains(ptr) || !cfg.raw.at(ptr).is_number())
        throw ConfigError("sweep axis must name a numeric config field", {"sweep." + axis});

    std::vector<RunReport> reports;
    reports.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        nlohmann::json doc = cfg.raw;
        doc[ptr] = values[i];
        doc.erase("sweep");
        ExperimentConfig sub = ExperimentConfig::from_json(doc);
        sub.seed = rng::derive_key(cfg.seed, {i});
        reports.push_back(run(sub, workers));
    }

    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!out) throw std::runtime_error("cannot open " + csv_path);
        // Columns: the swept value plus every numeric scalar of the first
        // record, in key order.
        std::vector<std::string> cols;
        if (!reports.front().records.empty())
            for (auto it = reports.front().records[0].begin();
                 it != reports.front().records[0].end(); ++it)
                if (it.value().is_number()) cols.push_back(it.key());
        out << axis;
        for (const std::string& c : cols) out << "," << c;
        out << "\n";
        char buf[64];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", values[i]);
            out << buf;
            for (const std::string& c : cols) {
                const auto& rec = reports[i].records[0];
                std::snprintf(buf, sizeof buf, "%.17g",
                              rec.contains(c) ? rec[c].get<double>() : 0.0);
                out << "," << buf;
            }
            out << "\n";
        }
    }
    return reports;
}

// ---------------------------------------------------------------------------
// Acceptance criteria (budgets and tolerances pinned here)
// ---------------------------------------------------------------------------

namespace {

constexpr double kSqrt2OverPi = 0.7978845608028654;     // sqrt(2/pi)
constexpr double kAiryGroundLevel = 1.85575708148924;   // first Airy zero, scaled

/// Sum of e^{-t * k^2 pi^2 / (2 b^2)} over k >= 1 (terms below 1e-22 of the
/// running sum dropped).
double box_eigen_series(double t, double b) {
    double sum = 0.0;
    for (int k = 1;; ++k) {
        const double lam = 0.5 * std::pow(std::numbers::pi * k / b, 2);
        const double term = std::exp(-t * lam);
        sum += term;
        if (term < 1e-22 * sum) return sum;
    }
}

/// Sum of e^{-t (k - 1/2)} over k >= 1, i.e. 1 / (2 sinh(t/2)).
double harmonic_series(double t) { return 1.0 / (2.0 * std::sinh(0.5 * t)); }

DomainSpec box_domain() {
    return DomainSpec::interval(1.0, BoundaryCondition::dirichlet(),
                                BoundaryCondition::dirichlet());
}

CheckRecord finish(CheckRecord rec, double t0) {
    rec.seconds = now_seconds() - t0;
    return rec;
}

std::uint64_t criterion_root(std::uint64_t seed, int k) {
    return rng::derive_key(seed, {static_cast<std::uint64_t>(rng::OpLabel::kValidate),
                                  static_cast<std::uint64_t>(k)});
}

CheckRecord criterion_box_trace(std::uint64_t seed, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "dirichlet-box-trace";
    const KernelEstimate e =
        trace_estimate(box_domain(), PotentialSpec::zero(), nullptr, nullptr, 0.5, 64, 0.0,
                       1563, Resolution{}, criterion_root(seed, 1), workers);
    rec.observed = e.mean;
    rec.expected = box_eigen_series(0.5, 1.0);
    rec.tolerance = 3.0 * e.std_error;
    rec.pass = std::abs(rec.observed - rec.expected) <= rec.tolerance &&
               e.std_error <= 2e-3;
    std::ostringstream d;
    d << "64 nodes x 1563 paths, stderr " << e.std_error << " (cap 2e-3)";
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_harmonic_trace(std::uint64_t seed, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "harmonic-oscillator-trace";
    const KernelEstimate e =
        trace_estimate(DomainSpec::full_line(), PotentialSpec::harmonic(), nullptr, nullptr,
                       1.0, 64, 8.0, 768, Resolution{}, criterion_root(seed, 2), workers);
    rec.observed = e.mean;
    rec.expected = harmonic_series(1.0);
    rec.tolerance = 3.0 * e.std_error;
    rec.pass = std::abs(rec.observed - rec.expected) <= rec.tolerance;
    std::ostringstream d;
    d << "radius 8, 64 nodes x 768 paths, stderr " << e.std_error << "; " << e.note;
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_oracle_equivalence(std::uint64_t seed, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "path-vs-spectrum-equivalence";
    const std::uint64_t root = criterion_root(seed, 3);
    std::vector<std::uint64_t> seeds(20);
    for (std::size_t i = 0; i < seeds.size(); ++i)
        seeds[i] = rng::derive_key(
            root, {static_cast<std::uint64_t>(rng::OpLabel::kEquivalence), i});
    const CovarianceModel cov = CovarianceModel::white(1.0);
    EquivalenceBudget budget;
    budget.n_nodes = 32;
    budget.paths_per_node = 500;
    budget.fd_cells = 2000;
    budget.k_used = 24;
    const EquivalenceReport report = oracle_equivalence(
        box_domain(), PotentialSpec::zero(), &cov, 0.1, 0.5, seeds, budget, workers);
    rec.observed = static_cast<double>(report.n_agree);
    rec.expected = static_cast<double>(report.seeds.size());
    rec.tolerance = 0.05 * static_cast<double>(report.seeds.size());
    rec.pass = report.pass;
    std::ostringstream d;
    d << report.n_agree << "/" << report.seeds.size()
      << " seeds agree within 3 joint standard errors (white noise, width 0.1, t 0.5)";
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_epsilon_convergence(std::uint64_t seed, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "mollifier-width-convergence";
    const std::uint64_t root = criterion_root(seed, 4);
    const DomainSpec domain = box_domain();
    const PotentialSpec V = PotentialSpec::zero();
    // Fractional noise keeps the whole width window inside the regime where
    // the smoothing error has a single dominant coefficient, so the per-seed
    // gap sequence decays cleanly; white noise puts ~20% of realizations on a
    // sign crossing of the gap, where |gap| is genuinely non-monotone.
    const CovarianceModel cov = CovarianceModel::fractional(1.0, 0.75);
    const double t = 0.5;
    const std::vector<double> eps_list{0.4, 0.2, 0.1};
    const std::size_t n_seeds = 20;

    // One shared noise grid wide enough for the widest bump.
    const double spacing = 0.1 / 8.0;
    std::vector<double> grid;
    for (long k = static_cast<long>(std::floor((-0.45) / spacing)) - 4;
         k <= static_cast<long>(std::ceil(1.45 / spacing)) + 4; ++k)
        grid.push_back(spacing * static_cast<double>(k));

    std::size_t monotone = 0;
    bool final_gap_ok = true;
    double worst_final_gap = 0.0, worst_final_tol = 0.0;
    for (std::size_t i = 0; i < n_seeds; ++i) {
        auto stream = rng::make_stream(
            root, {static_cast<std::uint64_t>(rng::OpLabel::kNoiseSample), i});
        const GridNoisePath noise = sample_noise_path(cov, grid, stream);
        // Shared trace substreams couple all four estimates through the
        // same bridge paths, so differences isolate the smoothing effect.
        const std::uint64_t trace_seed = rng::derive_key(root, {i});
        const KernelEstimate raw = trace_estimate(domain, V, &noise, nullptr, t, 32, 0.0,
                                                  640, Resolution{}, trace_seed, workers);
        std::vector<double> gaps;
        double last_se = 0.0;
        for (double eps : eps_list) {
            MollifierSpec moll;
            moll.epsilon = eps;
            const KernelEstimate sm = trace_estimate(domain, V, &noise, &moll, t, 32, 0.0,
                                                     640, Resolution{}, trace_seed, workers);
            gaps.push_back(std::abs(sm.mean - raw.mean));
            last_se = std::sqrt(sm.std_error * sm.std_error +
                                raw.std_error * raw.std_error);
        }
        if (gaps[0] >= gaps[1] && gaps[1] >= gaps[2]) ++monotone;
        if (gaps.back() > 3.0 * last_se) final_gap_ok = false;
        if (gaps.back() > worst_final_gap) {
            worst_final_gap = gaps.back();
            worst_final_tol = 3.0 * last_se;
        }
    }
    rec.observed = static_cast<double>(monotone);
    rec.expected = static_cast<double>(n_seeds);
    rec.tolerance = 0.2 * static_cast<double>(n_seeds);
    rec.pass = (monotone * 10 >= n_seeds * 8) && final_gap_ok;
    std::ostringstream d;
    d << monotone << "/" << n_seeds
      << " seeds have |smoothed - raw| non-increasing over widths {0.4, 0.2, 0.1}; "
      << "worst final gap " << worst_final_gap << " vs 3 SE " << worst_final_tol;
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_isometry(std::uint64_t seed, int workers) {
    (void)workers;
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "integral-isometry";
    const std::uint64_t root = criterion_root(seed, 5);
    const StepFunction f = StepFunction::indicator(0.0, 1.0);
    std::vector<double> grid;
    for (int k = 0; k <= 64; ++k) grid.push_back(k / 64.0);
    const std::size_t n_draws = 10000;

    bool all_ok = true;
    std::ostringstream d;
    double worst_dev = 0.0, worst_tol = 0.0;
    const CovarianceModel models[2] = {CovarianceModel::white(1.0),
                                       CovarianceModel::fractional(1.0, 0.75)};
    for (int m = 0; m < 2; ++m) {
        const double target = gamma_seminorm_sq(f, models[m]);
        double s1 = 0.0, s2 = 0.0;
        for (std::size_t i = 0; i < n_draws; ++i) {
            auto stream = rng::make_stream(root, {static_cast<std::uint64_t>(m), i});
            const GridNoisePath path = sample_noise_path(models[m], grid, stream);
            const double v = integrate_step(f, path);
            s1 += v;
            s2 += v * v;
        }
        const double n = static_cast<double>(n_draws);
        const double var = (s2 - s1 * s1 / n) / (n - 1.0);
        const double se_var = var * std::sqrt(2.0 / (n - 1.0));
        const bool ok = std::abs(var - target) <= 4.0 * se_var;
        all_ok = all_ok && ok;
        if (std::abs(var - target) - 4.0 * se_var > worst_dev - worst_tol) {
            worst_dev = std::abs(var - target);
            worst_tol = 4.0 * se_var;
            rec.observed = var;
            rec.expected = target;
            rec.tolerance = 4.0 * se_var;
        }
        d << (m == 0 ? "white: " : "; fractional(H=0.75): ") << "var " << var << " vs "
          << target << " (4 SE " << 4.0 * se_var << ")";
    }
    rec.pass = all_ok;
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_boundary_local_time(std::uint64_t seed, int workers) {
    (void)workers;
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "boundary-local-time-moment";
    const std::uint64_t root = criterion_root(seed, 6);
    const DomainSpec domain = DomainSpec::half_line(BoundaryCondition::robin(0.0));
    const std::size_t n_paths = 100000;
    const std::size_t n_steps = 65536;
    const double window = 1e-3;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        auto stream = rng::make_stream(root, {i});
        const BridgePath path = sample_free_path(domain, 1.0, 1e-6, n_steps, stream);
        const double l0 = boundary_local_time(path, 0.0, window);
        s1 += l0;
        s2 += l0 * l0;
    }
    const double n = static_cast<double>(n_paths);
    const double mean = s1 / n;
    const double var = (s2 - s1 * s1 / n) / (n - 1.0);
    const double se = std::sqrt(var / n);
    rec.observed = mean;
    rec.expected = kSqrt2OverPi;
    rec.tolerance = 3.0 * se;
    rec.pass = std::abs(mean - rec.expected) <= rec.tolerance;
    std::ostringstream d;
    d << n_paths << " free paths from 1e-6, " << n_steps << " steps, window " << window
      << ", stderr " << se;
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord check_occupation_mass(std::uint64_t root) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "occupation-mass";
    const DomainSpec box = box_domain();
    const DomainSpec half = DomainSpec::half_line(BoundaryCondition::robin(0.0));
    double worst = 0.0;
    for (std::size_t i = 0; i < 100; ++i) {
        auto stream = rng::make_stream(root, {i});
        const BridgePath bp = sample_bridge(box, 0.5, 0.3, 0.6, 512, stream);
        const LocalTimeProfile prof = local_time(bp, 0.01);
        double mass = 0.0;
        for (double m : prof.masses) mass += m;
        worst = std::max(worst, std::abs(mass - 0.5));
        const BridgePath fp = sample_free_path(half, 0.7, 0.4, 512, stream);
        const LocalTimeProfile pf = local_time(fp, 0.05);
        mass = 0.0;
        for (double m : pf.masses) mass += m;
        worst = std::max(worst, std::abs(mass - 0.7));
    }
    rec.observed = worst;
    rec.expected = 0.0;
    rec.tolerance = 1e-12;
    rec.pass = worst <= rec.tolerance;
    rec.detail = "max |total occupation - t| over 200 paths (bridge and free)";
    return finish(rec, t0);
}

CheckRecord check_kernel_symmetry(std::uint64_t root, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "kernel-symmetry";
    const DomainSpec box = box_domain();
    const KernelEstimate a =
        deterministic_kernel(box, PotentialSpec::zero(), 0.5, 0.3, 0.7, 20000, Resolution{},
                             rng::derive_key(root, {0}), workers);
    const KernelEstimate b =
        deterministic_kernel(box, PotentialSpec::zero(), 0.5, 0.7, 0.3, 20000, Resolution{},
                             rng::derive_key(root, {1}), workers);
    const double se = std::sqrt(a.std_error * a.std_error + b.std_error * b.std_error);
    rec.observed = a.mean - b.mean;
    rec.expected = 0.0;
    rec.tolerance = 4.0 * se;
    rec.pass = std::abs(rec.observed) <= rec.tolerance;
    rec.detail = "K(0.5;0.3,0.7) vs K(0.5;0.7,0.3), independent streams, 4 joint SE";
    return finish(rec, t0);
}

CheckRecord check_noise_shift_bitwise(std::uint64_t root, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "noise-level-shift-invariance";
    const DomainSpec box = box_domain();
    std::vector<double> grid;
    for (int k = -8; k <= 108; ++k) grid.push_back(k / 100.0);
    auto stream = rng::make_stream(root, {0});
    const GridNoisePath raw =
        sample_noise_path(CovarianceModel::white(1.0), grid, stream);
    // Quantize the sampled values so adding the constant is exact in floating
    // point; the estimator reads the path only through cell increments, which
    // an exact shift leaves bit-for-bit identical.
    std::vector<double> base_values = raw.values;
    for (double& v : base_values) v = std::ldexp(std::round(std::ldexp(v, 26)), -26);
    std::vector<double> shifted_values = base_values;
    for (double& v : shifted_values) v += 5.0;
    const GridNoisePath noise = GridNoisePath::make_unchecked(raw.grid, base_values);
    const GridNoisePath shifted =
        GridNoisePath::make_unchecked(raw.grid, shifted_values);
    const std::uint64_t kseed = rng::derive_key(root, {1});
    const KernelEstimate a = random_kernel(box, PotentialSpec::zero(), noise, 0.5, 0.4, 0.4,
                                           4000, Resolution{}, kseed, workers);
    const KernelEstimate b = random_kernel(box, PotentialSpec::zero(), shifted, 0.5, 0.4,
                                           0.4, 4000, Resolution{}, kseed, workers);
    rec.observed = a.mean == b.mean ? 0.0 : std::abs(a.mean - b.mean);
    rec.expected = 0.0;
    rec.tolerance = 0.0;
    rec.pass = a.mean == b.mean && a.std_error == b.std_error;
    rec.detail = "adding 5.0 to every noise value leaves the estimate bitwise unchanged";
    return finish(rec, t0);
}

CheckRecord check_potential_shift_bitwise(std::uint64_t root, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "potential-shift-scaling";
    const DomainSpec box = box_domain();
    const double t = 0.5, c = 0.7;
    PotentialSpec shifted = PotentialSpec::zero();
    shifted.constant_shift = c;
    const std::uint64_t kseed = rng::derive_key(root, {0});
    const KernelEstimate a = deterministic_kernel(box, PotentialSpec::zero(), t, 0.3, 0.6,
                                                  4000, Resolution{}, kseed, workers);
    const KernelEstimate b =
        deterministic_kernel(box, shifted, t, 0.3, 0.6, 4000, Resolution{}, kseed, workers);
    const double scaled = std::exp(-c * t) * a.mean;
    rec.observed = b.mean == scaled ? 0.0 : std::abs(b.mean - scaled);
    rec.expected = 0.0;
    rec.tolerance = 0.0;
    rec.pass = b.mean == scaled;
    rec.detail = "mean under V + 0.7 equals e^{-0.7 t} x mean under V, bitwise";
    return finish(rec, t0);
}

CheckRecord check_transition_normalization() {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "transition-normalization";
    double worst = 0.0;
    {
        const DomainSpec d = DomainSpec::full_line();
        const double v = quad::integrate_panel(
            [&](double y) { return transition_kernel(d, 0.5, 0.2, y); }, 0.2 - 12.0,
            0.2 + 12.0, 200);
        worst = std::max(worst, std::abs(v - 1.0));
    }
    {
        const DomainSpec d = DomainSpec::half_line(BoundaryCondition::robin(0.0));
        const double v = quad::integrate_panel(
            [&](double y) { return transition_kernel(d, 0.5, 0.4, y); }, 0.0, 12.0, 300);
        worst = std::max(worst, std::abs(v - 1.0));
    }
    {
        const DomainSpec d = box_domain();
        const double v = quad::integrate_panel(
            [&](double y) { return transition_kernel(d, 0.5, 0.3, y); }, 0.0, 1.0, 200);
        worst = std::max(worst, std::abs(v - 1.0));
    }
    rec.observed = worst;
    rec.expected = 0.0;
    rec.tolerance = 1e-8;
    rec.pass = worst <= rec.tolerance;
    rec.detail = "max |integral of the transition density - 1| over the three domains";
    return finish(rec, t0);
}

CheckRecord check_chapman_kolmogorov() {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "chapman-kolmogorov";
    double worst = 0.0;
    const double t = 0.3, s = 0.4;
    {
        const DomainSpec d = DomainSpec::full_line();
        const double lhs = quad::integrate_panel(
            [&](double z) {
                return transition_kernel(d, t, -0.2, z) * transition_kernel(d, s, z, 0.5);
            },
            -14.0, 14.0, 400);
        worst = std::max(worst, std::abs(lhs - transition_kernel(d, t + s, -0.2, 0.5)));
    }
    {
        const DomainSpec d = DomainSpec::half_line(BoundaryCondition::robin(0.0));
        const double lhs = quad::integrate_panel(
            [&](double z) {
                return transition_kernel(d, t, 0.3, z) * transition_kernel(d, s, z, 0.8);
            },
            0.0, 14.0, 400);
        worst = std::max(worst, std::abs(lhs - transition_kernel(d, t + s, 0.3, 0.8)));
    }
    {
        const DomainSpec d = box_domain();
        const double lhs = quad::integrate_panel(
            [&](double z) {
                return transition_kernel(d, t, 0.3, z) * transition_kernel(d, s, z, 0.8);
            },
            0.0, 1.0, 400);
        worst = std::max(worst, std::abs(lhs - transition_kernel(d, t + s, 0.3, 0.8)));
    }
    rec.observed = worst;
    rec.expected = 0.0;
    rec.tolerance = 1e-6;
    rec.pass = worst <= rec.tolerance;
    rec.detail = "composition of transition densities over an intermediate integral";
    return finish(rec, t0);
}

CheckRecord criterion_exact_invariants(std::uint64_t seed, int workers) {
    const double t0 = now_seconds();
    const std::uint64_t root = criterion_root(seed, 7);
    CheckRecord parts[6] = {
        check_occupation_mass(rng::derive_key(root, {0})),
        check_kernel_symmetry(rng::derive_key(root, {1}), workers),
        check_noise_shift_bitwise(rng::derive_key(root, {2}), workers),
        check_potential_shift_bitwise(rng::derive_key(root, {3}), workers),
        check_transition_normalization(),
        check_chapman_kolmogorov(),
    };
    CheckRecord rec;
    rec.name = "exact-invariants-suite";
    rec.pass = true;
    std::ostringstream d;
    for (const CheckRecord& p : parts) {
        rec.pass = rec.pass && p.pass;
        d << p.name << (p.pass ? " ok" : " FAIL") << "; ";
    }
    rec.observed = rec.pass ? 1.0 : 0.0;
    rec.expected = 1.0;
    rec.tolerance = 0.0;
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_trace_hs(std::uint64_t seed, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "trace-equals-squared-norm";
    const CheckResult c =
        hs_norm_check(box_domain(), PotentialSpec::zero(), nullptr, nullptr, 0.5, 16, 0.0,
                      360, Resolution{}, criterion_root(seed, 8), workers);
    rec.observed = c.lhs;
    rec.expected = c.rhs;
    rec.tolerance = 3.0 * c.joint_se();
    rec.pass = c.within(3.0);
    std::ostringstream d;
    d << "squared norm at t/2 " << c.lhs << " (se " << c.lhs_se << ") vs trace at t "
      << c.rhs << " (se " << c.rhs_se << ")";
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_spectral_accuracy(std::uint64_t seed, int workers) {
    (void)seed;
    (void)workers;
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "spectral-oracle-accuracy";
    const DiscreteForm box_form =
        discretize_form(box_domain(), PotentialSpec::zero(), nullptr, 2000, 0.0);
    const SpectralResult box = eigen_solve(box_form, 5);
    const double box_target = 0.5 * std::numbers::pi * std::numbers::pi;
    const double box_rel = std::abs(box.eigenvalues[0] - box_target) / box_target;

    const DiscreteForm airy_form =
        discretize_form(DomainSpec::half_line(BoundaryCondition::dirichlet()),
                        PotentialSpec::linear(), nullptr, 6000, 12.0);
    const SpectralResult airy = eigen_solve(airy_form, 3);
    const double airy_err = std::abs(airy.eigenvalues[0] - kAiryGroundLevel);

    rec.observed = std::max(box_rel, airy_err);
    rec.expected = 0.0;
    rec.tolerance = 1e-3;
    rec.pass = box_rel <= 1e-3 && airy_err <= 1e-3;
    std::ostringstream d;
    d << "box ground level " << box.eigenvalues[0] << " (relative error " << box_rel
      << "); half-line linear ground level " << airy.eigenvalues[0] << " (error "
      << airy_err << ")";
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord criterion_excluded_scale(std::uint64_t, int) {
    CheckRecord rec;
    rec.name = "full-scale-claims-excluded";
    rec.pass = true;
    rec.observed = 0.0;
    rec.expected = 0.0;
    rec.tolerance = 0.0;
    rec.detail =
        "simultaneous-in-t trace-class behavior, number rigidity, and Tracy-Widom edge "
        "statistics need far more than desk-scale budgets; they are excluded by design "
        "and the invariant suites substitute for them";
    rec.seconds = 0.0;
    return rec;
}

// --- reduced-budget checks for the fast suite ------------------------------

CheckRecord check_workers_determinism(std::uint64_t root) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "worker-count-determinism";
    const KernelEstimate a = trace_estimate(box_domain(), PotentialSpec::zero(), nullptr,
                                            nullptr, 0.5, 8, 0.0, 2100, Resolution{}, root, 1);
    const KernelEstimate b = trace_estimate(box_domain(), PotentialSpec::zero(), nullptr,
                                            nullptr, 0.5, 8, 0.0, 2100, Resolution{}, root, 3);
    rec.observed = a.mean == b.mean ? 0.0 : std::abs(a.mean - b.mean);
    rec.expected = 0.0;
    rec.tolerance = 0.0;
    rec.pass = a.mean == b.mean && a.std_error == b.std_error;
    rec.detail = "trace with 1 worker vs 3 workers, same seed, bitwise equal";
    return finish(rec, t0);
}

CheckRecord check_step_integral_agreement(std::uint64_t root) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "step-integral-agreement";
    std::vector<double> grid;
    for (int k = 0; k <= 2000; ++k) grid.push_back(-1.0 + k / 1000.0);
    auto stream = rng::make_stream(root, {0});
    const GridNoisePath path =
        sample_noise_path(CovarianceModel::white(1.0), grid, stream);
    const StepFunction f{{-0.5, 0.0, 0.25, 0.75}, {1.0, -2.0, 0.5}};
    const double direct = integrate_step(f, path);
    const auto [adaptive, trace] = karandikar_integrate(f, path, 16);
    rec.observed = std::abs(adaptive - direct);
    rec.expected = 0.0;
    rec.tolerance = 1e-6;
    rec.pass = rec.observed <= rec.tolerance && trace.converged;
    std::ostringstream d;
    d << "adaptive integral " << adaptive << " vs exact increment sum " << direct
      << (trace.converged ? " (levels converged)" : " (LEVELS DID NOT CONVERGE)");
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord check_isometry_reduced(std::uint64_t root) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "isometry-reduced";
    const StepFunction f = StepFunction::indicator(0.0, 1.0);
    std::vector<double> grid;
    for (int k = 0; k <= 32; ++k) grid.push_back(k / 32.0);
    const CovarianceModel cov = CovarianceModel::white(1.0);
    const double target = gamma_seminorm_sq(f, cov);
    double s1 = 0.0, s2 = 0.0;
    const std::size_t n_draws = 2000;
    for (std::size_t i = 0; i < n_draws; ++i) {
        auto stream = rng::make_stream(root, {i});
        const GridNoisePath path = sample_noise_path(cov, grid, stream);
        const double v = integrate_step(f, path);
        s1 += v;
        s2 += v * v;
    }
    const double n = static_cast<double>(n_draws);
    const double var = (s2 - s1 * s1 / n) / (n - 1.0);
    const double se_var = var * std::sqrt(2.0 / (n - 1.0));
    rec.observed = var;
    rec.expected = target;
    rec.tolerance = 4.0 * se_var;
    rec.pass = std::abs(var - target) <= rec.tolerance;
    rec.detail = "white-noise variance of the unit-interval integral, 2000 draws";
    return finish(rec, t0);
}

CheckRecord check_box_trace_reduced(std::uint64_t root, int workers) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "box-trace-reduced";
    const KernelEstimate e = trace_estimate(box_domain(), PotentialSpec::zero(), nullptr,
                                            nullptr, 0.5, 16, 0.0, 260, Resolution{}, root,
                                            workers);
    rec.observed = e.mean;
    rec.expected = box_eigen_series(0.5, 1.0);
    rec.tolerance = 4.0 * e.std_error;
    rec.pass = std::abs(e.mean - rec.expected) <= rec.tolerance;
    std::ostringstream d;
    d << "16 nodes x 260 paths, stderr " << e.std_error;
    rec.detail = d.str();
    return finish(rec, t0);
}

CheckRecord check_boundary_time_reduced(std::uint64_t root) {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "boundary-time-reduced";
    const DomainSpec domain = DomainSpec::half_line(BoundaryCondition::robin(0.0));
    const std::size_t n_paths = 4000;
    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < n_paths; ++i) {
        auto stream = rng::make_stream(root, {i});
        const BridgePath path = sample_free_path(domain, 1.0, 1e-6, 8192, stream);
        const double l0 = boundary_local_time(path, 0.0, 1e-3);
        s1 += l0;
        s2 += l0 * l0;
    }
    const double n = static_cast<double>(n_paths);
    const double mean = s1 / n;
    const double se = std::sqrt(((s2 - s1 * s1 / n) / (n - 1.0)) / n);
    rec.observed = mean;
    rec.expected = kSqrt2OverPi;
    rec.tolerance = 4.0 * se;
    rec.pass = std::abs(mean - rec.expected) <= rec.tolerance;
    rec.detail = "4000 paths, 8192 steps, window 1e-3, 4 SE";
    return finish(rec, t0);
}

CheckRecord check_spectral_box_fast() {
    const double t0 = now_seconds();
    CheckRecord rec;
    rec.name = "spectral-box-ground-level";
    const DiscreteForm form =
        discretize_form(box_domain(), PotentialSpec::zero(), nullptr, 2000, 0.0);
    const SpectralResult sr = eigen_solve(form, 4);
    const double target = 0.5 * std::numbers::pi * std::numbers::pi;
    rec.observed = sr.eigenvalues[0];
    rec.expected = target;
    rec.tolerance = 1e-3 * target;
    rec.pass = std::abs(sr.eigenvalues[0] - target) <= rec.tolerance;
    rec.detail = "2000-cell grid, smallest eigenvalue vs the closed-form sine mode";
    return finish(rec, t0);
}

}  // namespace

CheckRecord acceptance_criterion(int k, std::uint64_t seed, int workers) {
    switch (k) {
        case 1: return criterion_box_trace(seed, workers);
        case 2: return criterion_harmonic_trace(seed, workers);
        case 3: return criterion_oracle_equivalence(seed, workers);
        case 4: return criterion_epsilon_convergence(seed, workers);
        case 5: return criterion_isometry(seed, workers);
        case 6: return criterion_boundary_local_time(seed, workers);
        case 7: return criterion_exact_invariants(seed, workers);
        case 8: return criterion_trace_hs(seed, workers);
        case 9: return criterion_spectral_accuracy(seed, workers);
        case 10: return criterion_excluded_scale(seed, workers);
        default: throw std::invalid_argument("criterion index must be 1..10");
    }
}

RunReport validate_suite(SuiteLevel level, std::uint64_t seed, int workers) {
    RunReport rep;
    rep.operation = level == SuiteLevel::Fast ? "validate-fast" : "validate-full";
    rep.seed = seed;
    rep.config_digest = rep.operation;
    const double t0 = now_seconds();
    std::vector<CheckRecord> recs;
    if (level == SuiteLevel::Fast) {
        const std::uint64_t root =
            rng::derive_key(seed, {static_cast<std::uint64_t>(rng::OpLabel::kValidate)});
        recs.push_back(check_occupation_mass(rng::derive_key(root, {0})));
        recs.push_back(check_transition_normalization());
        recs.push_back(check_chapman_kolmogorov());
        recs.push_back(check_kernel_symmetry(rng::derive_key(root, {1}), workers));
        recs.push_back(check_noise_shift_bitwise(rng::derive_key(root, {2}), workers));
        recs.push_back(check_potential_shift_bitwise(rng::derive_key(root, {3}), workers));
        recs.push_back(check_workers_determinism(rng::derive_key(root, {4})));
        recs.push_back(check_step_integral_agreement(rng::derive_key(root, {5})));
        recs.push_back(check_isometry_reduced(rng::derive_key(root, {6})));
        recs.push_back(check_box_trace_reduced(rng::derive_key(root, {7}), workers));
        recs.push_back(check_boundary_time_reduced(rng::derive_key(root, {8})));
        recs.push_back(check_spectral_box_fast());
    } else {
        for (int k = 1; k <= 10; ++k) recs.push_back(acceptance_criterion(k, seed, workers));
    }
    for (const CheckRecord& r : recs) {
        rep.records.push_back(r.to_json());
        rep.pass = rep.pass && r.pass;
    }
    rep.wall_seconds = now_seconds() - t0;
    return rep;
}

}  // namespace fkmc
