#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "fkmc/feynman_kac.hpp"
#include "fkmc/noise.hpp"
#include "fkmc/paths.hpp"
#include "fkmc/spectral.hpp"

namespace fkmc {

/// Configuration rejection carrying the offending field paths
/// (e.g. "domain.b"). what() lists them after the message.
struct ConfigError : std::runtime_error {
    std::vector<std::string> fields;
    ConfigError(const std::string& message, std::vector<std::string> offending);
};

/// One experiment, decoded and validated from a TOML/JSON document.
///
/// Document layout (all blocks optional unless the operation needs them):
///   operation = "kernel" | "trace" | "spectrum" | "check"
///   seed = 1
///   [domain]    kind = "interval"|"half_line"|"full_line", b, bc0, alpha,
///               bcb, beta
///   [potential] kind = "zero"|"linear"|"harmonic", shift,
///               growth_certificate
///   [covariance] kind = "white"|"fractional"|"bounded"|"lp_singular",
///               sigma2, hurst, level, exponent (absent block = no noise)
///   [mollifier] epsilon
///   [run]       t, tbar, x, y, times = [...]
///   [budget]    paths, nodes, radius, noise_draws, k_used, fd_cells,
///               n_seeds
///   [resolution] n_steps, bin_width, window
///   [check]     kind = "hs_norm"|"semigroup"|"equivalence"
///   [sweep]     axis = "dotted.path", values = [...]
///
/// `raw` keeps the canonicalized source document; digests hash it, and
/// sweeps rewrite it before re-validating.
struct ExperimentConfig {
    std::string operation = "trace";
    std::uint64_t seed = 1;
    DomainSpec domain = DomainSpec::interval(1.0, BoundaryCondition::dirichlet(),
                                             BoundaryCondition::dirichlet());
    PotentialSpec potential = PotentialSpec::zero();
    std::optional<CovarianceModel> covariance;
    std::optional<MollifierSpec> mollifier;

    double t = 0.5;
    double tbar = 0.0;
    double x = 0.5;
    double y = 0.5;
    std::vector<double> times;

    std::size_t paths = 20000;
    std::size_t nodes = 32;
    double radius = 0.0;
    std::size_t noise_draws = 8;
    std::size_t k_used = 16;
    std::size_t fd_cells = 1000;
    std::size_t n_seeds = 20;
    Resolution res;

    std::string check_kind;  // for operation == "check"
    std::string sweep_axis;
    std::vector<double> sweep_values;

    nlohmann::json raw;

    /// Decode + validate; throws ConfigError listing every bad field path.
    static ExperimentConfig from_json(const nlohmann::json& doc);
    /// TOML file -> from_json.
    static ExperimentConfig from_toml_file(const std::string& path);
    /// Stable hex digest of the canonicalized document.
    std::string digest() const;
};

/// One validation/acceptance check outcome. `tolerance` is the allowed
/// |observed - expected| (already scaled by the check's error bars where
/// statistical); `detail` explains the budget and inputs.
struct CheckRecord {
    std::string name;
    bool pass = false;
    double observed = 0.0;
    double expected = 0.0;
    double tolerance = 0.0;
    std::string detail;
    double seconds = 0.0;

    nlohmann::json to_json() const;
};

/// Result of run()/validate_suite(): canonical records plus bookkeeping.
/// `payload_digest()` hashes only the records (not wall time), so identical
/// config + seed gives identical digests for any worker count.
struct RunReport {
    std::string operation;
    std::uint64_t seed = 0;
    std::string config_digest;
    nlohmann::json records = nlohmann::json::array();
    double wall_seconds = 0.0;
    std::size_t discards = 0;
    std::size_t warnings = 0;
    bool pass = true;

    nlohmann::json to_json() const;
    std::string payload_digest() const;
    /// Append this report as one JSON line (append-only log).
    void append_jsonl(const std::string& path) const;
};

/// FNV-1a 64-bit hash of a byte string (digest primitive).
std::uint64_t fnv1a64(const std::string& bytes);

/// Serialize a covariance model as {kind, parameters}.
nlohmann::json covariance_to_json(const CovarianceModel& cov);

/// Execute one configured operation:
///  - "kernel": one kernel estimate at (t, x, y); with a covariance block,
///    conditions on a single sampled noise path (plus the mollifier when
///    present).
///  - "trace": trace estimate; with a covariance block, averages over
///    `noise_draws` sampled noise paths (the one-time Laplace functional).
///  - "spectrum": discrete form + smallest k_used eigenvalues.
///  - "check": check_kind one of hs_norm / semigroup / equivalence; the
///    report's `pass` carries the verdict (3 joint standard errors, or the
///    equivalence report's own 95% rule).
RunReport run(const ExperimentConfig& cfg, int workers = 1);

/// Re-run `cfg` once per value of the numeric field at `axis` (dotted
/// path into the document, e.g. "mollifier.epsilon"), with per-value seeds
/// derived from the shared root. Writes a combined CSV (axis, then one
/// column per scalar record field) when csv_path is nonempty.
std::vector<RunReport> sweep(const ExperimentConfig& cfg, const std::string& axis,
                             const std::vector<double>& values, int workers = 1,
                             const std::string& csv_path = "");

enum class SuiteLevel { Fast, Full };

/// The consistency suites. Fast: exact invariants plus reduced-budget
/// statistical checks (minutes). Full: the acceptance criteria at their
/// pinned budgets. Every record carries observed/expected/tolerance.
RunReport validate_suite(SuiteLevel level, std::uint64_t seed, int workers = 1);

/// One acceptance criterion (k in 1..10) at its pinned budget; criterion 10
/// records the documented exclusion of full-scale claims.
CheckRecord acceptance_criterion(int k, std::uint64_t seed, int workers = 1);

}  // namespace fkmc
