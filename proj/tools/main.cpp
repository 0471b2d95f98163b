// Command-line front end: runs kernel/trace/spectrum/check experiments from
// TOML configs, parameter sweeps, and the validation suites. Reports are
// printed as JSON and appended to <out>/reports.jsonl.
//
// Exit codes: 0 success, 1 failed verdict or runtime error, 2 config error.

#include <cstdio>
#include <filesystem>
#include <string>

#include "CLI11.hpp"
#include "fkmc/harness.hpp"
#include "fkmc/toml_lite.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int workers = 1;
};

void add_common(CLI::App* sub, CommonOpts& opts, bool needs_config) {
    auto* c = sub->add_option("-c,--config", opts.config_path, "TOML experiment config");
    if (needs_config) c->required()->check(CLI::ExistingFile);
    sub->add_option("-o,--out", opts.out_dir, "output directory (default: out)");
    sub->add_option("-s,--seed", opts.seed, "override the config seed")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    sub->add_option("-w,--workers", opts.workers, "worker threads (default: 1)")
        ->check(CLI::PositiveNumber);
}

fkmc::ExperimentConfig load_config(const CommonOpts& opts, const std::string& operation) {
    nlohmann::json doc = fkmc::toml::parse_file(opts.config_path);
    if (!operation.empty()) doc["operation"] = operation;
    if (opts.seed_set) doc["seed"] = opts.seed;
    return fkmc::ExperimentConfig::from_json(doc);
}

void persist(const fkmc::RunReport& rep, const CommonOpts& opts) {
    std::filesystem::create_directories(opts.out_dir);
    rep.append_jsonl(opts.out_dir + "/reports.jsonl");
}

int emit(const fkmc::RunReport& rep, const CommonOpts& opts) {
    persist(rep, opts);
    std::printf("%s\n", rep.to_json().dump(2).c_str());
    return rep.pass ? 0 : 1;
}

int run_validate(const CommonOpts& opts, const std::string& level) {
    const fkmc::SuiteLevel lvl =
        level == "full" ? fkmc::SuiteLevel::Full : fkmc::SuiteLevel::Fast;
    const fkmc::RunReport rep =
        fkmc::validate_suite(lvl, opts.seed_set ? opts.seed : 1, opts.workers);
    for (const auto& rec : rep.records) {
        std::printf("[%s] %-34s observed=%.9g expected=%.9g tol=%.3g (%.1fs)\n",
                    rec.at("pass").get<bool>() ? "PASS" : "FAIL",
                    rec.at("name").get<std::string>().c_str(),
                    rec.at("observed").get<double>(), rec.at("expected").get<double>(),
                    rec.at("tolerance").get<double>(), rec.at("seconds").get<double>());
        const std::string detail = rec.at("detail").get<std::string>();
        if (!detail.empty()) std::printf("       %s\n", detail.c_str());
    }
    std::printf("%s suite: %s (%.1fs)\n", level.c_str(), rep.pass ? "PASS" : "FAIL",
                rep.wall_seconds);
    persist(rep, opts);
    return rep.pass ? 0 : 1;
}

int run_sweep(const CommonOpts& opts) {
    fkmc::ExperimentConfig cfg = load_config(opts, "");
    if (opts.seed_set) cfg.seed = opts.seed;
    if (cfg.sweep_axis.empty() || cfg.sweep_values.empty())
        throw fkmc::ConfigError("sweep needs [sweep] axis and values",
                                {"sweep.axis", "sweep.values"});
    std::filesystem::create_directories(opts.out_dir);
    std::string stem = cfg.sweep_axis;
    for (char& ch : stem)
        if (ch == '.') ch = '_';
    const std::string csv = opts.out_dir + "/sweep_" + stem + ".csv";
    const std::vector<fkmc::RunReport> reports =
        fkmc::sweep(cfg, cfg.sweep_axis, cfg.sweep_values, opts.workers, csv);
    bool all_pass = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        reports[i].append_jsonl(opts.out_dir + "/reports.jsonl");
        all_pass = all_pass && reports[i].pass;
        std::printf("%s = %.6g  ->  payload %s  (%.1fs)\n", cfg.sweep_axis.c_str(),
                    cfg.sweep_values[i], reports[i].payload_digest().c_str(),
                    reports[i].wall_seconds);
    }
    std::printf("wrote %s\n", csv.c_str());
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "Monte Carlo path-integral estimates and spectral cross-checks for "
        "one-dimensional Schrodinger semigroups with rough potentials"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string level = "fast";

    CLI::App* kernel = app.add_subcommand("kernel", "estimate K(t;x,y) at one point");
    CLI::App* trace = app.add_subcommand("trace", "estimate the semigroup trace");
    CLI::App* spectrum =
        app.add_subcommand("spectrum", "eigenvalues of the discretized form");
    CLI::App* check =
        app.add_subcommand("check", "consistency check (hs_norm/semigroup/equivalence)");
    CLI::App* sweep_cmd = app.add_subcommand("sweep", "run the config across [sweep] values");
    CLI::App* validate = app.add_subcommand("validate", "run the validation suite");
    for (CLI::App* sub : {kernel, trace, spectrum, check, sweep_cmd})
        add_common(sub, opts, true);
    add_common(validate, opts, false);
    validate->add_option("-l,--level", level, "fast or full")
        ->check(CLI::IsMember({"fast", "full"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return run_validate(opts, level);
        if (sweep_cmd->parsed()) return run_sweep(opts);
        const std::string op = app.get_subcommands().front()->get_name();
        return emit(fkmc::run(load_config(opts, op), opts.workers), opts);
    } catch (const fkmc::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
