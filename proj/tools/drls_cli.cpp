// drls: command-line front end for simulation, feasibility checks and
// estimator comparisons.

#include "drls/config.hpp"
#include "drls/feasibility.hpp"
#include "drls/monte_carlo.hpp"
#include "drls/report.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace drls;

namespace {

struct RunFlags {
    std::optional<long> trials;
    std::optional<long> horizon;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool force = false;
    bool allow_failed = false;
};

ScenarioConfig load_with_overrides(const std::string& path, const RunFlags& flags) {
    ScenarioConfig base = load_config(path);
    nlohmann::json doc = base.source;
    if (flags.trials) {
        doc["trials"] = *flags.trials;
    }
    if (flags.horizon) {
        doc["horizon"] = *flags.horizon;
    }
    if (flags.seed) {
        doc["seed"] = *flags.seed;
    }
    return parse_config(doc);
}

void print_feasibility(const FeasibilityReport& r) {
    auto yes = [](bool b) { return b ? "pass" : "FAIL"; };
    const auto& b = r.bounds;
    std::printf("%-34s %s\n", "check", "result");
    std::printf("%-34s kF1=%.4g kF2=%.4g kG=%.4g kE1=%.4g kE2=%.4g kH=%.4g (%s)\n", "parameter bounds", b.kF1, b.kF2,
                b.kG, b.kE1, b.kE2, b.kH, b.analytic_F ? "analytic F envelope" : "sampled F");
    std::printf("%-34s %s (worst condition %.4g)\n", "nonsingular F + a*pi_ii*G", yes(r.nonsingular.pass),
                r.nonsingular.worst_condition);
    for (std::size_t i = 0; i < r.observability.size(); ++i) {
        const auto& o = r.observability[i];
        std::printf("%-34s %s (window %d, min eig %.4g)\n", ("observability node " + std::to_string(i + 1)).c_str(),
                    yes(o.pass), o.window, o.min_eig);
    }
    std::printf("%-34s %s (max|Re eig G| = %.4g, bound = %.4g)\n", "coupling condition", yes(r.coupling.pass),
                r.coupling.lhs, r.coupling.rhs);
    if (r.coupling.readings_diverge) {
        std::printf("%-34s singular-value reading disagrees (||G|| = %.4g)\n", "", r.coupling.singular_lhs);
    }
    for (std::size_t i = 0; i < r.steady_state.size(); ++i) {
        const auto& s = r.steady_state[i];
        std::printf("%-34s %s after %d iterations (lambda %.4g, rho(HF) %.4g)\n",
                    ("steady-state recursion node " + std::to_string(i + 1)).c_str(),
                    s.converged ? "converged" : "NOT converged", s.iterations, s.lambda_bar, s.spectral_radius_HF);
    }
    std::printf("%-34s %s (||HF|| = %.4g, bound = %.4g)\n", "error boundedness condition", yes(r.boundedness.pass),
                r.boundedness.lhs, r.boundedness.rhs);
    if (r.uncertainty_bound) {
        std::printf("%-34s %s (kappa_u = %.4g)\n", "uncertainty magnitude", yes(r.uncertainty_bound->pass),
                    r.uncertainty_bound->kappa_u);
    }
}

FeasibilityReport feasibility_for(const ScenarioConfig& cfg, std::size_t probes) {
    FeasibilityOptions opt;
    opt.probe_count = probes;
    opt.seed = cfg.seed;
    opt.beta = cfg.tuner.beta;
    const TrajectorySample sample = simulate_truth(cfg, 0, std::min<long>(cfg.horizon, 1000));
    return run_feasibility(*cfg.model, opt, &sample);
}

/// Conditions a run must satisfy unless --force is given.
bool gate_passes(const FeasibilityReport& r) {
    bool ok = r.nonsingular.pass && r.coupling.pass;
    for (const auto& o : r.observability) {
        ok = ok && o.pass;
    }
    return ok;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw IoError(dir, "cannot create directory: " + ec.message());
    }
}

McResult run(const ScenarioConfig& cfg, std::optional<EstimatorKind> kind, const RunFlags& flags, bool keep_states) {
    McOptions opt;
    opt.kind = kind;
    opt.threads = flags.threads;
    opt.exclude_failed = flags.allow_failed;
    if (keep_states) {
        opt.keep_states_of_trial = 0;
    }
    McResult r = run_monte_carlo(cfg, opt);
    for (const auto& f : r.failures) {
        std::fprintf(stderr, "warning: trial %zu excluded (%s at step %ld): %s\n", f.trial, f.kind.c_str(), f.step,
                     f.message.c_str());
    }
    return r;
}

void emit_single(const McResult& r, const ScenarioConfig& cfg, const std::string& dir) {
    ensure_dir(dir);
    write_file(dir + "/mse.csv", mse_csv(r));
    write_file(dir + "/mse.svg", mse_svg(r));
    if (!r.trials.empty() && !r.trials.front().states.empty()) {
        write_file(dir + "/states.svg", states_svg(r.trials.front(), r.scenario + ": states and estimates, trial " +
                                                                         std::to_string(r.trials.front().trial)));
    }
    write_file(dir + "/metadata.json", metadata_json(r, cfg).dump(2) + "\n");
}

nlohmann::json stats_json(const PairedStats& s) {
    return {{"first", s.first},
            {"second", s.second},
            {"window", {s.k0, s.k1}},
            {"pairs", s.pairs},
            {"first_wins_by_node", s.first_wins},
            {"first_wins_all_nodes", s.first_wins_all}};
}

void print_summary(const McResult& r) {
    const std::size_t last = r.mse.size() - 1;
    std::printf("%s [%s]: %zu trials, K=%ld, %.2fs\n", r.scenario.c_str(), std::string(to_string(r.estimator)).c_str(),
                r.trials.size(), r.horizon, r.wall_seconds);
    for (std::size_t i = 0; i < r.nodes; ++i) {
        std::printf("  node %zu: MSE(K) = %.6g (%.3f dB)\n", i + 1, r.mse[last][i], r.mse_db[last][i]);
    }
}

/// Runs several estimators on one scenario and writes the joint CSV, an
/// overlay plot per node and paired statistics for the first two.
void compare(const ScenarioConfig& cfg, const std::vector<EstimatorKind>& kinds, const RunFlags& flags,
             const std::string& dir, long k0, long k1) {
    ensure_dir(dir);
    std::vector<McResult> results;
    for (EstimatorKind k : kinds) {
        results.push_back(run(cfg, k, flags, k == kinds.front()));
        print_summary(results.back());
    }
    std::vector<const McResult*> ptrs;
    for (const auto& r : results) {
        ptrs.push_back(&r);
    }
    write_file(dir + "/compare.csv", compare_csv(ptrs));

    std::vector<PlotPanel> panels;
    for (std::size_t i = 0; i < cfg.model->node_count(); ++i) {
        PlotPanel p;
        p.title = "node " + std::to_string(i + 1);
        p.x_label = "k";
        p.y_label = "MSE (dB, -10 log10)";
        for (const auto& r : results) {
            PlotSeries s;
            s.label = std::string(to_string(r.estimator));
            for (std::size_t k = 0; k < r.mse_db.size(); ++k) {
                s.x.push_back(static_cast<double>(k));
                s.y.push_back(r.mse_db[k][i]);
            }
            p.series.push_back(std::move(s));
        }
        panels.push_back(std::move(p));
    }
    write_file(dir + "/compare.svg", render_svg(cfg.name + ": estimator comparison", panels));
    if (!results.front().trials.empty() && !results.front().trials.front().states.empty()) {
        write_file(dir + "/states.svg", states_svg(results.front().trials.front(),
                                                   cfg.name + ": states and estimates, trial 0"));
    }

    nlohmann::json meta = metadata_json(results.front(), cfg);
    meta["estimators"] = nlohmann::json::array();
    for (const auto& r : results) {
        meta["estimators"].push_back(std::string(to_string(r.estimator)));
    }
    if (results.size() >= 2) {
        const PairedStats s = paired_compare(results[0], results[1], k0, std::min(k1, cfg.horizon));
        meta["paired"] = stats_json(s);
        write_file(dir + "/paired.json", stats_json(s).dump(2) + "\n");
        std::printf("paired over k=%ld..%ld: %s lower than %s in %.1f%% of %zu trials (node-averaged)\n", s.k0, s.k1,
                    s.first.c_str(), s.second.c_str(), 100.0 * s.first_wins_all, s.pairs);
        for (std::size_t i = 0; i < s.first_wins.size(); ++i) {
            std::printf("  node %zu: %.1f%%\n", i + 1, 100.0 * s.first_wins[i]);
        }
    }
    write_file(dir + "/metadata.json", meta.dump(2) + "\n");
}

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
    cmd->add_option("--trials", flags.trials, "Monte-Carlo trials (overrides the config)")->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", flags.horizon, "Steps per trial (overrides the config)")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", flags.seed, "Base seed (overrides the config)");
    cmd->add_option("--threads", flags.threads, "Worker threads (0 = all cores)");
    cmd->add_flag("--force", flags.force, "Run even when the feasibility gate fails");
    cmd->add_flag("--allow-failed-trials", flags.allow_failed, "Exclude failed trials instead of aborting");
}

bool check_gate(const ScenarioConfig& cfg, const RunFlags& flags) {
    if (flags.force) {
        return true;
    }
    const FeasibilityReport rep = feasibility_for(cfg, 1000);
    if (gate_passes(rep)) {
        return true;
    }
    std::fprintf(stderr, "feasibility gate failed for %s (use --force to run anyway):\n", cfg.name.c_str());
    print_feasibility(rep);
    return false;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distributed robust state estimation for coupled uncertain networks"};
    app.require_subcommand(1);

    RunFlags flags;
    std::string config_path;
    std::string out_dir = "out";
    std::string estimator;

    auto* sim = app.add_subcommand("simulate", "Run a Monte-Carlo simulation and write MSE CSV/SVG");
    sim->add_option("config", config_path, "Config file or builtin:<name>")->required();
    sim->add_option("--out", out_dir, "Output directory");
    sim->add_option("--estimator", estimator, "drea, centralized or ekf (overrides the config)");
    add_run_flags(sim, flags);

    std::size_t probes = 10000;
    std::string json_out;
    auto* chk = app.add_subcommand("check", "Evaluate the feasibility conditions of a scenario");
    chk->add_option("config", config_path, "Config file or builtin:<name>")->required();
    chk->add_option("--probes", probes, "Random states for the F checks");
    chk->add_option("--json", json_out, "Write the report as JSON to this file ('-' for stdout)");

    std::vector<std::string> estimators;
    long k0 = 50;
    long k1 = 100;
    auto* cmp = app.add_subcommand("compare", "Run several estimators on the same noise realizations");
    cmp->add_option("config", config_path, "Config file or builtin:<name>")->required();
    cmp->add_option("--estimators", estimators, "Comma-separated list, e.g. drea,ekf")->delimiter(',')->required();
    cmp->add_option("--out", out_dir, "Output directory");
    cmp->add_option("--window-start", k0, "First step of the paired-comparison window");
    cmp->add_option("--window-end", k1, "Last step of the paired-comparison window");
    add_run_flags(cmp, flags);

    bool uncertain = false;
    bool topologies = false;
    bool full_trials = false;
    auto* rep = app.add_subcommand("replicate-paper", "Run the builtin four-node benchmark scenarios");
    rep->add_flag("--uncertain", uncertain, "Also run the perturbed-dynamics variant against the EKF baseline");
    rep->add_flag("--topologies", topologies, "Also run the star, ring and chain coupling presets");
    rep->add_flag("--full", full_trials, "Use 1000 trials instead of the configured 200");
    rep->add_option("--out", out_dir, "Output directory");
    add_run_flags(rep, flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sim->parsed()) {
            const ScenarioConfig cfg = load_with_overrides(config_path, flags);
            if (!check_gate(cfg, flags)) {
                return 3;
            }
            std::optional<EstimatorKind> kind;
            if (!estimator.empty()) {
                kind = estimator_from_string(estimator);
            }
            const McResult r = run(cfg, kind, flags, true);
            emit_single(r, cfg, out_dir);
            print_summary(r);
        } else if (chk->parsed()) {
            const ScenarioConfig cfg = load_config(config_path);
            const FeasibilityReport r = feasibility_for(cfg, probes);
            print_feasibility(r);
            if (json_out == "-") {
                std::cout << to_json(r).dump(2) << "\n";
            } else if (!json_out.empty()) {
                write_file(json_out, to_json(r).dump(2) + "\n");
            }
            return gate_passes(r) ? 0 : 1;
        } else if (cmp->parsed()) {
            const ScenarioConfig cfg = load_with_overrides(config_path, flags);
            if (!check_gate(cfg, flags)) {
                return 3;
            }
            std::vector<EstimatorKind> kinds;
            for (const auto& e : estimators) {
                kinds.push_back(estimator_from_string(e));
            }
            compare(cfg, kinds, flags, out_dir, k0, k1);
        } else if (rep->parsed()) {
            if (full_trials && !flags.trials) {
                flags.trials = 1000;
            }
            const ScenarioConfig nominal = load_with_overrides("builtin:paper", flags);
            if (!check_gate(nominal, flags)) {
                return 3;
            }
            const McResult base = run(nominal, std::nullopt, flags, true);
            emit_single(base, nominal, out_dir + "/paper");
            print_summary(base);
            if (uncertain) {
                const ScenarioConfig unc = load_with_overrides("builtin:paper-uncertain", flags);
                compare(unc, {EstimatorKind::drea, EstimatorKind::ekf}, flags, out_dir + "/paper-uncertain", 50,
                        100);
            }
            if (topologies) {
                std::vector<McResult> results;
                results.push_back(base);
                emit_single(base, nominal, out_dir + "/topologies/paper");
                for (const char* topo : {"paper-star", "paper-ring", "paper-chain"}) {
                    const ScenarioConfig cfg = load_with_overrides(std::string("builtin:") + topo, flags);
                    results.push_back(run(cfg, std::nullopt, flags, false));
                    emit_single(results.back(), cfg, out_dir + "/topologies/" + topo);
                    print_summary(results.back());
                }
                PlotPanel p;
                p.title = "node 2";
                p.x_label = "k";
                p.y_label = "MSE (dB, -10 log10)";
                std::string csv = "topology,k,mse,mse_db\n";
                for (const auto& r : results) {
                    PlotSeries s;
                    s.label = r.scenario;
                    for (std::size_t k = 0; k < r.mse_db.size(); ++k) {
                        s.x.push_back(static_cast<double>(k));
                        s.y.push_back(r.mse_db[k][1]);
                        csv += r.scenario + "," + std::to_string(k) + "," + format_double(r.mse[k][1]) + "," +
                               format_double(r.mse_db[k][1]) + "\n";
                    }
                    p.series.push_back(std::move(s));
                }
                write_file(out_dir + "/topologies/node2.csv", csv);
                write_file(out_dir + "/topologies/node2.svg", render_svg("node 2 across coupling topologies", {p}));
            }
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const TrialFailedError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 4;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
