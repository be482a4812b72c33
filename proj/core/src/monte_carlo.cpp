#include "drls/monte_carlo.hpp"

#include "drls/baselines.hpp"
#include "drls/comms.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

namespace drls {

namespace {

std::string error_kind(const std::exception& e) {
    if (dynamic_cast<const SimulationDivergenceError*>(&e)) {
        return "simulation_divergence";
    }
    if (dynamic_cast<const CovarianceCollapseError*>(&e)) {
        return "covariance_collapse";
    }
    if (dynamic_cast<const InfeasibleRobustificationError*>(&e)) {
        return "infeasible_robustification";
    }
    if (dynamic_cast<const DegenerateAlphaError*>(&e)) {
        return "degenerate_alpha";
    }
    if (dynamic_cast<const DegenerateNeighborhoodError*>(&e)) {
        return "degenerate_neighborhood";
    }
    if (dynamic_cast<const NumericalError*>(&e)) {
        return "numerical";
    }
    if (dynamic_cast<const ProtocolError*>(&e)) {
        return "protocol";
    }
    return "error";
}

}  // namespace

TrialFailedError::TrialFailedError(TrialFailure f)
    : Error("trial " + std::to_string(f.trial) + " failed (" + f.kind + "): " + f.message), failure_(std::move(f)) {}

Vec initial_estimate(const ScenarioConfig& config, std::size_t trial, NodeId i) {
    const Vec& x0 = config.initial_states.at(i);
    if (config.initial_rule == InitialEstimateRule::exact) {
        return x0;
    }
    const SeedKey key{config.seed, trial};
    auto rng = key.stream(i, 0, Stream::initial_estimate);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double delta = normal(rng);
    return x0 + config.initial_scale * static_cast<double>(i + 1) * delta * Vec::Ones(x0.size());
}

TrajectorySample simulate_truth(const ScenarioConfig& config, std::size_t trial, long steps) {
    const NetworkModel& model = *config.model;
    const SeedKey key{config.seed, trial};
    TrajectorySample sample;
    GlobalState s{0, config.initial_states};
    for (long k = 0; k < steps; ++k) {
        UncertaintyDraw draw = sample_uncertainty(model, config.uncertainty, key, k);
        GlobalState next = step_truth(model, s, draw, key, config.noise);
        sample.states.push_back(std::move(s));
        sample.draws.push_back(std::move(draw));
        s = std::move(next);
    }
    return sample;
}

TrialRecord run_trial(const ScenarioConfig& config, std::size_t trial, std::optional<EstimatorKind> kind,
                      const TrialOptions& options) {
    const NetworkModel& model = *config.model;
    const std::size_t N = model.node_count();
    const Eigen::Index n = model.state_dim();
    const EstimatorKind est = kind.value_or(config.estimator);
    const SeedKey key{config.seed, trial};

    TrialRecord rec;
    rec.trial = trial;
    GlobalState truth{0, config.initial_states};

    std::vector<NodeBelief> beliefs;
    StackedBelief stacked;
    long step = 0;

    auto current_estimates = [&]() {
        std::vector<Vec> out;
        for (NodeId i = 0; i < N; ++i) {
            out.push_back(est == EstimatorKind::ekf ? node_slice(stacked, i, n) : beliefs[i].x_hat);
        }
        return out;
    };
    auto record = [&]() {
        const auto est_now = current_estimates();
        std::vector<double> row(N);
        for (NodeId i = 0; i < N; ++i) {
            row[i] = (est_now[i] - truth.x[i]).squaredNorm();
        }
        rec.sq_err.push_back(std::move(row));
        if (options.record_states) {
            rec.states.push_back(truth.x);
            rec.estimates.push_back(est_now);
        }
        if (options.record_covariances && est != EstimatorKind::ekf) {
            std::vector<Mat> ps;
            for (const auto& b : beliefs) {
                ps.push_back(b.P);
            }
            rec.covariances.push_back(std::move(ps));
        }
    };

    try {
        for (NodeId i = 0; i < N; ++i) {
            beliefs.push_back(initial_belief(model, i, initial_estimate(config, trial, i), config.initial_prior_cov[i],
                                             config.tuner.beta));
        }
        if (est == EstimatorKind::ekf) {
            std::vector<Vec> xs;
            for (const auto& b : beliefs) {
                xs.push_back(b.x_hat);
            }
            stacked = stack_beliefs(xs, Mat::Zero(n, n));
            for (NodeId i = 0; i < N; ++i) {
                const auto off = static_cast<Eigen::Index>(i) * n;
                stacked.P.block(off, off, n, n) = beliefs[i].P;
            }
        }
        record();

        RoundBus bus(model);
        std::vector<Vec> ys(N);
        for (long k = 0; k < config.horizon; ++k) {
            step = k + 1;
            const UncertaintyDraw draw = sample_uncertainty(model, config.uncertainty, key, k);
            truth = step_truth(model, truth, draw, key, config.noise);
            for (NodeId i = 0; i < N; ++i) {
                ys[i] = measure(model, i, truth.x[i], key, k + 1, config.noise);
            }

            switch (est) {
            case EstimatorKind::drea: {
                for (const auto& b : beliefs) {
                    bus.publish(make_package(b));
                }
                std::vector<NodeBelief> next;
                std::vector<TunerResult> tuning;
                for (NodeId i = 0; i < N; ++i) {
                    const auto packages = bus.collect(i);
                    NodeStepResult r = node_step(model, beliefs[i], packages, ys[i], config.tuner);
                    next.push_back(std::move(r.belief));
                    tuning.push_back(r.intermediates.tuning);
                }
                bus.advance_round();
                beliefs = std::move(next);
                if (options.record_tuning) {
                    rec.tuning.push_back(std::move(tuning));
                }
                break;
            }
            case EstimatorKind::centralized:
                beliefs = centralized_step(model, beliefs, ys, config.tuner.beta);
                break;
            case EstimatorKind::ekf:
                stacked = augmented_ekf_step(model, stacked, ys);
                break;
            }
            record();
        }
    } catch (const StepError& e) {
        rec.failure = TrialFailure{trial, e.step(), error_kind(e), e.what()};
    } catch (const Error& e) {
        rec.failure = TrialFailure{trial, step, error_kind(e), e.what()};
    }
    return rec;
}

double to_db(double mse) { return -10.0 * std::log10(mse); }

McResult run_monte_carlo(const ScenarioConfig& config, const McOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t L = config.trials;
    std::vector<TrialRecord> records(L);

    unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, L));
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (std::size_t t = next.fetch_add(1); t < L; t = next.fetch_add(1)) {
            TrialOptions topt;
            topt.record_states = options.keep_states_of_trial && *options.keep_states_of_trial == t;
            records[t] = run_trial(config, t, options.kind, topt);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < threads; ++w) {
            pool.emplace_back(worker);
        }
        for (auto& th : pool) {
            th.join();
        }
    }

    McResult res;
    res.scenario = config.name;
    res.estimator = options.kind.value_or(config.estimator);
    res.nodes = config.model->node_count();
    res.horizon = config.horizon;
    res.config_hash = config_hash(config);
    res.seed = config.seed;

    for (auto& r : records) {
        if (r.failure) {
            res.failures.push_back(*r.failure);
        } else {
            res.trials.push_back(std::move(r));
        }
    }
    if (!res.failures.empty() && !options.exclude_failed) {
        throw TrialFailedError(res.failures.front());
    }

    const auto steps = static_cast<std::size_t>(config.horizon) + 1;
    res.mse.assign(steps, std::vector<double>(res.nodes, 0.0));
    res.mse_db.assign(steps, std::vector<double>(res.nodes, 0.0));
    const double count = static_cast<double>(res.trials.size());
    for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < res.nodes; ++i) {
            double sum = 0.0;
            for (const auto& t : res.trials) {
                sum += t.sq_err[k][i];
            }
            res.mse[k][i] = count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
            res.mse_db[k][i] = to_db(res.mse[k][i]);
        }
    }
    res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

double window_mean(const TrialRecord& t, NodeId i, long k0, long k1) {
    double sum = 0.0;
    for (long k = k0; k <= k1; ++k) {
        sum += t.sq_err.at(static_cast<std::size_t>(k)).at(i);
    }
    return sum / static_cast<double>(k1 - k0 + 1);
}

PairedStats paired_compare(const McResult& first, const McResult& second, long k0, long k1) {
    if (first.nodes != second.nodes) {
        throw ConfigError("compare", "results have different node counts");
    }
    if (k0 < 0 || k1 < k0 || k1 > std::min(first.horizon, second.horizon)) {
        throw ConfigError("compare.window", "window outside the simulated horizon");
    }
    PairedStats ps;
    ps.first = std::string(to_string(first.estimator));
    ps.second = std::string(to_string(second.estimator));
    ps.k0 = k0;
    ps.k1 = k1;
    ps.first_wins.assign(first.nodes, 0.0);

    std::size_t a = 0;
    std::size_t b = 0;
    std::size_t all_wins = 0;
    while (a < first.trials.size() && b < second.trials.size()) {
        const auto& ta = first.trials[a];
        const auto& tb = second.trials[b];
        if (ta.trial < tb.trial) {
            ++a;
            continue;
        }
        if (tb.trial < ta.trial) {
            ++b;
            continue;
        }
        double ma = 0.0;
        double mb = 0.0;
        for (NodeId i = 0; i < first.nodes; ++i) {
            const double wa = window_mean(ta, i, k0, k1);
            const double wb = window_mean(tb, i, k0, k1);
            ps.first_wins[i] += wa < wb ? 1.0 : 0.0;
            ma += wa;
            mb += wb;
        }
        all_wins += ma < mb ? 1 : 0;
        ++ps.pairs;
        ++a;
        ++b;
    }
    if (ps.pairs > 0) {
        for (double& w : ps.first_wins) {
            w /= static_cast<double>(ps.pairs);
        }
        ps.first_wins_all = static_cast<double>(all_wins) / static_cast<double>(ps.pairs);
    }
    return ps;
}

}  // namespace drls
