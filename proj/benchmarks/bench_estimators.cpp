#include "drls/baselines.hpp"
#include "drls/config.hpp"
#include "drls/estimator.hpp"
#include "drls/monte_carlo.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace drls;

struct Fixture {
    ScenarioConfig cfg;
    std::vector<NodeBelief> beliefs;
    std::vector<InfoPackage> packages;
    std::vector<Vec> ys;

    explicit Fixture(const std::string& name) : cfg(load_config(name)) {
        const auto& m = *cfg.model;
        for (NodeId i = 0; i < m.node_count(); ++i) {
            beliefs.push_back(initial_belief(m, i, initial_estimate(cfg, 0, i), cfg.initial_prior_cov[i], cfg.tuner.beta));
            packages.push_back(make_package(beliefs.back()));
            ys.push_back(m.node(i).H * cfg.initial_states[i]);
        }
    }
};

void BM_NodeStep(benchmark::State& state, const char* scenario, AlphaPolicyKind alpha) {
    Fixture f(scenario);
    f.cfg.tuner.alpha.kind = alpha;
    for (auto _ : state) {
        auto r = node_step(*f.cfg.model, f.beliefs[1], f.packages, f.ys[1], f.cfg.tuner);
        benchmark::DoNotOptimize(r.belief.x_hat.data());
    }
}
BENCHMARK_CAPTURE(BM_NodeStep, nominal_fixed, "builtin:paper", AlphaPolicyKind::fixed);
BENCHMARK_CAPTURE(BM_NodeStep, uncertain_fixed, "builtin:paper-uncertain", AlphaPolicyKind::fixed);
BENCHMARK_CAPTURE(BM_NodeStep, uncertain_closed_form, "builtin:paper-uncertain", AlphaPolicyKind::closed_form);

void BM_CentralizedStep(benchmark::State& state) {
    Fixture f("builtin:paper-uncertain");
    for (auto _ : state) {
        auto next = centralized_step(*f.cfg.model, f.beliefs, f.ys, f.cfg.tuner.beta);
        benchmark::DoNotOptimize(next.data());
    }
}
BENCHMARK(BM_CentralizedStep);

void BM_EkfStep(benchmark::State& state) {
    Fixture f("builtin:paper-uncertain");
    std::vector<Vec> xs;
    for (const auto& b : f.beliefs) {
        xs.push_back(b.x_hat);
    }
    const StackedBelief s = stack_beliefs(xs, f.cfg.initial_prior_cov[0]);
    for (auto _ : state) {
        auto next = augmented_ekf_step(*f.cfg.model, s, f.ys);
        benchmark::DoNotOptimize(next.x_hat.data());
    }
}
BENCHMARK(BM_EkfStep);

void BM_Trial(benchmark::State& state) {
    ScenarioConfig cfg = load_config("builtin:paper-uncertain");
    const auto kind = static_cast<EstimatorKind>(state.range(0));
    for (auto _ : state) {
        auto rec = run_trial(cfg, 0, kind);
        benchmark::DoNotOptimize(rec.sq_err.data());
    }
    state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_Trial)->Arg(static_cast<int>(EstimatorKind::drea))->Arg(static_cast<int>(EstimatorKind::ekf))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
