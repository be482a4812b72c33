#pragma once

// Monte-Carlo driver: simulates the plant, runs an estimator through the
// synchronous message rounds, and aggregates squared estimation errors.

#include "drls/config.hpp"
#include "drls/estimator.hpp"
#include "drls/feasibility.hpp"
#include "drls/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drls {

struct TrialFailure {
    std::size_t trial = 0;
    long step = -1;     // −1 when unknown
    std::string kind;   // error class name
    std::string message;
};

struct TrialOptions {
    bool record_states = false;      // keep x and x̂ for plotting
    bool record_covariances = false; // keep P_{k,i} (DREA and centralized only)
    bool record_tuning = false;      // keep (λ̄, α) per step and node (DREA only)
};

struct TrialRecord {
    std::size_t trial = 0;
    std::vector<std::vector<double>> sq_err;   // [k][i], k = 0..K
    std::vector<std::vector<Vec>> states;      // [k][i] when recorded
    std::vector<std::vector<Vec>> estimates;   // [k][i] when recorded
    std::vector<std::vector<Mat>> covariances; // [k][i] when recorded
    std::vector<std::vector<TunerResult>> tuning;  // [k-1][i] when recorded
    std::optional<TrialFailure> failure;
};

/// Runs one trial with the configured estimator (or `kind` when given).
/// Deterministic in (config, trial). Estimator errors are captured in
/// `failure` rather than thrown.
[[nodiscard]] TrialRecord run_trial(const ScenarioConfig& config, std::size_t trial,
                                    std::optional<EstimatorKind> kind = std::nullopt,
                                    const TrialOptions& options = {});

/// Plant trajectory of `trial` (states 0..steps−1 and the Δ acting on each).
[[nodiscard]] TrajectorySample simulate_truth(const ScenarioConfig& config, std::size_t trial, long steps);

/// x̂₀ for node i in `trial`, following the configured rule.
[[nodiscard]] Vec initial_estimate(const ScenarioConfig& config, std::size_t trial, NodeId i);

struct McOptions {
    std::optional<EstimatorKind> kind;
    unsigned threads = 0;             // 0 → hardware concurrency
    bool exclude_failed = false;      // otherwise any failed trial fails the run
    std::optional<std::size_t> keep_states_of_trial;  // record x, x̂ of one trial for plots
};

struct McResult {
    std::string scenario;
    EstimatorKind estimator = EstimatorKind::drea;
    std::size_t nodes = 0;
    long horizon = 0;
    std::vector<std::vector<double>> mse;     // [k][i]
    std::vector<std::vector<double>> mse_db;  // [k][i], −10·log10(mse)
    std::vector<TrialRecord> trials;          // successful trials in trial order
    std::vector<TrialFailure> failures;
    std::string config_hash;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
};

/// Thrown by run_monte_carlo when a trial fails and failures are not excluded.
class TrialFailedError : public Error {
public:
    explicit TrialFailedError(TrialFailure f);
    [[nodiscard]] const TrialFailure& failure() const noexcept { return failure_; }

private:
    TrialFailure failure_;
};

[[nodiscard]] McResult run_monte_carlo(const ScenarioConfig& config, const McOptions& options = {});

/// −10·log10(mse).
[[nodiscard]] double to_db(double mse);

/// Mean squared error of one trial for node i over steps [k0, k1].
[[nodiscard]] double window_mean(const TrialRecord& t, NodeId i, long k0, long k1);

struct PairedStats {
    std::string first;
    std::string second;
    long k0 = 0;
    long k1 = 0;
    std::size_t pairs = 0;
    std::vector<double> first_wins;   // per node: fraction of trials where `first` has lower window MSE
    double first_wins_all = 0.0;      // same, on the node-averaged window MSE
};

/// Paired per-trial comparison over the window [k0, k1]. Trials are matched
/// by index; only trials present in both results count.
[[nodiscard]] PairedStats paired_compare(const McResult& first, const McResult& second, long k0, long k1);

}  // namespace drls
