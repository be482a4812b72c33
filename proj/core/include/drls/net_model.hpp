#pragma once

// The true coupled network:
//   x_{k+1,i} = f(x_{k,i}) + E1_i Δ1 x_{k,i} + a Σ_j π_ij G x_{k,j} + ω_{k,i}
//   y_{k,i}   = H_i x_{k,i} + ν_{k,i}

#include "drls/rng.hpp"
#include "drls/types.hpp"

#include <optional>
#include <string>
#include <vector>

namespace drls {

/// Builtin node dynamics. `sine` is
///   [0.9 x1 + sin(ω x2), 0.9 x2 − sin(ω x1)]
/// (ω = 0.5 nominally); `linear` is x ↦ A x.
class Dynamics {
public:
    enum class Kind { sine, linear };

    static Dynamics sine(double omega = 0.5);
    static Dynamics linear(Mat a);

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double omega() const noexcept { return omega_; }
    [[nodiscard]] const Mat& matrix() const noexcept { return a_; }
    /// State dimension the dynamics is defined for.
    [[nodiscard]] Eigen::Index dim() const noexcept;

    [[nodiscard]] Vec eval(const Vec& x) const;
    [[nodiscard]] Mat jacobian(const Vec& x) const;
    [[nodiscard]] std::string describe() const;

private:
    Kind kind_ = Kind::linear;
    double omega_ = 0.5;
    Mat a_;
};

/// Per-node matrices. Cholesky factors of Q and R are filled in by the model.
struct NodeParams {
    Mat H;   // r_i × n
    Mat Q;   // n × n, SPD
    Mat R;   // r_i × r_i, SPD
    Mat E1;  // n × c1, parametric uncertainty structure
    Mat E2;  // n × c2, linearization uncertainty structure
    Mat Q_chol;
    Mat R_chol;
};

class NetworkModel {
public:
    /// Validates every invariant and throws ConfigError naming the field.
    /// `truth` overrides the dynamics used for the simulated plant; the
    /// estimator only ever sees `nominal`.
    NetworkModel(double a, Mat pi, Mat g, Dynamics nominal, std::vector<NodeParams> nodes,
                 std::optional<Dynamics> truth = std::nullopt);

    [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
    [[nodiscard]] Eigen::Index state_dim() const noexcept { return g_.rows(); }
    [[nodiscard]] Eigen::Index meas_dim(NodeId i) const { return nodes_.at(i).H.rows(); }

    [[nodiscard]] double a() const noexcept { return a_; }
    [[nodiscard]] const Mat& pi() const noexcept { return pi_; }
    [[nodiscard]] double pi(NodeId i, NodeId j) const { return pi_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)); }
    [[nodiscard]] const Mat& G() const noexcept { return g_; }
    [[nodiscard]] const Dynamics& nominal() const noexcept { return nominal_; }
    [[nodiscard]] const Dynamics& truth() const noexcept { return truth_ ? *truth_ : nominal_; }
    [[nodiscard]] bool has_truth_override() const noexcept { return truth_.has_value(); }
    [[nodiscard]] const NodeParams& node(NodeId i) const { return nodes_.at(i); }
    [[nodiscard]] const std::vector<NodeParams>& nodes() const noexcept { return nodes_; }

    /// [E1_i, E2_i].
    [[nodiscard]] Mat E(NodeId i) const;

    /// 𝒩_i: every j with π_ij ≠ 0, plus i itself; ascending.
    [[nodiscard]] std::vector<NodeId> neighborhood(NodeId i) const;
    /// 𝒩_i \ {i}.
    [[nodiscard]] std::vector<NodeId> proper_neighbors(NodeId i) const;
    /// Σ_{j ∈ 𝒩_i, j ≠ i} π_ij.
    [[nodiscard]] double proper_pi_sum(NodeId i) const;
    /// max_{i,j} π_ij.
    [[nodiscard]] double pi_max() const;

    /// F + a π_ii G at x.
    [[nodiscard]] Mat coupled_jacobian(NodeId i, const Vec& x) const;

    /// Same model with the nominal dynamics replaced by another (used to
    /// freeze a linearization for LTI analysis).
    [[nodiscard]] NetworkModel with_nominal(Dynamics nominal) const;

private:
    double a_;
    Mat pi_;
    Mat g_;
    Dynamics nominal_;
    std::optional<Dynamics> truth_;
    std::vector<NodeParams> nodes_;
};

struct GlobalState {
    long k = 0;
    std::vector<Vec> x;
};

enum class UncertaintyMode { zero, fixed, random_per_step };

enum class NoiseMode { stochastic, zero };

/// Δ1, Δ2 realizations per node, each with spectral norm ≤ 1.
struct UncertaintyDraw {
    UncertaintyMode mode = UncertaintyMode::zero;
    std::vector<Mat> delta1;  // c1 × n per node
    std::vector<Mat> delta2;  // c2 × n per node
};

/// How Δ is produced each step. For `fixed`, the matrices are validated once.
struct UncertaintySpec {
    UncertaintyMode mode = UncertaintyMode::zero;
    std::vector<Mat> fixed_delta1;
    std::vector<Mat> fixed_delta2;
};

/// Tolerance on ‖Δ‖₂ ≤ 1.
inline constexpr double kDeltaNormTolerance = 1e-12;

[[nodiscard]] Vec eval_nominal_f(const NetworkModel& model, const Vec& x);
[[nodiscard]] Mat eval_jacobian_F(const NetworkModel& model, const Vec& x);

/// Throws ConfigError when a fixed Δ violates its dimensions or norm bound.
void validate_uncertainty(const NetworkModel& model, const UncertaintySpec& spec);

/// One Δ draw for `step`; random draws come from the (node, step) uncertainty substream.
[[nodiscard]] UncertaintyDraw sample_uncertainty(const NetworkModel& model, const UncertaintySpec& spec,
                                                 const SeedKey& key, long step);

/// Advances the plant one step. Throws SimulationDivergenceError on a
/// non-finite state.
[[nodiscard]] GlobalState step_truth(const NetworkModel& model, const GlobalState& s, const UncertaintyDraw& draw,
                                     const SeedKey& key, NoiseMode noise = NoiseMode::stochastic);

/// y = H_i x_i + ν with ν drawn from the (node, step) measurement substream.
[[nodiscard]] Vec measure(const NetworkModel& model, NodeId i, const Vec& x_i, const SeedKey& key, long step,
                          NoiseMode noise = NoiseMode::stochastic);

/// n-vector of independent standard normals from `rng`.
template <class Rng>
[[nodiscard]] Vec standard_normal(Rng& rng, Eigen::Index n);

}  // namespace drls

#include <random>

template <class Rng>
drls::Vec drls::standard_normal(Rng& rng, Eigen::Index n) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Vec z(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        z(k) = dist(rng);
    }
    return z;
}
