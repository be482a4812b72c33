#pragma once

// Per-node distributed robust estimator. One call to node_step performs a
// full update of node i from step k to k+1 using only its own measurement and
// the (x̂, P) packages of its neighbors.

#include "drls/comms.hpp"
#include "drls/net_model.hpp"
#include "drls/tuner.hpp"
#include "drls/types.hpp"

#include <map>
#include <span>

namespace drls {

struct NodeBelief {
    NodeId id = 0;
    long k = 0;
    Vec x_hat;  // posterior estimate
    Mat P;      // approximate covariance (not the true error covariance)
};

struct Prediction {
    Vec x_bar;    // priori estimate
    Vec x_bar_u;  // priori estimate shifted by the regularization term
    Mat F;        // Jacobian of f̂ at x̂_{k,i}
};

struct RobustNoise {
    Mat R_hat;                // (1+a)⁻¹R − λ̄⁻¹ H E Eᵀ Hᵀ, certified PD
    std::map<NodeId, Mat> Z;  // π_ij²(a+a²)(N−1) R⁻¹ for proper neighbors
    double lambda_requested = 0.0;
    double lambda_bar = 0.0;  // after escalation
    int doublings = 0;
};

struct Gains {
    Mat K1;
    std::map<NodeId, Mat> K2;
    Mat info_inverse;  // (P̆⁻¹ + Hᵀ R̂⁻¹ H + 2λ̄ I)⁻¹, shared with the covariance update
};

struct StepIntermediates {
    Vec x_bar;
    Vec x_bar_u;
    Mat breve_P;
    Mat R_hat;
    std::map<NodeId, Mat> Z;
    Mat K1;
    std::map<NodeId, Mat> K2;
    Vec b;
    Vec b_u;
    Mat F;
    TunerResult tuning;
};

struct NodeStepResult {
    NodeBelief belief;
    StepIntermediates intermediates;
};

/// (P + Sᵀ Q S)⁻¹ evaluated as P⁻¹ − P⁻¹Sᵀ(Q⁻¹ + S P⁻¹ Sᵀ)⁻¹ S P⁻¹.
[[nodiscard]] Mat woodbury_inverse(const Mat& P, const Mat& S, const Mat& Q);

/// Package of node j among `packages`; throws ProtocolError when absent.
[[nodiscard]] const InfoPackage& package_for(std::span<const InfoPackage> packages, NodeId j);

/// x̄ = f̂(x̂_i) + a Σ_{j∈𝒩_i} π_ij G x̂_j and x̄ᵘ = x̄ − λ̄ (F + aπ_ii G) P x̂_i / (1−α).
/// Throws DegenerateAlphaError for α ≥ 1.
[[nodiscard]] Prediction predict(const NetworkModel& model, const NodeBelief& belief,
                                 std::span<const InfoPackage> neighbors, double lambda_bar, double alpha);

/// P̆ = (F + aπ_ii G) P (F + aπ_ii G)ᵀ + Q_i, symmetrized.
[[nodiscard]] Mat propagate_priori_cov(const NetworkModel& model, NodeId i, const Mat& P, const Mat& F);

/// R̂ at exactly `lambda_bar`, without any feasibility guard.
[[nodiscard]] Mat robust_r_hat(const NetworkModel& model, NodeId i, double lambda_bar);

/// True when R̂(λ̄) − εI ⪰ 0 with ε = 1e-10 ‖R_i‖₂.
[[nodiscard]] bool r_hat_certified(const NetworkModel& model, NodeId i, double lambda_bar);

/// Smallest λ̄ for which r_hat_certified holds (0 when H E = 0).
[[nodiscard]] double min_feasible_lambda(const NetworkModel& model, NodeId i);

/// R̂ and Z at `lambda_bar`, doubling λ̄ until R̂ is certified. Throws
/// InfeasibleRobustificationError after 60 doublings.
[[nodiscard]] RobustNoise robustify_noise(const NetworkModel& model, NodeId i, double lambda_bar);

/// K1 = (P̆⁻¹ + HᵀR̂⁻¹H + 2λ̄I)⁻¹ HᵀR̂⁻¹ and, per proper neighbor j,
/// K2_ij = aπ_ij G (P_j⁻¹ + GᵀHᵀZ_ij H G)⁻¹ GᵀHᵀ Z_ij.
[[nodiscard]] Gains compute_gains(const NetworkModel& model, NodeId i, const Mat& breve_P,
                                  const RobustNoise& noise, std::span<const InfoPackage> neighbors);

/// P_{k+1,i}; throws CovarianceCollapseError when the result is not PD.
[[nodiscard]] Mat update_covariance(const NetworkModel& model, NodeId i, const Mat& breve_P, const RobustNoise& noise,
                                    std::span<const InfoPackage> neighbors, long step);

/// Posterior estimate from the prediction, gains and measurement y_{k+1,i}.
/// The returned belief carries P unchanged; node_step pairs it with the
/// covariance update.
[[nodiscard]] NodeBelief correct(const NetworkModel& model, const NodeBelief& belief, const Prediction& prediction,
                                 const Gains& gains, const Vec& y, double alpha);

/// Full update of node i: tuning, prediction, covariance propagation,
/// robustification, gains, covariance update and correction.
[[nodiscard]] NodeStepResult node_step(const NetworkModel& model, const NodeBelief& belief,
                                       std::span<const InfoPackage> neighbors, const Vec& y,
                                       const TunerConfig& tuner);

/// Initial belief: λ̄₀ = (1+β)‖EᵀHᵀR⁻¹HE‖₂ and P₀ = (P̆₀⁻¹ + HᵀR̂₀⁻¹H)⁻¹.
[[nodiscard]] NodeBelief initial_belief(const NetworkModel& model, NodeId i, Vec x_hat0, const Mat& breve_P0,
                                        double beta);

/// Package a belief for publication.
[[nodiscard]] InfoPackage make_package(const NodeBelief& belief);

}  // namespace drls
