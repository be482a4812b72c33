#pragma once

// Reference estimators: the centralized robust regularized least-squares
// step (every node solves the fully coupled problem over all neighbor
// errors at once) and a standard extended Kalman filter on the stacked
// network state.

#include "drls/estimator.hpp"
#include "drls/net_model.hpp"
#include "drls/types.hpp"

#include <vector>

namespace drls {

/// Node i's coupled problem in the unknowns η = [e_1, …, e_N, w]:
///   min_η max_Δ ‖η‖²_S + ‖Aη − b + MΔ(E_a η − E_b)‖²_T
struct CentralizedProblem {
    NodeId i = 0;
    Mat C;        // n × (N+1)n, maps η to the priori error of node i
    Mat A;        // H_i C
    Mat S;        // diag(P_1⁻¹, …, P_N⁻¹, Q_i⁻¹)
    Mat M;        // H_i [E1 E2]
    Mat R;        // R_i
    Mat E_a;      // [I I]ᵀ [0 … I … 0]
    Vec E_b;      // −[I 0]ᵀ x̂_i
    Vec b;        // y_i − H_i x̄_i
    Vec x_bar;
};

[[nodiscard]] CentralizedProblem assemble_centralized(const NetworkModel& model, NodeId i,
                                                      const std::vector<NodeBelief>& beliefs, const Vec& y);

/// λ̂ = (1+β)‖MᵀR⁻¹M‖₂, doubled until R − λ̂⁻¹MMᵀ is certified PD.
[[nodiscard]] double centralized_lambda(const CentralizedProblem& problem, double beta);

/// T̂ = (R − λ̂⁻¹MMᵀ)⁻¹. Throws InfeasibleRobustificationError when the
/// difference is not PD.
[[nodiscard]] Mat centralized_t_hat(const CentralizedProblem& problem, double lambda_hat);

/// η = (Ŝ + AᵀT̂A)⁻¹(AᵀT̂b + λ̂E_aᵀE_b) with Ŝ = S + λ̂E_aᵀE_a.
[[nodiscard]] Vec centralized_eta_opt(const CentralizedProblem& problem, double lambda_hat);

/// One centralized step for every node: x̂_i ← x̄_i + Cη, P_i ← C(Ŝ + AᵀT̂A)⁻¹Cᵀ.
[[nodiscard]] std::vector<NodeBelief> centralized_step(const NetworkModel& model,
                                                       const std::vector<NodeBelief>& beliefs,
                                                       const std::vector<Vec>& measurements, double beta);

struct StackedBelief {
    long k = 0;
    Vec x_hat;  // N·n
    Mat P;      // N·n × N·n
};

[[nodiscard]] StackedBelief stack_beliefs(const std::vector<Vec>& x_hat, const Mat& P_node);
[[nodiscard]] Vec node_slice(const StackedBelief& s, NodeId i, Eigen::Index n);

/// Extended Kalman filter step on the stacked system with Jacobian
/// blockdiag(F_i) + a Π ⊗ G and block-diagonal H, Q, R (Joseph-form update).
[[nodiscard]] StackedBelief augmented_ekf_step(const NetworkModel& model, const StackedBelief& belief,
                                               const std::vector<Vec>& measurements);

}  // namespace drls
