#pragma once

// Executable versions of the standing assumptions and the boundedness
// conditions, evaluated before a simulation is run.

#include "drls/net_model.hpp"
#include "drls/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace drls {

/// Uniform bounds on the model parameters. kF1/kF2 bound ‖F + aπ_ii G‖₂ over
/// all nodes; the noise bounds are spectral norms of Q_i and R_i.
struct AssumptionBounds {
    double kF1 = 0.0;
    double kF2 = 0.0;
    double kG = 0.0;
    double kE1 = 0.0;
    double kE2 = 0.0;
    double kH = 0.0;
    double kw1 = 0.0;
    double kw2 = 0.0;
    double kv1 = 0.0;
    double kv2 = 0.0;
    std::size_t probes = 0;  // states used for the F bounds (0 when analytic)
    bool analytic_F = false;
};

/// `count` states drawn uniformly from [−box, box]ⁿ.
[[nodiscard]] std::vector<Vec> make_probes(const NetworkModel& model, std::size_t count, double box,
                                           std::uint64_t seed);

/// Exact norms for constant matrices. For the sine dynamics the F bounds are
/// taken over the whole cos envelope; otherwise over `probes`.
[[nodiscard]] AssumptionBounds estimate_bounds(const NetworkModel& model, const std::vector<Vec>& probes);

struct NonsingularReport {
    bool pass = false;
    double worst_condition = 0.0;
};

/// cond(F(x) + aπ_ii G) < 1e12 at every probe and node.
[[nodiscard]] NonsingularReport check_nonsingular_F(const NetworkModel& model, const std::vector<Vec>& probes);

struct ObservabilityReport {
    Mat gramian;
    double min_eig = 0.0;
    int window = 0;
    bool pass = false;
};

/// Σ_{h<N̄} Ψ_hᵀ Hᵀ R⁻¹ H Ψ_h with Ψ_0 = I and Ψ_h the product of
/// F + aπ_ii G along `trajectory` (the last point is reused when the
/// trajectory is shorter than the window).
[[nodiscard]] ObservabilityReport observability_gramian(const NetworkModel& model, NodeId i, int window,
                                                        const std::vector<Vec>& trajectory,
                                                        double kappa_min = 1e-6);

struct CouplingReport {
    double lhs = 0.0;  // max |Re λ(G)|
    double rhs = 0.0;  // (a+a²)^{-1/2} (N−1)⁻¹ π_m⁻¹, +inf when a, N−1 or π_m vanish
    bool pass = false;
    double singular_lhs = 0.0;   // ‖G‖₂, the singular-value reading
    bool readings_diverge = false;  // G non-normal and the two readings disagree on pass
};

[[nodiscard]] CouplingReport check_coupling_condition(const NetworkModel& model);

struct RiccatiReport {
    Mat breve_P;     // fixed point (last iterate when not converged)
    Mat HF;          // (I + (P̆⁻¹+2λ̄I)⁻¹ HᵀR̂⁻¹H)⁻¹ (F + aπ_ii G)
    int iterations = 0;
    bool converged = false;
    double lambda_bar = 0.0;
    double spectral_radius_HF = 0.0;
    std::vector<double> trace_history;
};

/// Iterates P̆ ← (1+a) Fa (P̆⁻¹ + HᵀR̂⁻¹H + 2λ̄I)⁻¹ Faᵀ + Q from P̆ = Q with Fa
/// frozen at `at` (ignored for linear dynamics).
[[nodiscard]] RiccatiReport steady_state_riccati(const NetworkModel& model, NodeId i, double lambda_bar,
                                                 const Vec& at, double tol = 1e-12, int max_iter = 10000);

struct BoundednessReport {
    double lhs = 0.0;  // max_i ‖HF_i‖₂
    double rhs = 0.0;
    bool pass = false;
};

[[nodiscard]] double boundedness_rhs(const NetworkModel& model, const AssumptionBounds& bounds);
[[nodiscard]] BoundednessReport check_error_boundedness(const NetworkModel& model, const AssumptionBounds& bounds,
                                    const std::vector<Mat>& HF);

struct TrajectorySample {
    std::vector<GlobalState> states;
    std::vector<UncertaintyDraw> draws;  // draws[t] acts on states[t]
};

struct UncertaintyBoundReport {
    double kappa_u = 0.0;
    bool pass = false;
};

/// κ_u = max ‖E1_i Δ1 x_i‖₂ over the sample; passes when finite and ≤ cap.
[[nodiscard]] UncertaintyBoundReport check_uncertainty_bound(const NetworkModel& model, const TrajectorySample& sample,
                                                  double cap = 1e6);

struct FeasibilityOptions {
    std::size_t probe_count = 10000;
    double probe_box = 5.0;
    std::uint64_t seed = 0;
    int window = 0;  // 0 → state dimension
    double kappa_min = 1e-6;
    double beta = 0.5;
    Vec linearization_point;  // empty → origin
    double riccati_tol = 1e-12;
    int riccati_max_iter = 10000;
    double kappa_u_cap = 1e6;
};

struct FeasibilityReport {
    AssumptionBounds bounds;
    NonsingularReport nonsingular;
    std::vector<ObservabilityReport> observability;
    CouplingReport coupling;
    std::vector<RiccatiReport> steady_state;
    BoundednessReport boundedness;
    std::optional<UncertaintyBoundReport> uncertainty_bound;
};

[[nodiscard]] FeasibilityReport run_feasibility(const NetworkModel& model, const FeasibilityOptions& options,
                                                const TrajectorySample* sample = nullptr);

[[nodiscard]] nlohmann::json to_json(const FeasibilityReport& report);

}  // namespace drls
