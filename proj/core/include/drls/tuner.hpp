#pragma once

// Resolution of the two free scalars of the distributed estimator at each
// node and step: the regularization weight λ̄ and the regulatory indicator α
// that splits the innovation between a node's own correction and its
// neighbors'.
//
// Ĵ₂(λ̄, α) is the decoupled worst-case cost evaluated at its minimizers
// (η̄ᵒᵖᵗ for the node's own error/noise pair, e_ijᵒᵖᵗ per neighbor). At fixed λ̄
// it is a parabola in α whose coefficients are the Φ terms below.

#include "drls/net_model.hpp"
#include "drls/types.hpp"

#include <optional>
#include <vector>

namespace drls {

enum class AlphaPolicyKind { fixed, closed_form, joint };
enum class LambdaPolicyKind { inflated, fixed, joint };

/// How Φ⁰ and Φ¹ are scaled and how Φ³ is normalized.
///  - consistent: coefficients that make Ĵ₂(α) = α²(Φ²+ΣΦ³) − α(Φ¹+2Φ²) +
///    (Φ⁰+Φ¹+Φ²) hold exactly (−λ̄², −2λ̄, and (Σπ)² normalization).
///  - printed: −2λ̄², −3λ̄ and Σπ normalization, as commonly quoted.
enum class PhiConvention { consistent, printed };

struct AlphaPolicy {
    AlphaPolicyKind kind = AlphaPolicyKind::fixed;
    double value = 0.1;  // used by `fixed`
};

struct LambdaPolicy {
    LambdaPolicyKind kind = LambdaPolicyKind::inflated;
    double value = 0.0;  // used by `fixed`
};

struct TunerConfig {
    double beta = 0.5;
    AlphaPolicy alpha;
    LambdaPolicy lambda;
    PhiConvention phi = PhiConvention::consistent;
    int lambda_grid = 13;     // log-spaced points on [λ_min, span·λ_min]
    double lambda_span = 64.0;
    int alpha_grid = 101;     // uniform points on [0, 1]
    int max_iterations = 20;  // coordinate-descent sweeps

    /// Throws ConfigError on out-of-range fields.
    void validate() const;
};

struct NeighborCov {
    NodeId j = 0;
    double pi = 0.0;
    Mat P;
};

/// Everything the tuner needs about node i at step k.
struct TunerContext {
    const NetworkModel* model = nullptr;
    NodeId i = 0;
    Vec x_hat;  // x̂_{k,i}
    Mat P;      // P_{k,i}
    Mat F;      // Jacobian of f̂ at x̂_{k,i}
    Vec b;      // innovation y_{k+1,i} − H_i x̄_{k+1,i}
    std::vector<NeighborCov> neighbors;  // proper neighbors only
};

struct PhiTerms {
    double phi0 = 0.0;
    double phi1 = 0.0;
    double phi2 = 0.0;
    double phi3_sum = 0.0;
    std::vector<double> phi3_raw;  // per neighbor, before the Σπ normalization
};

struct AlphaChoice {
    double alpha = 0.0;
    double phi_hat = 0.0;
    bool fallback = false;  // zero denominator; α fell back to 0
};

struct TunerResult {
    double lambda_bar = 0.0;
    double alpha = 0.0;
    double j2 = 0.0;            // Ĵ₂ at the result (NaN when not evaluated)
    double lambda_requested = 0.0;
    int doublings = 0;          // escalation steps applied to λ̄
    bool alpha_fallback = false;
    bool alpha_forced_zero = false;  // node has no proper neighbors
    bool alpha_clamped = false;      // α = 1 pulled back below 1

    [[nodiscard]] bool escalated() const noexcept { return doublings > 0; }
};

/// λ̆ = (1+a)⁻¹ σ_max(Eᵀ Hᵀ R⁻¹ H E), E = [E1, E2].
[[nodiscard]] double breve_lambda(const NetworkModel& model, NodeId i);

[[nodiscard]] PhiTerms phi_terms(const TunerContext& ctx, double lambda_bar,
                                 PhiConvention convention = PhiConvention::consistent);

/// Φ̂ = (Φ¹ + 2Φ²) / (2Φ² + 2ΣΦ³), clamped to [0, 1].
[[nodiscard]] AlphaChoice alpha_closed_form(const PhiTerms& phi);

/// Ĵ₂ by direct substitution of the regularized minimizers. Returns +inf
/// when λ̄ does not certify R̂ ≻ 0.
[[nodiscard]] double j2_hat(const TunerContext& ctx, double lambda_bar, double alpha);

/// Grid search over λ̄ ∈ [λ_min, span·λ_min] × α ∈ [0, 1] refined by
/// coordinate descent. α is held at `fixed_alpha` when given.
[[nodiscard]] TunerResult joint_optimize(const TunerContext& ctx, const TunerConfig& config,
                                         std::optional<double> fixed_alpha = std::nullopt);

/// Applies the configured policies, including λ̄ escalation and the
/// isolated-node / α = 1 guards.
[[nodiscard]] TunerResult resolve_tuning(const TunerContext& ctx, const TunerConfig& config);

/// Largest α the estimator accepts when neighbors are present.
inline constexpr double kAlphaCeiling = 1.0 - 1e-6;

}  // namespace drls
