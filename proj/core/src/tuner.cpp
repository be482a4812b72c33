#include "drls/tuner.hpp"

#include "drls/estimator.hpp"
#include "drls/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace drls {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double z_scale(const NetworkModel& model, double pij) {
    const double a = model.a();
    return pij * pij * (a + a * a) * static_cast<double>(model.node_count() - 1);
}

double neighbor_pi_sum(const TunerContext& ctx) {
    double s = 0.0;
    for (const auto& nb : ctx.neighbors) {
        s += nb.pi;
    }
    return s;
}

// The own-node regularized problem at λ̄: Ā = H[Fa, I], Ŝ = diag(P⁻¹ + 2λ̄I, Q⁻¹),
// T̂ = R̂⁻¹, W = Ŝ + ĀᵀT̂Ā, c = Ē_aᵀĒ_b = [−x̂; 0].
struct OwnProblem {
    Mat A;
    Mat S;
    Mat T;
    Mat W;
    Eigen::LLT<Mat> W_llt;
    Vec c;
};

OwnProblem own_problem(const TunerContext& ctx, double lambda) {
    const NetworkModel& model = *ctx.model;
    const auto& p = model.node(ctx.i);
    const Eigen::Index n = model.state_dim();
    const Mat Fa = ctx.F + model.a() * model.pi(ctx.i, ctx.i) * model.G();

    OwnProblem op;
    op.A.resize(p.H.rows(), 2 * n);
    op.A << p.H * Fa, p.H;
    op.S = Mat::Zero(2 * n, 2 * n);
    op.S.topLeftCorner(n, n) = linalg::spd_inverse(ctx.P, "P") + 2.0 * lambda * Mat::Identity(n, n);
    op.S.bottomRightCorner(n, n) = linalg::spd_inverse(p.Q, "Q");
    op.T = linalg::spd_inverse(robust_r_hat(model, ctx.i, lambda), "R̂");
    op.W = linalg::symmetrize(op.S + op.A.transpose() * op.T * op.A);
    op.W_llt.compute(op.W);
    if (op.W_llt.info() != Eigen::Success) {
        throw NumericalError("regularized normal matrix is not positive definite");
    }
    op.c = Vec::Zero(2 * n);
    op.c.head(n) = -ctx.x_hat;
    return op;
}

Mat neighbor_z(const NetworkModel& model, NodeId i, double pij) {
    return z_scale(model, pij) * linalg::spd_inverse(model.node(i).R, "R");
}

double clamp_alpha(double alpha, bool has_neighbors) {
    if (!has_neighbors) {
        return 0.0;
    }
    return std::clamp(alpha, 0.0, kAlphaCeiling);
}

// Golden-section search for the minimum of a unimodal-ish function on [lo, hi].
template <class Fn>
double golden_section(Fn&& fn, double lo, double hi, int iterations) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo);
    double x2 = lo + r * (hi - lo);
    double f1 = fn(x1);
    double f2 = fn(x2);
    for (int it = 0; it < iterations; ++it) {
        if (f1 <= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = fn(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = fn(x2);
        }
    }
    return f1 <= f2 ? x1 : x2;
}

}  // namespace

void TunerConfig::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) {
        throw ConfigError("tuner.beta", "must be a finite number > 0");
    }
    if (alpha.kind == AlphaPolicyKind::fixed && !(alpha.value >= 0.0 && alpha.value <= 1.0)) {
        throw ConfigError("tuner.alpha.value", "fixed alpha must lie in [0, 1]");
    }
    if (lambda.kind == LambdaPolicyKind::fixed && !(lambda.value >= 0.0)) {
        throw ConfigError("tuner.lambda.value", "fixed lambda must be >= 0");
    }
    if (lambda_grid < 1) {
        throw ConfigError("tuner.grid.lambda_points", "must be >= 1");
    }
    if (!(lambda_span >= 1.0)) {
        throw ConfigError("tuner.grid.lambda_span", "must be >= 1");
    }
    if (alpha_grid < 2) {
        throw ConfigError("tuner.grid.alpha_points", "must be >= 2");
    }
    if (max_iterations < 0) {
        throw ConfigError("tuner.grid.max_iterations", "must be >= 0");
    }
}

double breve_lambda(const NetworkModel& model, NodeId i) {
    const auto& p = model.node(i);
    const Mat M = p.H * model.E(i);
    if (M.isZero(0.0)) {
        return 0.0;
    }
    const Mat R_inv = linalg::spd_inverse(p.R, "R");
    return linalg::spectral_norm(M.transpose() * R_inv * M) / (1.0 + model.a());
}

PhiTerms phi_terms(const TunerContext& ctx, double lambda_bar, PhiConvention convention) {
    const NetworkModel& model = *ctx.model;
    const OwnProblem op = own_problem(ctx, lambda_bar);
    const Vec g = op.A.transpose() * (op.T * ctx.b);
    const Vec W_inv_c = op.W_llt.solve(op.c);
    const Vec W_inv_g = op.W_llt.solve(g);

    const double lambda_coeff = convention == PhiConvention::consistent ? 1.0 : 2.0;
    const double cross_coeff = convention == PhiConvention::consistent ? 2.0 : 3.0;

    PhiTerms phi;
    phi.phi0 = lambda_bar * ctx.x_hat.squaredNorm() - lambda_coeff * lambda_bar * lambda_bar * op.c.dot(W_inv_c);
    phi.phi1 = -cross_coeff * lambda_bar * op.c.dot(W_inv_g);
    phi.phi2 = ctx.b.dot(op.T * ctx.b) - g.dot(W_inv_g);

    const double pi_sum = neighbor_pi_sum(ctx);
    const Mat HG = model.node(ctx.i).H * model.G();
    const Eigen::Index r = HG.rows();
    for (const auto& nb : ctx.neighbors) {
        const Mat Z = neighbor_z(model, ctx.i, nb.pi);
        const Mat inner = Mat::Identity(r, r) + HG * nb.P * HG.transpose() * Z;
        // bᵀ Z (I + HGPGᵀHᵀZ)⁻¹ b
        const double raw = (Z * ctx.b).dot(inner.partialPivLu().solve(ctx.b));
        phi.phi3_raw.push_back(raw);
    }
    if (!ctx.neighbors.empty() && pi_sum != 0.0) {
        const double norm = convention == PhiConvention::consistent ? pi_sum * pi_sum : pi_sum;
        for (double raw : phi.phi3_raw) {
            phi.phi3_sum += raw / norm;
        }
    }
    return phi;
}

AlphaChoice alpha_closed_form(const PhiTerms& phi) {
    AlphaChoice out;
    const double num = phi.phi1 + 2.0 * phi.phi2;
    const double den = 2.0 * phi.phi2 + 2.0 * phi.phi3_sum;
    const double scale = std::max({std::abs(num), std::abs(phi.phi2), std::abs(phi.phi3_sum), 1e-300});
    if (!std::isfinite(num) || !std::isfinite(den) || std::abs(den) <= 1e-14 * scale) {
        out.alpha = 0.0;
        out.phi_hat = 0.0;
        out.fallback = true;
        return out;
    }
    out.phi_hat = num / den;
    out.alpha = std::clamp(out.phi_hat, 0.0, 1.0);
    return out;
}

double j2_hat(const TunerContext& ctx, double lambda_bar, double alpha) {
    const NetworkModel& model = *ctx.model;
    if (!(lambda_bar >= 0.0) || !r_hat_certified(model, ctx.i, lambda_bar)) {
        return kInf;
    }
    const OwnProblem op = own_problem(ctx, lambda_bar);
    const Vec rhs = (1.0 - alpha) * (op.A.transpose() * (op.T * ctx.b)) + lambda_bar * op.c;
    const Vec eta = op.W_llt.solve(rhs);

    double j = lambda_bar * ctx.x_hat.squaredNorm() + eta.dot(op.S * eta) - 2.0 * lambda_bar * op.c.dot(eta);
    const Vec own_resid = op.A * eta - (1.0 - alpha) * ctx.b;
    j += own_resid.dot(op.T * own_resid);

    if (!ctx.neighbors.empty()) {
        const double pi_sum = neighbor_pi_sum(ctx);
        if (pi_sum == 0.0) {
            if (alpha == 0.0) {
                return j;
            }
            throw DegenerateNeighborhoodError("neighbor coupling strengths sum to zero");
        }
        const double alpha_hat = alpha / pi_sum;
        const Mat HG = model.node(ctx.i).H * model.G();
        for (const auto& nb : ctx.neighbors) {
            const Mat Z = neighbor_z(model, ctx.i, nb.pi);
            const Mat P_inv = linalg::spd_inverse(nb.P, "neighbor P");
            const Mat V = P_inv + HG.transpose() * Z * HG;
            const Vec e = alpha_hat * V.ldlt().solve(HG.transpose() * (Z * ctx.b));
            const Vec resid = HG * e - alpha_hat * ctx.b;
            j += e.dot(P_inv * e) + resid.dot(Z * resid);
        }
    }
    return j;
}

TunerResult joint_optimize(const TunerContext& ctx, const TunerConfig& config, std::optional<double> fixed_alpha) {
    const NetworkModel& model = *ctx.model;
    const bool has_neighbors = !ctx.neighbors.empty();
    const double lambda_min = min_feasible_lambda(model, ctx.i);
    if (!r_hat_certified(model, ctx.i, lambda_min)) {
        throw InfeasibleRobustificationError("no feasible lambda for node " + std::to_string(ctx.i + 1));
    }

    std::vector<double> lambdas;
    if (lambda_min == 0.0) {
        lambdas.push_back(0.0);
    } else {
        const int m = config.lambda_grid;
        for (int t = 0; t < m; ++t) {
            const double frac = m == 1 ? 0.0 : static_cast<double>(t) / (m - 1);
            lambdas.push_back(lambda_min * std::pow(config.lambda_span, frac));
        }
    }

    std::vector<double> alphas;
    if (fixed_alpha) {
        alphas.push_back(clamp_alpha(*fixed_alpha, has_neighbors));
    } else if (!has_neighbors) {
        alphas.push_back(0.0);
    } else {
        for (int t = 0; t < config.alpha_grid; ++t) {
            alphas.push_back(clamp_alpha(static_cast<double>(t) / (config.alpha_grid - 1), true));
        }
    }

    double best_l = lambdas.front();
    double best_a = alphas.front();
    double best_j = kInf;
    auto consider = [&](double l, double a) {
        const double j = j2_hat(ctx, l, a);
        if (j < best_j) {
            best_j = j;
            best_l = l;
            best_a = a;
        }
    };
    auto closed_alpha = [&](double l) {
        return clamp_alpha(alpha_closed_form(phi_terms(ctx, l)).alpha, has_neighbors);
    };

    // Candidate from the simple rule, lifted into the feasible region.
    double rule_l = (1.0 + config.beta) * breve_lambda(model, ctx.i);
    rule_l = std::max(rule_l, lambda_min);
    for (double l : lambdas) {
        for (double a : alphas) {
            consider(l, a);
        }
        if (!fixed_alpha && has_neighbors) {
            consider(l, closed_alpha(l));
        }
    }
    consider(rule_l, fixed_alpha ? alphas.front() : closed_alpha(rule_l));

    if (lambda_min > 0.0) {
        const double lo_bound = lambda_min;
        const double hi_bound = lambda_min * config.lambda_span;
        for (int it = 0; it < config.max_iterations; ++it) {
            const double before = best_j;
            if (!fixed_alpha && has_neighbors) {
                consider(best_l, closed_alpha(best_l));
            }
            // Bracket λ̄ between the neighboring grid points (in log scale).
            const double step = lambdas.size() > 1 ? std::log(lambdas[1] / lambdas[0]) : std::log(2.0);
            const double lo = std::max(std::log(lo_bound), std::log(best_l) - step);
            const double hi = std::min(std::log(std::max(hi_bound, rule_l)), std::log(best_l) + step);
            if (hi > lo) {
                const double a = best_a;
                const double l_star = std::exp(golden_section([&](double t) { return j2_hat(ctx, std::exp(t), a); },
                                                              lo, hi, 40));
                consider(std::max(l_star, lambda_min), a);
            }
            if (!(best_j < before - 1e-15 * std::abs(before))) {
                break;
            }
        }
    } else if (!fixed_alpha && has_neighbors) {
        consider(0.0, closed_alpha(0.0));
    }

    TunerResult res;
    res.lambda_bar = best_l;
    res.lambda_requested = best_l;
    res.alpha = best_a;
    res.j2 = best_j;
    res.alpha_forced_zero = !has_neighbors;
    return res;
}

TunerResult resolve_tuning(const TunerContext& ctx, const TunerConfig& config) {
    const NetworkModel& model = *ctx.model;
    const bool has_neighbors = !ctx.neighbors.empty();

    TunerResult res;
    std::optional<double> fixed_alpha;
    if (config.alpha.kind == AlphaPolicyKind::fixed) {
        fixed_alpha = config.alpha.value;
    }

    if (config.lambda.kind == LambdaPolicyKind::joint) {
        const TunerResult joint = joint_optimize(ctx, config, fixed_alpha);
        res.lambda_requested = joint.lambda_bar;
        res.lambda_bar = joint.lambda_bar;
        res.alpha = joint.alpha;
    } else {
        res.lambda_requested = config.lambda.kind == LambdaPolicyKind::inflated
                                   ? (1.0 + config.beta) * breve_lambda(model, ctx.i)
                                   : config.lambda.value;
        const RobustNoise noise = robustify_noise(model, ctx.i, res.lambda_requested);
        res.lambda_bar = noise.lambda_bar;
        res.doublings = noise.doublings;

        switch (config.alpha.kind) {
        case AlphaPolicyKind::fixed:
            res.alpha = config.alpha.value;
            break;
        case AlphaPolicyKind::closed_form: {
            const AlphaChoice choice = alpha_closed_form(phi_terms(ctx, res.lambda_bar, config.phi));
            res.alpha = choice.alpha;
            res.alpha_fallback = choice.fallback;
            break;
        }
        case AlphaPolicyKind::joint: {
            // λ̄ stays with its own policy; only α is taken from the search at that λ̄.
            double best_a = 0.0;
            double best_j = kInf;
            for (int t = 0; t < config.alpha_grid; ++t) {
                const double a = clamp_alpha(static_cast<double>(t) / (config.alpha_grid - 1), has_neighbors);
                const double j = j2_hat(ctx, res.lambda_bar, a);
                if (j < best_j) {
                    best_j = j;
                    best_a = a;
                }
            }
            const double a_cf = clamp_alpha(alpha_closed_form(phi_terms(ctx, res.lambda_bar)).alpha, has_neighbors);
            if (j2_hat(ctx, res.lambda_bar, a_cf) < best_j) {
                best_a = a_cf;
            }
            res.alpha = best_a;
            break;
        }
        }
    }

    if (config.alpha.kind == AlphaPolicyKind::closed_form && config.lambda.kind == LambdaPolicyKind::joint) {
        const AlphaChoice choice = alpha_closed_form(phi_terms(ctx, res.lambda_bar, config.phi));
        res.alpha = choice.alpha;
        res.alpha_fallback = choice.fallback;
    }

    if (!has_neighbors) {
        res.alpha_forced_zero = true;
        res.alpha = 0.0;
    } else if (res.alpha >= 1.0) {
        res.alpha = kAlphaCeiling;
        res.alpha_clamped = true;
    }
    res.j2 = j2_hat(ctx, res.lambda_bar, res.alpha);
    return res;
}

}  // namespace drls
