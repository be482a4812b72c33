#include "drls/estimator.hpp"

#include "drls/linalg.hpp"

#include <cmath>
#include <string>

namespace drls {

namespace {

constexpr int kMaxDoublings = 60;

double certification_margin(const NetworkModel& model, NodeId i) {
    return 1e-10 * linalg::spectral_norm(model.node(i).R);
}

Mat z_matrix(const NetworkModel& model, NodeId i, NodeId j) {
    const double a = model.a();
    const double N = static_cast<double>(model.node_count());
    const double pij = model.pi(i, j);
    return pij * pij * (a + a * a) * (N - 1.0) * linalg::spd_inverse(model.node(i).R, "R");
}

Vec prior_mean(const NetworkModel& model, const NodeBelief& belief, std::span<const InfoPackage> neighbors) {
    const NodeId i = belief.id;
    Vec coupling = Vec::Zero(model.state_dim());
    for (NodeId j : model.neighborhood(i)) {
        const Vec& xj = (j == i) ? belief.x_hat : package_for(neighbors, j).x_hat;
        coupling += model.pi(i, j) * xj;
    }
    return model.nominal().eval(belief.x_hat) + model.a() * (model.G() * coupling);
}

// (P_j⁻¹ + Gᵀ Hᵀ Z H G)⁻¹ for a proper neighbor j.
Mat neighbor_inner_inverse(const NetworkModel& model, NodeId i, const Mat& Pj, const Mat& Z) {
    const Mat HG = model.node(i).H * model.G();
    return woodbury_inverse(linalg::spd_inverse(Pj, "neighbor P"), HG, Z);
}

}  // namespace

Mat woodbury_inverse(const Mat& P, const Mat& S, const Mat& Q) {
    const Mat P_inv = linalg::inverse(P, "P in (P + SᵀQS)⁻¹");
    const Mat Q_inv = linalg::inverse(Q, "Q in (P + SᵀQS)⁻¹");
    const Mat inner = Q_inv + S * P_inv * S.transpose();
    const Mat inner_inv = linalg::inverse(inner, "Q⁻¹ + S P⁻¹ Sᵀ");
    return P_inv - P_inv * S.transpose() * inner_inv * S * P_inv;
}

const InfoPackage& package_for(std::span<const InfoPackage> packages, NodeId j) {
    for (const auto& p : packages) {
        if (p.sender == j) {
            return p;
        }
    }
    throw ProtocolError("missing package from node " + std::to_string(j + 1));
}

Prediction predict(const NetworkModel& model, const NodeBelief& belief, std::span<const InfoPackage> neighbors,
                   double lambda_bar, double alpha) {
    if (!(alpha < 1.0)) {
        throw DegenerateAlphaError("alpha = " + std::to_string(alpha) + " leaves the shifted prior undefined");
    }
    const NodeId i = belief.id;
    Prediction out;
    out.F = model.nominal().jacobian(belief.x_hat);
    out.x_bar = prior_mean(model, belief, neighbors);
    const Mat Fa = out.F + model.a() * model.pi(i, i) * model.G();
    out.x_bar_u = out.x_bar - lambda_bar * (Fa * (belief.P * belief.x_hat)) / (1.0 - alpha);
    return out;
}

Mat propagate_priori_cov(const NetworkModel& model, NodeId i, const Mat& P, const Mat& F) {
    const Mat Fa = F + model.a() * model.pi(i, i) * model.G();
    return linalg::symmetrize(Fa * P * Fa.transpose() + model.node(i).Q);
}

Mat robust_r_hat(const NetworkModel& model, NodeId i, double lambda_bar) {
    const auto& p = model.node(i);
    Mat r_hat = p.R / (1.0 + model.a());
    const Mat M = p.H * model.E(i);
    if (!M.isZero(0.0)) {
        r_hat -= (M * M.transpose()) / lambda_bar;
    }
    return linalg::symmetrize(r_hat);
}

bool r_hat_certified(const NetworkModel& model, NodeId i, double lambda_bar) {
    const Mat M = model.node(i).H * model.E(i);
    if (!M.isZero(0.0) && !(lambda_bar > 0.0)) {
        return false;
    }
    const Mat r_hat = robust_r_hat(model, i, lambda_bar);
    if (!r_hat.allFinite()) {
        return false;
    }
    return linalg::min_eigenvalue(r_hat) - certification_margin(model, i) >= 0.0;
}

double min_feasible_lambda(const NetworkModel& model, NodeId i) {
    const auto& p = model.node(i);
    const Mat M = p.H * model.E(i);
    if (M.isZero(0.0)) {
        return 0.0;
    }
    const Eigen::Index r = p.R.rows();
    const Mat C = p.R / (1.0 + model.a()) - certification_margin(model, i) * Mat::Identity(r, r);
    const Mat L = linalg::cholesky_factor(C, "(1+a)⁻¹R − εI");
    const Mat X = L.triangularView<Eigen::Lower>().solve(M);
    double lambda = linalg::spectral_norm(X);
    lambda *= lambda;
    lambda *= 1.0 + 1e-9;
    for (int bump = 0; bump < 8 && !r_hat_certified(model, i, lambda); ++bump) {
        lambda *= 1.0 + 1e-6;
    }
    return lambda;
}

RobustNoise robustify_noise(const NetworkModel& model, NodeId i, double lambda_bar) {
    RobustNoise out;
    out.lambda_requested = lambda_bar;
    const Mat M = model.node(i).H * model.E(i);
    double lambda = lambda_bar;
    if (!M.isZero(0.0)) {
        if (!(lambda > 0.0)) {
            // Doubling needs a positive seed; λ̆ is the natural scale.
            const Mat R_inv = linalg::spd_inverse(model.node(i).R, "R");
            lambda = linalg::spectral_norm(M.transpose() * R_inv * M) / (1.0 + model.a());
        }
        while (!r_hat_certified(model, i, lambda)) {
            if (out.doublings >= kMaxDoublings) {
                throw InfeasibleRobustificationError("R̂ of node " + std::to_string(i + 1) +
                                                     " not positive definite after " +
                                                     std::to_string(kMaxDoublings) + " doublings of lambda");
            }
            lambda *= 2.0;
            ++out.doublings;
        }
    } else if (!(lambda >= 0.0)) {
        lambda = 0.0;
    }
    out.lambda_bar = lambda;
    out.R_hat = robust_r_hat(model, i, lambda);
    if (model.a() > 0.0) {
        for (NodeId j : model.proper_neighbors(i)) {
            out.Z.emplace(j, z_matrix(model, i, j));
        }
    } else {
        const auto r = model.meas_dim(i);
        for (NodeId j : model.proper_neighbors(i)) {
            out.Z.emplace(j, Mat::Zero(r, r));
        }
    }
    return out;
}

Gains compute_gains(const NetworkModel& model, NodeId i, const Mat& breve_P, const RobustNoise& noise,
                    std::span<const InfoPackage> neighbors) {
    const auto& p = model.node(i);
    const Eigen::Index n = model.state_dim();
    const Mat R_hat_inv = linalg::spd_inverse(noise.R_hat, "R̂");
    const Mat prior_info =
        linalg::spd_inverse(breve_P, "P̆") + 2.0 * noise.lambda_bar * Mat::Identity(n, n);

    Gains g;
    g.info_inverse = linalg::symmetrize(woodbury_inverse(prior_info, p.H, R_hat_inv));
    g.K1 = g.info_inverse * p.H.transpose() * R_hat_inv;

    const Mat HG = p.H * model.G();
    for (NodeId j : model.proper_neighbors(i)) {
        if (model.a() == 0.0) {
            g.K2.emplace(j, Mat::Zero(n, p.H.rows()));
            continue;
        }
        const Mat& Z = noise.Z.at(j);
        const Mat inner = neighbor_inner_inverse(model, i, package_for(neighbors, j).P, Z);
        g.K2.emplace(j, model.a() * model.pi(i, j) * model.G() * inner * HG.transpose() * Z);
    }
    return g;
}

Mat update_covariance(const NetworkModel& model, NodeId i, const Mat& breve_P, const RobustNoise& noise,
                      std::span<const InfoPackage> neighbors, long step) {
    const auto& p = model.node(i);
    const Eigen::Index n = model.state_dim();
    const double a = model.a();
    const Mat R_hat_inv = linalg::spd_inverse(noise.R_hat, "R̂");
    const Mat prior_info =
        linalg::spd_inverse(breve_P, "P̆") + 2.0 * noise.lambda_bar * Mat::Identity(n, n);
    Mat P = (1.0 + a) * woodbury_inverse(prior_info, p.H, R_hat_inv);

    if (a > 0.0) {
        const double scale = (a + a * a) * static_cast<double>(model.node_count() - 1);
        const Mat& G = model.G();
        for (NodeId j : model.proper_neighbors(i)) {
            const double pij = model.pi(i, j);
            const Mat inner = neighbor_inner_inverse(model, i, package_for(neighbors, j).P, noise.Z.at(j));
            P += scale * pij * pij * G * inner * G.transpose();
        }
    }
    P = linalg::symmetrize(P);
    if (!linalg::is_spd(P)) {
        throw CovarianceCollapseError("P of node " + std::to_string(i + 1) + " lost positive definiteness", step);
    }
    return P;
}

NodeBelief correct(const NetworkModel& model, const NodeBelief& belief, const Prediction& prediction,
                   const Gains& gains, const Vec& y, double alpha) {
    const NodeId i = belief.id;
    const Mat& H = model.node(i).H;
    const Vec b = y - H * prediction.x_bar;
    const Vec b_u = y - H * prediction.x_bar_u;

    Vec x = (1.0 - alpha) * (prediction.x_bar_u + gains.K1 * b_u) + alpha * prediction.x_bar;

    const auto proper = model.proper_neighbors(i);
    if (!proper.empty() && alpha != 0.0) {
        const double pi_sum = model.proper_pi_sum(i);
        if (pi_sum == 0.0) {
            throw DegenerateNeighborhoodError("node " + std::to_string(i + 1) +
                                              " has neighbors whose coupling strengths sum to zero");
        }
        for (NodeId j : proper) {
            x += alpha * (gains.K2.at(j) * b) / pi_sum;
        }
    }

    NodeBelief out;
    out.id = i;
    out.k = belief.k + 1;
    out.x_hat = std::move(x);
    out.P = belief.P;
    return out;
}

NodeStepResult node_step(const NetworkModel& model, const NodeBelief& belief, std::span<const InfoPackage> neighbors,
                         const Vec& y, const TunerConfig& tuner) {
    const NodeId i = belief.id;
    const long next_step = belief.k + 1;

    TunerContext ctx;
    ctx.model = &model;
    ctx.i = i;
    ctx.x_hat = belief.x_hat;
    ctx.P = belief.P;
    ctx.F = model.nominal().jacobian(belief.x_hat);
    ctx.b = y - model.node(i).H * prior_mean(model, belief, neighbors);
    for (NodeId j : model.proper_neighbors(i)) {
        ctx.neighbors.push_back({j, model.pi(i, j), package_for(neighbors, j).P});
    }
    const TunerResult tuning = resolve_tuning(ctx, tuner);

    const RobustNoise noise = robustify_noise(model, i, tuning.lambda_bar);
    const Prediction pred = predict(model, belief, neighbors, noise.lambda_bar, tuning.alpha);
    const Mat breve_P = propagate_priori_cov(model, i, belief.P, pred.F);
    const Gains gains = compute_gains(model, i, breve_P, noise, neighbors);
    const Mat P_next = update_covariance(model, i, breve_P, noise, neighbors, next_step);

    NodeStepResult out;
    out.belief = correct(model, belief, pred, gains, y, tuning.alpha);
    out.belief.P = P_next;
    if (!out.belief.x_hat.allFinite()) {
        throw SimulationDivergenceError("non-finite estimate at node " + std::to_string(i + 1), next_step);
    }

    auto& im = out.intermediates;
    im.x_bar = pred.x_bar;
    im.x_bar_u = pred.x_bar_u;
    im.breve_P = breve_P;
    im.R_hat = noise.R_hat;
    im.Z = noise.Z;
    im.K1 = gains.K1;
    im.K2 = gains.K2;
    im.b = y - model.node(i).H * pred.x_bar;
    im.b_u = y - model.node(i).H * pred.x_bar_u;
    im.F = pred.F;
    im.tuning = tuning;
    im.tuning.lambda_bar = noise.lambda_bar;
    im.tuning.doublings += noise.doublings;
    return out;
}

NodeBelief initial_belief(const NetworkModel& model, NodeId i, Vec x_hat0, const Mat& breve_P0, double beta) {
    const auto& p = model.node(i);
    const Mat M = p.H * model.E(i);
    const Mat R_inv = linalg::spd_inverse(p.R, "R");
    const double lambda0 = (1.0 + beta) * linalg::spectral_norm(M.transpose() * R_inv * M);
    const RobustNoise noise = robustify_noise(model, i, lambda0);
    const Mat R_hat_inv = linalg::spd_inverse(noise.R_hat, "R̂₀");

    NodeBelief b;
    b.id = i;
    b.k = 0;
    b.x_hat = std::move(x_hat0);
    b.P = linalg::symmetrize(woodbury_inverse(linalg::spd_inverse(breve_P0, "P̆₀"), p.H, R_hat_inv));
    return b;
}

InfoPackage make_package(const NodeBelief& belief) {
    return InfoPackage{belief.id, belief.k, belief.x_hat, belief.P};
}

}  // namespace drls
