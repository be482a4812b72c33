#include "drls/baselines.hpp"

#include "drls/linalg.hpp"

#include <string>

namespace drls {

namespace {

constexpr int kMaxDoublings = 60;

bool t_hat_certified(const CentralizedProblem& p, double lambda) {
    if (p.M.isZero(0.0)) {
        return true;
    }
    if (!(lambda > 0.0)) {
        return false;
    }
    const Mat D = p.R - p.M * p.M.transpose() / lambda;
    return linalg::min_eigenvalue(D) - 1e-10 * linalg::spectral_norm(p.R) >= 0.0;
}

}  // namespace

CentralizedProblem assemble_centralized(const NetworkModel& model, NodeId i, const std::vector<NodeBelief>& beliefs,
                                        const Vec& y) {
    const std::size_t N = model.node_count();
    const Eigen::Index n = model.state_dim();
    const auto& p = model.node(i);
    if (beliefs.size() != N) {
        throw ConfigError("beliefs", "expected one belief per node");
    }
    const auto ni = static_cast<Eigen::Index>(i);
    const Eigen::Index width = static_cast<Eigen::Index>(N + 1) * n;

    CentralizedProblem cp;
    cp.i = i;
    cp.C = Mat::Zero(n, width);
    Vec coupling = Vec::Zero(n);
    for (NodeId j = 0; j < N; ++j) {
        const auto nj = static_cast<Eigen::Index>(j);
        cp.C.block(0, nj * n, n, n) = model.a() * model.pi(i, j) * model.G();
        coupling += model.pi(i, j) * beliefs[j].x_hat;
    }
    const Vec& xi = beliefs[i].x_hat;
    cp.C.block(0, ni * n, n, n) += model.nominal().jacobian(xi);
    cp.C.block(0, static_cast<Eigen::Index>(N) * n, n, n) = Mat::Identity(n, n);
    cp.A = p.H * cp.C;

    std::vector<Mat> blocks;
    for (NodeId j = 0; j < N; ++j) {
        blocks.push_back(linalg::spd_inverse(beliefs[j].P, "P_j"));
    }
    blocks.push_back(linalg::spd_inverse(p.Q, "Q"));
    cp.S = linalg::block_diag(blocks);

    cp.M = p.H * model.E(i);
    cp.R = p.R;
    Mat select = Mat::Zero(n, width);
    select.block(0, ni * n, n, n) = Mat::Identity(n, n);
    cp.E_a.resize(2 * n, width);
    cp.E_a << select, select;
    cp.E_b = Vec::Zero(2 * n);
    cp.E_b.head(n) = -xi;

    cp.x_bar = model.nominal().eval(xi) + model.a() * (model.G() * coupling);
    cp.b = y - p.H * cp.x_bar;
    return cp;
}

double centralized_lambda(const CentralizedProblem& problem, double beta) {
    if (problem.M.isZero(0.0)) {
        return 0.0;
    }
    const Mat R_inv = linalg::spd_inverse(problem.R, "R");
    double lambda = (1.0 + beta) * linalg::spectral_norm(problem.M.transpose() * R_inv * problem.M);
    for (int d = 0; !t_hat_certified(problem, lambda); ++d) {
        if (d >= kMaxDoublings) {
            throw InfeasibleRobustificationError("centralized weight could not be made positive definite");
        }
        lambda *= 2.0;
    }
    return lambda;
}

Mat centralized_t_hat(const CentralizedProblem& problem, double lambda_hat) {
    if (!t_hat_certified(problem, lambda_hat)) {
        throw InfeasibleRobustificationError("R − MMᵀ/λ̂ is not positive definite");
    }
    Mat D = problem.R;
    if (!problem.M.isZero(0.0)) {
        D -= problem.M * problem.M.transpose() / lambda_hat;
    }
    return linalg::spd_inverse(D, "R − MMᵀ/λ̂");
}

namespace {

Mat centralized_normal_matrix(const CentralizedProblem& p, const Mat& T_hat, double lambda_hat) {
    const Mat S_hat = p.S + lambda_hat * p.E_a.transpose() * p.E_a;
    return linalg::symmetrize(S_hat + p.A.transpose() * T_hat * p.A);
}

}  // namespace

Vec centralized_eta_opt(const CentralizedProblem& problem, double lambda_hat) {
    const Mat T_hat = centralized_t_hat(problem, lambda_hat);
    const Mat W = centralized_normal_matrix(problem, T_hat, lambda_hat);
    const Vec rhs = problem.A.transpose() * (T_hat * problem.b) + lambda_hat * (problem.E_a.transpose() * problem.E_b);
    Eigen::LLT<Mat> llt(W);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("centralized normal matrix is not positive definite");
    }
    return llt.solve(rhs);
}

std::vector<NodeBelief> centralized_step(const NetworkModel& model, const std::vector<NodeBelief>& beliefs,
                                         const std::vector<Vec>& measurements, double beta) {
    std::vector<NodeBelief> out;
    out.reserve(beliefs.size());
    for (NodeId i = 0; i < model.node_count(); ++i) {
        const CentralizedProblem cp = assemble_centralized(model, i, beliefs, measurements.at(i));
        const double lambda = centralized_lambda(cp, beta);
        const Mat T_hat = centralized_t_hat(cp, lambda);
        const Mat W = centralized_normal_matrix(cp, T_hat, lambda);
        const Mat W_inv = linalg::spd_inverse(W, "centralized normal matrix");
        const Vec eta = W_inv * (cp.A.transpose() * (T_hat * cp.b) + lambda * (cp.E_a.transpose() * cp.E_b));

        NodeBelief nb;
        nb.id = i;
        nb.k = beliefs[i].k + 1;
        nb.x_hat = cp.x_bar + cp.C * eta;
        nb.P = linalg::symmetrize(cp.C * W_inv * cp.C.transpose());
        if (!nb.x_hat.allFinite()) {
            throw SimulationDivergenceError("non-finite centralized estimate at node " + std::to_string(i + 1), nb.k);
        }
        if (!linalg::is_spd(nb.P)) {
            throw CovarianceCollapseError("centralized P of node " + std::to_string(i + 1) + " is not PD", nb.k);
        }
        out.push_back(std::move(nb));
    }
    return out;
}

StackedBelief stack_beliefs(const std::vector<Vec>& x_hat, const Mat& P_node) {
    const Eigen::Index n = P_node.rows();
    const auto N = static_cast<Eigen::Index>(x_hat.size());
    StackedBelief s;
    s.x_hat.resize(N * n);
    s.P = Mat::Zero(N * n, N * n);
    for (Eigen::Index i = 0; i < N; ++i) {
        s.x_hat.segment(i * n, n) = x_hat[static_cast<std::size_t>(i)];
        s.P.block(i * n, i * n, n, n) = P_node;
    }
    return s;
}

Vec node_slice(const StackedBelief& s, NodeId i, Eigen::Index n) {
    return s.x_hat.segment(static_cast<Eigen::Index>(i) * n, n);
}

StackedBelief augmented_ekf_step(const NetworkModel& model, const StackedBelief& belief,
                                 const std::vector<Vec>& measurements) {
    const std::size_t N = model.node_count();
    const Eigen::Index n = model.state_dim();
    const auto Nn = static_cast<Eigen::Index>(N) * n;
    const Mat& G = model.G();
    const double a = model.a();

    Vec x_pred(Nn);
    Mat J = Mat::Zero(Nn, Nn);
    std::vector<Mat> Qs;
    std::vector<Mat> Hs;
    std::vector<Mat> Rs;
    for (NodeId i = 0; i < N; ++i) {
        const auto ii = static_cast<Eigen::Index>(i) * n;
        const Vec xi = belief.x_hat.segment(ii, n);
        Vec xi_next = model.nominal().eval(xi);
        J.block(ii, ii, n, n) = model.nominal().jacobian(xi);
        for (NodeId j = 0; j < N; ++j) {
            const double pij = model.pi(i, j);
            if (pij == 0.0) {
                continue;
            }
            const auto jj = static_cast<Eigen::Index>(j) * n;
            xi_next += a * pij * (G * belief.x_hat.segment(jj, n));
            J.block(ii, jj, n, n) += a * pij * G;
        }
        x_pred.segment(ii, n) = xi_next;
        Qs.push_back(model.node(i).Q);
        Hs.push_back(model.node(i).H);
        Rs.push_back(model.node(i).R);
    }
    const Mat Q = linalg::block_diag(Qs);
    const Mat H = linalg::block_diag(Hs);
    const Mat R = linalg::block_diag(Rs);
    const Mat P_pred = linalg::symmetrize(J * belief.P * J.transpose() + Q);

    Vec y(H.rows());
    Eigen::Index off = 0;
    for (NodeId i = 0; i < N; ++i) {
        const Vec& yi = measurements.at(i);
        y.segment(off, yi.size()) = yi;
        off += yi.size();
    }

    const Mat S = linalg::symmetrize(H * P_pred * H.transpose() + R);
    const Mat K = P_pred * H.transpose() * linalg::spd_inverse(S, "innovation covariance");
    const Mat I_KH = Mat::Identity(Nn, Nn) - K * H;

    StackedBelief out;
    out.k = belief.k + 1;
    out.x_hat = x_pred + K * (y - H * x_pred);
    out.P = linalg::symmetrize(I_KH * P_pred * I_KH.transpose() + K * R * K.transpose());
    if (!out.x_hat.allFinite()) {
        throw SimulationDivergenceError("non-finite EKF estimate", out.k);
    }
    if (!linalg::is_spd(out.P)) {
        throw CovarianceCollapseError("EKF covariance lost positive definiteness", out.k);
    }
    return out;
}

}  // namespace drls
