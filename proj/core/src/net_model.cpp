#include "drls/net_model.hpp"

#include "drls/linalg.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace drls {

namespace {

std::string node_path(const char* field, std::size_t i) {
    return std::string("model.") + field + "[" + std::to_string(i) + "]";
}

void require_dims(const Mat& m, Eigen::Index rows, Eigen::Index cols, const std::string& path) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << "expected " << rows << "x" << cols << ", got " << m.rows() << "x" << m.cols();
        throw ConfigError(path, os.str());
    }
}

}  // namespace

Dynamics Dynamics::sine(double omega) {
    Dynamics d;
    d.kind_ = Kind::sine;
    d.omega_ = omega;
    return d;
}

Dynamics Dynamics::linear(Mat a) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw ConfigError("dynamics.A", "must be a non-empty square matrix");
    }
    Dynamics d;
    d.kind_ = Kind::linear;
    d.a_ = std::move(a);
    return d;
}

Eigen::Index Dynamics::dim() const noexcept { return kind_ == Kind::sine ? 2 : a_.rows(); }

Vec Dynamics::eval(const Vec& x) const {
    if (x.size() != dim()) {
        throw ConfigError("dynamics", "state dimension mismatch");
    }
    if (kind_ == Kind::linear) {
        return a_ * x;
    }
    Vec out(2);
    out(0) = 0.9 * x(0) + std::sin(omega_ * x(1));
    out(1) = 0.9 * x(1) - std::sin(omega_ * x(0));
    return out;
}

Mat Dynamics::jacobian(const Vec& x) const {
    if (x.size() != dim()) {
        throw ConfigError("dynamics", "state dimension mismatch");
    }
    if (kind_ == Kind::linear) {
        return a_;
    }
    Mat j(2, 2);
    j << 0.9, omega_ * std::cos(omega_ * x(1)),
        -omega_ * std::cos(omega_ * x(0)), 0.9;
    return j;
}

std::string Dynamics::describe() const {
    std::ostringstream os;
    if (kind_ == Kind::sine) {
        os << "sine(omega=" << omega_ << ")";
    } else {
        os << "linear(" << a_.rows() << "x" << a_.cols() << ")";
    }
    return os.str();
}

NetworkModel::NetworkModel(double a, Mat pi, Mat g, Dynamics nominal, std::vector<NodeParams> nodes,
                           std::optional<Dynamics> truth)
    : a_(a), pi_(std::move(pi)), g_(std::move(g)), nominal_(std::move(nominal)), truth_(std::move(truth)),
      nodes_(std::move(nodes)) {
    const auto N = static_cast<Eigen::Index>(nodes_.size());
    if (N == 0) {
        throw ConfigError("model.nodes", "at least one node is required");
    }
    if (!(a_ >= 0.0) || !std::isfinite(a_)) {
        throw ConfigError("model.coupling.a", "must be finite and non-negative");
    }
    const Eigen::Index n = g_.rows();
    if (n == 0) {
        throw ConfigError("model.coupling.G", "must be non-empty");
    }
    require_dims(g_, n, n, "model.coupling.G");
    require_dims(pi_, N, N, "model.coupling.pi");
    if (!pi_.allFinite() || !g_.allFinite()) {
        throw ConfigError("model.coupling", "non-finite entry");
    }
    if (nominal_.dim() != n) {
        throw ConfigError("model.dynamics", "dimension does not match G");
    }
    if (truth_ && truth_->dim() != n) {
        throw ConfigError("model.truth_dynamics", "dimension does not match G");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        auto& p = nodes_[i];
        if (p.H.cols() != n || p.H.rows() == 0) {
            throw ConfigError(node_path("H", i), "must have " + std::to_string(n) + " columns");
        }
        require_dims(p.Q, n, n, node_path("Q", i));
        require_dims(p.R, p.H.rows(), p.H.rows(), node_path("R", i));
        if (p.E1.size() == 0) {
            p.E1 = Mat::Zero(n, n);
        }
        if (p.E2.size() == 0) {
            p.E2 = Mat::Zero(n, n);
        }
        if (p.E1.rows() != n) {
            throw ConfigError(node_path("E1", i), "must have " + std::to_string(n) + " rows");
        }
        if (p.E2.rows() != n) {
            throw ConfigError(node_path("E2", i), "must have " + std::to_string(n) + " rows");
        }
        if ((p.Q - p.Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 || !linalg::is_spd(p.Q)) {
            throw ConfigError(node_path("Q", i), "must be symmetric positive definite");
        }
        if ((p.R - p.R.transpose()).cwiseAbs().maxCoeff() > 1e-12 || !linalg::is_spd(p.R)) {
            throw ConfigError(node_path("R", i), "must be symmetric positive definite");
        }
        p.Q_chol = linalg::cholesky_factor(p.Q, "Q");
        p.R_chol = linalg::cholesky_factor(p.R, "R");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!proper_neighbors(i).empty() && proper_pi_sum(i) < 0.0) {
            throw ConfigError("model.coupling.pi[" + std::to_string(i) + "]",
                              "sum of off-diagonal coupling strengths is negative");
        }
    }
}

Mat NetworkModel::E(NodeId i) const {
    const auto& p = node(i);
    Mat e(state_dim(), p.E1.cols() + p.E2.cols());
    e << p.E1, p.E2;
    return e;
}

std::vector<NodeId> NetworkModel::neighborhood(NodeId i) const {
    std::vector<NodeId> out;
    for (NodeId j = 0; j < node_count(); ++j) {
        if (j == i || pi(i, j) != 0.0) {
            out.push_back(j);
        }
    }
    return out;
}

std::vector<NodeId> NetworkModel::proper_neighbors(NodeId i) const {
    std::vector<NodeId> out;
    for (NodeId j = 0; j < node_count(); ++j) {
        if (j != i && pi(i, j) != 0.0) {
            out.push_back(j);
        }
    }
    return out;
}

double NetworkModel::proper_pi_sum(NodeId i) const {
    double s = 0.0;
    for (NodeId j : proper_neighbors(i)) {
        s += pi(i, j);
    }
    return s;
}

double NetworkModel::pi_max() const { return pi_.maxCoeff(); }

Mat NetworkModel::coupled_jacobian(NodeId i, const Vec& x) const {
    return nominal_.jacobian(x) + a_ * pi(i, i) * g_;
}

NetworkModel NetworkModel::with_nominal(Dynamics nominal) const {
    return NetworkModel(a_, pi_, g_, std::move(nominal), nodes_, truth_);
}

Vec eval_nominal_f(const NetworkModel& model, const Vec& x) {
    if (x.size() != model.state_dim()) {
        throw ConfigError("x", "state dimension mismatch");
    }
    return model.nominal().eval(x);
}

Mat eval_jacobian_F(const NetworkModel& model, const Vec& x) {
    if (x.size() != model.state_dim()) {
        throw ConfigError("x", "state dimension mismatch");
    }
    return model.nominal().jacobian(x);
}

void validate_uncertainty(const NetworkModel& model, const UncertaintySpec& spec) {
    if (spec.mode != UncertaintyMode::fixed) {
        return;
    }
    const std::size_t N = model.node_count();
    if (spec.fixed_delta1.size() != N || spec.fixed_delta2.size() != N) {
        throw ConfigError("uncertainty", "fixed mode needs one delta1 and delta2 per node");
    }
    for (std::size_t i = 0; i < N; ++i) {
        const auto& p = model.node(i);
        const auto check = [&](const Mat& d, Eigen::Index c, const char* name) {
            const std::string path = "uncertainty." + std::string(name) + "[" + std::to_string(i) + "]";
            require_dims(d, c, model.state_dim(), path);
            if (linalg::spectral_norm(d) > 1.0 + kDeltaNormTolerance) {
                throw ConfigError(path, "spectral norm exceeds 1");
            }
        };
        check(spec.fixed_delta1[i], p.E1.cols(), "delta1");
        check(spec.fixed_delta2[i], p.E2.cols(), "delta2");
    }
}

namespace {

Mat random_contraction(CounterRng& rng, Eigen::Index rows, Eigen::Index cols) {
    if (rows == 0 || cols == 0) {
        return Mat::Zero(rows, cols);
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Mat m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = normal(rng);
        }
    }
    const double target = uniform(rng);
    const double norm = linalg::spectral_norm(m);
    if (norm == 0.0) {
        return Mat::Zero(rows, cols);
    }
    return m * (target / norm);
}

}  // namespace

UncertaintyDraw sample_uncertainty(const NetworkModel& model, const UncertaintySpec& spec, const SeedKey& key,
                                   long step) {
    UncertaintyDraw d;
    d.mode = spec.mode;
    const std::size_t N = model.node_count();
    const Eigen::Index n = model.state_dim();
    d.delta1.reserve(N);
    d.delta2.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto& p = model.node(i);
        switch (spec.mode) {
        case UncertaintyMode::zero:
            d.delta1.push_back(Mat::Zero(p.E1.cols(), n));
            d.delta2.push_back(Mat::Zero(p.E2.cols(), n));
            break;
        case UncertaintyMode::fixed:
            d.delta1.push_back(spec.fixed_delta1.at(i));
            d.delta2.push_back(spec.fixed_delta2.at(i));
            break;
        case UncertaintyMode::random_per_step: {
            auto rng = key.stream(i, static_cast<std::uint64_t>(step), Stream::uncertainty);
            d.delta1.push_back(random_contraction(rng, p.E1.cols(), n));
            d.delta2.push_back(random_contraction(rng, p.E2.cols(), n));
            break;
        }
        }
    }
    return d;
}

GlobalState step_truth(const NetworkModel& model, const GlobalState& s, const UncertaintyDraw& draw,
                       const SeedKey& key, NoiseMode noise) {
    const std::size_t N = model.node_count();
    if (s.x.size() != N) {
        throw ConfigError("state", "expected one state per node");
    }
    GlobalState next;
    next.k = s.k + 1;
    next.x.resize(N);
    for (std::size_t i = 0; i < N; ++i) {
        const auto& p = model.node(i);
        Vec x = model.truth().eval(s.x[i]);
        if (draw.mode != UncertaintyMode::zero) {
            x += p.E1 * (draw.delta1.at(i) * s.x[i]);
        }
        Vec coupling = Vec::Zero(model.state_dim());
        for (NodeId j : model.neighborhood(i)) {
            coupling += model.pi(i, j) * s.x[j];
        }
        x += model.a() * (model.G() * coupling);
        if (noise == NoiseMode::stochastic) {
            auto rng = key.stream(i, static_cast<std::uint64_t>(s.k), Stream::process_noise);
            x += p.Q_chol * standard_normal(rng, model.state_dim());
        }
        if (!x.allFinite()) {
            throw SimulationDivergenceError("non-finite true state at node " + std::to_string(i + 1), s.k);
        }
        next.x[i] = std::move(x);
    }
    return next;
}

Vec measure(const NetworkModel& model, NodeId i, const Vec& x_i, const SeedKey& key, long step, NoiseMode noise) {
    const auto& p = model.node(i);
    Vec y = p.H * x_i;
    if (noise == NoiseMode::stochastic) {
        auto rng = key.stream(i, static_cast<std::uint64_t>(step), Stream::measurement_noise);
        y += p.R_chol * standard_normal(rng, y.size());
    }
    return y;
}

}  // namespace drls
