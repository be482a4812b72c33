#include "drls/feasibility.hpp"

#include "drls/estimator.hpp"
#include "drls/linalg.hpp"
#include "drls/rng.hpp"
#include "drls/tuner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace drls {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimum of a convex function on [lo, hi] by golden-section search.
template <class Fn>
double convex_min(Fn&& fn, double lo, double hi) {
    const double r = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - r * (hi - lo);
    double x2 = lo + r * (hi - lo);
    double f1 = fn(x1);
    double f2 = fn(x2);
    for (int it = 0; it < 80; ++it) {
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
    return std::min({f1, f2, fn(lo), fn(hi)});
}

// ‖F + C‖₂ over the sine envelope F = [[0.9, p], [q, 0.9]], |p|, |q| ≤ ω.
// The norm is convex in (p, q): the max sits at a corner and the min is a
// convex program solved by nested 1-D searches.
std::pair<double, double> sine_envelope_bounds(double omega, const Mat& C) {
    auto norm_at = [&](double p, double q) {
        Mat F(2, 2);
        F << 0.9, p, q, 0.9;
        return linalg::spectral_norm(F + C);
    };
    double hi = 0.0;
    for (double p : {-omega, omega}) {
        for (double q : {-omega, omega}) {
            hi = std::max(hi, norm_at(p, q));
        }
    }
    const double lo = convex_min(
        [&](double p) { return convex_min([&](double q) { return norm_at(p, q); }, -omega, omega); }, -omega, omega);
    return {lo, hi};
}

double max_abs_real_eig(const Mat& g) {
    if (g.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Mat> es(g, false);
    return es.eigenvalues().real().cwiseAbs().maxCoeff();
}

Vec origin_or(const NetworkModel& model, const Vec& at) {
    return at.size() == 0 ? Vec::Zero(model.state_dim()) : at;
}

}  // namespace

std::vector<Vec> make_probes(const NetworkModel& model, std::size_t count, double box, std::uint64_t seed) {
    std::vector<Vec> out;
    out.reserve(count);
    std::uniform_real_distribution<double> u(-box, box);
    for (std::size_t t = 0; t < count; ++t) {
        CounterRng rng(seed, 0, 0, t, Stream::probe);
        Vec x(model.state_dim());
        for (Eigen::Index k = 0; k < x.size(); ++k) {
            x(k) = u(rng);
        }
        out.push_back(std::move(x));
    }
    return out;
}

AssumptionBounds estimate_bounds(const NetworkModel& model, const std::vector<Vec>& probes) {
    AssumptionBounds b;
    b.kG = linalg::spectral_norm(model.G());
    b.kF1 = kInf;
    b.kw1 = kInf;
    b.kv1 = kInf;
    const bool sine = model.nominal().kind() == Dynamics::Kind::sine;
    b.analytic_F = sine;
    b.probes = sine ? 0 : probes.size();

    for (NodeId i = 0; i < model.node_count(); ++i) {
        const auto& p = model.node(i);
        const Mat C = model.a() * model.pi(i, i) * model.G();
        if (sine) {
            const auto [lo, hi] = sine_envelope_bounds(model.nominal().omega(), C);
            b.kF1 = std::min(b.kF1, lo);
            b.kF2 = std::max(b.kF2, hi);
        } else if (model.nominal().kind() == Dynamics::Kind::linear) {
            const double s = linalg::spectral_norm(model.nominal().matrix() + C);
            b.kF1 = std::min(b.kF1, s);
            b.kF2 = std::max(b.kF2, s);
        } else {
            for (const Vec& x : probes) {
                const double s = linalg::spectral_norm(model.coupled_jacobian(i, x));
                b.kF1 = std::min(b.kF1, s);
                b.kF2 = std::max(b.kF2, s);
            }
        }
        b.kE1 = std::max(b.kE1, linalg::spectral_norm(p.E1));
        b.kE2 = std::max(b.kE2, linalg::spectral_norm(p.E2));
        b.kH = std::max(b.kH, linalg::spectral_norm(p.H));
        const double q = linalg::spectral_norm(p.Q);
        const double r = linalg::spectral_norm(p.R);
        b.kw1 = std::min(b.kw1, q);
        b.kw2 = std::max(b.kw2, q);
        b.kv1 = std::min(b.kv1, r);
        b.kv2 = std::max(b.kv2, r);
    }
    return b;
}

NonsingularReport check_nonsingular_F(const NetworkModel& model, const std::vector<Vec>& probes) {
    NonsingularReport rep;
    for (NodeId i = 0; i < model.node_count(); ++i) {
        for (const Vec& x : probes) {
            const double c = linalg::condition_number(model.coupled_jacobian(i, x));
            rep.worst_condition = std::max(rep.worst_condition, std::isnan(c) ? kInf : c);
        }
    }
    rep.pass = !probes.empty() && rep.worst_condition < linalg::kMaxCondition;
    return rep;
}

ObservabilityReport observability_gramian(const NetworkModel& model, NodeId i, int window,
                                          const std::vector<Vec>& trajectory, double kappa_min) {
    if (window < 1) {
        throw ConfigError("feasibility.window", "must be >= 1");
    }
    const auto& p = model.node(i);
    const Eigen::Index n = model.state_dim();
    const Mat HtRH = p.H.transpose() * linalg::spd_inverse(p.R, "R") * p.H;
    const Vec origin = Vec::Zero(n);

    ObservabilityReport rep;
    rep.window = window;
    rep.gramian = Mat::Zero(n, n);
    Mat psi = Mat::Identity(n, n);
    for (int h = 0; h < window; ++h) {
        rep.gramian += psi.transpose() * HtRH * psi;
        const std::size_t t = static_cast<std::size_t>(h);
        const Vec& x = trajectory.empty() ? origin : trajectory[std::min(t, trajectory.size() - 1)];
        psi = model.coupled_jacobian(i, x) * psi;
    }
    rep.gramian = linalg::symmetrize(rep.gramian);
    rep.min_eig = linalg::min_eigenvalue(rep.gramian);
    rep.pass = rep.min_eig >= kappa_min;
    return rep;
}

CouplingReport check_coupling_condition(const NetworkModel& model) {
    CouplingReport rep;
    const Mat& G = model.G();
    rep.lhs = max_abs_real_eig(G);
    rep.singular_lhs = linalg::spectral_norm(G);
    const double a = model.a();
    const double n_minus_1 = static_cast<double>(model.node_count()) - 1.0;
    const double pi_m = model.pi_max();
    if (a > 0.0 && n_minus_1 > 0.0 && pi_m > 0.0) {
        rep.rhs = 1.0 / (std::sqrt(a + a * a) * n_minus_1 * pi_m);
    } else {
        rep.rhs = kInf;
    }
    rep.pass = rep.lhs < rep.rhs;
    const bool normal = (G * G.transpose() - G.transpose() * G).norm() <= 1e-12 * std::max(1.0, G.norm());
    rep.readings_diverge = !normal && ((rep.singular_lhs < rep.rhs) != rep.pass);
    return rep;
}

RiccatiReport steady_state_riccati(const NetworkModel& model, NodeId i, double lambda_bar, const Vec& at, double tol,
                                   int max_iter) {
    const auto& p = model.node(i);
    const Eigen::Index n = model.state_dim();
    const double a = model.a();
    const Mat Fa = model.coupled_jacobian(i, origin_or(model, at));
    const RobustNoise noise = robustify_noise(model, i, lambda_bar);
    const Mat HtRH = p.H.transpose() * linalg::spd_inverse(noise.R_hat, "R̂") * p.H;
    const Mat reg = 2.0 * noise.lambda_bar * Mat::Identity(n, n);

    RiccatiReport rep;
    rep.lambda_bar = noise.lambda_bar;
    Mat P = p.Q;
    rep.trace_history.push_back(P.trace());
    for (int t = 1; t <= max_iter; ++t) {
        const Mat info = linalg::spd_inverse(P, "P̆") + HtRH + reg;
        Mat next = (1.0 + a) * Fa * linalg::spd_inverse(info, "information matrix") * Fa.transpose() + p.Q;
        next = linalg::symmetrize(next);
        rep.trace_history.push_back(next.trace());
        const double delta = (next - P).cwiseAbs().maxCoeff();
        P = std::move(next);
        rep.iterations = t;
        if (!P.allFinite()) {
            break;
        }
        if (delta < tol) {
            rep.converged = true;
            break;
        }
    }
    rep.breve_P = P;
    if (P.allFinite()) {
        const Mat shrink = linalg::spd_inverse(linalg::spd_inverse(P, "P̆") + reg, "P̆⁻¹ + 2λ̄I") * HtRH;
        rep.HF = linalg::inverse(Mat::Identity(n, n) + shrink, "I + (P̆⁻¹+2λ̄I)⁻¹HᵀR̂⁻¹H") * Fa;
        Eigen::EigenSolver<Mat> es(rep.HF, false);
        rep.spectral_radius_HF = es.eigenvalues().cwiseAbs().maxCoeff();
    } else {
        rep.HF = Mat::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
        rep.spectral_radius_HF = kInf;
    }
    return rep;
}

double boundedness_rhs(const NetworkModel& model, const AssumptionBounds& bounds) {
    const double N = static_cast<double>(model.node_count());
    const double denom = 1.0 + bounds.kE2 / bounds.kF1 +
                         model.a() * model.pi_max() * bounds.kG * std::sqrt(N * (N - 1.0)) / bounds.kF1;
    return 1.0 / denom;
}

BoundednessReport check_error_boundedness(const NetworkModel& model, const AssumptionBounds& bounds, const std::vector<Mat>& HF) {
    BoundednessReport rep;
    for (const Mat& m : HF) {
        rep.lhs = std::max(rep.lhs, m.allFinite() ? linalg::spectral_norm(m) : kInf);
    }
    rep.rhs = boundedness_rhs(model, bounds);
    rep.pass = rep.lhs < rep.rhs;
    return rep;
}

UncertaintyBoundReport check_uncertainty_bound(const NetworkModel& model, const TrajectorySample& sample, double cap) {
    UncertaintyBoundReport rep;
    const std::size_t steps = std::min(sample.states.size(), sample.draws.size());
    for (std::size_t t = 0; t < steps; ++t) {
        const auto& draw = sample.draws[t];
        if (draw.delta1.empty()) {
            continue;
        }
        for (NodeId i = 0; i < model.node_count(); ++i) {
            const Vec u = model.node(i).E1 * (draw.delta1.at(i) * sample.states[t].x.at(i));
            const double v = u.norm();
            rep.kappa_u = std::max(rep.kappa_u, std::isfinite(v) ? v : kInf);
        }
    }
    rep.pass = std::isfinite(rep.kappa_u) && rep.kappa_u <= cap;
    return rep;
}

FeasibilityReport run_feasibility(const NetworkModel& model, const FeasibilityOptions& options,
                                  const TrajectorySample* sample) {
    FeasibilityReport rep;
    const auto probes = make_probes(model, options.probe_count, options.probe_box, options.seed);
    rep.bounds = estimate_bounds(model, probes);
    rep.nonsingular = check_nonsingular_F(model, probes);

    const Vec at = origin_or(model, options.linearization_point);
    const int window = options.window > 0 ? options.window : static_cast<int>(model.state_dim());
    std::vector<Mat> hf;
    for (NodeId i = 0; i < model.node_count(); ++i) {
        rep.observability.push_back(observability_gramian(model, i, window, {at}, options.kappa_min));
        const double lambda = (1.0 + options.beta) * breve_lambda(model, i);
        rep.steady_state.push_back(
            steady_state_riccati(model, i, lambda, at, options.riccati_tol, options.riccati_max_iter));
        hf.push_back(rep.steady_state.back().HF);
    }
    rep.coupling = check_coupling_condition(model);
    rep.boundedness = check_error_boundedness(model, rep.bounds, hf);
    if (sample != nullptr) {
        rep.uncertainty_bound = check_uncertainty_bound(model, *sample, options.kappa_u_cap);
    }
    return rep;
}

namespace {

nlohmann::json matrix_json(const Mat& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// JSON has no infinity; report it as a string.
nlohmann::json num(double v) {
    if (std::isinf(v)) {
        return v > 0 ? "inf" : "-inf";
    }
    if (std::isnan(v)) {
        return "nan";
    }
    return v;
}

}  // namespace

nlohmann::json to_json(const FeasibilityReport& r) {
    nlohmann::json j;
    const auto& b = r.bounds;
    j["bounds"] = {{"kF1", num(b.kF1)}, {"kF2", num(b.kF2)}, {"kG", b.kG},   {"kE1", b.kE1},
                   {"kE2", b.kE2},      {"kH", b.kH},       {"kw1", b.kw1}, {"kw2", b.kw2},
                   {"kv1", b.kv1},      {"kv2", b.kv2},     {"probes", b.probes}, {"analytic_F", b.analytic_F}};
    j["nonsingular_F"] = {{"pass", r.nonsingular.pass}, {"worst_condition", num(r.nonsingular.worst_condition)}};
    j["observability"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.observability.size(); ++i) {
        const auto& o = r.observability[i];
        j["observability"].push_back(
            {{"node", i + 1}, {"window", o.window}, {"min_eig", o.min_eig}, {"pass", o.pass}});
    }
    j["coupling"] = {{"lhs", r.coupling.lhs},
                 {"rhs", num(r.coupling.rhs)},
                 {"pass", r.coupling.pass},
                 {"singular_value_lhs", r.coupling.singular_lhs},
                 {"readings_diverge", r.coupling.readings_diverge}};
    j["steady_state"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.steady_state.size(); ++i) {
        const auto& s = r.steady_state[i];
        j["steady_state"].push_back({{"node", i + 1},
                                     {"converged", s.converged},
                                     {"iterations", s.iterations},
                                     {"lambda_bar", s.lambda_bar},
                                     {"breve_P", matrix_json(s.breve_P)},
                                     {"HF_norm", num(s.HF.allFinite() ? linalg::spectral_norm(s.HF) : kInf)},
                                     {"HF_spectral_radius", num(s.spectral_radius_HF)}});
    }
    j["boundedness"] = {{"lhs", num(r.boundedness.lhs)}, {"rhs", r.boundedness.rhs}, {"pass", r.boundedness.pass}};
    if (r.uncertainty_bound) {
        j["uncertainty_bound"] = {{"kappa_u", num(r.uncertainty_bound->kappa_u)}, {"pass", r.uncertainty_bound->pass}};
    }
    return j;
}

}  // namespace drls
