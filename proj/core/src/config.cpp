#include "drls/config.hpp"

#include "drls/linalg.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace drls {

namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void allow_keys(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) {
        throw ConfigError(path, "expected an object");
    }
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) {
            throw ConfigError(join(path, k), "unknown field");
        }
    }
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        throw ConfigError(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(path, "must be finite");
    }
    return v;
}

long integer(const json& j, const std::string& path) {
    if (!j.is_number_integer()) {
        throw ConfigError(path, "expected an integer");
    }
    return j.get<long>();
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) {
        throw ConfigError(path, "expected a string");
    }
    return j.get<std::string>();
}

bool is_number_array(const json& j) {
    if (!j.is_array() || j.empty()) {
        return false;
    }
    for (const auto& e : j) {
        if (!e.is_number()) {
            return false;
        }
    }
    return true;
}

/// A number (1×1), a flat array (row vector) or an array of equal-length rows.
Mat matrix(const json& j, const std::string& path) {
    if (j.is_number()) {
        return Mat::Constant(1, 1, number(j, path));
    }
    if (is_number_array(j)) {
        Mat m(1, static_cast<Eigen::Index>(j.size()));
        for (std::size_t c = 0; c < j.size(); ++c) {
            m(0, static_cast<Eigen::Index>(c)) = number(j[c], index(path, c));
        }
        return m;
    }
    if (!j.is_array() || j.empty()) {
        throw ConfigError(path, "expected a matrix (array of rows)");
    }
    const std::size_t rows = j.size();
    std::size_t cols = 0;
    for (std::size_t r = 0; r < rows; ++r) {
        if (!is_number_array(j[r])) {
            throw ConfigError(index(path, r), "expected a row of numbers");
        }
        if (r == 0) {
            cols = j[r].size();
        } else if (j[r].size() != cols) {
            throw ConfigError(index(path, r), "row length differs from the first row");
        }
    }
    Mat m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(j[r][c], index(index(path, r), c));
        }
    }
    return m;
}

Vec vector(const json& j, const std::string& path, Eigen::Index n) {
    if (!is_number_array(j)) {
        throw ConfigError(path, "expected an array of numbers");
    }
    if (static_cast<Eigen::Index>(j.size()) != n) {
        throw ConfigError(path, "expected " + std::to_string(n) + " entries");
    }
    Vec v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        v(k) = number(j[static_cast<std::size_t>(k)], index(path, static_cast<std::size_t>(k)));
    }
    return v;
}

/// Scalar s → s·I(dim), otherwise a matrix.
Mat scaled_identity_or_matrix(const json& j, const std::string& path, Eigen::Index dim) {
    if (j.is_number()) {
        return number(j, path) * Mat::Identity(dim, dim);
    }
    return matrix(j, path);
}

/// Per-node field: a scalar (times I), one matrix shared by all nodes, or
/// {"per_node": [...]} with one scalar or matrix per node.
std::vector<Mat> per_node(const json& j, const std::string& path, std::size_t N,
                          const std::vector<Eigen::Index>& dims) {
    std::vector<Mat> out;
    if (j.is_object()) {
        allow_keys(j, path, {"per_node"});
        if (!j.contains("per_node") || !j["per_node"].is_array() || j["per_node"].size() != N) {
            throw ConfigError(join(path, "per_node"), "expected one entry per node (" + std::to_string(N) + ")");
        }
        for (std::size_t i = 0; i < N; ++i) {
            out.push_back(scaled_identity_or_matrix(j["per_node"][i], index(join(path, "per_node"), i), dims[i]));
        }
        return out;
    }
    for (std::size_t i = 0; i < N; ++i) {
        out.push_back(scaled_identity_or_matrix(j, path, dims[i]));
    }
    return out;
}

Dynamics dynamics(const json& j, const std::string& path) {
    allow_keys(j, path, {"kind", "omega", "A"});
    const std::string kind = j.contains("kind") ? text(j["kind"], join(path, "kind")) : "";
    if (kind == "sine") {
        const double omega = j.contains("omega") ? number(j["omega"], join(path, "omega")) : 0.5;
        return Dynamics::sine(omega);
    }
    if (kind == "linear") {
        if (!j.contains("A")) {
            throw ConfigError(join(path, "A"), "required for linear dynamics");
        }
        try {
            return Dynamics::linear(matrix(j["A"], join(path, "A")));
        } catch (const ConfigError& e) {
            throw ConfigError(join(path, "A"), e.what());
        }
    }
    throw ConfigError(join(path, "kind"), "expected \"sine\" or \"linear\"");
}

json identity_rows(int n, double s) {
    json rows = json::array();
    for (int r = 0; r < n; ++r) {
        json row = json::array();
        for (int c = 0; c < n; ++c) {
            row.push_back(r == c ? s : 0.0);
        }
        rows.push_back(row);
    }
    return rows;
}

json paper_document() {
    return json{
        {"name", "paper"},
        {"model",
         {{"nodes", 4},
          {"state_dim", 2},
          {"dynamics", {{"kind", "sine"}, {"omega", 0.5}}},
          {"coupling", {{"a", 0.1}, {"G", identity_rows(2, 0.2)}, {"topology", "paper_full"}}},
          {"H", json::array({json::array({0.90, 0.25}), json::array({0.95, 0.65}), json::array({0.90, 0.35}),
                             json::array({0.85, 0.20})})},
          {"Q", 0.001},
          {"R", 0.01}}},
        {"uncertainty", {{"mode", "zero"}}},
        {"estimator", "drea"},
        {"tuner",
         {{"beta", 0.5}, {"alpha", {{"policy", "fixed"}, {"value", 0.1}}}, {"lambda", {{"policy", "inflated"}}}}},
        {"horizon", 100},
        {"trials", 200},
        {"seed", 1},
        {"initial_states", json::array({json::array({2.0, -2.8}), json::array({2.5, -2.5}),
                                        json::array({2.5, -2.0}), json::array({2.0, -2.0})})},
        {"initial_estimate", {{"rule", "offset"}, {"scale", 0.2}}},
        {"initial_prior_cov", 0.001},
        {"noise", "stochastic"}};
}

json paper_uncertain_document() {
    json doc = paper_document();
    doc["name"] = "paper-uncertain";
    doc["model"]["truth_dynamics"] = {{"kind", "sine"}, {"omega", 0.525}};
    doc["model"]["E1"] = 0.05;
    doc["model"]["E2"] = 0.05;
    doc["uncertainty"] = {{"mode", "random"}};
    return doc;
}

}  // namespace

Mat topology_preset(std::string_view name) {
    Mat pi = Mat::Zero(4, 4);
    auto set = [&](int i, int j, double v) { pi(i - 1, j - 1) = v; };
    if (name == "paper_full") {
        pi.setConstant(0.1);
        pi.diagonal().setConstant(-0.3);
    } else if (name == "star") {
        set(1, 1, -0.1), set(1, 2, 0.1);
        set(2, 1, 0.1), set(2, 2, -0.3), set(2, 3, 0.1), set(2, 4, 0.1);
        set(3, 2, 0.1), set(3, 3, -0.1);
        set(4, 2, 0.1), set(4, 4, -0.1);
    } else if (name == "ring") {
        set(1, 1, -0.2), set(1, 2, 0.1), set(1, 4, 0.1);
        set(2, 1, 0.1), set(2, 2, -0.1);
        set(3, 2, 0.1), set(3, 3, -0.2), set(3, 4, 0.1);
        set(4, 3, 0.1), set(4, 4, -0.1);
    } else if (name == "chain") {
        set(2, 1, 0.1), set(2, 2, -0.1);
        set(3, 2, 0.1), set(3, 3, -0.1);
        set(4, 3, 0.1), set(4, 4, -0.1);
    } else {
        throw ConfigError("model.coupling.topology", "unknown preset \"" + std::string(name) + "\"");
    }
    return pi;
}

std::vector<std::string> builtin_names() {
    return {"paper", "paper-uncertain", "paper-star", "paper-ring", "paper-chain"};
}

json builtin_scenario(std::string_view name) {
    if (name == "paper") {
        return paper_document();
    }
    if (name == "paper-uncertain") {
        return paper_uncertain_document();
    }
    for (const char* topo : {"star", "ring", "chain"}) {
        if (name == std::string("paper-") + topo) {
            json doc = paper_document();
            doc["name"] = std::string(name);
            doc["model"]["coupling"]["topology"] = topo;
            return doc;
        }
    }
    throw ConfigError("builtin", "unknown builtin scenario \"" + std::string(name) + "\"");
}

std::string_view to_string(EstimatorKind kind) {
    switch (kind) {
    case EstimatorKind::drea:
        return "drea";
    case EstimatorKind::centralized:
        return "centralized";
    case EstimatorKind::ekf:
        return "ekf";
    }
    return "drea";
}

EstimatorKind estimator_from_string(std::string_view s) {
    if (s == "drea") {
        return EstimatorKind::drea;
    }
    if (s == "centralized") {
        return EstimatorKind::centralized;
    }
    if (s == "ekf") {
        return EstimatorKind::ekf;
    }
    throw ConfigError("estimator", "expected drea, centralized or ekf, got \"" + std::string(s) + "\"");
}

namespace {

TunerConfig parse_tuner(const json& j) {
    const std::string path = "tuner";
    TunerConfig t;
    allow_keys(j, path, {"beta", "alpha", "lambda", "phi_convention", "grid"});
    if (j.contains("beta")) {
        t.beta = number(j["beta"], "tuner.beta");
    }
    if (j.contains("alpha")) {
        const json& a = j["alpha"];
        allow_keys(a, "tuner.alpha", {"policy", "value"});
        const std::string p = a.contains("policy") ? text(a["policy"], "tuner.alpha.policy") : "fixed";
        if (p == "fixed") {
            t.alpha.kind = AlphaPolicyKind::fixed;
        } else if (p == "closed_form") {
            t.alpha.kind = AlphaPolicyKind::closed_form;
        } else if (p == "joint") {
            t.alpha.kind = AlphaPolicyKind::joint;
        } else {
            throw ConfigError("tuner.alpha.policy", "expected fixed, closed_form or joint");
        }
        if (a.contains("value")) {
            t.alpha.value = number(a["value"], "tuner.alpha.value");
        }
    }
    if (j.contains("lambda")) {
        const json& l = j["lambda"];
        allow_keys(l, "tuner.lambda", {"policy", "value"});
        const std::string p = l.contains("policy") ? text(l["policy"], "tuner.lambda.policy") : "inflated";
        if (p == "inflated") {
            t.lambda.kind = LambdaPolicyKind::inflated;
        } else if (p == "fixed") {
            t.lambda.kind = LambdaPolicyKind::fixed;
            if (!l.contains("value")) {
                throw ConfigError("tuner.lambda.value", "required for the fixed policy");
            }
        } else if (p == "joint") {
            t.lambda.kind = LambdaPolicyKind::joint;
        } else {
            throw ConfigError("tuner.lambda.policy", "expected inflated, fixed or joint");
        }
        if (l.contains("value")) {
            t.lambda.value = number(l["value"], "tuner.lambda.value");
        }
    }
    if (j.contains("phi_convention")) {
        const std::string p = text(j["phi_convention"], "tuner.phi_convention");
        if (p == "consistent") {
            t.phi = PhiConvention::consistent;
        } else if (p == "printed") {
            t.phi = PhiConvention::printed;
        } else {
            throw ConfigError("tuner.phi_convention", "expected consistent or printed");
        }
    }
    if (j.contains("grid")) {
        const json& g = j["grid"];
        allow_keys(g, "tuner.grid", {"lambda_points", "lambda_span", "alpha_points", "max_iterations"});
        if (g.contains("lambda_points")) {
            t.lambda_grid = static_cast<int>(integer(g["lambda_points"], "tuner.grid.lambda_points"));
        }
        if (g.contains("lambda_span")) {
            t.lambda_span = number(g["lambda_span"], "tuner.grid.lambda_span");
        }
        if (g.contains("alpha_points")) {
            t.alpha_grid = static_cast<int>(integer(g["alpha_points"], "tuner.grid.alpha_points"));
        }
        if (g.contains("max_iterations")) {
            t.max_iterations = static_cast<int>(integer(g["max_iterations"], "tuner.grid.max_iterations"));
        }
    }
    t.validate();
    return t;
}

std::vector<Mat> parse_deltas(const json& j, const std::string& path, std::size_t N) {
    if (!j.is_array() || j.size() != N) {
        throw ConfigError(path, "expected one matrix per node (" + std::to_string(N) + ")");
    }
    std::vector<Mat> out;
    for (std::size_t i = 0; i < N; ++i) {
        out.push_back(matrix(j[i], index(path, i)));
    }
    return out;
}

}  // namespace

ScenarioConfig parse_config(const json& doc) {
    allow_keys(doc, "", {"name", "model", "uncertainty", "estimator", "tuner", "horizon", "trials", "seed",
                         "initial_states", "initial_estimate", "initial_prior_cov", "noise"});
    ScenarioConfig cfg;
    cfg.source = doc;
    cfg.name = doc.contains("name") ? text(doc["name"], "name") : "scenario";

    if (!doc.contains("model")) {
        throw ConfigError("model", "required");
    }
    const json& m = doc["model"];
    allow_keys(m, "model", {"nodes", "state_dim", "dynamics", "truth_dynamics", "coupling", "H", "Q", "R", "E1", "E2"});
    if (!m.contains("nodes")) {
        throw ConfigError("model.nodes", "required");
    }
    const long nodes = integer(m["nodes"], "model.nodes");
    if (nodes < 1) {
        throw ConfigError("model.nodes", "must be >= 1");
    }
    const auto N = static_cast<std::size_t>(nodes);
    if (!m.contains("dynamics")) {
        throw ConfigError("model.dynamics", "required");
    }
    Dynamics nominal = dynamics(m["dynamics"], "model.dynamics");
    std::optional<Dynamics> truth;
    if (m.contains("truth_dynamics")) {
        truth = dynamics(m["truth_dynamics"], "model.truth_dynamics");
    }
    const Eigen::Index n = m.contains("state_dim") ? integer(m["state_dim"], "model.state_dim") : nominal.dim();
    if (n != nominal.dim()) {
        throw ConfigError("model.state_dim", "does not match the dynamics (" + std::to_string(nominal.dim()) + ")");
    }

    if (!m.contains("coupling")) {
        throw ConfigError("model.coupling", "required");
    }
    const json& c = m["coupling"];
    allow_keys(c, "model.coupling", {"a", "G", "topology", "pi"});
    const double a = c.contains("a") ? number(c["a"], "model.coupling.a") : 0.0;
    Mat G = c.contains("G") ? scaled_identity_or_matrix(c["G"], "model.coupling.G", n) : Mat::Zero(n, n);
    cfg.topology = c.contains("topology") ? text(c["topology"], "model.coupling.topology") : "custom";
    Mat pi;
    if (cfg.topology == "custom") {
        if (!c.contains("pi")) {
            throw ConfigError("model.coupling.pi", "required for a custom topology");
        }
        pi = matrix(c["pi"], "model.coupling.pi");
    } else {
        if (c.contains("pi")) {
            throw ConfigError("model.coupling.pi", "only allowed with topology \"custom\"");
        }
        pi = topology_preset(cfg.topology);
        if (static_cast<std::size_t>(pi.rows()) != N) {
            throw ConfigError("model.coupling.topology", "preset is defined for 4 nodes");
        }
    }

    if (!m.contains("H") || !m["H"].is_array() || m["H"].size() != N) {
        throw ConfigError("model.H", "expected one measurement matrix per node (" + std::to_string(N) + ")");
    }
    std::vector<NodeParams> params(N);
    std::vector<Eigen::Index> state_dims(N, n);
    std::vector<Eigen::Index> meas_dims(N);
    for (std::size_t i = 0; i < N; ++i) {
        params[i].H = matrix(m["H"][i], index("model.H", i));
        meas_dims[i] = params[i].H.rows();
    }
    if (!m.contains("Q") || !m.contains("R")) {
        throw ConfigError(m.contains("Q") ? "model.R" : "model.Q", "required");
    }
    const auto Qs = per_node(m["Q"], "model.Q", N, state_dims);
    const auto Rs = per_node(m["R"], "model.R", N, meas_dims);
    const auto E1s = m.contains("E1") ? per_node(m["E1"], "model.E1", N, state_dims) : std::vector<Mat>(N);
    const auto E2s = m.contains("E2") ? per_node(m["E2"], "model.E2", N, state_dims) : std::vector<Mat>(N);
    for (std::size_t i = 0; i < N; ++i) {
        params[i].Q = Qs[i];
        params[i].R = Rs[i];
        params[i].E1 = E1s[i];
        params[i].E2 = E2s[i];
    }
    cfg.model = std::make_shared<const NetworkModel>(a, pi, G, nominal, std::move(params), truth);

    if (doc.contains("uncertainty")) {
        const json& u = doc["uncertainty"];
        allow_keys(u, "uncertainty", {"mode", "delta1", "delta2"});
        const std::string mode = u.contains("mode") ? text(u["mode"], "uncertainty.mode") : "zero";
        if (mode == "zero") {
            cfg.uncertainty.mode = UncertaintyMode::zero;
        } else if (mode == "random") {
            cfg.uncertainty.mode = UncertaintyMode::random_per_step;
        } else if (mode == "fixed") {
            cfg.uncertainty.mode = UncertaintyMode::fixed;
            if (!u.contains("delta1") || !u.contains("delta2")) {
                throw ConfigError("uncertainty", "fixed mode needs delta1 and delta2");
            }
            cfg.uncertainty.fixed_delta1 = parse_deltas(u["delta1"], "uncertainty.delta1", N);
            cfg.uncertainty.fixed_delta2 = parse_deltas(u["delta2"], "uncertainty.delta2", N);
        } else {
            throw ConfigError("uncertainty.mode", "expected zero, fixed or random");
        }
    }
    validate_uncertainty(*cfg.model, cfg.uncertainty);

    if (doc.contains("noise")) {
        const std::string s = text(doc["noise"], "noise");
        if (s == "stochastic") {
            cfg.noise = NoiseMode::stochastic;
        } else if (s == "zero") {
            cfg.noise = NoiseMode::zero;
        } else {
            throw ConfigError("noise", "expected stochastic or zero");
        }
    }
    if (doc.contains("estimator")) {
        cfg.estimator = estimator_from_string(text(doc["estimator"], "estimator"));
    }
    cfg.tuner = doc.contains("tuner") ? parse_tuner(doc["tuner"]) : TunerConfig{};

    if (doc.contains("horizon")) {
        cfg.horizon = integer(doc["horizon"], "horizon");
    }
    if (cfg.horizon < 1) {
        throw ConfigError("horizon", "must be >= 1");
    }
    if (doc.contains("trials")) {
        const long t = integer(doc["trials"], "trials");
        if (t < 1) {
            throw ConfigError("trials", "must be >= 1");
        }
        cfg.trials = static_cast<std::size_t>(t);
    }
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long>() >= 0)) {
            throw ConfigError("seed", "expected a non-negative integer");
        }
        cfg.seed = doc["seed"].get<std::uint64_t>();
    }

    if (!doc.contains("initial_states") || !doc["initial_states"].is_array() || doc["initial_states"].size() != N) {
        throw ConfigError("initial_states", "expected one state per node (" + std::to_string(N) + ")");
    }
    for (std::size_t i = 0; i < N; ++i) {
        cfg.initial_states.push_back(vector(doc["initial_states"][i], index("initial_states", i), n));
    }
    if (doc.contains("initial_estimate")) {
        const json& ie = doc["initial_estimate"];
        allow_keys(ie, "initial_estimate", {"rule", "scale"});
        const std::string rule = ie.contains("rule") ? text(ie["rule"], "initial_estimate.rule") : "offset";
        if (rule == "offset") {
            cfg.initial_rule = InitialEstimateRule::offset;
        } else if (rule == "exact") {
            cfg.initial_rule = InitialEstimateRule::exact;
        } else {
            throw ConfigError("initial_estimate.rule", "expected offset or exact");
        }
        if (ie.contains("scale")) {
            cfg.initial_scale = number(ie["scale"], "initial_estimate.scale");
        }
    }
    cfg.initial_prior_cov = doc.contains("initial_prior_cov")
                                ? per_node(doc["initial_prior_cov"], "initial_prior_cov", N, state_dims)
                                : per_node(json(0.001), "initial_prior_cov", N, state_dims);
    for (std::size_t i = 0; i < N; ++i) {
        const Mat& P0 = cfg.initial_prior_cov[i];
        const std::string path = index("initial_prior_cov", i);
        if (P0.rows() != n || P0.cols() != n) {
            throw ConfigError(path, "expected " + std::to_string(n) + "x" + std::to_string(n));
        }
        if (!linalg::is_spd(P0)) {
            throw ConfigError(path, "must be positive definite");
        }
        // Monotone growth of the priori covariance needs 0 < P̆₀ ≤ Q.
        if (linalg::min_eigenvalue(cfg.model->node(i).Q - P0) < -1e-12) {
            throw ConfigError(path, "must not exceed Q (Q − P̆₀ must be positive semidefinite)");
        }
    }
    return cfg;
}

ScenarioConfig load_config(const std::string& path) {
    constexpr std::string_view prefix = "builtin:";
    if (path.rfind(prefix, 0) == 0) {
        return parse_config(builtin_scenario(path.substr(prefix.size())));
    }
    std::ifstream in(path);
    if (!in) {
        throw ConfigError(path, "cannot open configuration file");
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path, std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

std::string config_hash(const ScenarioConfig& config) {
    const std::string canon = config.source.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canon) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace drls
