#include "drls/config.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace drls;
using nlohmann::json;

namespace {

std::string error_path(const json& doc) {
    try {
        (void)parse_config(doc);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "<no error>";
}

}  // namespace

TEST(Builtin, PaperScenarioParameters) {
    const ScenarioConfig cfg = load_config("builtin:paper");
    const auto& m = *cfg.model;
    EXPECT_EQ(m.node_count(), 4u);
    EXPECT_DOUBLE_EQ(m.a(), 0.1);
    EXPECT_DOUBLE_EQ(m.node(1).H(0, 0), 0.95);
    EXPECT_DOUBLE_EQ(m.node(1).H(0, 1), 0.65);
    EXPECT_DOUBLE_EQ(m.pi(0, 0), -0.3);
    EXPECT_DOUBLE_EQ(m.pi(2, 1), 0.1);
    EXPECT_DOUBLE_EQ(m.G()(0, 0), 0.2);
    EXPECT_DOUBLE_EQ(m.G()(0, 1), 0.0);
    EXPECT_DOUBLE_EQ(m.node(3).Q(1, 1), 0.001);
    EXPECT_DOUBLE_EQ(m.node(3).R(0, 0), 0.01);
    EXPECT_DOUBLE_EQ(cfg.tuner.beta, 0.5);
    EXPECT_EQ(cfg.tuner.alpha.kind, AlphaPolicyKind::fixed);
    EXPECT_DOUBLE_EQ(cfg.tuner.alpha.value, 0.1);
    EXPECT_DOUBLE_EQ(cfg.initial_prior_cov[2](0, 0), 0.001);
    EXPECT_DOUBLE_EQ(cfg.initial_states[0](1), -2.8);
    EXPECT_EQ(cfg.horizon, 100);
}

TEST(Builtin, EveryNameParses) {
    for (const auto& name : builtin_names()) {
        EXPECT_NO_THROW((void)load_config("builtin:" + name)) << name;
    }
    EXPECT_THROW((void)load_config("builtin:nope"), ConfigError);
}

TEST(Presets, ChainAndStar) {
    const Mat chain = topology_preset("chain");
    EXPECT_DOUBLE_EQ(chain(1, 0), 0.1);
    EXPECT_DOUBLE_EQ(chain(0, 2), 0.0);
    EXPECT_TRUE(chain.row(0).isZero(0.0));
    const Mat star = topology_preset("star");
    EXPECT_DOUBLE_EQ(star(1, 3), 0.1);
    EXPECT_DOUBLE_EQ(star(2, 3), 0.0);
    EXPECT_THROW((void)topology_preset("mesh"), ConfigError);
}

TEST(Validation, NonPdProcessNoiseNamesField) {
    json doc = builtin_scenario("paper");
    doc["model"]["Q"] = -0.001;
    EXPECT_EQ(error_path(doc), "model.Q[0]");
}

TEST(Validation, UnknownFieldsAreRejected) {
    json doc = builtin_scenario("paper");
    doc["model"]["coupling"]["strength"] = 1;
    EXPECT_EQ(error_path(doc), "model.coupling.strength");
    doc = builtin_scenario("paper");
    doc["tuner"]["gamma"] = 1;
    EXPECT_EQ(error_path(doc), "tuner.gamma");
}

TEST(Validation, TypeAndRangeErrors) {
    json doc = builtin_scenario("paper");
    doc["horizon"] = 0;
    EXPECT_EQ(error_path(doc), "horizon");
    doc = builtin_scenario("paper");
    doc["trials"] = "many";
    EXPECT_EQ(error_path(doc), "trials");
    doc = builtin_scenario("paper");
    doc["model"]["H"] = json::array({json::array({1.0, 0.0})});
    EXPECT_EQ(error_path(doc), "model.H");
    doc = builtin_scenario("paper");
    doc["initial_prior_cov"] = 0.01;
    EXPECT_EQ(error_path(doc), "initial_prior_cov[0]");
    doc = builtin_scenario("paper");
    doc["model"]["coupling"]["topology"] = "custom";
    EXPECT_EQ(error_path(doc), "model.coupling.pi");
    doc = builtin_scenario("paper");
    doc["estimator"] = "ukf";
    EXPECT_THROW((void)parse_config(doc), ConfigError);
}

TEST(Validation, FixedDeltaNormCapped) {
    json doc = builtin_scenario("paper-uncertain");
    const json big = {{2.0, 0.0}, {0.0, 2.0}};
    const json half = {{0.5, 0.0}, {0.0, 0.5}};
    const json zero = {{0.0, 0.0}, {0.0, 0.0}};
    doc["uncertainty"] = {{"mode", "fixed"}, {"delta1", {big, half, half, half}}, {"delta2", {zero, zero, zero, zero}}};
    EXPECT_EQ(error_path(doc), "uncertainty.delta1[0]");
    doc["uncertainty"]["delta1"][0] = half;
    EXPECT_NO_THROW((void)parse_config(doc));
}

TEST(Forms, PerNodeAndMatrixValues) {
    json doc = builtin_scenario("paper");
    doc["model"]["R"] = {{"per_node", {0.01, 0.02, 0.03, 0.04}}};
    doc["model"]["Q"] = json::array({json::array({0.002, 0.0}), json::array({0.0, 0.003})});
    doc["model"]["coupling"]["topology"] = "custom";
    doc["model"]["coupling"]["pi"] =
        json::array({json::array({-0.2, 0.1, 0.0, 0.1}), json::array({0.1, -0.1, 0.0, 0.0}),
                     json::array({0.0, 0.1, -0.2, 0.1}), json::array({0.0, 0.0, 0.1, -0.1})});
    const ScenarioConfig cfg = parse_config(doc);
    EXPECT_DOUBLE_EQ(cfg.model->node(2).R(0, 0), 0.03);
    EXPECT_DOUBLE_EQ(cfg.model->node(0).Q(1, 1), 0.003);
    EXPECT_EQ(cfg.model->pi(), topology_preset("ring"));
    EXPECT_EQ(cfg.topology, "custom");
}

TEST(Forms, LinearDynamics) {
    json doc = builtin_scenario("paper");
    doc["model"]["dynamics"] = {{"kind", "linear"}, {"A", json::array({json::array({0.9, 0.1}), json::array({0.0, 0.8})})}};
    const ScenarioConfig cfg = parse_config(doc);
    EXPECT_EQ(cfg.model->nominal().kind(), Dynamics::Kind::linear);
    EXPECT_DOUBLE_EQ(cfg.model->nominal().matrix()(0, 1), 0.1);
}

TEST(Files, LoadFromDiskAndHashIsStable) {
    const auto path = std::filesystem::temp_directory_path() / "drls_config_test.json";
    {
        std::ofstream out(path);
        out << builtin_scenario("paper-ring").dump(2);
    }
    const ScenarioConfig a = load_config(path.string());
    const ScenarioConfig b = load_config("builtin:paper-ring");
    EXPECT_EQ(a.model->pi(), b.model->pi());
    EXPECT_EQ(config_hash(a), config_hash(b));
    EXPECT_EQ(config_hash(a).size(), 16u);
    EXPECT_NE(config_hash(a), config_hash(load_config("builtin:paper")));
    std::filesystem::remove(path);
    EXPECT_THROW((void)load_config(path.string()), ConfigError);
}

TEST(Files, MalformedJsonIsConfigError) {
    const auto path = std::filesystem::temp_directory_path() / "drls_bad_config.json";
    {
        std::ofstream out(path);
        out << "{ \"model\": ";
    }
    EXPECT_THROW((void)load_config(path.string()), ConfigError);
    std::filesystem::remove(path);
}

TEST(Names, EstimatorRoundTrip) {
    for (EstimatorKind k : {EstimatorKind::drea, EstimatorKind::centralized, EstimatorKind::ekf}) {
        EXPECT_EQ(estimator_from_string(to_string(k)), k);
    }
}

TEST(Scenarios, ShippedFilesParse) {
    std::size_t count = 0;
    for (const auto& entry : std::filesystem::directory_iterator(DRLS_SCENARIO_DIR)) {
        if (entry.path().extension() != ".json") {
            continue;
        }
        SCOPED_TRACE(entry.path().string());
        const ScenarioConfig cfg = load_config(entry.path().string());
        ++count;
        const std::string stem = entry.path().stem().string();
        const auto names = builtin_names();
        if (std::find(names.begin(), names.end(), stem) != names.end()) {
            EXPECT_EQ(config_hash(cfg), config_hash(load_config("builtin:" + stem)));
        }
    }
    EXPECT_GE(count, 6u);
}
