// Copyright 2026 The qfb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include "qfb/config.hpp"

namespace qfb {
namespace {

std::string config_error(const Json &doc) {
    try {
        config_from_json(doc);
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Config);
        return e.what();
    }
    ADD_FAILURE() << "accepted " << doc.dump();
    return {};
}

TEST(Config, DefaultsRoundTrip) {
    auto d = ExperimentConfig::paper_defaults();
    Json j = config_to_json(d);
    EXPECT_EQ(j["profile"], "paper-defaults");
    EXPECT_EQ(j["shots"], 15000);
    EXPECT_EQ(j["qubits"]["target"]["f1"], 0.903);
    EXPECT_EQ(config_to_json(config_from_json(j)), j);
    EXPECT_EQ(config_to_json(config_from_json(Json::object())), j);
    EXPECT_NEAR(d.compensation_deg(), 14.4, 1e-12);
}

TEST(Config, UnknownKeysNamePath) {
    EXPECT_NE(config_error({{"qubits", {{"target", {{"t3_us", 1}}}}}}).find("qubits.target.t3_us"), std::string::npos);
    EXPECT_NE(config_error({{"bogus", 1}}).find("'bogus'"), std::string::npos);
}

TEST(Config, TypeChecks) {
    EXPECT_NE(config_error({{"shots", "many"}}).find("'shots'"), std::string::npos);
    EXPECT_NE(config_error({{"latency", {{"tau_dac_ns", 68.5}}}}).find("latency.tau_dac_ns"), std::string::npos);
    EXPECT_NE(config_error({{"gates", {{"mode", "fast"}}}}).find("gates.mode"), std::string::npos);
    EXPECT_NE(config_error({{"experiment", 3}}).find("experiment"), std::string::npos);
    config_error({{"shots", 0}});
}

TEST(Config, OverridesRoundTripIntoResolved) {
    Json doc = Json::object();
    apply_override(doc, "qubits.target.t2_star_us=30");
    apply_override(doc, "crosstalk.compensation_deg=12.5");
    apply_override(doc, "gates.mode=ideal");
    apply_override(doc, "seed=99");
    auto c = config_from_json(doc);
    Json r = config_to_json(c);
    EXPECT_EQ(r["qubits"]["target"]["t2_star_us"], 30.0);
    EXPECT_EQ(r["crosstalk"]["compensation_deg"], 12.5);
    EXPECT_EQ(r["gates"]["mode"], "ideal");
    EXPECT_EQ(r["seed"], 99);
    EXPECT_TRUE(c.ideal_gates);
}

TEST(Config, BadOverrides) {
    Json doc = Json::object();
    EXPECT_THROW(apply_override(doc, "novalue"), Error);
    EXPECT_THROW(apply_override(doc, "a..b=1"), Error);
    EXPECT_THROW(apply_override(doc, "latency.tau_x_ns=3"), Error);
    EXPECT_TRUE(doc.empty());
}

TEST(Config, LatencyMustFitCodec) {
    config_error({{"latency", {{"tau_ro_ns", 1024}}}});
    config_error({{"latency", {{"tau_ao_ns", 162}}}});
}

}  // namespace
}  // namespace qfb
