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


// JSON configuration: the built-in "paper-defaults" profile, strict merging of
// user files and --set overrides, and the resolved document written per run.

#ifndef QFB_CONFIG_HPP
#define QFB_CONFIG_HPP

#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qfb/error.hpp"
#include "qfb/experiments.hpp"

namespace qfb {

using Json = nlohmann::json;

namespace detail {

inline Json qubit_json(const QubitSetup &q) {
    return {{"label", q.params.label},
            {"f_qubit_ghz", q.params.f_qubit_ghz},
            {"f_resonator_ghz", q.params.f_resonator_ghz},
            {"t1_us", q.params.t1_us},
            {"t2_star_us", q.params.t2_star_us},
            {"thermal_population", q.params.thermal_population},
            {"f0", q.f0},
            {"f1", q.f1}};
}

inline QubitSetup qubit_from(const Json &j) {
    QubitSetup q;
    q.params.label = j.at("label").get<std::string>();
    q.params.f_qubit_ghz = j.at("f_qubit_ghz").get<double>();
    q.params.f_resonator_ghz = j.at("f_resonator_ghz").get<double>();
    q.params.t1_us = j.at("t1_us").get<double>();
    q.params.t2_star_us = j.at("t2_star_us").get<double>();
    q.params.thermal_population = j.at("thermal_population").get<double>();
    q.f0 = j.at("f0").get<double>();
    q.f1 = j.at("f1").get<double>();
    return q;
}

inline std::string json_kind(const Json &j) {
    if (j.is_boolean()) return "boolean";
    if (j.is_number_integer()) return "integer";
    if (j.is_number()) return "number";
    if (j.is_string()) return "string";
    if (j.is_object()) return "object";
    if (j.is_array()) return "array";
    return "null";
}

// Keys whose default is null but accept a number.
inline bool nullable_number(const std::string &path) { return path == "crosstalk.compensation_deg"; }

inline void check_value(const Json &def, const Json &val, const std::string &path) {
    bool ok;
    if (def.is_null()) {
        ok = nullable_number(path) && (val.is_null() || val.is_number());
    } else if (def.is_number_integer()) {
        ok = val.is_number_integer() || (val.is_number_float() && val.get<double>() == std::floor(val.get<double>()));
    } else if (def.is_number()) {
        ok = val.is_number();
    } else {
        ok = json_kind(def) == json_kind(val);
    }
    if (!ok) {
        throw Error(ErrorKind::Config, "config key '" + path + "': expected " + json_kind(def) + ", got " +
                                           json_kind(val));
    }
}

/// Merges `patch` into `base`; every key must already exist in `base`.
inline void merge_strict(Json &base, const Json &patch, const std::string &prefix) {
    if (!patch.is_object()) {
        throw Error(ErrorKind::Config, "config section '" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
    }
    for (auto it = patch.begin(); it != patch.end(); ++it) {
        std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
        if (!base.contains(it.key())) {
            throw Error(ErrorKind::Config, "unknown config key '" + path + "'");
        }
        Json &slot = base[it.key()];
        if (slot.is_object()) {
            merge_strict(slot, it.value(), path);
        } else {
            check_value(slot, it.value(), path);
            slot = it.value();
        }
    }
}

}  // namespace detail

/// The full configuration as JSON; every key a user may set appears here.
inline Json config_to_json(const ExperimentConfig &c) {
    Json j;
    j["profile"] = "paper-defaults";
    j["seed"] = c.seed;
    j["shots"] = c.shots;
    j["threads"] = c.threads;
    j["ideal"] = c.ideal;
    j["experiment"] = {{"rounds", c.rounds}, {"steps", c.steps}, {"theta_step_deg", c.theta_step_deg}};
    j["qubits"] = {{"signal", detail::qubit_json(c.signal)},
                   {"signal_biased", detail::qubit_json(c.signal_biased)},
                   {"target", detail::qubit_json(c.target)}};
    j["readout"] = {{"separation", c.separation}, {"histogram_bins", c.histogram_bins}};
    j["crosstalk"] = {{"enabled", c.crosstalk.enabled},
                      {"target_t2_star_us", c.crosstalk.target_t2_star_us},
                      {"stark_detuning_mhz", c.crosstalk.stark_detuning_mhz},
                      {"compensation_deg", c.crosstalk.compensation_deg ? Json(*c.crosstalk.compensation_deg) : Json()},
                      {"zcomp_ns", c.crosstalk.zcomp_ns}};
    const auto &l = c.latency;
    j["latency"] = {{"tau_adc_ns", l.tau_adc_ns}, {"tau_proc_ns", l.tau_proc_ns}, {"tau_tag_ns", l.tau_tag_ns},
                    {"tau_dac_ns", l.tau_dac_ns}, {"tau_ao_ns", l.tau_ao_ns},     {"tau_ro_ns", l.tau_ro_ns},
                    {"tau_gt_ns", l.tau_gt_ns}};
    j["gates"] = {{"mode", c.ideal_gates ? "ideal" : "finite"}, {"dt_ns", c.dt_ns}};
    return j;
}

inline ExperimentConfig config_from_json(const Json &in) {
    Json j = config_to_json(ExperimentConfig::paper_defaults());
    detail::merge_strict(j, in, "");
    if (j["profile"] != "paper-defaults") {
        throw Error(ErrorKind::Config, "config key 'profile': only 'paper-defaults' is available");
    }
    ExperimentConfig c;
    try {
        c.seed = j["seed"].get<std::uint64_t>();
        c.shots = j["shots"].get<int>();
        c.threads = j["threads"].get<unsigned>();
        c.ideal = j["ideal"].get<bool>();
        c.rounds = j["experiment"]["rounds"].get<int>();
        c.steps = j["experiment"]["steps"].get<int>();
        c.theta_step_deg = j["experiment"]["theta_step_deg"].get<double>();
        c.signal = detail::qubit_from(j["qubits"]["signal"]);
        c.signal_biased = detail::qubit_from(j["qubits"]["signal_biased"]);
        c.target = detail::qubit_from(j["qubits"]["target"]);
        c.separation = j["readout"]["separation"].get<double>();
        c.histogram_bins = j["readout"]["histogram_bins"].get<int>();
        const Json &x = j["crosstalk"];
        c.crosstalk.enabled = x["enabled"].get<bool>();
        c.crosstalk.target_t2_star_us = x["target_t2_star_us"].get<double>();
        c.crosstalk.stark_detuning_mhz = x["stark_detuning_mhz"].get<double>();
        if (!x["compensation_deg"].is_null()) {
            c.crosstalk.compensation_deg = x["compensation_deg"].get<double>();
        }
        c.crosstalk.zcomp_ns = x["zcomp_ns"].get<int>();
        const Json &l = j["latency"];
        c.latency.tau_adc_ns = l["tau_adc_ns"].get<std::int64_t>();
        c.latency.tau_proc_ns = l["tau_proc_ns"].get<std::int64_t>();
        c.latency.tau_tag_ns = l["tau_tag_ns"].get<std::int64_t>();
        c.latency.tau_dac_ns = l["tau_dac_ns"].get<std::int64_t>();
        c.latency.tau_ao_ns = l["tau_ao_ns"].get<std::int64_t>();
        c.latency.tau_ro_ns = l["tau_ro_ns"].get<std::int64_t>();
        c.latency.tau_gt_ns = l["tau_gt_ns"].get<std::int64_t>();
        std::string mode = j["gates"]["mode"].get<std::string>();
        if (mode != "ideal" && mode != "finite") {
            throw Error(ErrorKind::Config, "config key 'gates.mode': expected 'ideal' or 'finite'");
        }
        c.ideal_gates = mode == "ideal";
        c.dt_ns = j["gates"]["dt_ns"].get<double>();
    } catch (const nlohmann::json::exception &e) {
        throw Error(ErrorKind::Config, std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

/// Applies one `a.b.c=value` override. The value is parsed as JSON and taken
/// as a plain string when that fails.
inline void apply_override(Json &doc, const std::string &assignment) {
    auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error(ErrorKind::Config, "override '" + assignment + "' is not of the form key=value");
    }
    std::string key = assignment.substr(0, eq);
    std::string text = assignment.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        value = text;
    }
    Json patch = value;
    std::size_t end = key.size();
    while (true) {
        std::size_t dot = key.rfind('.', end - 1);
        std::size_t begin = dot == std::string::npos ? 0 : dot + 1;
        std::string part = key.substr(begin, end - begin);
        if (part.empty()) {
            throw Error(ErrorKind::Config, "override key '" + key + "' has an empty component");
        }
        patch = Json{{part, patch}};
        if (dot == std::string::npos) {
            break;
        }
        end = dot;
    }
    // Validate against the defaults' shape before touching the document.
    Json shape = config_to_json(ExperimentConfig::paper_defaults());
    detail::merge_strict(shape, patch, "");
    doc.merge_patch(patch);
}

inline Json read_json_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorKind::Io, "cannot open '" + path + "'");
    }
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) {
        throw Error(ErrorKind::Config, "'" + path + "' is not valid JSON");
    }
    return j;
}

/// Loads an optional config file and applies overrides in order.
inline ExperimentConfig load_config(const std::string &path, const std::vector<std::string> &overrides) {
    Json doc = path.empty() ? Json::object() : read_json_file(path);
    if (!doc.is_object()) {
        throw Error(ErrorKind::Config, "config root must be an object");
    }
    for (const auto &o : overrides) {
        apply_override(doc, o);
    }
    return config_from_json(doc);
}

}  // namespace qfb

#endif  // QFB_CONFIG_HPP
