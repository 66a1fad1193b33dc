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


// Run artifacts: JSON summaries, CSV tables and the timing report. Every writer
// is a pure function of the result, so equal results give equal bytes.

#ifndef QFB_REPORT_HPP
#define QFB_REPORT_HPP

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "qfb/config.hpp"
#include "qfb/experiments.hpp"
#include "qfb/isa.hpp"

namespace qfb {

namespace fs = std::filesystem;

inline Json bloch_json(const BlochVector &b) { return {{"x", b.x}, {"y", b.y}, {"z", b.z}}; }

inline Json qst_json(const QSTResult &q) {
    return {{"bloch", bloch_json(q.bloch)},
            {"theta_deg", q.angles.theta_deg},
            {"phi_deg", q.angles.phi_deg},
            {"shots_used", q.shots_used},
            {"group", q.group},
            {"percentage", q.percentage}};
}

inline Json mode_json(const ModeFit &m) {
    return {{"mean_i", m.mean}, {"sigma", m.sigma}, {"weight", m.weight}, {"mean_stderr", m.mean_stderr}};
}

inline Json populations_json(const Populations &p) { return Json::array({p.p0, p.p1}); }

inline Json reset_summary(const ResetResult &r) {
    Json fits = Json::array();
    for (const auto &f : r.fits) {
        fits.push_back({{"right", mode_json(f.right)}, {"left", mode_json(f.left)}});
    }
    Json ground = Json::array();
    for (double p : r.excited_probability) {
        ground.push_back(1 - p);
    }
    return {{"experiment", "reset"},
            {"shots", r.shots},
            {"rounds", r.excited_probability.size() - 1},
            {"excited_probability", r.excited_probability},
            {"excited_stderr", r.excited_stderr},
            {"ground_probability", ground},
            {"exact_excited_probability", r.exact_excited},
            {"histogram_fits", fits}};
}

inline Json stabilization_summary(const StabilizationResult &r) {
    Json rounds = Json::array();
    for (const auto &q : r.rounds) {
        rounds.push_back({{"round", q.round},
                          {"qst", qst_json(q.qst)},
                          {"fidelity", q.fidelity},
                          {"theta_error_deg", q.theta_error_deg},
                          {"phi_error_deg", q.phi_error_deg}});
    }
    return {{"experiment", "stabilize"}, {"shots_per_basis", r.shots_per_basis}, {"rounds", rounds}};
}

inline Json feedforward_summary(const FeedforwardResult &r) {
    return {{"experiment", "feedforward"},
            {"shots", r.shots},
            {"signal_measured", populations_json(r.signal_measured)},
            {"target_measured", populations_json(r.target_measured)},
            {"target_p1_stderr", r.target_p1_stderr},
            {"target_reference", populations_json(r.target_reference)},
            {"mixture_prediction", populations_json(r.mixture)},
            {"calibrated_prediction", populations_json(r.calibrated_prediction)},
            {"target_corrected", populations_json(r.target_corrected.populations)},
            {"target_corrected_clamped", r.target_corrected.clamped}};
}

inline Json random_walk_summary(const RandomWalkResult &r) {
    Json groups = Json::array();
    std::map<int, double> merged_mc, merged_exact;
    for (const auto &g : r.groups) {
        Json j = {{"history", g.history},
                  {"ideal_angle_deg", g.ideal_angle_deg},
                  {"shots", g.shots},
                  {"percentage", g.percentage},
                  {"exact_percentage", g.exact_percentage},
                  {"exact_bloch", bloch_json(g.exact_bloch)},
                  {"exact_angle_deg", g.exact_angle_deg},
                  {"exact_error_deg", g.exact_error_deg}};
        if (g.mc) {
            j["qst"] = qst_json(*g.mc);
            j["angle_deg"] = g.mc_angle_deg;
            j["angle_error_deg"] = g.mc_error_deg;
        } else {
            j["qst"] = nullptr;
        }
        groups.push_back(j);
        int net = static_cast<int>(std::count(g.history.begin(), g.history.end(), '0')) -
              static_cast<int>(std::count(g.history.begin(), g.history.end(), '1'));
        merged_mc[net] += g.percentage;
        merged_exact[net] += g.exact_percentage;
    }
    Json merged = Json::array();
    for (const auto &[net, pct] : merged_mc) {
        merged.push_back({{"net_steps", net}, {"percentage", pct}, {"exact_percentage", merged_exact[net]}});
    }
    return {{"experiment", "randomwalk"},
            {"steps", r.steps},
            {"shots_per_basis", r.shots_per_basis},
            {"signal_p0", r.signal_p0},
            {"step_duration_ns", r.step_duration_ns},
            {"groups", groups},
            {"merged_by_net_steps", merged}};
}

/// Plain-text latency report; the feedback total is on its own line.
inline std::string timing_report(const TimingResult &t) {
    const auto &l = t.latency;
    const auto &b = t.loopback;
    std::ostringstream os;
    os << "feedback latency chain\n"
       << "  tau_adc  " << l.tau_adc_ns << " ns\n"
       << "  tau_proc " << l.tau_proc_ns << " ns\n"
       << "  tau_tag  " << l.tau_tag_ns << " ns\n"
       << "  tau_dac  " << l.tau_dac_ns << " ns\n"
       << "  total " << b.total_ns << " ns\n"
       << "loopback " << b.loopback_ns << " ns (tau_dac + record + tau_adc)\n"
       << "dac decomposition " << b.dac_sum_ns << " ns, adc decomposition " << b.adc_sum_ns << " ns\n"
       << "simulated round: conditional pulse reaches the qubit " << t.measured_chain_ns
       << " ns after the readout signal enters the ADC\n"
       << "tau_ao " << l.tau_ao_ns << " ns, tau_ro " << l.tau_ro_ns << " ns, tau_gt " << l.tau_gt_ns << " ns\n";
    if (b.consistent()) {
        os << "consistency: ok\n";
    } else {
        for (const auto &v : b.violations) {
            os << "consistency violation: " << v << '\n';
        }
    }
    return os.str();
}

inline Json timing_summary(const TimingResult &t) {
    const auto &l = t.latency;
    return {{"experiment", "timing"},
            {"tau_adc_ns", l.tau_adc_ns},
            {"tau_proc_ns", l.tau_proc_ns},
            {"tau_tag_ns", l.tau_tag_ns},
            {"tau_dac_ns", l.tau_dac_ns},
            {"tau_ao_ns", l.tau_ao_ns},
            {"tau_ro_ns", l.tau_ro_ns},
            {"tau_gt_ns", l.tau_gt_ns},
            {"total_ns", t.loopback.total_ns},
            {"loopback_ns", t.loopback.loopback_ns},
            {"simulated_chain_ns", t.measured_chain_ns},
            {"demod_to_gate_ns", t.demod_to_gate_ns},
            {"violations", t.loopback.violations}};
}

// ---- file output ------------------------------------------------------------

inline std::ofstream open_output(const fs::path &path, bool binary = false) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) {
        throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
    }
    return os;
}

inline void write_text(const fs::path &path, const std::string &text) { open_output(path) << text; }

inline void write_json(const fs::path &path, const Json &j) { open_output(path) << j.dump(2) << '\n'; }

inline void write_timeline(const fs::path &dir, const EventTimeline &tl) {
    auto csv = open_output(dir / "timeline.csv");
    tl.write_csv(csv);
    auto js = open_output(dir / "timeline.json");
    tl.write_trace_json(js);
}

inline void write_reset_outputs(const fs::path &dir, const ResetResult &r) {
    auto h = open_output(dir / "histograms.csv");
    h << "round,bin_center,count\n";
    for (std::size_t k = 0; k < r.histograms.size(); ++k) {
        const auto &hist = r.histograms[k];
        for (std::size_t b = 0; b < hist.counts.size(); ++b) {
            h << k << ',' << hist.bin_center(b) << ',' << hist.counts[b] << '\n';
        }
    }
    auto s = open_output(dir / "shots.csv");
    s << "shot,round,i,q,state_label\n";
    s.precision(9);
    for (std::size_t shot = 0; shot < r.shots; ++shot) {
        for (std::size_t k = 0; k < r.iq.size(); ++k) {
            const auto &x = r.iq[k][shot];
            s << shot << ',' << k << ',' << x.iq.i << ',' << x.iq.q << ',' << x.state_label << '\n';
        }
    }
    auto p = open_output(dir / "probabilities.csv");
    p.precision(9);
    p << "round,excited_probability,stderr,exact\n";
    for (std::size_t k = 0; k < r.excited_probability.size(); ++k) {
        p << k << ',' << r.excited_probability[k] << ',' << r.excited_stderr[k] << ',';
        if (k < r.exact_excited.size()) {
            p << r.exact_excited[k];
        }
        p << '\n';
    }
}

inline void write_stabilization_outputs(const fs::path &dir, const StabilizationResult &r) {
    auto b = open_output(dir / "bloch.csv");
    b.precision(9);
    b << "round,x,y,z,theta_deg,phi_deg,fidelity\n";
    for (const auto &q : r.rounds) {
        b << q.round << ',' << q.qst.bloch.x << ',' << q.qst.bloch.y << ',' << q.qst.bloch.z << ','
          << q.qst.angles.theta_deg << ',' << q.qst.angles.phi_deg << ',' << q.fidelity << '\n';
    }
}

inline void write_feedforward_outputs(const fs::path &dir, const FeedforwardResult &r) {
    auto s = open_output(dir / "shots.csv");
    s << "shot,signal_tag,target_tag\n";
    for (std::size_t k = 0; k < r.shot_tags.size(); ++k) {
        s << k << ',' << r.shot_tags[k][0] << ',' << r.shot_tags[k][1] << '\n';
    }
}

inline void write_random_walk_outputs(const fs::path &dir, const RandomWalkResult &r) {
    auto b = open_output(dir / "bloch.csv");
    b.precision(9);
    b << "history,percentage,x,y,z,angle_deg,exact_x,exact_y,exact_z,exact_angle_deg,ideal_angle_deg\n";
    for (const auto &g : r.groups) {
        b << g.history << ',' << g.percentage << ',';
        if (g.mc) {
            b << g.mc->bloch.x << ',' << g.mc->bloch.y << ',' << g.mc->bloch.z << ',' << g.mc_angle_deg;
        } else {
            b << ",,,";
        }
        b << ',' << g.exact_bloch.x << ',' << g.exact_bloch.y << ',' << g.exact_bloch.z << ',' << g.exact_angle_deg
          << ',' << g.ideal_angle_deg << '\n';
    }
}

}  // namespace qfb

#endif  // QFB_REPORT_HPP
