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


// Feedback experiments run end to end: each experiment is written as an
// assembly program, assembled, and executed shot by shot on BoardEngine with
// the physics backend. Density-level variants enumerate tag histories in
// forced-readout mode to get exact conditional states and probabilities.

#ifndef QFB_EXPERIMENTS_HPP
#define QFB_EXPERIMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qfb/assembler.hpp"
#include "qfb/backend.hpp"
#include "qfb/engine.hpp"
#include "qfb/error.hpp"
#include "qfb/physics.hpp"
#include "qfb/readout.hpp"
#include "qfb/rng.hpp"
#include "qfb/tomography.hpp"

namespace qfb {

struct QubitSetup {
    QubitParams params;
    double f0 = 1;  // ground-state readout fidelity
    double f1 = 1;  // excited-state readout fidelity

    ConfusionMatrix confusion() const { return {f0, f1}; }
};

struct CrosstalkConfig {
    bool enabled = true;
    /// Target T2* while the signal qubit's readout pulse is on.
    double target_t2_star_us = 9.0;
    double stark_detuning_mhz = 0.05;
    /// Z-compensation angle; defaults to the phase accumulated over one readout.
    std::optional<double> compensation_deg;
    int zcomp_ns = 10;
};

struct ExperimentConfig {
    std::uint64_t seed = 7;
    int shots = 15000;
    unsigned threads = 1;
    bool ideal = false;  // no decoherence, perfect readout, no residual excitation

    int rounds = 6;
    int steps = 3;
    double theta_step_deg = 22.5;

    QubitSetup signal;         // sweet spot (reset, stabilization)
    QubitSetup signal_biased;  // biased away from the sweet spot (feed-forward, random walk)
    QubitSetup target;

    double separation = 2.0;
    int histogram_bins = 81;
    CrosstalkConfig crosstalk;
    LatencyModel latency;
    bool ideal_gates = false;
    double dt_ns = 1.0;

    double compensation_deg() const {
        return crosstalk.compensation_deg.value_or(
            stark_phase_deg(crosstalk.stark_detuning_mhz, static_cast<double>(latency.tau_ro_ns)));
    }

    static ExperimentConfig paper_defaults() {
        ExperimentConfig c;
        c.signal = {{"QA", 5.050, 6.521, 16.0, 20.0, 0.02}, 0.961, 0.931};
        c.signal_biased = {{"QA-biased", 4.840, 6.521, 9.3, 1.2, 0.02}, 0.961, 0.931};
        c.target = {{"QB", 5.079, 6.438, 19.0, 33.0, 0.02}, 0.973, 0.903};
        return c;
    }

    void validate() const {
        auto fail = [](const std::string &m) { throw Error(ErrorKind::Config, m); };
        if (shots < 1) {
            fail("shots must be at least 1");
        }
        if (threads < 1) {
            fail("threads must be at least 1");
        }
        if (rounds < 1 || rounds > 60) {
            fail("rounds must lie in [1, 60]");
        }
        if (steps < 1 || steps > 15) {
            fail("steps must lie in [1, 15]");
        }
        if (!std::isfinite(theta_step_deg)) {
            fail("theta_step_deg must be finite");
        }
        for (const QubitSetup *q : {&signal, &signal_biased, &target}) {
            try {
                q->params.validate();
            } catch (const Error &e) {
                fail(e.what());
            }
            if (!(q->f0 > 0.5 && q->f0 <= 1 && q->f1 > 0.5 && q->f1 <= 1)) {
                fail("qubit '" + q->params.label + "': readout fidelities must lie in (0.5, 1]");
            }
        }
        if (!(separation > 0) || histogram_bins < 2 || !(dt_ns > 0)) {
            fail("separation and dt_ns must be positive, histogram_bins at least 2");
        }
        if (!(crosstalk.target_t2_star_us > 0) || crosstalk.zcomp_ns < 0) {
            fail("crosstalk target T2* must be positive and zcomp_ns non-negative");
        }
        try {
            latency.validate();
        } catch (const Error &e) {
            fail(e.what());
        }
        if (latency.tau_ro_ns % 4 || latency.tau_ao_ns % 4 || latency.tau_ro_ns / 4 > 255 ||
            latency.tau_ao_ns / 4 > 0xFFFF || latency.tau_ro_ns == 0) {
            fail("tau_ro_ns must be a positive multiple of 4 up to 1020 ns and tau_ao_ns a multiple of 4");
        }
        if (latency.tau_gt_ns < 1) {
            fail("tau_gt_ns must be at least 1 ns");
        }
    }
};

using ChannelModels = std::vector<std::optional<QubitModel>>;

/// Physics model of one qubit under `cfg`; `crosstalk` adds the variant used
/// while another channel is being read out.
inline QubitModel make_qubit_model(const QubitSetup &q, const ExperimentConfig &cfg, bool crosstalk = false) {
    QubitModel m;
    double tau_ro = static_cast<double>(cfg.latency.tau_ro_ns);
    m.ideal_gates = cfg.ideal || cfg.ideal_gates;
    if (cfg.ideal) {
        m.initial = DensityMatrix::ground();
        m.nominal = LindbladModel::closed();
        m.readout = ReadoutModel::perfect(tau_ro);
    } else {
        m.initial = DensityMatrix::thermal(q.params.thermal_population);
        m.nominal = LindbladModel::from_params(q.params);
        try {
            m.readout = calibrate_model(q.f0, q.f1, cfg.separation, tau_ro, q.params.thermal_population);
        } catch (const Error &e) {
            throw Error(ErrorKind::Calibration, "qubit '" + q.params.label + "': " + e.what());
        }
    }
    if (crosstalk && cfg.crosstalk.enabled) {
        LindbladModel v = m.nominal;
        v.detuning_mhz = cfg.crosstalk.stark_detuning_mhz;
        if (!cfg.ideal) {
            v.gamma_phi_per_us = 2.0 / cfg.crosstalk.target_t2_star_us;
        }
        m.during_other_readout = v;
    }
    return m;
}

// ---- program generation -----------------------------------------------------

namespace detail {

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

struct Timing {
    std::int64_t delay = 0;   // cycles
    std::int64_t length = 0;  // cycles
    std::int64_t listen = 0;  // ns from trigger to tag arrival
    std::int64_t gate = 0;    // ns
};

inline Timing timing(const ExperimentConfig &cfg) {
    Timing t;
    t.delay = cfg.latency.tau_ao_ns / 4;
    t.length = cfg.latency.tau_ro_ns / 4;
    t.listen = tag_arrival_offset(cfg.latency, static_cast<std::uint32_t>(t.delay), static_cast<std::uint32_t>(t.length));
    t.gate = cfg.latency.tau_gt_ns;
    return t;
}

/// Measure lines covering `passes` rounds on `mask`, split at the 4-bit repetition limit.
inline void measure_lines(std::ostringstream &os, unsigned mask, int passes, const Timing &t) {
    while (passes > 0) {
        int rep = std::min(passes, 15);
        os << "measure mask=0x" << std::hex << mask << std::dec << " rep=" << rep;
        if (mask) {
            os << " delay=" << t.delay << " len=" << t.length;
        }
        os << '\n';
        passes -= rep;
    }
}

inline void standard_waveforms(std::ostringstream &os, const Timing &t) {
    std::string g = std::to_string(t.gate);
    os << "waveform pi rect=+y:180:" << g << '\n'
       << "waveform ry90 rect=+y:90:" << g << '\n'
       << "waveform rym90 rect=-y:90:" << g << '\n'
       << "waveform rx90 rect=+x:90:" << g << '\n'
       << "waveform rxm90 rect=-x:90:" << g << '\n'
       << "waveform wait zeros=" << g << '\n'
       << "waveform listen zeros=" << t.listen << '\n';
}

inline std::string_view tomography_waveform(QstBasis b) {
    switch (b) {
        case QstBasis::Z: return "wait";
        case QstBasis::YPlus: return "ry90";
        case QstBasis::YMinus: return "rym90";
        case QstBasis::XPlus: return "rx90";
        case QstBasis::XMinus: return "rxm90";
    }
    return "wait";
}

/// Feedback block: wait for the tag, then play `on0` or `on1`, then `tail`.
inline void conditional_block(std::ostringstream &os, const std::string &id, const std::string &listen,
                              const std::string &on0, const std::string &on1, std::string_view tail) {
    os << id << ": play " << listen << " then branch " << id << "_0 " << id << "_1\n"
       << id << "_0: play " << on0 << " then jump " << id << "_end\n"
       << id << "_1: play " << on1 << " then next\n"
       << id << "_end: play " << tail << " then halt\n";
}

}  // namespace detail

/// Active reset: prepare |1>, then `rounds` of measure + conditional pi, and a
/// final measurement.
inline std::string reset_program(const ExperimentConfig &cfg) {
    auto t = detail::timing(cfg);
    std::ostringstream os;
    os << "# active reset, " << cfg.rounds << " feedback rounds\n"
       << "threshold 1 0\n";
    detail::measure_lines(os, 0x00, 1, t);
    detail::measure_lines(os, 0x01, cfg.rounds + 1, t);
    os << "board qubit=1 tagselect=1\n";
    detail::standard_waveforms(os, t);
    os << "play pi then halt\n";
    for (int r = 0; r < cfg.rounds; ++r) {
        detail::conditional_block(os, "r" + std::to_string(r), "listen", "wait", "pi", "idle");
    }
    os << "halt\n";
    return os.str();
}

/// Stabilization to (|0>+|1>)/sqrt2 for `rounds` rounds, then tomography setting `basis`.
inline std::string stabilization_program(const ExperimentConfig &cfg, int rounds, QstBasis basis) {
    auto t = detail::timing(cfg);
    std::ostringstream os;
    os << "# state stabilization, " << rounds << " rounds, tomography " << qst_basis_name(basis) << "\n"
       << "threshold 1 0\n";
    detail::measure_lines(os, 0x00, 1, t);
    detail::measure_lines(os, 0x01, rounds, t);
    detail::measure_lines(os, 0x01, 1, t);
    os << "board qubit=1 tagselect=1\n";
    detail::standard_waveforms(os, t);
    auto tomo = detail::tomography_waveform(basis);
    if (rounds == 0) {
        os << "play ry90 then next\nplay " << tomo << " then halt\n";
    } else {
        os << "play ry90 then halt\n";
    }
    for (int r = 0; r < rounds; ++r) {
        detail::conditional_block(os, "r" + std::to_string(r), "listen", "ry90", "rym90",
                                  r + 1 == rounds ? tomo : std::string_view("idle"));
    }
    os << "halt\n";
    return os.str();
}

/// Feed-forward: signal (channel 1) at +x, target (channel 2) flipped when the
/// signal reads 1, then the target is measured.
inline std::string feedforward_program(const ExperimentConfig &cfg, double signal_angle_deg = 90) {
    auto t = detail::timing(cfg);
    std::ostringstream os;
    os << "# feed-forward\nthreshold 1 0\nthreshold 2 0\n";
    detail::measure_lines(os, 0x00, 1, t);
    detail::measure_lines(os, 0x01, 1, t);
    detail::measure_lines(os, 0x02, 1, t);
    os << "board qubit=1 tagselect=1\n";
    detail::standard_waveforms(os, t);
    os << "waveform prep rect=+y:" << detail::num(signal_angle_deg) << ":" << t.gate << "\n"
       << "play prep then halt\nhalt\nhalt\n"
       << "board qubit=2 tagselect=1\n";
    detail::standard_waveforms(os, t);
    os << "play wait then halt\n";
    detail::conditional_block(os, "ff", "listen", "wait", "pi", "idle");
    os << "halt\n";
    return os.str();
}

/// Random walk of the target (channel 2) driven by the stabilized signal
/// (channel 1): per step the target gets Ry(+theta) on tag 0, Ry(-theta) on tag 1,
/// with a Z pulse cancelling the Stark phase right after the signal readout.
inline std::string random_walk_program(const ExperimentConfig &cfg, int steps, QstBasis basis) {
    auto t = detail::timing(cfg);
    const auto &lat = cfg.latency;
    std::int64_t pre = lat.tau_ro_ns - lat.tau_dac_ns;  // Z pulse reaches the qubit at ro_end
    std::int64_t zc = cfg.crosstalk.zcomp_ns;
    std::int64_t post = t.listen - pre - zc;
    if (pre < 1 || post < 1) {
        throw Error(ErrorKind::Config, "latency settings leave no room for the Stark compensation pulse");
    }
    std::ostringstream os;
    os << "# random walk, " << steps << " steps, tomography " << qst_basis_name(basis) << "\n"
       << "threshold 1 0\nthreshold 2 0\n";
    detail::measure_lines(os, 0x00, 1, t);
    detail::measure_lines(os, 0x01, steps, t);
    detail::measure_lines(os, 0x02, 1, t);
    os << "board qubit=1 tagselect=1\n";
    detail::standard_waveforms(os, t);
    os << "play ry90 then halt\n";
    for (int k = 0; k < steps; ++k) {
        detail::conditional_block(os, "s" + std::to_string(k), "listen", "ry90", "rym90", "idle");
    }
    os << "halt\n"
       << "board qubit=2 tagselect=1\n";
    detail::standard_waveforms(os, t);
    std::string g = std::to_string(t.gate);
    os << "waveform step_p rect=+y:" << detail::num(cfg.theta_step_deg) << ":" << g << '\n'
       << "waveform step_m rect=-y:" << detail::num(cfg.theta_step_deg) << ":" << g << '\n'
       << "waveform pre zeros=" << pre << '\n'
       << "waveform post zeros=" << post << '\n';
    if (zc > 0) {
        os << "waveform zc rect=+z:" << detail::num(-cfg.compensation_deg()) << ":" << zc << '\n';
    }
    os << "play wait then halt\n";
    auto tomo = detail::tomography_waveform(basis);
    for (int k = 0; k < steps; ++k) {
        std::string id = "t" + std::to_string(k);
        os << id << "_pre: play pre then next\n";
        if (zc > 0) {
            os << "play zc then next\n";
        }
        os << "play post then branch " << id << "_p " << id << "_m\n"
           << id << "_p: play step_p then jump " << id << "_end\n"
           << id << "_m: play step_m then next\n"
           << id << "_end: play " << (k + 1 == steps ? tomo : std::string_view("idle")) << " then halt\n";
    }
    os << "halt\n";
    return os.str();
}

// ---- shot execution ---------------------------------------------------------

inline EngineOptions engine_options(const ExperimentConfig &cfg) {
    EngineOptions o;
    o.latency = cfg.latency;
    return o;
}

/// Runs `shots` independent shots. Shot i draws from the stream derived from
/// (seed, stream ids, i); `extract` turns each shot into a T stored at index i,
/// so results do not depend on the thread count.
template <class T, class Extract>
std::vector<T> simulate_shots(const BoardEngine &engine, const ChannelModels &channels, const ExperimentConfig &cfg,
                              std::initializer_list<std::uint64_t> stream, std::size_t shots, Extract extract) {
    std::uint64_t base = derive_seed(cfg.seed, stream);
    std::vector<T> out(shots);
    unsigned workers = worker_count(shots, cfg.threads);
    std::vector<PropagatorCache> caches(workers, PropagatorCache(cfg.dt_ns));
    parallel_for(shots, workers, [&](std::size_t i, unsigned w) {
        ShotRng rng(base, {static_cast<std::uint64_t>(i)});
        PhysicsBackend backend(channels, caches[w], &rng);
        ShotResult r = engine.run(backend);
        out[i] = extract(r, backend);
    });
    return out;
}

/// Shot 0 of a stream, re-run with the timeline recorded.
inline EventTimeline sample_timeline(const BoardEngine &engine, const ChannelModels &channels,
                                     const ExperimentConfig &cfg, std::initializer_list<std::uint64_t> stream) {
    PropagatorCache cache(cfg.dt_ns);
    ShotRng rng(derive_seed(cfg.seed, stream), {0});
    PhysicsBackend backend(channels, cache, &rng);
    ShotResult r = engine.run(backend, true);
    r.timeline.validate(cfg.latency.tau_tag_ns);
    return r.timeline;
}

struct ForcedRun {
    double weight = 0;
    PhysicsBackend backend;
};

/// Runs once with the tags of `channel` fixed to `history`.
inline ForcedRun run_forced(const BoardEngine &engine, const ChannelModels &channels, PropagatorCache &cache,
                            int channel, const std::vector<int> &history) {
    PhysicsBackend backend(channels, cache, nullptr);
    backend.force_tags(channel, history);
    engine.run(backend);
    return {backend.weight(), std::move(backend)};
}

inline std::vector<int> history_bits(std::uint32_t code, int n) {
    std::vector<int> h(n);
    for (int k = 0; k < n; ++k) {
        h[k] = static_cast<int>(code >> (n - 1 - k) & 1);
    }
    return h;
}

inline std::string history_label(const std::vector<int> &h) {
    std::string s;
    for (int b : h) {
        s += static_cast<char>('0' + b);
    }
    return s;
}

enum StreamId : std::uint64_t { kStreamReset = 1, kStreamStabilize = 2, kStreamFeedforward = 3, kStreamWalk = 4 };

inline double binomial_stderr(double p, std::size_t n) { return n ? std::sqrt(p * (1 - p) / n) : 0.0; }

// ---- reset ------------------------------------------------------------------

struct ResetResult {
    std::size_t shots = 0;
    std::vector<double> excited_probability;  // measured, per readout (initial + rounds)
    std::vector<double> excited_stderr;
    std::vector<double> exact_excited;        // exact tag-1 probability by enumeration (empty if too many rounds)
    std::vector<Histogram> histograms;
    std::vector<TwoModeFit> fits;
    std::vector<std::vector<LabeledIQ>> iq;
    EventTimeline timeline;

    double ground_after_last() const { return 1 - excited_probability.back(); }
};

inline ResetResult run_reset(const ExperimentConfig &cfg) {
    cfg.validate();
    BoardEngine engine(assemble(reset_program(cfg), "reset"), engine_options(cfg));
    ChannelModels channels(kChannels);
    channels[0] = make_qubit_model(cfg.signal, cfg);
    const int passes = cfg.rounds + 1;
    auto shots = simulate_shots<std::vector<LabeledIQ>>(
        engine, channels, cfg, {kStreamReset}, static_cast<std::size_t>(cfg.shots),
        [&](const ShotResult &r, const PhysicsBackend &) {
            std::vector<LabeledIQ> v;
            for (const auto &round : r.rounds) {
                if (round.mask) {
                    v.push_back({round.readouts[0].iq, round.readouts[0].tag});
                }
            }
            return v;
        });
    ResetResult res;
    res.shots = shots.size();
    res.iq.assign(passes, {});
    for (const auto &s : shots) {
        for (int k = 0; k < passes; ++k) {
            res.iq[k].push_back(s[k]);
        }
    }
    const ReadoutModel &rm = channels[0]->readout;
    for (int k = 0; k < passes; ++k) {
        std::size_t ones = std::count_if(res.iq[k].begin(), res.iq[k].end(),
                                         [](const LabeledIQ &x) { return x.state_label == 1; });
        double p = static_cast<double>(ones) / res.shots;
        res.excited_probability.push_back(p);
        res.excited_stderr.push_back(binomial_stderr(p, res.shots));
        std::vector<IQPoint> pts;
        for (const auto &x : res.iq[k]) {
            pts.push_back(x.iq);
        }
        double pad = 4 * std::max(rm.sigma, 1e-3);
        res.histograms.push_back(build_histogram(pts, cfg.histogram_bins, rm.center1.i - pad, rm.center0.i + pad));
        if (pts.size() >= 4) {
            res.fits.push_back(fit_two_modes(pts));
        }
    }
    if (passes <= 12) {
        PropagatorCache cache(cfg.dt_ns);
        res.exact_excited.assign(passes, 0.0);
        for (std::uint32_t code = 0; code < (1u << passes); ++code) {
            auto h = history_bits(code, passes);
            auto run = run_forced(engine, channels, cache, 0, h);
            for (int k = 0; k < passes; ++k) {
                res.exact_excited[k] += h[k] * run.weight;
            }
        }
    }
    res.timeline = sample_timeline(engine, channels, cfg, {kStreamReset});
    return res;
}

// ---- stabilization ----------------------------------------------------------

struct RoundQst {
    int round = 0;
    QSTResult qst;
    double fidelity = 0;
    double theta_error_deg = 0;
    double phi_error_deg = 0;
};

/// Fidelity with (|0>+|1>)/sqrt2 from a Bloch vector.
inline double plus_state_fidelity(const BlochVector &b) { return 0.5 * (1 + b.x); }

struct StabilizationResult {
    std::size_t shots_per_basis = 0;
    std::vector<RoundQst> rounds;
    EventTimeline timeline;
};

inline StabilizationResult run_stabilization(const ExperimentConfig &cfg) {
    cfg.validate();
    ChannelModels channels(kChannels);
    channels[0] = make_qubit_model(cfg.signal, cfg);
    std::optional<ConfusionMatrix> cm;
    if (!cfg.ideal) {
        cm = cfg.signal.confusion();
    }
    StabilizationResult res;
    res.shots_per_basis = static_cast<std::size_t>(cfg.shots);
    for (int r = 0; r <= cfg.rounds; ++r) {
        QstData data;
        for (QstBasis b : kQstBases) {
            BoardEngine engine(assemble(stabilization_program(cfg, r, b), "stabilize"), engine_options(cfg));
            auto tags = simulate_shots<char>(
                engine, channels, cfg, {kStreamStabilize, static_cast<std::uint64_t>(r), static_cast<std::uint64_t>(b)},
                res.shots_per_basis, [](const ShotResult &s, const PhysicsBackend &) {
                    return static_cast<char>(s.rounds.back().readouts[0].tag);
                });
            double p1 = static_cast<double>(std::count(tags.begin(), tags.end(), 1)) / tags.size();
            data.set(b, {1 - p1, p1}, tags.size());
            if (r == cfg.rounds && b == QstBasis::Z) {
                res.timeline = sample_timeline(engine, channels, cfg,
                                               {kStreamStabilize, static_cast<std::uint64_t>(r), 0});
            }
        }
        RoundQst rq;
        rq.round = r;
        rq.qst = qst_reconstruct(data, cm);
        rq.fidelity = plus_state_fidelity(rq.qst.bloch);
        rq.theta_error_deg = rq.qst.angles.theta_deg - 90;
        rq.phi_error_deg = wrap_degrees_180(rq.qst.angles.phi_deg);
        res.rounds.push_back(rq);
    }
    return res;
}

// ---- feed-forward -----------------------------------------------------------

struct FeedforwardResult {
    std::size_t shots = 0;
    Populations signal_measured;
    Populations target_measured;
    double target_p1_stderr = 0;
    Populations target_reference;      // target readout of |0>: (F0, 1 - F0)
    Populations mixture;               // mixture_prediction(reference, signal)
    Populations calibrated_prediction; // mixture mapped through the target's readout errors
    CorrectedPopulations target_corrected;
    std::vector<std::array<int, 2>> shot_tags;  // (signal, target)
    EventTimeline timeline;
};

/// Predicted target populations from a measured signal split: mix the two
/// conditional outcomes, then push the mixture through the target confusion.
inline void feedforward_prediction(FeedforwardResult &res, const ConfusionMatrix &target_cm) {
    res.target_reference = {target_cm.f0, 1 - target_cm.f0};
    res.mixture = mixture_prediction(res.target_reference, res.signal_measured);
    res.calibrated_prediction = target_cm.forward(res.mixture);
}

inline FeedforwardResult run_feedforward(const ExperimentConfig &cfg, double signal_angle_deg = 90) {
    cfg.validate();
    ChannelModels channels(kChannels);
    channels[0] = make_qubit_model(cfg.signal_biased, cfg);
    channels[1] = make_qubit_model(cfg.target, cfg, true);
    BoardEngine engine(assemble(feedforward_program(cfg, signal_angle_deg), "feedforward"), engine_options(cfg));
    FeedforwardResult res;
    res.shots = static_cast<std::size_t>(cfg.shots);
    res.shot_tags = simulate_shots<std::array<int, 2>>(
        engine, channels, cfg, {kStreamFeedforward}, res.shots, [](const ShotResult &s, const PhysicsBackend &) {
            return std::array<int, 2>{s.rounds[1].tag(0), s.rounds[2].tag(1)};
        });
    double s1 = 0, t1 = 0;
    for (const auto &st : res.shot_tags) {
        s1 += st[0];
        t1 += st[1];
    }
    s1 /= res.shots;
    t1 /= res.shots;
    res.signal_measured = {1 - s1, s1};
    res.target_measured = {1 - t1, t1};
    res.target_p1_stderr = binomial_stderr(t1, res.shots);
    ConfusionMatrix cm = cfg.ideal ? ConfusionMatrix{1, 1} : cfg.target.confusion();
    feedforward_prediction(res, cm);
    res.target_corrected = correct_populations(res.target_measured, cm);
    res.timeline = sample_timeline(engine, channels, cfg, {kStreamFeedforward});
    return res;
}

// ---- random walk ------------------------------------------------------------

struct WalkGroup {
    std::string history;
    double ideal_angle_deg = 0;
    std::uint64_t shots = 0;
    double percentage = 0;              // Monte Carlo, all settings pooled
    std::optional<QSTResult> mc;        // absent when a setting saw no shot of this history
    double mc_angle_deg = 0;
    double mc_error_deg = 0;
    double exact_percentage = 0;        // density level
    BlochVector exact_bloch;
    double exact_angle_deg = 0;
    double exact_error_deg = 0;
};

struct RandomWalkResult {
    int steps = 0;
    std::size_t shots_per_basis = 0;
    std::vector<WalkGroup> groups;
    double signal_p0 = 0;  // tag-0 fraction of the first signal readout
    std::int64_t step_duration_ns = 0;
    EventTimeline timeline;

    const WalkGroup &group(const std::string &h) const {
        for (const auto &g : groups) {
            if (g.history == h) {
                return g;
            }
        }
        throw Error(ErrorKind::InvalidArgument, "no group '" + h + "'");
    }
};

struct WalkShot {
    std::uint32_t history = 0;
    int target_tag = 0;
};

inline RandomWalkResult run_random_walk(const ExperimentConfig &cfg, int steps, bool monte_carlo = true) {
    cfg.validate();
    if (steps < 1 || steps > 15) {
        throw Error(ErrorKind::Config, "steps must lie in [1, 15]");
    }
    ChannelModels channels(kChannels);
    channels[0] = make_qubit_model(cfg.signal_biased, cfg);
    channels[1] = make_qubit_model(cfg.target, cfg, true);
    std::optional<ConfusionMatrix> cm;
    if (!cfg.ideal) {
        cm = cfg.target.confusion();
    }
    const std::uint32_t ngroups = 1u << steps;
    RandomWalkResult res;
    res.steps = steps;
    res.shots_per_basis = monte_carlo ? static_cast<std::size_t>(cfg.shots) : 0;
    res.groups.resize(ngroups);
    for (std::uint32_t code = 0; code < ngroups; ++code) {
        auto h = history_bits(code, steps);
        auto &g = res.groups[code];
        g.history = history_label(h);
        int zeros = static_cast<int>(std::count(h.begin(), h.end(), 0));
        g.ideal_angle_deg = cfg.theta_step_deg * (zeros - (steps - zeros));
    }

    // Density level: exact conditional target state per history, read in z
    // (the tomography slot idles), before any sampling.
    {
        BoardEngine engine(assemble(random_walk_program(cfg, steps, QstBasis::Z), "randomwalk"), engine_options(cfg));
        PropagatorCache cache(cfg.dt_ns);
        double total = 0;
        for (std::uint32_t code = 0; code < ngroups; ++code) {
            auto run = run_forced(engine, channels, cache, 0, history_bits(code, steps));
            auto &g = res.groups[code];
            g.exact_percentage = run.weight;
            total += run.weight;
            g.exact_bloch = bloch_from_rho(run.backend.snapshots(1).back());
            g.exact_angle_deg = signed_polar_angle(g.exact_bloch);
            g.exact_error_deg = g.exact_angle_deg - g.ideal_angle_deg;
        }
        for (auto &g : res.groups) {
            g.exact_percentage = 100 * g.exact_percentage / total;
        }
        auto tl = sample_timeline(engine, channels, cfg, {kStreamWalk, static_cast<std::uint64_t>(steps), 0});
        auto triggers = tl.times(Stage::Trigger);
        if (triggers.size() >= 3) {
            res.step_duration_ns = triggers[2] - triggers[1];
        }
        res.timeline = std::move(tl);
    }

    if (!monte_carlo) {
        return res;
    }
    std::vector<std::array<std::array<std::uint64_t, 2>, 5>> counts(ngroups);
    std::uint64_t first_signal_zero = 0, pooled = 0;
    for (QstBasis b : kQstBases) {
        BoardEngine engine(assemble(random_walk_program(cfg, steps, b), "randomwalk"), engine_options(cfg));
        auto shots = simulate_shots<WalkShot>(
            engine, channels, cfg, {kStreamWalk, static_cast<std::uint64_t>(steps), static_cast<std::uint64_t>(b)},
            res.shots_per_basis, [steps](const ShotResult &s, const PhysicsBackend &) {
                WalkShot w;
                for (int k = 1; k <= steps; ++k) {
                    w.history = w.history << 1 | static_cast<std::uint32_t>(s.rounds[k].tag(0));
                }
                w.target_tag = s.rounds.back().tag(1);
                return w;
            });
        for (const auto &s : shots) {
            ++counts[s.history][static_cast<int>(b)][s.target_tag];
            first_signal_zero += (s.history >> (steps - 1) & 1) == 0;
            ++pooled;
        }
    }
    res.signal_p0 = static_cast<double>(first_signal_zero) / pooled;
    for (std::uint32_t code = 0; code < ngroups; ++code) {
        auto &g = res.groups[code];
        QstData data;
        for (QstBasis b : kQstBases) {
            const auto &c = counts[code][static_cast<int>(b)];
            std::uint64_t n = c[0] + c[1];
            g.shots += n;
            if (n) {
                data.set(b, {static_cast<double>(c[0]) / n, static_cast<double>(c[1]) / n}, n);
            }
        }
        g.percentage = 100.0 * g.shots / pooled;
        if (data.complete()) {
            QSTResult q = qst_reconstruct(data, cm);
            q.group = g.history;
            q.percentage = g.percentage;
            g.mc = q;
            if (q.bloch.x != 0 || q.bloch.z != 0) {
                g.mc_angle_deg = signed_polar_angle(q.bloch);
                g.mc_error_deg = g.mc_angle_deg - g.ideal_angle_deg;
            }
        }
    }
    return res;
}

// ---- timing -----------------------------------------------------------------

struct FeedbackRoundResult {
    int tag = 1;
    EventTimeline timeline;
    DensityMatrix post_state;
    std::int64_t adc_in_ns = 0;
    std::int64_t demod_done_ns = 0;
    std::int64_t gate_start_ns = 0;  // analog start of the conditional instruction
};

/// One measure -> conditional pi round on a single qubit whose state starts at
/// `signal`. The conditional slot's analog start is reported whether or not
/// the pulse is empty.
inline FeedbackRoundResult run_feedback_round(const DensityMatrix &signal, const QubitModel &model,
                                              const LatencyModel &latency, ShotRng &rng, double dt_ns = 1.0) {
    ExperimentConfig cfg = ExperimentConfig::paper_defaults();
    cfg.latency = latency;
    cfg.rounds = 1;
    cfg.validate();
    auto t = detail::timing(cfg);
    std::ostringstream os;
    os << "threshold 1 " << detail::num(model.readout.threshold_i) << '\n';
    detail::measure_lines(os, 0x01, 1, t);
    os << "board qubit=1 tagselect=1\n";
    detail::standard_waveforms(os, t);
    detail::conditional_block(os, "fb", "listen", "wait", "pi", "idle");
    BoardEngine engine(assemble(os.str(), "feedback-round"), engine_options(cfg));
    ChannelModels channels(kChannels);
    channels[0] = model;
    channels[0]->initial = signal;
    PropagatorCache cache(dt_ns);
    PhysicsBackend backend(channels, cache, &rng);
    ShotResult shot = engine.run(backend, true);
    FeedbackRoundResult out;
    out.tag = shot.rounds[0].tag(0);
    out.post_state = backend.state(0);
    out.timeline = shot.timeline;
    out.adc_in_ns = out.timeline.times(Stage::AdcIn).at(0);
    out.demod_done_ns = out.timeline.times(Stage::DemodDone).at(0);
    // dac_out events of the board: listen, then the conditional slot.
    out.gate_start_ns = out.timeline.times(Stage::DacOut, 1).at(1);
    return out;
}

struct TimingResult {
    LatencyModel latency;
    LoopbackReport loopback;
    std::int64_t measured_chain_ns = 0;  // conditional gate start - adc_in, from a simulated round
    std::int64_t demod_to_gate_ns = 0;
    EventTimeline timeline;
};

inline TimingResult run_timing(const ExperimentConfig &cfg) {
    cfg.validate();
    TimingResult res;
    res.latency = cfg.latency;
    res.loopback = loopback_timing_check(cfg.latency);
    ShotRng rng(cfg.seed, {99});
    QubitModel model = make_qubit_model(cfg.signal, cfg);
    auto round = run_feedback_round(DensityMatrix::excited(), model, cfg.latency, rng, cfg.dt_ns);
    res.measured_chain_ns = round.gate_start_ns - round.adc_in_ns;
    res.demod_to_gate_ns = round.gate_start_ns - round.demod_done_ns;
    res.timeline = round.timeline;
    return res;
}

}  // namespace qfb

#endif  // QFB_EXPERIMENTS_HPP
