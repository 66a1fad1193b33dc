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


// Acceptance run at full shot counts. Prints one [PASS]/[FAIL] line per
// criterion, with the measured values, and exits non-zero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>
#include <string>

#include "qfb/qfb.hpp"

namespace {

using namespace qfb;

// Pinned tolerances.
constexpr int kShots = 15000;
constexpr int kReadoutShots = 30000;
constexpr double kResetRound0 = 0.930, kResetRound0Tol = 0.010;
constexpr double kResetRound1 = 0.063, kResetRound1Tol = 0.015;
constexpr double kResetRound2 = 0.035, kResetRound2Tol = 0.015;
constexpr double kResetGround6 = 0.965, kResetGround6Tol = 0.015;
constexpr double kStabFidelityMin = 0.96, kStabThetaMax = 2.5, kStabPhiMax = 1.5;
constexpr double kFfTargetP1 = 0.451, kFfTargetTol = 0.015;
constexpr double kFfArithmeticTol = 0.003;
constexpr double kIdealWalkTolDeg = 0.1;
constexpr double kWalkMinDeg = 3.0, kWalkMaxDeg = 12.0;
constexpr double kClosedFormRelTol = 1e-5, kRk4MinRatio = 8.0, kQstExactTol = 1e-12;

int failures = 0;

void verdict(int id, const std::string &name, bool ok, const std::string &detail) {
    std::printf("[%s] %d %s: %s\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
    failures += !ok;
}

template <class F>
void criterion(int id, const std::string &name, F &&body) {
    auto t0 = std::chrono::steady_clock::now();
    std::ostringstream os;
    bool ok = false;
    try {
        ok = body(os);
    } catch (const std::exception &e) {
        os << "exception: " << e.what();
        ok = false;
    }
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    os.precision(2);
    os << std::fixed << " (" << s << " s)";
    verdict(id, name, ok, os.str());
}

ExperimentConfig defaults() {
    auto c = ExperimentConfig::paper_defaults();
    c.shots = kShots;
    return c;
}

bool latency(std::ostream &os) {
    auto t = run_timing(defaults());
    const auto &l = t.latency;
    bool ok = l.tau_adc_ns == 16 && l.tau_proc_ns == 32 && l.tau_tag_ns == 24 && l.tau_dac_ns == 68 &&
              t.loopback.total_ns == 140 && t.loopback.loopback_ns == 96 && t.loopback.consistent() &&
              t.measured_chain_ns == 140 && timing_report(t).find("total 140 ns") != std::string::npos;
    os << "adc " << l.tau_adc_ns << " proc " << l.tau_proc_ns << " tag " << l.tau_tag_ns << " dac " << l.tau_dac_ns
       << " total " << t.loopback.total_ns << " loopback " << t.loopback.loopback_ns << " simulated chain "
       << t.measured_chain_ns;
    return ok;
}

bool codecs(std::ostream &os) {
    int bad = 0;
    for (int t = 0; t < 256; ++t) {
        bad += deserialize_tag_packet(serialize_tag_packet(static_cast<std::uint8_t>(t))) != t;
    }
    ShotRng rng(20240601);
    for (int k = 0; k < 10000; ++k) {
        std::uint64_t r = rng.next_u64();
        std::uint32_t a0 = static_cast<std::uint32_t>(r & 0xFFFFF), a1 = static_cast<std::uint32_t>(r >> 20 & 0xFFFFF);
        if (a0 > a1) {
            std::swap(a0, a1);
        }
        ControlInstruction c{static_cast<std::uint32_t>(r >> 40 & 3), static_cast<std::uint32_t>(r >> 42 & 0xFF),
                             static_cast<std::uint32_t>(r >> 50 & 0xFF), a0, a1};
        bad += !(decode_control(encode_control(c)) == c);
        MeasureInstruction m{static_cast<std::uint32_t>(r & 0xFF), static_cast<std::uint32_t>(r >> 8 & 0xF),
                             static_cast<std::uint32_t>(r >> 12 & 0xFFFF), static_cast<std::uint32_t>(r >> 28 & 0xFF)};
        bad += !(decode_measure(encode_measure(m)) == m);
    }
    os << "256 tag packets, 10000 control + 10000 measure words, failures " << bad;
    return bad == 0;
}

bool readout(std::ostream &os) {
    auto cfg = defaults();
    bool ok = true;
    int q = 0;
    for (const QubitSetup *setup : {&cfg.signal, &cfg.target}) {
        QubitModel m = make_qubit_model(*setup, cfg);
        ShotRng rng(cfg.seed, {77, static_cast<std::uint64_t>(q++)});
        DensityMatrix prepared[2] = {m.initial, apply_rotation(m.initial, {Axis::PlusY, std::numbers::pi, 0})};
        double f[2];
        std::vector<IQPoint> pts;
        for (int s = 0; s < 2; ++s) {
            int hits = 0;
            for (int k = 0; k < kReadoutShots; ++k) {
                auto shot = simulate_readout(prepared[s], m.readout, rng);
                hits += discriminate(shot.iq, m.readout.threshold_i) == s;
                pts.push_back(shot.iq);
            }
            f[s] = static_cast<double>(hits) / kReadoutShots;
        }
        double want[2] = {setup->f0, setup->f1};
        for (int s = 0; s < 2; ++s) {
            double sigma = std::sqrt(want[s] * (1 - want[s]) / kReadoutShots);
            ok &= std::abs(f[s] - want[s]) < 3 * sigma;
        }
        auto fit = fit_two_modes(pts);
        double dr = fit.right.mean - m.readout.center0.i, dl = fit.left.mean - m.readout.center1.i;
        ok &= std::abs(dr) < 3 * fit.right.mean_stderr && std::abs(dl) < 3 * fit.left.mean_stderr;
        os.precision(4);
        os << setup->params.label << " F0 " << f[0] << " F1 " << f[1] << " centers " << fit.right.mean << "/"
           << fit.left.mean << " (err " << fit.right.mean_stderr << "); ";
    }
    return ok;
}

bool reset(std::ostream &os) {
    auto r = run_reset(defaults());
    const auto &p = r.excited_probability;
    double sigma = std::sqrt(r.exact_excited.back() * (1 - r.exact_excited.back()) / r.shots);
    bool fixed_point = std::abs(p.back() - r.exact_excited.back()) < 3 * sigma;
    bool ok = p.size() == 7 && std::abs(p[0] - kResetRound0) <= kResetRound0Tol &&
              std::abs(p[1] - kResetRound1) <= kResetRound1Tol && std::abs(p[2] - kResetRound2) <= kResetRound2Tol &&
              std::abs((1 - p[6]) - kResetGround6) <= kResetGround6Tol && fixed_point;
    os.precision(4);
    os << "excited";
    for (double v : p) {
        os << ' ' << v;
    }
    os << "; ground after 6 rounds " << 1 - p[6] << "; exact fixed point " << r.exact_excited.back();
    return ok;
}

bool stabilization(std::ostream &os) {
    auto r = run_stabilization(defaults());
    bool ok = true;
    double fmin = 1, tmax = 0, pmax = 0;
    for (const auto &q : r.rounds) {
        fmin = std::min(fmin, q.fidelity);
        tmax = std::max(tmax, std::abs(q.theta_error_deg));
        pmax = std::max(pmax, std::abs(q.phi_error_deg));
    }
    ok = fmin >= kStabFidelityMin && tmax < kStabThetaMax && pmax < kStabPhiMax;
    os.precision(4);
    os << r.rounds.size() << " QST rounds; min fidelity " << fmin << ", max |theta err| " << tmax
       << " deg, max |phi err| " << pmax << " deg";
    return ok;
}

bool feedforward(std::ostream &os) {
    auto r = run_feedforward(defaults());
    // Arithmetic on the published inputs: signal split 52.2/47.8, target F0 97.3%.
    FeedforwardResult arith;
    arith.signal_measured = {0.522, 0.478};
    feedforward_prediction(arith, ExperimentConfig::paper_defaults().target.confusion());
    bool ok = std::abs(r.target_measured.p1 - kFfTargetP1) <= kFfTargetTol &&
              std::abs(arith.mixture.p0 - 0.521) <= kFfArithmeticTol &&
              std::abs(arith.mixture.p1 - 0.479) <= kFfArithmeticTol &&
              std::abs(arith.calibrated_prediction.p0 - 0.553) <= kFfArithmeticTol &&
              std::abs(arith.calibrated_prediction.p1 - 0.447) <= kFfArithmeticTol;
    os.precision(4);
    os << "target measured " << r.target_measured.p0 << "/" << r.target_measured.p1 << "; mixture "
       << arith.mixture.p0 << "/" << arith.mixture.p1 << " calibrated " << arith.calibrated_prediction.p0 << "/"
       << arith.calibrated_prediction.p1 << "; from simulated signal " << r.signal_measured.p0 << ": calibrated "
       << r.calibrated_prediction.p0 << "/" << r.calibrated_prediction.p1;
    return ok;
}

bool ideal_walk(std::ostream &os) {
    auto c = defaults();
    c.ideal = true;
    double worst = 0;
    for (int steps = 1; steps <= 3; ++steps) {
        for (const auto &g : run_random_walk(c, steps, false).groups) {
            worst = std::max(worst, std::abs(g.exact_error_deg));
        }
    }
    os << "max |angle - k*22.5| over 14 groups " << worst << " deg";
    return worst <= kIdealWalkTolDeg;
}

bool decoherence_walk(std::ostream &os) {
    auto c = defaults();
    double lo[4], hi[4];
    bool ok = true;
    os.precision(3);
    for (int steps = 1; steps <= 3; ++steps) {
        auto r = run_random_walk(c, steps, false);
        lo[steps] = r.group(std::string(steps, '0')).exact_error_deg;
        hi[steps] = r.group(std::string(steps, '1')).exact_error_deg;
        ok &= lo[steps] < 0 && hi[steps] > 0;
        if (steps > 1) {
            ok &= std::abs(lo[steps]) >= std::abs(lo[steps - 1]) && std::abs(hi[steps]) >= std::abs(hi[steps - 1]);
        }
        os << steps << "-step " << lo[steps] << "/" << hi[steps] << " deg; ";
    }
    for (double v : {lo[3], hi[3]}) {
        ok &= std::abs(v) >= kWalkMinDeg && std::abs(v) <= kWalkMaxDeg;
    }
    return ok;
}

bool numerics(std::ostream &os) {
    LindbladModel decay{0, 1 / 0.02, 0};
    double exact = std::exp(-5.0);
    auto p1 = [&](double dt) {
        return evolve_lindblad(DensityMatrix::excited(), decay, std::nullopt, 100, dt).population(1);
    };
    double rel_decay = std::abs(p1(1) - exact) / exact;
    double ratio = std::abs(p1(4) - exact) / std::abs(p1(2) - exact);
    LindbladModel deph{0.75, 0.05, 0.3};
    auto rho = evolve_lindblad(DensityMatrix::plus(), deph, std::nullopt, 2000, 1);
    Complex want = 0.5 * std::exp(-(0.05 + 0.3) * 2.0 / 2) * std::exp(Complex(0, -2 * std::numbers::pi * 0.75 * 2.0));
    double rel_deph = std::abs(rho.coherence() - want) / std::abs(want);
    ShotRng rng(5);
    double qst = 0;
    for (int k = 0; k < 1000; ++k) {
        double r = rng.uniform(), u = 2 * rng.uniform() - 1, a = 2 * std::numbers::pi * rng.uniform();
        double s = std::sqrt(1 - u * u);
        auto state = rho_from_bloch({r * s * std::cos(a), r * s * std::sin(a), r * u});
        auto b = bloch_from_rho(state);
        auto q = qst_reconstruct(qst_exact_data(state)).bloch;
        qst = std::max({qst, std::abs(q.x - b.x), std::abs(q.y - b.y), std::abs(q.z - b.z)});
    }
    os << "damping rel err " << rel_decay << ", dephasing rel err " << rel_deph << ", RK4 ratio " << ratio
       << ", QST max diff " << qst;
    return rel_decay < kClosedFormRelTol && rel_deph < kClosedFormRelTol && ratio >= kRk4MinRatio &&
           qst <= kQstExactTol;
}

bool determinism(std::ostream &os) {
    auto c = defaults();
    auto summaries = [&](unsigned threads) {
        c.threads = threads;
        return reset_summary(run_reset(c)).dump() + random_walk_summary(run_random_walk(c, 3)).dump();
    };
    std::string a = summaries(1), b = summaries(1), p = summaries(4);
    os << "serial/serial " << (a == b ? "identical" : "differ") << ", serial/4 threads "
       << (a == p ? "identical" : "differ") << " (" << a.size() << " bytes)";
    return a == b && a == p;
}

}  // namespace

int main() {
    criterion(1, "latency budget", latency);
    criterion(2, "codec suite", codecs);
    criterion(3, "readout statistics", readout);
    criterion(4, "reset", reset);
    criterion(5, "stabilization", stabilization);
    criterion(6, "feed-forward", feedforward);
    criterion(7, "ideal random walk", ideal_walk);
    criterion(8, "decoherence random walk", decoherence_walk);
    criterion(9, "numerical core", numerics);
    criterion(10, "determinism", determinism);
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
