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


// Dispersive readout: projective collapse, decay during the readout pulse,
// Gaussian IQ clouds, weighted-sum digital demodulation, threshold
// discrimination, histograms and confusion-matrix correction.

#ifndef QFB_READOUT_HPP
#define QFB_READOUT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/erf.hpp>

#include "qfb/error.hpp"
#include "qfb/physics.hpp"
#include "qfb/rng.hpp"

namespace qfb {

struct IQPoint {
    double i = 0;
    double q = 0;
};

/// Standard normal CDF.
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

struct ReadoutModel {
    IQPoint center0{1.0, 0.0};
    IQPoint center1{-1.0, 0.0};
    double sigma = 0.5;
    double threshold_i = 0;
    double tau_ro_ns = 800;
    /// Probability that an excited-state shot relaxes during the pulse and is
    /// recorded in the ground cloud.
    double decay_mix = 0;

    /// Noise-free readout with clouds at +/-1.
    static ReadoutModel perfect(double tau_ro_ns = 800) { return {{1.0, 0.0}, {-1.0, 0.0}, 0.0, 0.0, tau_ro_ns, 0.0}; }

    void validate() const {
        if (!(center0.i > threshold_i && threshold_i > center1.i)) {
            throw Error(ErrorKind::InvalidArgument, "readout model needs center0.i > threshold > center1.i");
        }
        if (!(sigma >= 0) || !std::isfinite(sigma) || !(decay_mix >= 0 && decay_mix <= 1) || !(tau_ro_ns >= 0)) {
            throw Error(ErrorKind::InvalidArgument, "readout model has an invalid sigma, decay_mix or tau_ro");
        }
    }

    /// Probability that a shot of the cloud centred at `c` lands right of the threshold.
    double right_of_threshold(const IQPoint &c) const {
        if (sigma == 0) {
            return c.i > threshold_i ? 1.0 : 0.0;
        }
        return 1.0 - normal_cdf((threshold_i - c.i) / sigma);
    }

    /// P(tag = 0 | qubit collapsed to `level`), exact for the model.
    double tag0_probability(int level) const {
        double g = right_of_threshold(center0);
        if (level == 0) {
            return g;
        }
        return decay_mix * g + (1 - decay_mix) * right_of_threshold(center1);
    }
};

/// Fits sigma and decay_mix so that shots from states with a residual
/// excited population `thermal_p` reproduce (f0, f1). With thermal_p = 0 this is
/// the plain inversion: sigma = separation / (2 Phi^-1(f0)) and
/// decay_mix = (f0 - f1) / (2 f0 - 1).
///
/// Here f0 is the tag-0 frequency for a state prepared in |0> (which carries
/// thermal_p of |1>), f1 the tag-1 frequency after an ideal pi pulse on it.
inline ReadoutModel calibrate_model(double f0, double f1, double separation, double tau_ro_ns, double thermal_p) {
    if (!(f0 > 0.5 && f0 < 1 && f1 > 0.5 && f1 < 1)) {
        throw Error(ErrorKind::Calibration, "fidelities must lie in (0.5, 1)");
    }
    if (!(separation > 0) || !(tau_ro_ns >= 0) || !(thermal_p >= 0 && thermal_p < 0.5)) {
        throw Error(ErrorKind::Calibration, "separation must be positive and thermal population in [0, 0.5)");
    }
    double p = thermal_p;
    double s = (2 - 2 * p - (f0 + f1)) / (1 - 2 * p);  // e + q
    double e = (1 - p) + p * s - f0;                  // Gaussian overlap error
    double q = s - e;                                 // P(tag 0 | collapsed to 1)
    if (!(e > 0 && e < 0.5) || q < e) {
        throw Error(ErrorKind::Calibration,
                    "fidelities unsatisfiable: excited fidelity cannot exceed the ground-state overlap limit");
    }
    double d = (q - e) / (1 - 2 * e);
    if (d > 1) {
        throw Error(ErrorKind::Calibration, "fidelities need decay probability above 1");
    }
    double z = std::numbers::sqrt2 * boost::math::erfc_inv(2 * e);  // Phi^-1(1 - e)
    ReadoutModel m;
    m.center0 = {separation / 2, 0};
    m.center1 = {-separation / 2, 0};
    m.sigma = separation / (2 * z);
    m.threshold_i = 0;
    m.tau_ro_ns = tau_ro_ns;
    m.decay_mix = d;
    return m;
}

inline ReadoutModel calibrate_model_from_fidelities(double f0, double f1, double separation, double tau_ro_ns) {
    if (f1 > f0) {
        throw Error(ErrorKind::Calibration, "excited fidelity above ground fidelity is unsatisfiable");
    }
    return calibrate_model(f0, f1, separation, tau_ro_ns, 0.0);
}

/// Tag rule: ground cloud sits right of the threshold; ties count as excited.
inline int discriminate(const IQPoint &iq, double threshold_i) { return iq.i > threshold_i ? 0 : 1; }

struct ReadoutShot {
    int outcome = 0;      // projective result
    IQPoint iq;
    DensityMatrix post_state;
    bool decayed = false; // excited collapse recorded in the ground cloud
};

/// One readout. Draw order per call: projection, decay, two normals; always
/// all four so that streams stay aligned across outcomes.
inline ReadoutShot simulate_readout(const DensityMatrix &rho, const ReadoutModel &model, ShotRng &rng) {
    ProjectionResult proj = project_z(rho, rng.uniform());
    double decay_draw = rng.uniform();
    double ni = rng.normal();
    double nq = rng.normal();
    ReadoutShot shot;
    shot.outcome = proj.outcome;
    shot.post_state = proj.collapsed;
    if (proj.outcome == 1 && decay_draw < model.decay_mix) {
        shot.decayed = true;
        shot.post_state = DensityMatrix::ground();
    }
    const IQPoint &c = (proj.outcome == 0 || shot.decayed) ? model.center0 : model.center1;
    shot.iq = {c.i + model.sigma * ni, c.q + model.sigma * nq};
    return shot;
}

struct Populations {
    double p0 = 1;
    double p1 = 0;
};

struct ConfusionMatrix {
    double f0 = 1;
    double f1 = 1;

    void validate() const {
        if (!(f0 >= 0 && f0 <= 1 && f1 >= 0 && f1 <= 1)) {
            throw Error(ErrorKind::InvalidArgument, "readout fidelities must lie in [0, 1]");
        }
    }

    /// measured = M ideal with M = [[F0, 1 - F1], [1 - F0, F1]].
    Populations forward(const Populations &ideal) const {
        return {f0 * ideal.p0 + (1 - f1) * ideal.p1, (1 - f0) * ideal.p0 + f1 * ideal.p1};
    }
};

struct CorrectedPopulations {
    Populations populations;
    bool clamped = false;
};

inline CorrectedPopulations correct_populations(const Populations &measured, const ConfusionMatrix &cm) {
    cm.validate();
    if (std::abs(measured.p0 + measured.p1 - 1) > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "measured populations must sum to 1");
    }
    double det = cm.f0 + cm.f1 - 1;
    if (std::abs(det) < 1e-12) {
        throw Error(ErrorKind::Correction, "confusion matrix is singular (F0 + F1 = 1)");
    }
    double p0 = (cm.f1 * measured.p0 - (1 - cm.f1) * measured.p1) / det;
    double p1 = (cm.f0 * measured.p1 - (1 - cm.f0) * measured.p0) / det;
    CorrectedPopulations out;
    double c0 = std::clamp(p0, 0.0, 1.0);
    double c1 = std::clamp(p1, 0.0, 1.0);
    out.clamped = c0 != p0 || c1 != p1;
    double sum = c0 + c1;
    out.populations = {c0 / sum, c1 / sum};
    return out;
}

/// Target outcome statistics when the conditional pi pulse swaps its
/// populations on signal tag 1.
inline Populations mixture_prediction(const Populations &target, const Populations &signal) {
    for (const Populations *p : {&target, &signal}) {
        if (std::abs(p->p0 + p->p1 - 1) > 1e-9) {
            throw Error(ErrorKind::InvalidArgument, "populations must sum to 1");
        }
    }
    return {target.p0 * signal.p0 + target.p1 * signal.p1, target.p0 * signal.p1 + target.p1 * signal.p0};
}

struct DemodConfig {
    double ref_freq_mhz = 50;
    int window_cycles = 200;
    int delay_cycles = 0;

    void validate() const {
        if (window_cycles < 1 || delay_cycles < 0) {
            throw Error(ErrorKind::InvalidArgument, "demod window needs at least one cycle and a non-negative delay");
        }
    }
};

inline constexpr double kClockNs = 4.0;

/// Reference phase omega_r t_n for sample n of the window.
inline double demod_phase(const DemodConfig &cfg, int n) {
    return 2 * std::numbers::pi * cfg.ref_freq_mhz * 1e-3 * kClockNs * (cfg.delay_cycles + n);
}

inline IQPoint demodulate(std::span<const double> i_in, std::span<const double> q_in, const DemodConfig &cfg) {
    cfg.validate();
    if (i_in.size() != static_cast<std::size_t>(cfg.window_cycles) || q_in.size() != i_in.size()) {
        throw Error(ErrorKind::InvalidArgument, "demodulation input length differs from the window length");
    }
    IQPoint out;
    for (int n = 0; n < cfg.window_cycles; ++n) {
        double ph = demod_phase(cfg, n);
        double c = std::cos(ph);
        double s = std::sin(ph);
        out.i += i_in[n] * c - q_in[n] * s;
        out.q += i_in[n] * s + q_in[n] * c;
    }
    return out;
}

struct SampleWindow {
    std::vector<double> i;
    std::vector<double> q;
};

/// Base-band window whose demodulated value is window_cycles * target.
inline SampleWindow synthesize_window(const IQPoint &target, const DemodConfig &cfg) {
    cfg.validate();
    SampleWindow w;
    w.i.resize(cfg.window_cycles);
    w.q.resize(cfg.window_cycles);
    for (int n = 0; n < cfg.window_cycles; ++n) {
        double ph = demod_phase(cfg, n);
        w.i[n] = target.i * std::cos(ph) + target.q * std::sin(ph);
        w.q[n] = -target.i * std::sin(ph) + target.q * std::cos(ph);
    }
    return w;
}

struct Histogram {
    std::vector<double> bin_edges;
    std::vector<std::uint64_t> counts;
    std::uint64_t total = 0;

    double bin_center(std::size_t k) const { return 0.5 * (bin_edges[k] + bin_edges[k + 1]); }
};

/// Histogram of the I coordinate over [lo, hi]; values outside land in the edge bins.
inline Histogram build_histogram(std::span<const IQPoint> points, int bins, double lo, double hi) {
    if (bins < 2) {
        throw Error(ErrorKind::InvalidArgument, "histogram needs at least two bins");
    }
    if (!(hi > lo)) {
        throw Error(ErrorKind::InvalidArgument, "histogram range is empty");
    }
    Histogram h;
    h.bin_edges.resize(bins + 1);
    for (int k = 0; k <= bins; ++k) {
        h.bin_edges[k] = lo + (hi - lo) * k / bins;
    }
    h.counts.assign(bins, 0);
    double width = (hi - lo) / bins;
    for (const auto &p : points) {
        long k = static_cast<long>(std::floor((p.i - lo) / width));
        k = std::clamp<long>(k, 0, bins - 1);
        ++h.counts[k];
        ++h.total;
    }
    return h;
}

/// Range taken from the data (padded when degenerate).
inline Histogram build_histogram(std::span<const IQPoint> points, int bins) {
    if (points.empty()) {
        return build_histogram(points, bins, 0.0, 1.0);
    }
    auto [mn, mx] = std::minmax_element(points.begin(), points.end(),
                                        [](const IQPoint &a, const IQPoint &b) { return a.i < b.i; });
    double lo = mn->i;
    double hi = mx->i;
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(lo))) {
        lo -= 0.5;
        hi += 0.5;
    } else {
        hi += (hi - lo) * 1e-9;  // keep the maximum inside the last bin
    }
    return build_histogram(points, bins, lo, hi);
}

/// 81 bins spanning 4 sigma beyond both cloud centers.
inline Histogram build_histogram(std::span<const IQPoint> points, const ReadoutModel &model) {
    double pad = 4 * std::max(model.sigma, 1e-3);
    return build_histogram(points, 81, model.center1.i - pad, model.center0.i + pad);
}

struct ModeFit {
    double mean = 0;
    double sigma = 0;
    double weight = 0;
    double mean_stderr = 0;
};

struct TwoModeFit {
    ModeFit right;  // ground-state hump
    ModeFit left;
    int iterations = 0;
};

/// Two-component 1-D Gaussian mixture on the I values, fitted by EM.
inline TwoModeFit fit_two_modes(std::span<const IQPoint> points, int max_iterations = 500) {
    if (points.size() < 4) {
        throw Error(ErrorKind::InvalidArgument, "two-mode fit needs at least four points");
    }
    std::vector<double> x(points.size());
    std::transform(points.begin(), points.end(), x.begin(), [](const IQPoint &p) { return p.i; });
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    double mu[2] = {sorted[sorted.size() / 4], sorted[3 * sorted.size() / 4]};
    double spread = sorted.back() - sorted.front();
    double var[2] = {spread * spread / 16 + 1e-12, spread * spread / 16 + 1e-12};
    double w[2] = {0.5, 0.5};
    std::vector<double> r(x.size());
    TwoModeFit fit;
    for (int it = 0; it < max_iterations; ++it) {
        fit.iterations = it + 1;
        double n1 = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double l0 = w[0] * std::exp(-0.5 * (x[k] - mu[0]) * (x[k] - mu[0]) / var[0]) / std::sqrt(var[0]);
            double l1 = w[1] * std::exp(-0.5 * (x[k] - mu[1]) * (x[k] - mu[1]) / var[1]) / std::sqrt(var[1]);
            double tot = l0 + l1;
            r[k] = tot > 0 ? l1 / tot : (std::abs(x[k] - mu[1]) < std::abs(x[k] - mu[0]) ? 1.0 : 0.0);
            n1 += r[k];
        }
        double n0 = static_cast<double>(x.size()) - n1;
        double s0 = 0, s1 = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            s0 += (1 - r[k]) * x[k];
            s1 += r[k] * x[k];
        }
        double nmu0 = n0 > 0 ? s0 / n0 : mu[0];
        double nmu1 = n1 > 0 ? s1 / n1 : mu[1];
        double v0 = 0, v1 = 0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            v0 += (1 - r[k]) * (x[k] - nmu0) * (x[k] - nmu0);
            v1 += r[k] * (x[k] - nmu1) * (x[k] - nmu1);
        }
        double floor = 1e-12 * (spread * spread + 1);
        double delta = std::abs(nmu0 - mu[0]) + std::abs(nmu1 - mu[1]);
        mu[0] = nmu0;
        mu[1] = nmu1;
        var[0] = std::max(n0 > 0 ? v0 / n0 : var[0], floor);
        var[1] = std::max(n1 > 0 ? v1 / n1 : var[1], floor);
        w[0] = n0 / x.size();
        w[1] = n1 / x.size();
        if (delta < 1e-12 * (spread + 1)) {
            break;
        }
    }
    auto make = [&](int c) {
        ModeFit m;
        m.mean = mu[c];
        m.sigma = std::sqrt(var[c]);
        m.weight = w[c];
        m.mean_stderr = m.sigma / std::sqrt(std::max(w[c] * x.size(), 1.0));
        return m;
    };
    int hi = mu[1] > mu[0] ? 1 : 0;
    fit.right = make(hi);
    fit.left = make(1 - hi);
    return fit;
}

inline void write_histogram_csv(std::ostream &os, const Histogram &h) {
    os << "bin_center,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
        os << h.bin_center(k) << ',' << h.counts[k] << '\n';
    }
}

struct LabeledIQ {
    IQPoint iq;
    int state_label = 0;
};

inline void write_iq_csv(std::ostream &os, std::span<const LabeledIQ> shots) {
    os << "i,q,state_label\n";
    for (const auto &s : shots) {
        os << s.iq.i << ',' << s.iq.q << ',' << s.state_label << '\n';
    }
}

}  // namespace qfb

#endif  // QFB_READOUT_HPP
