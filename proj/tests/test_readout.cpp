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


#include <cmath>
#include <numbers>
#include <sstream>

#include <gtest/gtest.h>

#include "qfb/readout.hpp"

namespace qfb {
namespace {

// Tag-0 frequency for a state with excited population p, exact for the model.
double tag0(const ReadoutModel &m, double p) { return (1 - p) * m.tag0_probability(0) + p * m.tag0_probability(1); }

TEST(Calibration, ReproducesFidelitiesExactly) {
    for (auto [f0, f1] : {std::pair{0.961, 0.931}, std::pair{0.973, 0.903}}) {
        for (double p : {0.0, 0.02}) {
            auto m = calibrate_model(f0, f1, 2.0, 800, p);
            EXPECT_NEAR(tag0(m, p), f0, 1e-12);
            EXPECT_NEAR(1 - tag0(m, 1 - p), f1, 1e-12);
            EXPECT_NO_THROW(m.validate());
        }
    }
}

TEST(Calibration, PlainInversionWithoutThermalPopulation) {
    auto m = calibrate_model_from_fidelities(0.973, 0.903, 2.0, 800);
    EXPECT_NEAR(m.right_of_threshold(m.center0), 0.973, 1e-12);
    EXPECT_NEAR(m.decay_mix, (0.973 - 0.903) / (2 * 0.973 - 1), 1e-12);
}

TEST(Calibration, RejectsUnsatisfiable) {
    for (auto [f0, f1] : {std::pair{0.9, 0.95}, std::pair{0.4, 0.9}, std::pair{1.0, 0.9}}) {
        try {
            calibrate_model_from_fidelities(f0, f1, 2.0, 800);
            FAIL() << f0 << " " << f1;
        } catch (const Error &e) {
            EXPECT_EQ(e.kind(), ErrorKind::Calibration);
        }
    }
}

TEST(Readout, SampledFrequenciesWithinThreeSigma) {
    auto m = calibrate_model(0.961, 0.931, 2.0, 800, 0.02);
    ShotRng rng(21);
    const int n = 20000;
    int zeros = 0;
    for (int k = 0; k < n; ++k) {
        auto s = simulate_readout(DensityMatrix::thermal(0.02), m, rng);
        zeros += discriminate(s.iq, m.threshold_i) == 0;
    }
    double p = static_cast<double>(zeros) / n;
    EXPECT_LT(std::abs(p - 0.961), 3 * std::sqrt(0.961 * 0.039 / n));
}

TEST(Readout, DecayedShotEndsInGround) {
    ReadoutModel m = ReadoutModel::perfect();
    m.decay_mix = 1.0;
    ShotRng rng(1);
    auto s = simulate_readout(DensityMatrix::excited(), m, rng);
    EXPECT_EQ(s.outcome, 1);
    EXPECT_TRUE(s.decayed);
    EXPECT_EQ(discriminate(s.iq, 0), 0);
    EXPECT_NEAR(s.post_state.population(0), 1.0, 0);
}

TEST(Readout, DrawCountIndependentOfOutcome) {
    // Two streams from the same seed stay aligned whatever the state.
    ShotRng a(9), b(9);
    auto m = calibrate_model_from_fidelities(0.96, 0.93, 2.0, 800);
    simulate_readout(DensityMatrix::ground(), m, a);
    simulate_readout(DensityMatrix::excited(), m, b);
    EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Discriminate, TieCountsAsExcited) {
    EXPECT_EQ(discriminate({0.0, 0.0}, 0.0), 1);
    EXPECT_EQ(discriminate({1e-12, 0.0}, 0.0), 0);
}

TEST(Correction, InvertsForwardMap) {
    ConfusionMatrix cm{0.973, 0.903};
    for (double p : {0.0, 0.2, 0.5, 0.9, 1.0}) {
        auto back = correct_populations(cm.forward({1 - p, p}), cm);
        EXPECT_NEAR(back.populations.p1, p, 1e-12);
        if (p > 0 && p < 1) {
            EXPECT_FALSE(back.clamped);
        }
    }
}

TEST(Correction, ClampsOutsideSimplex) {
    auto r = correct_populations({0.99, 0.01}, {0.9, 0.9});
    EXPECT_TRUE(r.clamped);
    EXPECT_NEAR(r.populations.p0, 1.0, 1e-15);
}

TEST(Correction, SingularMatrix) {
    try {
        correct_populations({0.5, 0.5}, {0.5, 0.5});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::Correction);
    }
    EXPECT_THROW(correct_populations({0.5, 0.6}, {0.9, 0.9}), Error);
}

TEST(Mixture, FeedForwardArithmetic) {
    auto mix = mixture_prediction({0.973, 0.027}, {0.522, 0.478});
    EXPECT_NEAR(mix.p0, 0.521, 0.0005);
    auto cal = ConfusionMatrix{0.973, 0.903}.forward(mix);
    EXPECT_NEAR(cal.p0, 0.553, 0.0005);
    EXPECT_NEAR(mix.p0 + mix.p1, 1.0, 1e-15);
}

TEST(Demod, SynthesizedWindowDemodulatesToTarget) {
    DemodConfig cfg;
    for (IQPoint target : {IQPoint{1, 0}, IQPoint{-0.7, 0.3}}) {
        auto w = synthesize_window(target, cfg);
        auto iq = demodulate(w.i, w.q, cfg);
        EXPECT_NEAR(iq.i, cfg.window_cycles * target.i, 1e-9);
        EXPECT_NEAR(iq.q, cfg.window_cycles * target.q, 1e-9);
    }
    cfg.delay_cycles = 7;
    auto w = synthesize_window({0.25, -0.5}, cfg);
    auto iq = demodulate(w.i, w.q, cfg);
    EXPECT_NEAR(iq.q, -0.5 * cfg.window_cycles, 1e-9);
}

TEST(Demod, LengthMismatch) {
    std::vector<double> a(10), b(9);
    DemodConfig cfg;
    cfg.window_cycles = 10;
    EXPECT_THROW(demodulate(a, b, cfg), Error);
}

TEST(Histogram, CountsEveryPoint) {
    std::vector<IQPoint> pts = {{-10, 0}, {0.1, 0}, {0.2, 0}, {10, 0}};
    auto h = build_histogram(pts, 4, -1, 1);
    std::uint64_t sum = 0;
    for (auto c : h.counts) {
        sum += c;
    }
    EXPECT_EQ(sum, 4u);
    EXPECT_EQ(h.counts.front(), 1u);
    EXPECT_EQ(h.counts.back(), 1u);
    EXPECT_THROW(build_histogram(pts, 1, -1, 1), Error);
    auto empty = build_histogram(std::vector<IQPoint>{}, 5);
    EXPECT_EQ(empty.total, 0u);
}

TEST(Histogram, TwoModeFitRecoversCenters) {
    auto m = calibrate_model_from_fidelities(0.973, 0.903, 2.0, 800);
    ShotRng rng(4);
    std::vector<IQPoint> pts;
    for (int k = 0; k < 20000; ++k) {
        pts.push_back(simulate_readout(k % 2 ? DensityMatrix::excited() : DensityMatrix::ground(), m, rng).iq);
    }
    auto fit = fit_two_modes(pts);
    EXPECT_LT(std::abs(fit.right.mean - m.center0.i), 3 * fit.right.mean_stderr + 1e-3);
    EXPECT_LT(std::abs(fit.left.mean - m.center1.i), 3 * fit.left.mean_stderr + 1e-3);
    EXPECT_NEAR(fit.right.sigma, m.sigma, 0.02);
    std::ostringstream os;
    write_histogram_csv(os, build_histogram(pts, m));
    EXPECT_EQ(os.str().rfind("bin_center,count\n", 0), 0u);
}

}  // namespace
}  // namespace qfb
