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

#include <gtest/gtest.h>

#include "qfb/rng.hpp"
#include "qfb/tomography.hpp"

namespace qfb {
namespace {

constexpr double kDeg = std::numbers::pi / 180;

TEST(SignedPolarAngle, Examples) {
    EXPECT_NEAR(signed_polar_angle({0, 0, 1}), 0, 1e-12);
    EXPECT_NEAR(signed_polar_angle({std::sin(22.5 * kDeg), 0, std::cos(22.5 * kDeg)}), 22.5, 1e-12);
    EXPECT_NEAR(signed_polar_angle({-std::sin(22.5 * kDeg), 0, std::cos(22.5 * kDeg)}), -22.5, 1e-12);
    EXPECT_NEAR(signed_polar_angle({0, 0.3, -1}), 180, 1e-12);
    try {
        signed_polar_angle({0, 1, 0});
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidArgument);
    }
}

TEST(Angles, ThetaPhi) {
    auto a = angles_from_bloch({1, 0, 0});
    EXPECT_NEAR(a.theta_deg, 90, 1e-12);
    EXPECT_NEAR(a.phi_deg, 0, 1e-12);
    a = angles_from_bloch({0, -1, 0});
    EXPECT_NEAR(a.phi_deg, 270, 1e-12);
    EXPECT_NEAR(wrap_degrees_180(359), -1, 1e-12);
    EXPECT_NEAR(wrap_degrees_180(-181), 179, 1e-12);
}

TEST(Qst, ExactDataEqualsBloch) {
    ShotRng rng(8);
    for (int k = 0; k < 500; ++k) {
        double r = rng.uniform();
        double u = 2 * rng.uniform() - 1, a = 2 * std::numbers::pi * rng.uniform();
        double s = std::sqrt(1 - u * u);
        auto rho = rho_from_bloch({r * s * std::cos(a), r * s * std::sin(a), r * u});
        auto q = qst_reconstruct(qst_exact_data(rho));
        auto b = bloch_from_rho(rho);
        EXPECT_NEAR(q.bloch.x, b.x, 1e-12);
        EXPECT_NEAR(q.bloch.y, b.y, 1e-12);
        EXPECT_NEAR(q.bloch.z, b.z, 1e-12);
    }
}

TEST(Qst, BasisPreRotationsMapAxesToZ) {
    // +y pre-rotation maps -x to +z, +x pre-rotation maps +y to +z.
    auto rho = rho_from_bloch({-1, 0, 0});
    auto g = qst_pre_rotation(QstBasis::YPlus);
    EXPECT_NEAR(apply_rotation(rho, g).population(0), 1, 1e-12);
    rho = rho_from_bloch({0, 1, 0});
    EXPECT_NEAR(apply_rotation(rho, qst_pre_rotation(QstBasis::XPlus)).population(0), 1, 1e-12);
}

TEST(Qst, ConfusionCorrectionUndoesReadoutError) {
    ConfusionMatrix cm{0.961, 0.931};
    auto rho = rho_from_bloch({0.6, -0.3, 0.5});
    QstData exact = qst_exact_data(rho), blurred;
    for (QstBasis b : kQstBases) {
        blurred.set(b, cm.forward(*exact.populations[static_cast<int>(b)]), 1000);
    }
    auto q = qst_reconstruct(blurred, cm);
    EXPECT_NEAR(q.bloch.x, 0.6, 1e-12);
    EXPECT_NEAR(q.bloch.y, -0.3, 1e-12);
    EXPECT_EQ(q.shots_used, 5000u);
}

TEST(Qst, SampledGroundWithinThreeOverRootN) {
    const int n = 15000;
    ShotRng rng(12);
    QstData d;
    auto rho = DensityMatrix::ground();
    for (QstBasis b : kQstBases) {
        auto r = apply_rotation(rho, qst_pre_rotation(b));
        int ones = 0;
        for (int k = 0; k < n; ++k) {
            ones += project_z(r, rng.uniform()).outcome;
        }
        d.set(b, {1 - ones / double(n), ones / double(n)}, n);
    }
    auto q = qst_reconstruct(d);
    double tol = 3 / std::sqrt(double(n));
    EXPECT_NEAR(q.bloch.x, 0, tol);
    EXPECT_NEAR(q.bloch.y, 0, tol);
    EXPECT_NEAR(q.bloch.z, 1, tol);
}

TEST(Qst, MissingSettingIsIncomplete) {
    QstData d = qst_exact_data(DensityMatrix::ground());
    d.populations[static_cast<int>(QstBasis::XMinus)].reset();
    EXPECT_FALSE(d.complete());
    try {
        qst_reconstruct(d);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.kind(), ErrorKind::IncompleteTomography);
    }
}

}  // namespace
}  // namespace qfb
