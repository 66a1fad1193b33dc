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


// Linear-inversion state tomography and Bloch-angle conventions.
//
// Five settings are measured in z after a pre-rotation: none (z), Ry(+pi/2),
// Ry(-pi/2), Rx(+pi/2), Rx(-pi/2). Then
//   z = P0 - P1 (no rotation)
//   x = (z[Ry(-pi/2)] - z[Ry(+pi/2)]) / 2
//   y = (z[Rx(+pi/2)] - z[Rx(-pi/2)]) / 2

#ifndef QFB_TOMOGRAPHY_HPP
#define QFB_TOMOGRAPHY_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

#include "qfb/error.hpp"
#include "qfb/physics.hpp"
#include "qfb/readout.hpp"

namespace qfb {

enum class QstBasis { Z, YPlus, YMinus, XPlus, XMinus };

inline constexpr std::array<QstBasis, 5> kQstBases = {QstBasis::Z, QstBasis::YPlus, QstBasis::YMinus,
                                                      QstBasis::XPlus, QstBasis::XMinus};

inline std::string_view qst_basis_name(QstBasis b) {
    switch (b) {
        case QstBasis::Z: return "z";
        case QstBasis::YPlus: return "ry+90";
        case QstBasis::YMinus: return "ry-90";
        case QstBasis::XPlus: return "rx+90";
        case QstBasis::XMinus: return "rx-90";
    }
    return "?";
}

/// Pre-rotation applied before the z measurement of `b`.
inline PulseGate qst_pre_rotation(QstBasis b) {
    constexpr double h = std::numbers::pi / 2;
    switch (b) {
        case QstBasis::Z: return {Axis::PlusY, 0.0, 0.0};
        case QstBasis::YPlus: return {Axis::PlusY, h, 0.0};
        case QstBasis::YMinus: return {Axis::MinusY, h, 0.0};
        case QstBasis::XPlus: return {Axis::PlusX, h, 0.0};
        case QstBasis::XMinus: return {Axis::MinusX, h, 0.0};
    }
    return {};
}

inline double wrap_degrees_180(double deg) {
    double r = std::fmod(deg, 360.0);
    if (r <= -180) {
        r += 360;
    } else if (r > 180) {
        r -= 360;
    }
    return r;
}

/// Polar angle in the xz-plane from +z, positive toward +x.
inline double signed_polar_angle(const BlochVector &b) {
    if (b.x == 0 && b.z == 0) {
        throw Error(ErrorKind::InvalidArgument, "polar angle undefined for a vector with no xz component");
    }
    return std::atan2(b.x, b.z) * 180 / std::numbers::pi;
}

inline BlochAngles angles_from_bloch(const BlochVector &b) {
    double rho = std::hypot(b.x, b.y);
    double theta = std::atan2(b.x < 0 ? -rho : rho, b.z) * 180 / std::numbers::pi;
    if (theta <= -180) {
        theta += 360;
    }
    double phi = std::atan2(b.y, b.x) * 180 / std::numbers::pi;
    if (phi < 0) {
        phi += 360;
    }
    if (phi >= 360) {
        phi -= 360;
    }
    return {theta, phi};
}

struct QSTResult {
    BlochVector bloch;
    BlochAngles angles;
    std::uint64_t shots_used = 0;
    std::string group;
    double percentage = 100;
};

/// Measured populations per setting, with the shot count behind each.
struct QstData {
    std::array<std::optional<Populations>, 5> populations;
    std::array<std::uint64_t, 5> shots{};

    void set(QstBasis b, const Populations &p, std::uint64_t n) {
        populations[static_cast<int>(b)] = p;
        shots[static_cast<int>(b)] = n;
    }
    bool complete() const {
        for (const auto &p : populations) {
            if (!p) {
                return false;
            }
        }
        return true;
    }
};

/// Linear inversion; populations are first passed through `correction` when given.
inline QSTResult qst_reconstruct(const QstData &data, const std::optional<ConfusionMatrix> &correction = {}) {
    std::array<double, 5> z{};
    QSTResult out;
    for (QstBasis b : kQstBases) {
        const auto &p = data.populations[static_cast<int>(b)];
        if (!p) {
            throw Error(ErrorKind::IncompleteTomography,
                        "missing tomography setting '" + std::string(qst_basis_name(b)) + "'");
        }
        Populations use = correction ? correct_populations(*p, *correction).populations : *p;
        z[static_cast<int>(b)] = use.p0 - use.p1;
        out.shots_used += data.shots[static_cast<int>(b)];
    }
    auto at = [&](QstBasis b) { return z[static_cast<int>(b)]; };
    out.bloch = {(at(QstBasis::YMinus) - at(QstBasis::YPlus)) / 2, (at(QstBasis::XPlus) - at(QstBasis::XMinus)) / 2,
                 at(QstBasis::Z)};
    out.angles = angles_from_bloch(out.bloch);
    return out;
}

/// Exact populations of every setting for a known state (no sampling).
inline QstData qst_exact_data(const DensityMatrix &rho) {
    QstData d;
    for (QstBasis b : kQstBases) {
        DensityMatrix r = apply_rotation(rho, qst_pre_rotation(b), GateMode::Ideal);
        d.set(b, {r.population(0), r.population(1)}, 0);
    }
    return d;
}

}  // namespace qfb

#endif  // QFB_TOMOGRAPHY_HPP
