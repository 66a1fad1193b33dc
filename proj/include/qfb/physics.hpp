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

// Single-qubit open-system physics: 2x2 density matrices, rotations, and a
// fixed-step RK4 integrator for the Lindblad master equation with relaxation
// (A1 = |0><1|, rate 1/T1) and pure dephasing (A2 = |1><1|, rate 2/T2*).
//
// Units: time in ns, rates stored per microsecond (as quoted for qubits) and
// converted internally, drive amplitudes in rad/ns, detuning in MHz.

#ifndef QFB_PHYSICS_HPP
#define QFB_PHYSICS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qfb/error.hpp"

namespace qfb {

using Complex = std::complex<double>;

struct Mat2 {
    Complex a00{}, a01{}, a10{}, a11{};

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    Mat2 adjoint() const { return {std::conj(a00), std::conj(a10), std::conj(a01), std::conj(a11)}; }
    Complex trace() const { return a00 + a11; }
};

inline Mat2 operator+(const Mat2 &a, const Mat2 &b) {
    return {a.a00 + b.a00, a.a01 + b.a01, a.a10 + b.a10, a.a11 + b.a11};
}
inline Mat2 operator-(const Mat2 &a, const Mat2 &b) {
    return {a.a00 - b.a00, a.a01 - b.a01, a.a10 - b.a10, a.a11 - b.a11};
}
inline Mat2 operator*(Complex s, const Mat2 &a) { return {s * a.a00, s * a.a01, s * a.a10, s * a.a11}; }
inline Mat2 operator*(double s, const Mat2 &a) { return {s * a.a00, s * a.a01, s * a.a10, s * a.a11}; }
inline Mat2 operator*(const Mat2 &a, const Mat2 &b) {
    return {a.a00 * b.a00 + a.a01 * b.a10, a.a00 * b.a01 + a.a01 * b.a11, a.a10 * b.a00 + a.a11 * b.a10,
            a.a10 * b.a01 + a.a11 * b.a11};
}

/// Largest elementwise modulus of a - b.
inline double max_abs_diff(const Mat2 &a, const Mat2 &b) {
    return std::max({std::abs(a.a00 - b.a00), std::abs(a.a01 - b.a01), std::abs(a.a10 - b.a10),
                     std::abs(a.a11 - b.a11)});
}

namespace pauli {
inline constexpr Mat2 I{1.0, 0.0, 0.0, 1.0};
inline constexpr Mat2 X{0.0, 1.0, 1.0, 0.0};
inline constexpr Mat2 Y{0.0, Complex(0, -1), Complex(0, 1), 0.0};
inline constexpr Mat2 Z{1.0, 0.0, 0.0, -1.0};
}  // namespace pauli

enum class Axis { PlusX, MinusX, PlusY, MinusY, PlusZ, MinusZ };

struct Direction {
    double x = 0, y = 0, z = 0;
};

inline Direction axis_direction(Axis axis) {
    switch (axis) {
        case Axis::PlusX: return {1, 0, 0};
        case Axis::MinusX: return {-1, 0, 0};
        case Axis::PlusY: return {0, 1, 0};
        case Axis::MinusY: return {0, -1, 0};
        case Axis::PlusZ: return {0, 0, 1};
        case Axis::MinusZ: return {0, 0, -1};
    }
    return {};
}

inline std::string_view axis_name(Axis axis) {
    switch (axis) {
        case Axis::PlusX: return "+x";
        case Axis::MinusX: return "-x";
        case Axis::PlusY: return "+y";
        case Axis::MinusY: return "-y";
        case Axis::PlusZ: return "+z";
        case Axis::MinusZ: return "-z";
    }
    return "?";
}

inline Axis parse_axis(std::string_view text) {
    for (Axis a : {Axis::PlusX, Axis::MinusX, Axis::PlusY, Axis::MinusY, Axis::PlusZ, Axis::MinusZ}) {
        if (axis_name(a) == text) {
            return a;
        }
    }
    throw Error(ErrorKind::InvalidArgument, "unknown rotation axis '" + std::string(text) + "'");
}

struct BlochVector {
    double x = 0, y = 0, z = 0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
};

/// theta is the polar angle from +z, signed by the side of the xz-plane the
/// vector leans to (positive for x >= 0); phi is the azimuth in [0, 360).
struct BlochAngles {
    double theta_deg = 0;
    double phi_deg = 0;
};

struct QubitParams {
    std::string label;
    double f_qubit_ghz = 0;
    double f_resonator_ghz = 0;
    double t1_us = 0;
    double t2_star_us = 0;
    /// Excited-state population left in the qubit when it is "prepared" in |0>
    /// by waiting; 0 means the idle qubit is exactly |0>.
    double thermal_population = 0;

    void validate() const {
        if (!(t1_us > 0) || !(t2_star_us > 0)) {
            throw Error(ErrorKind::InvalidArgument, "qubit '" + label + "': T1 and T2* must be positive");
        }
        if (t2_star_us > 2 * t1_us) {
            throw Error(ErrorKind::InvalidArgument, "qubit '" + label + "': T2* exceeds 2*T1");
        }
        if (thermal_population < 0 || thermal_population >= 0.5) {
            throw Error(ErrorKind::InvalidArgument, "qubit '" + label + "': thermal population outside [0, 0.5)");
        }
    }
};

struct LindbladModel {
    double detuning_mhz = 0;
    double gamma1_per_us = 0;
    double gamma_phi_per_us = 0;

    static LindbladModel closed() { return {}; }

    static LindbladModel from_params(const QubitParams &params) {
        params.validate();
        return {0.0, 1.0 / params.t1_us, 2.0 / params.t2_star_us};
    }

    void validate() const {
        if (gamma1_per_us < 0 || gamma_phi_per_us < 0 || !std::isfinite(detuning_mhz)) {
            throw Error(ErrorKind::InvalidArgument, "Lindblad rates must be non-negative");
        }
    }
};

enum class GateMode { Ideal, Finite };

struct PulseGate {
    Axis axis = Axis::PlusY;
    double angle_rad = 0;
    double duration_ns = 0;

    void validate(GateMode mode) const {
        if (!std::isfinite(angle_rad) || !(duration_ns >= 0)) {
            throw Error(ErrorKind::InvalidArgument, "pulse gate needs a finite angle and non-negative duration");
        }
        if (mode == GateMode::Finite && duration_ns == 0) {
            throw Error(ErrorKind::InvalidArgument, "zero-duration gate requires ideal gate mode");
        }
    }
};

/// Piecewise-constant control field, H = (x*sx + y*sy + z*sz) / 2 in rad/ns.
struct DriveAmplitude {
    double x = 0, y = 0, z = 0;

    bool is_zero() const { return x == 0 && y == 0 && z == 0; }
    friend bool operator==(const DriveAmplitude &, const DriveAmplitude &) = default;
};

/// Rectangular envelope realizing `gate` over its duration.
inline DriveAmplitude rectangular_amplitude(const PulseGate &gate) {
    gate.validate(GateMode::Finite);
    Direction n = axis_direction(gate.axis);
    double rate = gate.angle_rad / gate.duration_ns;
    return {rate * n.x, rate * n.y, rate * n.z};
}

inline double min_eigenvalue(const Mat2 &m) {
    double a = m.a00.real();
    double d = m.a11.real();
    double off = std::abs(m.a01);
    return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + off * off);
}

class DensityMatrix {
   public:
    static constexpr double kHermitianTol = 1e-12;
    static constexpr double kTraceTol = 1e-9;
    static constexpr double kPositivityTol = 1e-9;

    DensityMatrix() : m_{1.0, 0.0, 0.0, 0.0} {}

    /// Validates Hermiticity, unit trace and positivity.
    static DensityMatrix from_matrix(const Mat2 &m) {
        check(m, kHermitianTol, kTraceTol, kPositivityTol);
        return DensityMatrix(m);
    }

    /// Skips validation; for values produced by trusted channel maps.
    static DensityMatrix assume_physical(const Mat2 &m) { return DensityMatrix(m); }

    static DensityMatrix ground() { return DensityMatrix({1.0, 0.0, 0.0, 0.0}); }
    static DensityMatrix excited() { return DensityMatrix({0.0, 0.0, 0.0, 1.0}); }
    static DensityMatrix plus() { return DensityMatrix({0.5, 0.5, 0.5, 0.5}); }
    static DensityMatrix maximally_mixed() { return DensityMatrix({0.5, 0.0, 0.0, 0.5}); }
    static DensityMatrix thermal(double excited_population) {
        return from_matrix({1.0 - excited_population, 0.0, 0.0, excited_population});
    }

    const Mat2 &matrix() const { return m_; }
    double population(int level) const { return level == 0 ? m_.a00.real() : m_.a11.real(); }
    Complex coherence() const { return m_.a01; }

    static void check(const Mat2 &m, double herm_tol, double trace_tol, double pos_tol) {
        bool finite = std::isfinite(m.a00.real()) && std::isfinite(m.a00.imag()) && std::isfinite(m.a01.real()) &&
                      std::isfinite(m.a01.imag()) && std::isfinite(m.a10.real()) && std::isfinite(m.a10.imag()) &&
                      std::isfinite(m.a11.real()) && std::isfinite(m.a11.imag());
        if (!finite) {
            throw Error(ErrorKind::InvariantViolation, "density matrix has non-finite elements");
        }
        if (std::abs(m.a01 - std::conj(m.a10)) > herm_tol || std::abs(m.a00.imag()) > herm_tol ||
            std::abs(m.a11.imag()) > herm_tol) {
            throw Error(ErrorKind::InvariantViolation, "density matrix is not Hermitian");
        }
        if (std::abs(m.trace().real() - 1.0) > trace_tol) {
            throw Error(ErrorKind::InvariantViolation, "density matrix trace differs from 1");
        }
        if (min_eigenvalue(m) < -pos_tol) {
            throw Error(ErrorKind::InvariantViolation, "density matrix has a negative eigenvalue");
        }
    }

   private:
    explicit DensityMatrix(const Mat2 &m) : m_(m) {}
    Mat2 m_;
};

/// U = exp(-i angle n.sigma / 2).
inline Mat2 rotation_unitary(Axis axis, double angle_rad) {
    Direction n = axis_direction(axis);
    double c = std::cos(angle_rad / 2);
    double s = std::sin(angle_rad / 2);
    Complex mi(0, -s);
    return {Complex(c, 0) + mi * n.z, mi * Complex(n.x, -n.y), mi * Complex(n.x, n.y), Complex(c, 0) - mi * n.z};
}

inline DensityMatrix apply_unitary(const DensityMatrix &rho, const Mat2 &u) {
    return DensityMatrix::assume_physical(u * rho.matrix() * u.adjoint());
}

namespace detail {

constexpr double kTwoPi = 2 * std::numbers::pi;

// Per-nanosecond rates and the Hamiltonian coefficients of one constant segment.
struct Generator {
    double hx = 0, hy = 0, hz = 0;  // H = (hx sx + hy sy + hz sz) / 2
    double gamma1 = 0;
    double gamma_phi = 0;
};

inline Generator make_generator(const LindbladModel &model, const DriveAmplitude &drive) {
    Generator g;
    g.hx = drive.x;
    g.hy = drive.y;
    g.hz = drive.z + kTwoPi * model.detuning_mhz * 1e-3;
    g.gamma1 = model.gamma1_per_us * 1e-3;
    g.gamma_phi = model.gamma_phi_per_us * 1e-3;
    return g;
}

inline Mat2 lindblad_rhs(const Mat2 &r, const Generator &g) {
    Mat2 h{0.5 * g.hz, Complex(0.5 * g.hx, -0.5 * g.hy), Complex(0.5 * g.hx, 0.5 * g.hy), -0.5 * g.hz};
    Mat2 comm = h * r - r * h;
    Mat2 out = Complex(0, -1) * comm;
    // relaxation: gamma1 [[d, -b/2], [-c/2, -d]]; dephasing: gamma_phi [[0, -b/2], [-c/2, 0]]
    double off = 0.5 * (g.gamma1 + g.gamma_phi);
    out.a00 += g.gamma1 * r.a11;
    out.a11 -= g.gamma1 * r.a11;
    out.a01 -= off * r.a01;
    out.a10 -= off * r.a10;
    return out;
}

inline Mat2 rk4_step(const Mat2 &r, const Generator &g, double h) {
    Mat2 k1 = lindblad_rhs(r, g);
    Mat2 k2 = lindblad_rhs(r + (0.5 * h) * k1, g);
    Mat2 k3 = lindblad_rhs(r + (0.5 * h) * k2, g);
    Mat2 k4 = lindblad_rhs(r + h * k3, g);
    return r + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// exp(-i H t) for H = (hx sx + hy sy + hz sz) / 2.
inline Mat2 segment_unitary(const Generator &g, double t) {
    double w = std::sqrt(g.hx * g.hx + g.hy * g.hy + g.hz * g.hz);
    if (w == 0) {
        return Mat2::identity();
    }
    double c = std::cos(w * t / 2);
    Complex mi(0, -std::sin(w * t / 2) / w);
    return {Complex(c, 0) + mi * g.hz, mi * Complex(g.hx, -g.hy), mi * Complex(g.hx, g.hy), Complex(c, 0) - mi * g.hz};
}

/// Number of equal RK4 substeps covering `duration` with step at most `dt`.
inline long substeps(double duration, double dt) {
    return std::max<long>(1, static_cast<long>(std::ceil(duration / dt - 1e-9)));
}

}  // namespace detail

/// One constant stretch of a piecewise-constant drive.
struct DriveSegment {
    DriveAmplitude amplitude;
    double duration_ns = 0;
};

/// Collapses runs of identical 1 ns samples into segments.
inline std::vector<DriveSegment> segments_from_samples(std::span<const DriveAmplitude> samples) {
    std::vector<DriveSegment> out;
    for (const auto &s : samples) {
        if (!out.empty() && out.back().amplitude == s) {
            out.back().duration_ns += 1.0;
        } else {
            out.push_back({s, 1.0});
        }
    }
    return out;
}

/// Integrates the master equation through `segments` with checks on every step:
/// trace drift per step above 1e-10 or in total above 1e-6, or loss of
/// positivity beyond 1e-6, raises an integration-accuracy error.
inline DensityMatrix evolve_segments(const DensityMatrix &rho, const LindbladModel &model,
                                     std::span<const DriveSegment> segments, double dt_ns) {
    model.validate();
    if (!(dt_ns > 0)) {
        throw Error(ErrorKind::InvalidArgument, "integration step must be positive");
    }
    Mat2 r = rho.matrix();
    double start_trace = r.trace().real();
    for (const auto &seg : segments) {
        if (seg.duration_ns < 0) {
            throw Error(ErrorKind::InvalidArgument, "negative segment duration");
        }
        if (seg.duration_ns == 0) {
            continue;
        }
        detail::Generator g = detail::make_generator(model, seg.amplitude);
        long n = detail::substeps(seg.duration_ns, dt_ns);
        double h = seg.duration_ns / static_cast<double>(n);
        for (long k = 0; k < n; ++k) {
            double before = r.trace().real();
            r = detail::rk4_step(r, g, h);
            double after = r.trace().real();
            if (!std::isfinite(after) || std::abs(after - before) > 1e-10 ||
                std::abs(after - start_trace) > 1e-6 || min_eigenvalue(r) < -1e-6) {
                throw Error(ErrorKind::IntegrationAccuracy,
                            "RK4 step of " + std::to_string(h) + " ns lost trace or positivity; reduce dt");
            }
        }
    }
    try {
        DensityMatrix::check(r, 1e-9, DensityMatrix::kTraceTol, DensityMatrix::kPositivityTol);
    } catch (const Error &e) {
        throw Error(ErrorKind::IntegrationAccuracy, std::string("integration result not physical: ") + e.what());
    }
    return DensityMatrix::assume_physical(r);
}

/// Fixed-step RK4 over `duration_ns`. An optional drive is a rectangular pulse
/// starting at t = 0 and lasting gate.duration_ns; the rest of the interval is free
/// evolution under `model`.
inline DensityMatrix evolve_lindblad(const DensityMatrix &rho, const LindbladModel &model,
                                     const std::optional<PulseGate> &drive, double duration_ns, double dt_ns) {
    if (!(dt_ns > 0) || !(duration_ns >= 0)) {
        throw Error(ErrorKind::InvalidArgument, "evolve_lindblad needs dt > 0 and duration >= 0");
    }
    if (duration_ns == 0) {
        return rho;
    }
    if (dt_ns > duration_ns) {
        throw Error(ErrorKind::InvalidArgument, "integration step exceeds the evolution duration");
    }
    std::vector<DriveSegment> segments;
    if (drive) {
        if (drive->duration_ns > duration_ns) {
            throw Error(ErrorKind::InvalidArgument, "drive pulse longer than the evolution window");
        }
        segments.push_back({rectangular_amplitude(*drive), drive->duration_ns});
        segments.push_back({{}, duration_ns - drive->duration_ns});
    } else {
        segments.push_back({{}, duration_ns});
    }
    return evolve_segments(rho, model, segments, dt_ns);
}

/// Ideal mode applies U rho U^dagger; finite mode drives a rectangular pulse of
/// the gate's duration while `model` decoheres the qubit.
inline DensityMatrix apply_rotation(const DensityMatrix &rho, const PulseGate &gate,
                                    GateMode mode = GateMode::Ideal,
                                    const LindbladModel &model = LindbladModel::closed(), double dt_ns = 1.0) {
    gate.validate(mode);
    DensityMatrix::check(rho.matrix(), 1e-9, DensityMatrix::kTraceTol, DensityMatrix::kPositivityTol);
    if (mode == GateMode::Ideal) {
        return apply_unitary(rho, rotation_unitary(gate.axis, gate.angle_rad));
    }
    return evolve_lindblad(rho, model, gate, gate.duration_ns, std::min(dt_ns, gate.duration_ns));
}

struct ProjectionResult {
    int outcome = 0;
    DensityMatrix collapsed;
    /// How far the ground probability had to be clamped into [0, 1].
    double clamp_excess = 0;
};

/// Born-rule projection onto the z basis: outcome 0 when draw < rho00.
inline ProjectionResult project_z(const DensityMatrix &rho, double draw) {
    double p0 = rho.population(0);
    double clamped = std::clamp(p0, 0.0, 1.0);
    ProjectionResult out;
    out.clamp_excess = std::abs(p0 - clamped);
    out.outcome = draw < clamped ? 0 : 1;
    out.collapsed = out.outcome == 0 ? DensityMatrix::ground() : DensityMatrix::excited();
    return out;
}

inline BlochVector bloch_from_rho(const DensityMatrix &rho) {
    const Mat2 &m = rho.matrix();
    return {2 * m.a01.real(), -2 * m.a01.imag(), (m.a00 - m.a11).real()};
}

inline DensityMatrix rho_from_bloch(const BlochVector &r) {
    if (!std::isfinite(r.norm()) || r.norm() > 1 + 1e-9) {
        throw Error(ErrorKind::InvariantViolation, "Bloch vector longer than 1");
    }
    return DensityMatrix::assume_physical(
        {0.5 * (1 + r.z), Complex(0.5 * r.x, -0.5 * r.y), Complex(0.5 * r.x, 0.5 * r.y), 0.5 * (1 - r.z)});
}

using PureState = std::array<Complex, 2>;

/// F = <psi|rho|psi>.
inline double state_fidelity(const DensityMatrix &rho, const PureState &psi) {
    double norm = std::norm(psi[0]) + std::norm(psi[1]);
    if (std::abs(norm - 1) > 1e-9) {
        throw Error(ErrorKind::InvalidArgument, "fidelity reference state is not normalized");
    }
    const Mat2 &m = rho.matrix();
    Complex f = std::conj(psi[0]) * (m.a00 * psi[0] + m.a01 * psi[1]) +
                std::conj(psi[1]) * (m.a10 * psi[0] + m.a11 * psi[1]);
    return f.real();
}

/// Phase in degrees accumulated under a constant detuning.
inline double stark_phase_deg(double detuning_mhz, double duration_ns) {
    return 360.0 * detuning_mhz * 1e-3 * duration_ns;
}

/// Undoes an accumulated z phase: applies Rz(-phase).
inline DensityMatrix stark_compensation(const DensityMatrix &rho, double phase_deg) {
    return apply_unitary(rho, rotation_unitary(Axis::PlusZ, -phase_deg * std::numbers::pi / 180.0));
}

/// Linear map on vec(rho) = (rho00, rho01, rho10, rho11).
class Superoperator {
   public:
    static Superoperator identity() {
        Superoperator s;
        for (int i = 0; i < 4; ++i) {
            s.m_[i * 4 + i] = 1.0;
        }
        return s;
    }

    /// rho -> U rho U^dagger.
    static Superoperator unitary(const Mat2 &u) {
        const Complex um[2][2] = {{u.a00, u.a01}, {u.a10, u.a11}};
        Superoperator s;
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                for (int k = 0; k < 2; ++k) {
                    for (int l = 0; l < 2; ++l) {
                        s.m_[(i * 2 + j) * 4 + (k * 2 + l)] = um[i][k] * std::conj(um[j][l]);
                    }
                }
            }
        }
        return s;
    }

    /// Builds the channel of `segments` by integrating each basis matrix with
    /// the same RK4 schedule evolve_segments uses. Without dissipation the
    /// segments are exact unitaries instead.
    static Superoperator integrate(const LindbladModel &model, std::span<const DriveSegment> segments,
                                   double dt_ns) {
        model.validate();
        if (model.gamma1_per_us == 0 && model.gamma_phi_per_us == 0) {
            Mat2 u = Mat2::identity();
            for (const auto &seg : segments) {
                if (seg.duration_ns > 0) {
                    u = detail::segment_unitary(detail::make_generator(model, seg.amplitude), seg.duration_ns) * u;
                }
            }
            return unitary(u);
        }
        Superoperator s;
        for (int col = 0; col < 4; ++col) {
            Mat2 r{};
            (col == 0 ? r.a00 : col == 1 ? r.a01 : col == 2 ? r.a10 : r.a11) = 1.0;
            for (const auto &seg : segments) {
                if (seg.duration_ns <= 0) {
                    continue;
                }
                detail::Generator g = detail::make_generator(model, seg.amplitude);
                long n = detail::substeps(seg.duration_ns, dt_ns);
                double h = seg.duration_ns / static_cast<double>(n);
                for (long k = 0; k < n; ++k) {
                    r = detail::rk4_step(r, g, h);
                }
            }
            s.m_[0 * 4 + col] = r.a00;
            s.m_[1 * 4 + col] = r.a01;
            s.m_[2 * 4 + col] = r.a10;
            s.m_[3 * 4 + col] = r.a11;
        }
        return s;
    }

    Mat2 apply(const Mat2 &r) const {
        std::array<Complex, 4> v{r.a00, r.a01, r.a10, r.a11};
        std::array<Complex, 4> o{};
        for (int i = 0; i < 4; ++i) {
            o[i] = m_[i * 4 + 0] * v[0] + m_[i * 4 + 1] * v[1] + m_[i * 4 + 2] * v[2] + m_[i * 4 + 3] * v[3];
        }
        return {o[0], o[1], o[2], o[3]};
    }

    DensityMatrix apply(const DensityMatrix &rho) const { return DensityMatrix::assume_physical(apply(rho.matrix())); }

    /// Channel that applies *this first and then `next`.
    Superoperator then(const Superoperator &next) const {
        Superoperator out;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                Complex acc = 0;
                for (int k = 0; k < 4; ++k) {
                    acc += next.m_[i * 4 + k] * m_[k * 4 + j];
                }
                out.m_[i * 4 + j] = acc;
            }
        }
        return out;
    }

   private:
    std::array<Complex, 16> m_{};
};

}  // namespace qfb

#endif  // QFB_PHYSICS_HPP
