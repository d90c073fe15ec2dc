// Copyright 2026 The Spinforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "spinforge/fid.hpp"

namespace spinforge {

/// Single-spin unitary [[a, b], [-b*, a*]].
struct SU2 {
    cplx a{1.0, 0.0};
    cplx b{0.0, 0.0};

    /// this * o
    SU2 operator*(const SU2& o) const {
        return {a * o.a - b * std::conj(o.b), a * o.b + b * std::conj(o.a)};
    }

    Matrix matrix() const {
        Matrix m(2, 2);
        m << a, b, -std::conj(b), std::conj(a);
        return m;
    }

    /// |tr(U^+ V)/2|^2 against another SU2 element; the trace is real.
    double fidelity(const SU2& o) const {
        const double t = (std::conj(a) * o.a + std::conj(b) * o.b).real();
        return t * t;
    }
};

/// exp(-i t H) with H = (1+eps)(cos(phi) Ix + sin(phi) Iy) + f Iz, omega1 = 1,
/// t = flip angle in radians.
inline SU2 pulse_su2(double flip_deg, double phase_deg, double eps, double f) {
    const double phi = deg2rad(phase_deg), t = deg2rad(flip_deg);
    const double nx = (1.0 + eps) * std::cos(phi), ny = (1.0 + eps) * std::sin(phi), nz = f;
    const double w = std::sqrt(nx * nx + ny * ny + nz * nz);
    if (w == 0.0) return {};
    const double c = std::cos(0.5 * w * t), s = std::sin(0.5 * w * t) / w;
    return {cplx(c, -s * nz), cplx(0, -s) * cplx(nx, -ny)};
}

inline Operator pulse_propagator(double flip_deg, double phase_deg, double eps, double f) {
    return Operator::unitary(pulse_su2(flip_deg, phase_deg, eps, f).matrix());
}

struct CompositePulse {
    std::string name;
    std::vector<double> flips_deg;
    std::vector<double> phases_deg;
    std::string target = "X";  // compared up to a global phase

    void validate() const {
        if (flips_deg.size() != phases_deg.size()) throw Error("composite pulse: flip/phase length mismatch");
        if (flips_deg.empty()) throw Error("composite pulse: empty");
    }

    std::size_t size() const { return flips_deg.size(); }

    /// Same sequence with every phase shifted.
    CompositePulse shifted(double dphase_deg) const {
        CompositePulse p = *this;
        for (auto& ph : p.phases_deg) ph += dphase_deg;
        normalize(p);
        return p;
    }

    static void normalize(CompositePulse& p) {
        for (auto& ph : p.phases_deg) {
            ph = std::fmod(ph, 360.0);
            if (ph < 0) ph += 360.0;
            if (ph >= 360.0) ph -= 360.0;
        }
    }
};

inline double nine_alpha_deg() { return -rad2deg(std::acos((4.0 - std::sqrt(10.0)) / 4.0)); }

inline double nine_beta_deg() {
    const double a = deg2rad(nine_alpha_deg());
    return rad2deg(2.0 * a + std::acos(-(1.0 + 2.0 * std::cos(a)) / 2.0));
}

inline std::vector<std::string> catalog_names() { return {"plain", "tycko_b1", "tycko_offres", "knill", "nine"}; }

inline CompositePulse catalog(const std::string& name) {
    CompositePulse p;
    p.name = name;
    if (name == "plain") {
        p.phases_deg = {0};
    } else if (name == "tycko_b1") {
        p.phases_deg = {120, 240, 120};
    } else if (name == "tycko_offres") {
        p.phases_deg = {60, 120, 60};
    } else if (name == "knill") {
        p.phases_deg = {240, 210, 300, 210, 240};
    } else if (name == "nine") {
        const double a = nine_alpha_deg(), b = nine_beta_deg();
        p.phases_deg = {a, b, b, b - 180, 2 * b - 2 * a, b - 180, b, b, a};
    } else {
        throw Error("unknown composite pulse '" + name + "'");
    }
    p.flips_deg.assign(p.phases_deg.size(), 180.0);
    CompositePulse::normalize(p);
    return p;
}

inline SU2 composite_su2(const CompositePulse& p, double eps, double f) {
    p.validate();
    SU2 u;
    for (std::size_t k = 0; k < p.size(); ++k) u = pulse_su2(p.flips_deg[k], p.phases_deg[k], eps, f) * u;
    return u;
}

/// Sub-pulse 1 acts first.
inline Operator composite_propagator(const CompositePulse& p, double eps, double f) {
    return Operator::unitary(composite_su2(p, eps, f).matrix());
}

inline Matrix x_gate() {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    return x;
}

inline double composite_infidelity(const CompositePulse& p, double eps, double f) {
    return 1.0 - unitary_fidelity(x_gate(), composite_su2(p, eps, f).matrix());
}

struct ErrorMap {
    std::vector<double> eps, f;
    std::vector<double> infidelity;  // row-major: eps outer, f inner

    double at(std::size_t i, std::size_t j) const { return infidelity[i * f.size() + j]; }
};

inline std::vector<double> symmetric_grid(double range, int n) {
    if (n <= 0) throw Error("grid resolution must be >= 1");
    if (!std::isfinite(range)) throw Error("grid range must be finite");
    if (n == 1) return {0.0};
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = -range + 2.0 * range * i / (n - 1);
    return v;
}

inline ErrorMap error_map(const std::function<double(double, double)>& infidelity_at, double eps_range, double f_range,
                          int resolution) {
    ErrorMap m;
    m.eps = symmetric_grid(eps_range, resolution);
    m.f = symmetric_grid(f_range, resolution);
    m.infidelity.resize(m.eps.size() * m.f.size());
    parallel_for(m.infidelity.size(), [&](std::size_t k) {
        m.infidelity[k] = infidelity_at(m.eps[k / m.f.size()], m.f[k % m.f.size()]);
    });
    return m;
}

inline ErrorMap error_map(const CompositePulse& p, double range, int resolution) {
    return error_map([&](double e, double f) { return composite_infidelity(p, e, f); }, range, range, resolution);
}

inline std::string csv_provenance(std::uint64_t seed) {
    return std::string("# spinforge ") + kVersion + " seed=" + std::to_string(seed);
}

inline void write_error_map_csv(std::ostream& out, const ErrorMap& m, std::uint64_t seed) {
    out << csv_provenance(seed) << "\neps,f,infidelity\n";
    char buf[128];
    for (std::size_t i = 0; i < m.eps.size(); ++i)
        for (std::size_t j = 0; j < m.f.size(); ++j) {
            std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.12g\n", m.eps[i], m.f[j], m.at(i, j));
            out << buf;
        }
}

/// 180_{phi2} 180_{phi1} as an operator product (phi1 acts first); equals
/// exp(-i 2(phi2 - phi1) Iz) up to a global phase.
inline Operator z_rotation_pair(double phi1_deg, double phi2_deg) {
    return Operator::unitary((pulse_su2(180, phi2_deg, 0, 0) * pulse_su2(180, phi1_deg, 0, 0)).matrix());
}

inline Matrix rz(double theta_rad) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = std::exp(cplx(0, -theta_rad / 2));
    m(1, 1) = std::exp(cplx(0, theta_rad / 2));
    return m;
}

} // namespace spinforge
