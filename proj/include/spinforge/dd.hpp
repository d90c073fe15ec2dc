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

#include "spinforge/compulse.hpp"

namespace spinforge {

enum class DDKind { cpmg, xy4, xy8, kdd20, udd };

/// How the Knill block enters KDD: as a phase cycle of 20 evenly spaced
/// pulses, or as composite pulses substituted into XY-4 timing.
enum class KddMode { phase_cycle, composite };

/// Outer offsets applied to the (30,0,90,0,30) block.
enum class KddOffsets { xy4, xy4_cyclic };

inline DDKind parse_dd_kind(const std::string& s) {
    if (s == "cpmg") return DDKind::cpmg;
    if (s == "xy4") return DDKind::xy4;
    if (s == "xy8") return DDKind::xy8;
    if (s == "kdd20" || s == "kdd") return DDKind::kdd20;
    if (s == "udd") return DDKind::udd;
    throw Error("unknown DD sequence '" + s + "'");
}

inline const char* dd_kind_name(DDKind k) {
    switch (k) {
    case DDKind::cpmg: return "cpmg";
    case DDKind::xy4: return "xy4";
    case DDKind::xy8: return "xy8";
    case DDKind::kdd20: return "kdd20";
    default: return "udd";
    }
}

struct DDPulse {
    double time = 0.0;   // fraction of T
    double phase_deg = 0.0;
    std::string composite;  // empty: plain 180; otherwise a catalog name, phases offset by phase_deg
};

struct DDSequence {
    std::string name;
    std::vector<DDPulse> pulses;
    int cycle_length = 1;  // pulses per cycle

    void validate() const {
        for (std::size_t k = 0; k < pulses.size(); ++k) {
            if (!(pulses[k].time > 0 && pulses[k].time < 1)) throw Error("DD pulse time outside (0,1)");
            if (k > 0 && !(pulses[k].time > pulses[k - 1].time)) throw Error("DD pulse times must increase");
        }
        if (cycle_length < 1 || pulses.size() % cycle_length != 0) throw Error("DD sequence not a whole number of cycles");
    }

    std::vector<double> times(double T = 1.0) const {
        std::vector<double> t;
        for (const auto& p : pulses) t.push_back(p.time * T);
        return t;
    }

    int cycles() const { return static_cast<int>(pulses.size()) / cycle_length; }
};

/// cos(pi p / m), exact at the rational values 0, +-1/2, +-1.
inline double cos_pi_ratio(long p, long m) {
    p %= 2 * m;
    if (p % m == 0) return (p / m) % 2 ? -1.0 : 1.0;
    if ((2 * p) % m == 0) return 0.0;
    if ((3 * p) % m == 0) {
        const long k = 3 * p / m;  // cos(k pi / 3), k in 1..5 except 3
        return (k == 1 || k == 5) ? 0.5 : -0.5;
    }
    return std::cos(kPi * static_cast<double>(p) / static_cast<double>(m));
}

/// t_j = T sin^2(pi j / (2n + 2)) = T (1 - cos(pi j / (n + 1))) / 2, j = 1..n
inline std::vector<double> udd_times(int n, double T = 1.0) {
    if (n < 1) throw Error("udd_times: n must be >= 1");
    if (!(T > 0)) throw Error("udd_times: T must be > 0");
    std::vector<double> t(n);
    for (int j = 1; j <= n; ++j) t[j - 1] = T * 0.5 * (1.0 - cos_pi_ratio(j, n + 1));
    return t;
}

inline std::vector<double> kdd_block() { return {30, 0, 90, 0, 30}; }

inline std::vector<double> kdd_offsets(KddOffsets o) {
    return o == KddOffsets::xy4 ? std::vector<double>{0, 90, 0, 90} : std::vector<double>{0, 90, 180, 270};
}

/// Pulse times are fractions of the period T.
inline DDSequence build_sequence(DDKind kind, int n_pulses, KddMode kmode = KddMode::phase_cycle,
                                 KddOffsets koff = KddOffsets::xy4) {
    DDSequence s;
    s.name = dd_kind_name(kind);
    std::vector<double> cycle;
    switch (kind) {
    case DDKind::cpmg: cycle = {0, 0}; break;
    case DDKind::xy4: cycle = {0, 90, 0, 90}; break;
    case DDKind::xy8: cycle = {0, 90, 0, 90, 90, 0, 90, 0}; break;
    case DDKind::kdd20:
        if (kmode == KddMode::composite) {
            cycle = kdd_offsets(koff);
        } else {
            for (double off : kdd_offsets(koff))
                for (double b : kdd_block()) cycle.push_back(b + off);
        }
        break;
    case DDKind::udd: cycle = {0}; break;
    }
    if (n_pulses < 1 || n_pulses % static_cast<int>(cycle.size()) != 0)
        throw Error(std::string("build_sequence: ") + s.name + " needs a multiple of " + std::to_string(cycle.size()) +
                    " pulses, got " + std::to_string(n_pulses));
    s.cycle_length = static_cast<int>(cycle.size());
    std::vector<double> t;
    if (kind == DDKind::udd) {
        t = udd_times(n_pulses, 1.0);
        s.cycle_length = n_pulses;
    } else {
        for (int k = 0; k < n_pulses; ++k) t.push_back((k + 0.5) / n_pulses);
    }
    for (int k = 0; k < n_pulses; ++k) {
        DDPulse p{t[k], std::fmod(cycle[k % cycle.size()], 360.0), ""};
        if (kind == DDKind::kdd20 && kmode == KddMode::composite) {
            p.composite = "kdd_block";
        }
        s.pulses.push_back(p);
    }
    s.validate();
    return s;
}

inline int dd_cycle_length(DDKind kind, KddMode kmode = KddMode::phase_cycle) {
    switch (kind) {
    case DDKind::cpmg: return 2;
    case DDKind::xy4: return 4;
    case DDKind::xy8: return 8;
    case DDKind::kdd20: return kmode == KddMode::composite ? 4 : 20;
    default: return 1;
    }
}

/// Sequence with the most whole cycles that fit in the given echo count.
/// Composite KDD counts each sub-pulse as an echo.
inline DDSequence sequence_for_echoes(DDKind kind, int echoes, KddMode kmode = KddMode::phase_cycle,
                                      KddOffsets koff = KddOffsets::xy4) {
    if (kind == DDKind::udd) return build_sequence(kind, echoes);
    const int len = dd_cycle_length(kind, kmode);
    const int per_pulse = (kind == DDKind::kdd20 && kmode == KddMode::composite) ? 5 : 1;
    const int pulses = (echoes / per_pulse / len) * len;
    if (pulses < len) throw Error("echo count too small for one cycle");
    return build_sequence(kind, pulses, kmode, koff);
}

inline CompositePulse composite_for(const DDPulse& p) {
    if (p.composite == "kdd_block") {
        CompositePulse c;
        c.name = "kdd_block";
        c.phases_deg = kdd_block();
        c.flips_deg.assign(c.phases_deg.size(), 180.0);
        return c.shifted(p.phase_deg);
    }
    return catalog(p.composite).shifted(p.phase_deg);
}

/// Pulse-only propagator for the first n_cycles cycles; free evolution ideal.
inline SU2 dd_propagator(const DDSequence& seq, int n_cycles, double eps, double f) {
    seq.validate();
    if (n_cycles < 0 || n_cycles > seq.cycles()) throw Error("memory_fidelity: cycle count out of range");
    SU2 u;
    const std::size_t n = static_cast<std::size_t>(n_cycles) * seq.cycle_length;
    for (std::size_t k = 0; k < n; ++k) {
        const auto& p = seq.pulses[k];
        u = (p.composite.empty() ? pulse_su2(180, p.phase_deg, eps, f) : composite_su2(composite_for(p), eps, f)) * u;
    }
    return u;
}

/// Cardinal-state average fidelity against the identity after n_cycles.
inline double memory_fidelity(const DDSequence& seq, int n_cycles, double eps, double f) {
    return cardinal_average_fidelity(Matrix::Identity(2, 2), dd_propagator(seq, n_cycles, eps, f).matrix());
}

inline double memory_fidelity(const DDSequence& seq, double eps, double f) {
    return memory_fidelity(seq, seq.cycles(), eps, f);
}

/// Combined mode: pulse errors plus free precession under an offset
/// delta(t) = amp * poly(t/T) (rad/s) between instantaneous-centre pulses.
inline double combined_memory_fidelity(const DDSequence& seq, double eps, double f, const std::vector<double>& offset,
                                       double amp, double T) {
    seq.validate();
    auto phase = [&](double x0, double x1) {
        double v = 0.0, p0 = x0, p1 = x1;
        for (std::size_t k = 0; k < offset.size(); ++k, p0 *= x0, p1 *= x1) v += offset[k] * (p1 - p0) / (k + 1.0);
        return amp * v * T;
    };
    auto free = [&](double x0, double x1) {
        const double th = phase(x0, x1);
        return SU2{std::exp(cplx(0, -th / 2)), 0.0};
    };
    SU2 u;
    double last = 0.0;
    for (const auto& p : seq.pulses) {
        u = free(last, p.time) * u;
        u = (p.composite.empty() ? pulse_su2(180, p.phase_deg, eps, f) : composite_su2(composite_for(p), eps, f)) * u;
        last = p.time;
    }
    u = free(last, 1.0) * u;
    return cardinal_average_fidelity(Matrix::Identity(2, 2), u.matrix());
}

/// Fidelity for one initial state after the first n pulses (not cycle-aligned).
inline double state_memory_fidelity(const DDSequence& seq, int n_pulses, const CVector& psi, double eps, double f) {
    SU2 u;
    for (int k = 0; k < n_pulses; ++k) u = pulse_su2(180, seq.pulses.at(k).phase_deg, eps, f) * u;
    const CVector out = u.matrix() * psi;
    return std::norm(psi.dot(out));
}

/// Polynomial offset in x = t/T: coefficients c_k of x^k.
using Poly = std::vector<double>;

/// Shifted Legendre polynomials on [0,1]: 1, 2x-1, 6x^2-6x+1.
inline Poly shifted_legendre(int n) {
    switch (n) {
    case 0: return {1};
    case 1: return {-1, 2};
    case 2: return {1, -6, 6};
    default: throw Error("shifted Legendre index must be 0, 1 or 2");
    }
}

/// Integral over [0,T] of s(t) delta(t) with s flipping sign at each pulse
/// time (absolute, in [0,T]); delta given as a polynomial in t/T.
inline double accumulated_phase(const Poly& offset, const std::vector<double>& pulse_times, double T) {
    if (!(T > 0)) throw Error("accumulated_phase: T must be > 0");
    std::vector<double> edges{0.0};
    for (double t : pulse_times) {
        if (t < 0 || t > T) throw Error("accumulated_phase: pulse time outside [0,T]");
        edges.push_back(t / T);
    }
    edges.push_back(1.0);
    auto antideriv = [&](double x) {
        double v = 0.0, xp = x;
        for (std::size_t k = 0; k < offset.size(); ++k, xp *= x) v += offset[k] * xp / (k + 1.0);
        return v;
    };
    double acc = 0.0, sign = 1.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i, sign = -sign) acc += sign * (antideriv(edges[i + 1]) - antideriv(edges[i]));
    return acc * T;
}

/// Pulse times (absolute) for a composite-substituted sequence where each
/// 180 is a catalog composite of `n_sub` back-to-back sub-pulses of width w
/// centred on the nominal time; instantaneous idealization keeps the net sign
/// flip at the centre for odd n_sub.
inline std::vector<double> composite_flip_times(const std::vector<double>& centres, int n_sub, double width) {
    std::vector<double> out;
    for (double c : centres)
        for (int k = 0; k < n_sub; ++k) out.push_back(c + (k - 0.5 * (n_sub - 1)) * width);
    return out;
}

} // namespace spinforge
