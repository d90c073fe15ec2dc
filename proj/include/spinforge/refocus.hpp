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
#include "spinforge/simplex.hpp"

namespace spinforge {

struct WalshPattern {
    int n = 0;
    int N = 1;
    std::vector<int> values;

    int sign_changes() const {
        int c = 0;
        for (std::size_t k = 1; k < values.size(); ++k) c += values[k] != values[k - 1];
        return c;
    }
};

namespace detail {

inline unsigned bit_reverse(unsigned v, int bits) {
    unsigned r = 0;
    for (int i = 0; i < bits; ++i) r |= ((v >> i) & 1U) << (bits - 1 - i);
    return r;
}

inline int log2_exact(int N) {
    int b = 0;
    while ((1 << b) < N) ++b;
    return b;
}

} // namespace detail

/// Sequency-ordered Walsh function: W_n[k] = (-1)^popcount(h & k) with
/// h the bit-reversed Gray code of n.
inline WalshPattern walsh(int n, int N) {
    if (!is_power_of_two(N)) throw Error("walsh: N must be a power of two");
    if (n < 0 || n >= N) throw Error("walsh: index must satisfy 0 <= n < N");
    const int bits = detail::log2_exact(N);
    const unsigned h = detail::bit_reverse(static_cast<unsigned>(n) ^ (static_cast<unsigned>(n) >> 1), bits);
    WalshPattern w{n, N, std::vector<int>(N)};
    for (int k = 0; k < N; ++k) w.values[k] = (std::popcount(h & static_cast<unsigned>(k)) & 1) ? -1 : 1;
    return w;
}

/// W_m o W_n = W_{m xor n}; checked elementwise.
inline int walsh_product(int m, int n, int N) {
    const int r = m ^ n;
    const auto a = walsh(m, N), b = walsh(n, N), c = walsh(r, N);
    for (int k = 0; k < N; ++k)
        if (a.values[k] * b.values[k] != c.values[k]) throw Error("walsh_product: index law violated");
    return r;
}

inline int walsh_product(int m, int n) {
    int N = 1;
    while (N <= std::max(m, n)) N <<= 1;
    return walsh_product(m, n, N);
}

struct PatternAssignment {
    int N = 0;
    std::vector<int> index;  // per spin
};

/// Spin k (0-based) gets W_{2^k}; N = 2^q.
inline PatternAssignment assign_patterns(int q) {
    if (q < 2) throw Error("assign_patterns: need at least 2 spins");
    if (q > 20) throw Error("assign_patterns: too many spins");
    PatternAssignment a;
    a.N = 1 << q;
    for (int k = 0; k < q; ++k) a.index.push_back(1 << k);
    return a;
}

using PairTargets = std::map<std::pair<int, int>, double>;  // (k<l) -> theta in radians of 2IzIz phase

inline PairTargets normalize_targets(const PairTargets& t) {
    PairTargets out;
    for (const auto& [p, th] : t) {
        if (p.first == p.second) throw Error("coupling target on a single spin");
        auto key = std::minmax(p.first, p.second);
        out[{key.first, key.second}] += th;
    }
    return out;
}

struct RefocusSchedule {
    PatternAssignment assignment;
    std::vector<double> durations;  // per Walsh bin, seconds
    PairTargets targets;
    std::vector<double> z_angles;   // per spin, radians
    double total_time = 0.0;

    int spin_sign(int k, int b) const { return walsh(assignment.index[k], assignment.N).values[b]; }
};

/// Minimum total time with every coupled pair reaching its target phase and
/// every chemical shift refocused.
inline RefocusSchedule lp_schedule(const SpinSystem& sys, const PairTargets& targets_in,
                                   std::optional<PatternAssignment> assignment = {}) {
    const int q = sys.size();
    const PairTargets targets = normalize_targets(targets_in);
    for (const auto& [p, th] : targets) {
        if (p.first < 0 || p.second >= q) throw Error("lp_schedule: target references unknown spin");
        if (th != 0.0 && sys.coupling(p.first, p.second) == 0.0)
            throw Error("lp_schedule: pair (" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) +
                        ") has a target but J = 0");
    }
    RefocusSchedule s;
    s.assignment = assignment ? *assignment : assign_patterns(q);
    s.targets = targets;
    s.z_angles.assign(q, 0.0);
    const int N = s.assignment.N;

    std::vector<std::vector<int>> pat(q);
    for (int k = 0; k < q; ++k) pat[k] = walsh(s.assignment.index[k], N).values;

    std::vector<RVector> rows;
    std::vector<double> rhs;
    std::vector<std::string> names;
    for (const auto& [p, j] : sys.couplings()) {
        if (j == 0.0) continue;
        RVector r(N);
        for (int b = 0; b < N; ++b) r(b) = kPi * j * pat[p.first][b] * pat[p.second][b];
        auto it = targets.find(p);
        rows.push_back(r);
        rhs.push_back(it == targets.end() ? 0.0 : it->second);
        names.push_back("coupling (" + std::to_string(p.first + 1) + "," + std::to_string(p.second + 1) + ")");
    }
    for (int k = 0; k < q; ++k) {
        RVector r(N);
        for (int b = 0; b < N; ++b) r(b) = pat[k][b];
        rows.push_back(r);
        rhs.push_back(0.0);
        names.push_back("shift refocusing on spin " + std::to_string(k + 1));
    }
    Eigen::MatrixXd A(rows.size(), N);
    RVector bvec(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        // scale coupling rows to unit size so one tolerance fits all
        const double sc = std::max(1.0, rows[i].cwiseAbs().maxCoeff());
        A.row(i) = rows[i].transpose() / sc;
        bvec(i) = rhs[i] / sc;
    }
    const auto lp = simplex_solve(A, bvec, RVector::Ones(N), 1e-9);
    if (lp.status != LPResult::Status::optimal) {
        std::string why = lp.violated_row >= 0 ? names[lp.violated_row] : std::string("unknown constraint");
        throw Error("lp_schedule: infeasible (" + why + ")");
    }
    s.durations.assign(lp.x.data(), lp.x.data() + N);
    s.total_time = lp.objective;
    return s;
}

struct RefocusEvent {
    enum class Type { delay, pulse180 } type = Type::delay;
    double seconds = 0.0;
    int spin = 0;
    double phase_deg = 0.0;
};

using RefocusProgram = std::vector<RefocusEvent>;

/// Delta-pulse program: a 180 on a spin whenever its sign changes between
/// non-empty bins, a trailing 180 where the sign ends negative, and each
/// requested z rotation put into the phase of that spin's final pulse.
inline RefocusProgram compile_program(const RefocusSchedule& s, const std::vector<double>& z_angles = {},
                                      bool symmetrize = false) {
    const int q = static_cast<int>(s.assignment.index.size());
    const int N = s.assignment.N;
    if (!z_angles.empty() && static_cast<int>(z_angles.size()) != q) throw Error("compile_program: z angle count");
    std::vector<std::pair<int, double>> bins;  // (bin, duration)
    for (int b = 0; b < N; ++b)
        if (s.durations[b] > 0) bins.emplace_back(b, symmetrize ? 0.5 * s.durations[b] : s.durations[b]);
    if (symmetrize)
        for (int i = static_cast<int>(bins.size()) - 1; i >= 0; --i) bins.push_back(bins[i]);

    std::vector<std::vector<int>> pat(q);
    for (int k = 0; k < q; ++k) pat[k] = walsh(s.assignment.index[k], N).values;
    RefocusProgram prog;
    std::vector<int> sign(q, 1), count(q, 0);
    for (const auto& [b, t] : bins) {
        for (int k = 0; k < q; ++k)
            if (pat[k][b] != sign[k]) {
                prog.push_back({RefocusEvent::Type::pulse180, 0.0, k, 0.0});
                sign[k] = -sign[k];
                ++count[k];
            }
        if (!prog.empty() && prog.back().type == RefocusEvent::Type::delay)
            prog.back().seconds += t;
        else
            prog.push_back({RefocusEvent::Type::delay, t, 0, 0.0});
    }
    for (int k = 0; k < q; ++k)
        if (sign[k] < 0) {
            prog.push_back({RefocusEvent::Type::pulse180, 0.0, k, 0.0});
            ++count[k];
        }
    for (int k = 0; k < q; ++k) {
        if (count[k] % 2) throw Error("compile_program: odd pulse count on spin " + std::to_string(k + 1));
        const double z = z_angles.empty() ? 0.0 : z_angles[k];
        if (z == 0.0) continue;
        if (count[k] == 0) {
            prog.push_back({RefocusEvent::Type::pulse180, 0.0, k, 0.0});
            prog.push_back({RefocusEvent::Type::pulse180, 0.0, k, 0.0});
        }
        // the last pulse on spin k; pair (earlier phase 0, later phase z/2)
        for (auto it = prog.rbegin(); it != prog.rend(); ++it)
            if (it->type == RefocusEvent::Type::pulse180 && it->spin == k) {
                it->phase_deg = rad2deg(z) / 2.0;
                break;
            }
    }
    return prog;
}

/// exp(-i sum theta_kl 2 Iz^k Iz^l) times exp(-i z_k Iz^k) on each spin.
inline Matrix refocus_target(int q, const PairTargets& targets, const std::vector<double>& z_angles = {}) {
    const long d = 1L << q;
    CVector diag(d);
    for (long r = 0; r < d; ++r) {
        double ph = 0.0;
        for (const auto& [p, th] : normalize_targets(targets))
            ph += th * 2.0 * iz_value(q, p.first, r) * iz_value(q, p.second, r);
        for (std::size_t k = 0; k < z_angles.size(); ++k) ph += z_angles[k] * iz_value(q, static_cast<int>(k), r);
        diag(r) = std::exp(cplx(0, -ph));
    }
    return diag.asDiagonal();
}

/// Ideal 180 about an axis at phase_deg on one spin of q, applied to a
/// matrix from the left.
inline void apply_pulse180(Matrix& u, int q, int k, double phase_deg) {
    const long mask = spin_mask(q, k);
    const double ph = deg2rad(phase_deg);
    // exp(-i pi I_phi) = -i (cos phi sigma_x + sin phi sigma_y)
    const cplx up = cplx(0, -1) * std::exp(cplx(0, -ph));  // <0|R|1>
    const cplx dn = cplx(0, -1) * std::exp(cplx(0, ph));   // <1|R|0>
    Matrix out(u.rows(), u.cols());
    for (long r = 0; r < u.rows(); ++r) {
        const long s = r ^ mask;
        out.row(r) = ((r & mask) ? dn : up) * u.row(s);
    }
    u = std::move(out);
}

/// Brute-force check: delays under the full drift, instantaneous 180s.
inline double verify_schedule(const SpinSystem& sys, const RefocusProgram& prog, const PairTargets& targets,
                              const std::vector<double>& z_angles = {}) {
    const int q = sys.size();
    const RVector h0 = drift_diagonal(sys);
    Matrix u = Matrix::Identity(sys.dim(), sys.dim());
    for (const auto& e : prog) {
        if (e.type == RefocusEvent::Type::delay) {
            for (long r = 0; r < u.rows(); ++r) u.row(r) *= std::exp(cplx(0, -h0(r) * e.seconds));
        } else {
            apply_pulse180(u, q, e.spin, e.phase_deg);
        }
    }
    return 1.0 - unitary_fidelity(refocus_target(q, targets, z_angles), u);
}

inline double program_duration(const RefocusProgram& p) {
    double t = 0.0;
    for (const auto& e : p)
        if (e.type == RefocusEvent::Type::delay) t += e.seconds;
    return t;
}

inline void write_refocus_program(std::ostream& out, const RefocusProgram& p) {
    char buf[128];
    for (const auto& e : p) {
        if (e.type == RefocusEvent::Type::delay)
            std::snprintf(buf, sizeof buf, "delay %.17g\n", e.seconds);
        else
            std::snprintf(buf, sizeof buf, "pulse180 spin=%d phase_deg=%.17g\n", e.spin + 1, e.phase_deg);
        out << buf;
    }
}

inline RefocusProgram read_refocus_program(std::istream& in) {
    RefocusProgram p;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        std::istringstream ls(s);
        std::string kw;
        ls >> kw;
        if (kw == "delay") {
            std::string v;
            ls >> v;
            p.push_back({RefocusEvent::Type::delay, detail::parse_real(v, line), 0, 0.0});
        } else if (kw == "pulse180") {
            RefocusEvent e{RefocusEvent::Type::pulse180, 0.0, -1, 0.0};
            for (std::string t; ls >> t;) {
                auto eq = t.find('=');
                if (eq == std::string::npos) throw Error("line " + std::to_string(line) + ": expected key=value");
                const std::string k = t.substr(0, eq), v = t.substr(eq + 1);
                if (k == "spin")
                    e.spin = detail::parse_int(v, line) - 1;
                else if (k == "phase_deg")
                    e.phase_deg = detail::parse_real(v, line);
                else
                    throw Error("line " + std::to_string(line) + ": unknown key '" + k + "'");
            }
            if (e.spin < 0) throw Error("line " + std::to_string(line) + ": pulse180 needs spin=");
            p.push_back(e);
        } else {
            throw Error("line " + std::to_string(line) + ": unknown statement '" + kw + "'");
        }
    }
    return p;
}

/// "1,2:90deg;3,4:1.57" -> pair targets (degrees with a deg suffix, else radians).
inline PairTargets parse_pair_targets(const std::string& spec) {
    PairTargets t;
    std::stringstream ss(spec);
    for (std::string item; std::getline(ss, item, ';');) {
        item = detail::trim(item);
        if (item.empty()) continue;
        auto colon = item.find(':');
        auto comma = item.find(',');
        if (colon == std::string::npos || comma == std::string::npos || comma > colon)
            throw Error("bad target '" + item + "', expected i,j:angle");
        const int i = detail::parse_int(detail::trim(item.substr(0, comma)), 0) - 1;
        const int j = detail::parse_int(detail::trim(item.substr(comma + 1, colon - comma - 1)), 0) - 1;
        std::string ang = detail::trim(item.substr(colon + 1));
        double v;
        if (ang.size() > 3 && ang.substr(ang.size() - 3) == "deg")
            v = deg2rad(detail::parse_real(ang.substr(0, ang.size() - 3), 0));
        else
            v = detail::parse_real(ang, 0);
        if (i < 0 || j < 0) throw Error("bad spin index in target '" + item + "'");
        auto key = std::minmax(i, j);
        t[{key.first, key.second}] = v;
    }
    return t;
}

} // namespace spinforge
