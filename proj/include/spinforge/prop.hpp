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

#include "spinforge/spinsys.hpp"

#include <array>
#include <cstdio>

namespace spinforge {

enum class Param { xy, amp_phase, phase_only };

inline const char* param_name(Param p) {
    switch (p) {
    case Param::xy: return "xy";
    case Param::amp_phase: return "amp_phase";
    default: return "phase_only";
    }
}

inline Param parse_param(const std::string& s) {
    if (s == "xy") return Param::xy;
    if (s == "amp_phase") return Param::amp_phase;
    if (s == "phase_only") return Param::phase_only;
    throw Error("unknown control mode '" + s + "'");
}

/// Controls for one channel. Per step:
///   xy:         values[j] = {ax_hz, ay_hz}
///   amp_phase:  values[j] = {amp_hz, phase_rad}
///   phase_only: values[j] = {phase_rad, unused}, amplitude amp_hz
struct ChannelControls {
    std::string species;
    Param mode = Param::xy;
    double amp_hz = 0.0;
    std::vector<std::array<double, 2>> values;

    int params_per_step() const { return mode == Param::phase_only ? 1 : 2; }

    /// Cartesian amplitudes in Hz for step j.
    std::array<double, 2> xy(int j) const {
        const auto& v = values[j];
        switch (mode) {
        case Param::xy: return v;
        case Param::amp_phase: return {v[0] * std::cos(v[1]), v[0] * std::sin(v[1])};
        default: return {amp_hz * std::cos(v[0]), amp_hz * std::sin(v[0])};
        }
    }
};

struct PulseProgram {
    double tau_s = 0.0;
    int n_steps = 0;
    std::vector<ChannelControls> channels;

    static PulseProgram phase_only(const std::string& species, double amp_hz, int n, double tau) {
        PulseProgram p;
        p.tau_s = tau;
        p.n_steps = n;
        p.channels.push_back({species, Param::phase_only, amp_hz, std::vector<std::array<double, 2>>(n, {0.0, 0.0})});
        return p;
    }

    void add_channel(const std::string& species, Param mode, double amp_hz = 0.0) {
        channels.push_back({species, mode, amp_hz, std::vector<std::array<double, 2>>(n_steps, {0.0, 0.0})});
    }

    void validate() const {
        if (!(tau_s > 0) || !std::isfinite(tau_s)) throw Error("pulse program: tau_s must be > 0");
        if (n_steps < 1) throw Error("pulse program: n_steps must be >= 1");
        for (const auto& c : channels) {
            if (static_cast<int>(c.values.size()) != n_steps)
                throw Error("pulse program: channel '" + c.species + "' has wrong step count");
            if (!std::isfinite(c.amp_hz) || c.amp_hz < 0) throw Error("pulse program: bad fixed amplitude");
            for (const auto& v : c.values) {
                if (!std::isfinite(v[0]) || !std::isfinite(v[1])) throw Error("pulse program: non-finite control");
                if (c.mode == Param::amp_phase && v[0] < 0) throw Error("pulse program: negative amplitude");
            }
        }
    }

    int params_per_step() const {
        int n = 0;
        for (const auto& c : channels) n += c.params_per_step();
        return n;
    }
    int n_params() const { return n_steps * params_per_step(); }

    /// Flat parameter index, step-major.
    int param_index(int j, int channel, int comp) const {
        int off = 0;
        for (int c = 0; c < channel; ++c) off += channels[c].params_per_step();
        return j * params_per_step() + off + comp;
    }

    RVector params() const {
        RVector x(n_params());
        int i = 0;
        for (int j = 0; j < n_steps; ++j)
            for (const auto& c : channels)
                for (int k = 0; k < c.params_per_step(); ++k) x(i++) = c.values[j][k];
        return x;
    }

    void set_params(const RVector& x) {
        if (x.size() != n_params()) throw Error("pulse program: parameter count mismatch");
        int i = 0;
        for (int j = 0; j < n_steps; ++j)
            for (auto& c : channels)
                for (int k = 0; k < c.params_per_step(); ++k) c.values[j][k] = x(i++);
    }

    double duration() const { return tau_s * n_steps; }
};

/// One variant of the system: RF scaling per program channel (one value
/// applies to all channels), optional replacement drift diagonal.
struct EnsembleMember {
    double weight = 1.0;
    std::vector<double> rf_scale;
    std::optional<RVector> drift;
    unsigned long passive_state = 0;

    double scale(std::size_t channel) const {
        if (rf_scale.empty()) return 1.0;
        if (rf_scale.size() == 1) return rf_scale[0];
        return rf_scale.at(channel);
    }
};

using EnsembleSpec = std::vector<EnsembleMember>;

inline EnsembleSpec nominal_ensemble() { return {EnsembleMember{}}; }

/// B1 ensemble with the same scaling on every channel, equal weights.
inline EnsembleSpec b1_ensemble(const std::vector<double>& scales) {
    if (scales.empty()) throw Error("b1 ensemble: no scalings");
    EnsembleSpec e;
    for (double s : scales) e.push_back({1.0 / scales.size(), {s}, std::nullopt, 0});
    return e;
}

/// Independent scalings per channel: full grid over n_channels.
inline EnsembleSpec b1_grid(const std::vector<double>& scales, std::size_t n_channels) {
    if (scales.empty() || n_channels == 0) throw Error("b1 grid: empty");
    std::size_t total = 1;
    for (std::size_t c = 0; c < n_channels; ++c) total *= scales.size();
    EnsembleSpec e;
    for (std::size_t idx = 0; idx < total; ++idx) {
        EnsembleMember m;
        m.weight = 1.0 / total;
        std::size_t r = idx;
        for (std::size_t c = 0; c < n_channels; ++c) {
            m.rf_scale.push_back(scales[r % scales.size()]);
            r /= scales.size();
        }
        e.push_back(std::move(m));
    }
    return e;
}

inline EnsembleSpec passive_members(const std::vector<PassiveMember>& pm) {
    EnsembleSpec e;
    for (const auto& m : pm) e.push_back({m.weight, {}, m.drift, m.state});
    return e;
}

inline void validate_ensemble(const EnsembleSpec& e) {
    if (e.empty()) throw Error("empty ensemble");
    double s = 0.0;
    for (const auto& m : e) {
        if (!(m.weight >= 0)) throw Error("ensemble weight must be >= 0");
        s += m.weight;
    }
    if (std::abs(s - 1.0) > 1e-9) throw Error("ensemble weights sum to " + std::to_string(s) + ", not 1");
}

/// Drift and control operators resolved for a program's channel list.
struct ControlSet {
    long dim = 0;
    RVector h0;
    std::vector<Matrix> fx, fy;
    std::vector<RVector> fz;

    static ControlSet build(const SpinSystem& sys, const PulseProgram& prog) {
        ControlSet cs;
        cs.dim = sys.dim();
        cs.h0 = drift_diagonal(sys);
        for (const auto& ch : prog.channels) {
            if (!sys.has_channel(ch.species)) throw Error("program channel '" + ch.species + "' not in spin system");
            auto ops = total_ops(sys, ch.species);
            cs.fx.push_back(ops.Fx.matrix());
            cs.fy.push_back(ops.Fy.matrix());
            cs.fz.push_back(ops.fz);
        }
        return cs;
    }

    const RVector& drift(const EnsembleMember& m) const {
        if (m.drift) {
            if (m.drift->size() != dim) throw Error("ensemble drift has wrong dimension");
            return *m.drift;
        }
        return h0;
    }

    /// H_j in rad/s.
    Matrix hamiltonian(const PulseProgram& prog, int j, const EnsembleMember& m) const {
        Matrix h = drift(m).cast<cplx>().asDiagonal();
        for (std::size_t c = 0; c < prog.channels.size(); ++c) {
            const auto a = prog.channels[c].xy(j);
            const double s = kTwoPi * m.scale(c);
            if (a[0] != 0.0) h += (s * a[0]) * fx[c];
            if (a[1] != 0.0) h += (s * a[1]) * fy[c];
        }
        return h;
    }
};

struct HermitianEigen {
    RVector w;
    Matrix Q;

    explicit HermitianEigen(const Matrix& h) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(h);
        if (es.info() != Eigen::Success) throw Error("eigendecomposition failed");
        w = es.eigenvalues();
        Q = es.eigenvectors();
    }

    /// exp(-i H t)
    Matrix expm(double t) const {
        CVector ph(w.size());
        for (long k = 0; k < w.size(); ++k) ph(k) = std::exp(cplx(0, -w(k) * t));
        return Q * ph.asDiagonal() * Q.adjoint();
    }
};

inline Operator expm_step(const Operator& H, double t) {
    if (H.kind() != Kind::hermitian) {
        // accept untagged input only if it passes the check
        (void)Operator::hermitian(H.matrix());
    }
    return Operator::unitary(HermitianEigen(H.matrix()).expm(t));
}

/// Same pulse with every step split into r equal substeps.
inline PulseProgram subdivide(const PulseProgram& prog, int r) {
    if (r < 1) throw Error("subdivide: factor must be >= 1");
    PulseProgram p = prog;
    p.n_steps = prog.n_steps * r;
    p.tau_s = prog.tau_s / r;
    for (std::size_t c = 0; c < p.channels.size(); ++c) {
        p.channels[c].values.clear();
        for (const auto& v : prog.channels[c].values) p.channels[c].values.insert(p.channels[c].values.end(), r, v);
    }
    return p;
}

inline Operator step_hamiltonian(const SpinSystem& sys, const PulseProgram& prog, int j,
                                 const EnsembleMember& m = {}) {
    if (j < 0 || j >= prog.n_steps) throw Error("step index out of range");
    return Operator::hermitian(ControlSet::build(sys, prog).hamiltonian(prog, j, m));
}

inline Matrix sequence_matrix(const ControlSet& cs, const PulseProgram& prog, const EnsembleMember& m) {
    Matrix v = Matrix::Identity(cs.dim, cs.dim);
    for (int j = 0; j < prog.n_steps; ++j) v = HermitianEigen(cs.hamiltonian(prog, j, m)).expm(prog.tau_s) * v;
    return v;
}

/// V = V_n ... V_2 V_1.
inline Operator sequence_propagator(const SpinSystem& sys, const PulseProgram& prog, const EnsembleMember& m = {}) {
    prog.validate();
    return Operator::unitary(sequence_matrix(ControlSet::build(sys, prog), prog, m));
}

/// Tensor power of the single-spin Hadamard gate.
inline Matrix hadamard_all(int q) {
    const long d = 1L << q;
    const double s = std::pow(2.0, -0.5 * q);
    Matrix h(d, d);
    for (long r = 0; r < d; ++r)
        for (long c = 0; c < d; ++c) h(r, c) = (std::popcount(static_cast<unsigned long>(r & c)) & 1) ? -s : s;
    return h;
}

/// Fixed pieces of the Trotter step:
///   V(A, phi) = e^{-i phi Fz} W1 e^{-i A Fz tau} W2 e^{i phi Fz}
/// with W1 = e^{-i H0 tau/2} H, W2 = H e^{-i H0 tau/2}, H the Hadamard on
/// every spin.
struct GrawmeFactors {
    double tau = 0.0;
    RVector fz;
    Matrix W1, W2;

    GrawmeFactors(const SpinSystem& sys, double tau_s, const std::optional<RVector>& drift = {}) : tau(tau_s) {
        if (sys.channels().size() != 1) throw Error("GRAWME form needs a single homonuclear channel");
        const int q = sys.size();
        const RVector h0 = drift ? *drift : drift_diagonal(sys);
        CVector half(h0.size());
        for (long r = 0; r < h0.size(); ++r) half(r) = std::exp(cplx(0, -h0(r) * tau / 2));
        const Matrix h = hadamard_all(q);
        W1 = half.asDiagonal() * h;
        W2 = h * half.asDiagonal();
        fz = iz_sum_diagonal(q, sys.channel_members(sys.channels()[0]));
    }

    Matrix step(double amp_hz, double phi) const {
        CVector d(fz.size());
        for (long r = 0; r < fz.size(); ++r) d(r) = std::exp(cplx(0, -kTwoPi * amp_hz * fz(r) * tau));
        Matrix v = W1 * d.asDiagonal() * W2;
        for (long r = 0; r < v.rows(); ++r)
            for (long c = 0; c < v.cols(); ++c) v(r, c) *= std::exp(cplx(0, -phi * (fz(r) - fz(c))));
        return v;
    }
};

inline Operator grawme_step(const SpinSystem& sys, double amp_hz, double phi, double tau) {
    return Operator::unitary(GrawmeFactors(sys, tau).step(amp_hz, phi));
}

/// Trotterized product for a single-channel phase_only or amp_phase program.
inline Operator grawme_sequence_propagator(const SpinSystem& sys, const PulseProgram& prog) {
    prog.validate();
    if (prog.channels.size() != 1 || prog.channels[0].mode == Param::xy)
        throw Error("GRAWME propagation needs one phase_only or amp_phase channel");
    const auto& ch = prog.channels[0];
    GrawmeFactors f(sys, prog.tau_s);
    Matrix v = Matrix::Identity(sys.dim(), sys.dim());
    for (int j = 0; j < prog.n_steps; ++j) {
        const double a = ch.mode == Param::phase_only ? ch.amp_hz : ch.values[j][0];
        const double phi = ch.mode == Param::phase_only ? ch.values[j][0] : ch.values[j][1];
        v = f.step(a, phi) * v;
    }
    return Operator::unitary(v);
}

inline Operator evolve_state(const Operator& rho, const Operator& U) {
    if (rho.dim() != U.dim()) throw Error("evolve_state: dimension mismatch");
    Matrix out = U.matrix() * rho.matrix() * U.matrix().adjoint();
    if (rho.kind() == Kind::hermitian) {
        out = 0.5 * (out + out.adjoint()).eval();
        return Operator::hermitian(std::move(out));
    }
    return Operator::general(std::move(out));
}

inline std::string fmt9(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

/// Pulse-shape file. Phases are written in degrees.
inline void write_pulse_program(std::ostream& out, const PulseProgram& prog) {
    prog.validate();
    out << "# nsteps=" << prog.n_steps << "\n# tau_s=" << fmt9(prog.tau_s) << '\n';
    for (const auto& c : prog.channels) {
        out << "# channel=" << c.species << " mode=" << param_name(c.mode);
        if (c.mode == Param::phase_only) out << " amp_hz=" << fmt9(c.amp_hz);
        out << '\n';
    }
    for (int j = 0; j < prog.n_steps; ++j) {
        bool first = true;
        for (const auto& c : prog.channels) {
            auto put = [&](double v) {
                if (!first) out << ' ';
                out << fmt9(v);
                first = false;
            };
            switch (c.mode) {
            case Param::xy: put(c.values[j][0]); put(c.values[j][1]); break;
            case Param::amp_phase: put(c.values[j][0]); put(rad2deg(c.values[j][1])); break;
            case Param::phase_only: put(rad2deg(c.values[j][0])); break;
            }
        }
        out << '\n';
    }
}

inline PulseProgram read_pulse_program(std::istream& in) {
    PulseProgram p;
    bool have_n = false, have_tau = false;
    std::string raw;
    int line = 0, row = 0;
    while (std::getline(in, raw)) {
        ++line;
        std::string s = detail::trim(raw);
        if (s.empty()) continue;
        const std::string at = "line " + std::to_string(line) + ": ";
        if (s[0] == '#') {
            std::istringstream ls(s.substr(1));
            std::map<std::string, std::string> kv;
            for (std::string t; ls >> t;) {
                auto eq = t.find('=');
                if (eq != std::string::npos) kv[t.substr(0, eq)] = t.substr(eq + 1);
            }
            if (kv.count("nsteps")) {
                p.n_steps = detail::parse_int(kv["nsteps"], line);
                have_n = true;
            } else if (kv.count("tau_s")) {
                p.tau_s = detail::parse_real(kv["tau_s"], line);
                have_tau = true;
            } else if (kv.count("channel")) {
                if (!have_n) throw Error(at + "channel declared before nsteps");
                if (!kv.count("mode")) throw Error(at + "channel without mode");
                Param mode = parse_param(kv["mode"]);
                double amp = 0.0;
                if (mode == Param::phase_only) {
                    if (!kv.count("amp_hz")) throw Error(at + "phase_only channel needs amp_hz");
                    amp = detail::parse_real(kv["amp_hz"], line);
                }
                p.add_channel(kv["channel"], mode, amp);
            }
            continue;
        }
        if (!have_n || !have_tau || p.channels.empty()) throw Error(at + "data row before complete header");
        if (row >= p.n_steps) throw Error(at + "more rows than nsteps");
        std::istringstream ls(s);
        std::vector<double> vals;
        for (std::string t; ls >> t;) vals.push_back(detail::parse_real(t, line));
        if (static_cast<int>(vals.size()) != p.params_per_step())
            throw Error(at + "expected " + std::to_string(p.params_per_step()) + " values");
        std::size_t i = 0;
        for (auto& c : p.channels) {
            switch (c.mode) {
            case Param::xy: c.values[row] = {vals[i], vals[i + 1]}; i += 2; break;
            case Param::amp_phase: c.values[row] = {vals[i], deg2rad(vals[i + 1])}; i += 2; break;
            case Param::phase_only: c.values[row] = {deg2rad(vals[i]), 0.0}; i += 1; break;
            }
        }
        ++row;
    }
    if (!have_n || !have_tau) throw Error("pulse file missing nsteps or tau_s header");
    if (row != p.n_steps) throw Error("pulse file has " + std::to_string(row) + " rows, expected " + std::to_string(p.n_steps));
    p.validate();
    return p;
}

} // namespace spinforge
