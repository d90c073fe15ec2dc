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
#include "spinforge/optimize.hpp"

#include <random>

namespace spinforge {

enum class GradMode { approx, exact, phase_only_exact };

inline GradMode parse_grad_mode(const std::string& s) {
    if (s == "approx") return GradMode::approx;
    if (s == "exact") return GradMode::exact;
    if (s == "phase_only_exact" || s == "phase_only") return GradMode::phase_only_exact;
    throw Error("unknown gradient mode '" + s + "'");
}

inline const char* grad_mode_name(GradMode m) {
    switch (m) {
    case GradMode::approx: return "approx";
    case GradMode::exact: return "exact";
    default: return "phase_only_exact";
    }
}

/// One system with its target(s) and ensemble. `member_targets`, when set,
/// gives one target per ensemble member (passive-spin ensembles).
struct GrapeTerm {
    SpinSystem system;
    Matrix target;
    EnsembleSpec ensemble = nominal_ensemble();
    double weight = 1.0;
    std::vector<Matrix> member_targets;

    const Matrix& target_for(std::size_t m) const { return member_targets.empty() ? target : member_targets.at(m); }
};

struct GrapeOptions {
    GradMode mode = GradMode::exact;
    Method method = Method::bfgs;
    int max_iter = 2000;
    double goal_infidelity = 1e-4;
    double grad_tol = 1e-10;
    int restarts = 5;
    std::uint64_t seed = 1;
    double amp_cap_hz = 0.0;      // xy / amp_phase hard clip, 0 = none
    double amp_scale_hz = 1e4;    // internal unit for amplitude parameters
    double penalty = 0.0;         // optional quadratic amplitude penalty, off by default
    bool randomize_first = true;  // false: first attempt starts from the template controls
};

struct GrapeProblem {
    std::vector<GrapeTerm> terms;
    PulseProgram program;  // template: parameterization, steps, tau, fixed amplitudes
    GrapeOptions options;

    void validate() const {
        program.validate();
        if (terms.empty()) throw Error("grape: no terms");
        if (!(options.goal_infidelity > 0 && options.goal_infidelity < 1))
            throw Error("grape: goal infidelity must lie in (0,1)");
        double w = 0.0;
        for (const auto& t : terms) {
            if (t.target.rows() != t.system.dim() || t.target.cols() != t.system.dim())
                throw Error("grape: target dimension does not match system");
            for (const auto& mt : t.member_targets)
                if (mt.rows() != t.system.dim()) throw Error("grape: member target dimension mismatch");
            if (!t.member_targets.empty() && t.member_targets.size() != t.ensemble.size())
                throw Error("grape: member target count mismatch");
            validate_ensemble(t.ensemble);
            for (const auto& ch : program.channels)
                if (!t.system.has_channel(ch.species))
                    throw Error("grape: channel '" + ch.species + "' missing from a term's system");
            w += t.weight;
        }
        if (std::abs(w - 1.0) > 1e-9) throw Error("grape: term weights must sum to 1");
        if (options.mode == GradMode::phase_only_exact) {
            if (program.channels.size() != 1 || program.channels[0].mode != Param::phase_only)
                throw Error("grape: phase_only_exact gradient needs a single phase_only channel");
        }
    }
};

inline GrapeProblem make_problem(const SpinSystem& sys, const Matrix& target, const PulseProgram& prog,
                                 const EnsembleSpec& ens = nominal_ensemble(), GrapeOptions opt = {}) {
    GrapeProblem p;
    p.terms.push_back({sys, target, ens, 1.0, {}});
    p.program = prog;
    p.options = opt;
    return p;
}

struct ForwardBackward {
    std::vector<Matrix> X;  // X[j] = V_j ... V_1, X[0] = 1
    std::vector<Matrix> P;  // P[j] = V_{j+1}^+ ... V_n^+ U, P[n] = U
    double phi4 = 0.0;

    /// <P_j|X_j><X_j|P_j>
    double phi4_at(int j) const { return std::norm(P[j].conjugate().cwiseProduct(X[j]).sum()); }
};

namespace detail {

struct StepData {
    std::vector<Matrix> V;
    std::vector<HermitianEigen> eig;  // filled in exact mode
};

inline StepData build_steps(const ControlSet& cs, const PulseProgram& prog, const EnsembleMember& m, GradMode mode) {
    StepData sd;
    sd.V.reserve(prog.n_steps);
    if (mode == GradMode::phase_only_exact) {
        const auto& ch = prog.channels[0];
        const Matrix hx = Matrix(cs.drift(m).cast<cplx>().asDiagonal()) + (kTwoPi * m.scale(0) * ch.amp_hz) * cs.fx[0];
        const Matrix vx = HermitianEigen(hx).expm(prog.tau_s);
        const RVector& fz = cs.fz[0];
        for (int j = 0; j < prog.n_steps; ++j) {
            const double phi = ch.values[j][0];
            Matrix v = vx;
            for (long r = 0; r < v.rows(); ++r)
                for (long c = 0; c < v.cols(); ++c) v(r, c) *= std::exp(cplx(0, -phi * (fz(r) - fz(c))));
            sd.V.push_back(std::move(v));
        }
        return sd;
    }
    if (mode == GradMode::exact) sd.eig.reserve(prog.n_steps);
    for (int j = 0; j < prog.n_steps; ++j) {
        HermitianEigen e(cs.hamiltonian(prog, j, m));
        sd.V.push_back(e.expm(prog.tau_s));
        if (mode == GradMode::exact) sd.eig.push_back(std::move(e));
    }
    return sd;
}

inline ForwardBackward sweep(const std::vector<Matrix>& V, const Matrix& U) {
    const int n = static_cast<int>(V.size());
    const long d = U.rows();
    ForwardBackward fb;
    fb.X.resize(n + 1);
    fb.P.resize(n + 1);
    fb.X[0] = Matrix::Identity(d, d);
    for (int j = 1; j <= n; ++j) fb.X[j] = V[j - 1] * fb.X[j - 1];
    fb.P[n] = U;
    for (int j = n; j >= 1; --j) fb.P[j - 1] = V[j - 1].adjoint() * fb.P[j];
    fb.phi4 = fb.phi4_at(n);
    return fb;
}

/// sum(A o B^T) = tr(A B)
inline cplx trace_prod(const Matrix& a, const Matrix& b) { return a.cwiseProduct(b.transpose()).sum(); }

inline double sinc(double x) {
    if (std::abs(x) < 1e-4) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
    }
    return std::sin(x) / x;
}

} // namespace detail

inline ForwardBackward forward_backward(const SpinSystem& sys, const PulseProgram& prog, const Matrix& target,
                                        const EnsembleMember& m = {}) {
    prog.validate();
    const ControlSet cs = ControlSet::build(sys, prog);
    return detail::sweep(detail::build_steps(cs, prog, m, GradMode::approx).V, target);
}

/// Phi4 for one member and its gradient with respect to the program's native
/// parameters (Hz for amplitudes, radians for phases).
struct Phi4Gradient {
    double phi4 = 0.0;
    RVector grad;
};

inline Phi4Gradient phi4_gradient(const ControlSet& cs, const PulseProgram& prog, const Matrix& U,
                                  const EnsembleMember& m, GradMode mode) {
    if (mode == GradMode::phase_only_exact &&
        (prog.channels.size() != 1 || prog.channels[0].mode != Param::phase_only))
        throw Error("phase_only_exact gradient needs a single phase_only channel");
    const auto sd = detail::build_steps(cs, prog, m, mode);
    const auto fb = detail::sweep(sd.V, U);
    Phi4Gradient out;
    out.phi4 = fb.phi4;
    out.grad = RVector::Zero(prog.n_params());
    const cplx z = fb.P[prog.n_steps].conjugate().cwiseProduct(fb.X[prog.n_steps]).sum();  // tr(U^+ V)
    const cplx zc = std::conj(z);
    const double tau = prog.tau_s;
    const std::size_t nch = prog.channels.size();
    std::vector<cplx> tx(nch), ty(nch);

    for (int j = 1; j <= prog.n_steps; ++j) {
        if (mode == GradMode::phase_only_exact) {
            // dV/dphi = i[V, Fz], elementwise i V_rc (fz_c - fz_r)
            const Matrix& v = sd.V[j - 1];
            const RVector& fz = cs.fz[0];
            Matrix dv(v.rows(), v.cols());
            for (long r = 0; r < v.rows(); ++r)
                for (long c = 0; c < v.cols(); ++c) dv(r, c) = kI * v(r, c) * (fz(c) - fz(r));
            const Matrix M = fb.X[j - 1] * fb.P[j].adjoint();
            const cplx dz = detail::trace_prod(dv, M);
            out.grad(prog.param_index(j - 1, 0, 0)) = 2.0 * (zc * dz).real();
            continue;
        }
        if (mode == GradMode::approx) {
            // dV ~ -i tau B V_j, so dz = -i tau tr(P_j^+ B X_j)
            const Matrix M = fb.X[j] * fb.P[j].adjoint();
            for (std::size_t c = 0; c < nch; ++c) {
                tx[c] = -kI * tau * detail::trace_prod(cs.fx[c], M);
                ty[c] = -kI * tau * detail::trace_prod(cs.fy[c], M);
            }
        } else {
            // eigenbasis divided differences of exp at xi = -i lambda tau
            const auto& e = sd.eig[j - 1];
            const long d = e.w.size();
            Matrix G(d, d);
            for (long l = 0; l < d; ++l)
                for (long k = 0; k < d; ++k) {
                    const double mid = 0.5 * (e.w(l) + e.w(k)) * tau, half = 0.5 * (e.w(l) - e.w(k)) * tau;
                    G(l, k) = std::exp(cplx(0, -mid)) * detail::sinc(half);
                }
            const Matrix Mp = e.Q.adjoint() * (fb.X[j - 1] * fb.P[j].adjoint()) * e.Q;
            const Matrix GM = G.cwiseProduct(Mp.transpose());
            for (std::size_t c = 0; c < nch; ++c) {
                tx[c] = -kI * tau * (e.Q.adjoint() * cs.fx[c] * e.Q).cwiseProduct(GM).sum();
                ty[c] = -kI * tau * (e.Q.adjoint() * cs.fy[c] * e.Q).cwiseProduct(GM).sum();
            }
        }
        for (std::size_t c = 0; c < nch; ++c) {
            const auto& ch = prog.channels[c];
            const double s = kTwoPi * m.scale(c);
            const double gx = 2.0 * (zc * tx[c]).real() * s, gy = 2.0 * (zc * ty[c]).real() * s;
            const auto& v = ch.values[j - 1];
            switch (ch.mode) {
            case Param::xy:
                out.grad(prog.param_index(j - 1, c, 0)) = gx;
                out.grad(prog.param_index(j - 1, c, 1)) = gy;
                break;
            case Param::amp_phase: {
                const double cp = std::cos(v[1]), sp = std::sin(v[1]);
                out.grad(prog.param_index(j - 1, c, 0)) = cp * gx + sp * gy;
                out.grad(prog.param_index(j - 1, c, 1)) = v[0] * (-sp * gx + cp * gy);
                break;
            }
            case Param::phase_only: {
                const double cp = std::cos(v[0]), sp = std::sin(v[0]);
                out.grad(prog.param_index(j - 1, c, 0)) = ch.amp_hz * (-sp * gx + cp * gy);
                break;
            }
            }
        }
    }
    return out;
}

inline Phi4Gradient phi4_gradient(const SpinSystem& sys, const PulseProgram& prog, const Matrix& U,
                                  const EnsembleMember& m, GradMode mode) {
    prog.validate();
    return phi4_gradient(ControlSet::build(sys, prog), prog, U, m, mode);
}

/// Ensemble- and term-averaged fidelity sum_t w_t sum_m w_m Phi4/d^2 with its
/// gradient over native parameters.
class GrapeObjective {
public:
    explicit GrapeObjective(GrapeProblem p) : prob_(std::move(p)) {
        prob_.validate();
        for (const auto& t : prob_.terms) cs_.push_back(ControlSet::build(t.system, prob_.program));
        for (std::size_t t = 0; t < prob_.terms.size(); ++t)
            for (std::size_t m = 0; m < prob_.terms[t].ensemble.size(); ++m) jobs_.emplace_back(t, m);
    }

    const GrapeProblem& problem() const { return prob_; }

    double fidelity(const PulseProgram& prog, RVector* grad, GradMode mode) const {
        std::vector<Phi4Gradient> res(jobs_.size());
        parallel_for(jobs_.size(), [&](std::size_t k) {
            const auto [t, m] = jobs_[k];
            const auto& term = prob_.terms[t];
            if (grad) {
                res[k] = phi4_gradient(cs_[t], prog, term.target_for(m), term.ensemble[m], mode);
            } else {
                const Matrix v = sequence_matrix(cs_[t], prog, term.ensemble[m]);
                res[k].phi4 = phi4(term.target_for(m), v);
            }
        });
        double f = 0.0;
        if (grad) *grad = RVector::Zero(prog.n_params());
        for (std::size_t k = 0; k < jobs_.size(); ++k) {
            const auto [t, m] = jobs_[k];
            const auto& term = prob_.terms[t];
            const double d2 = static_cast<double>(term.system.dim()) * term.system.dim();
            const double w = term.weight * term.ensemble[m].weight / d2;
            if (!std::isfinite(res[k].phi4))
                throw Error("non-finite objective in term " + std::to_string(t + 1) + ", ensemble member " +
                            std::to_string(m + 1));
            f += w * res[k].phi4;
            if (grad) *grad += w * res[k].grad;
        }
        return f;
    }

    /// Per-parameter divisor mapping native units onto optimizer units.
    RVector param_scale() const {
        const auto& prog = prob_.program;
        RVector s = RVector::Ones(prog.n_params());
        for (int j = 0; j < prog.n_steps; ++j)
            for (std::size_t c = 0; c < prog.channels.size(); ++c) {
                const auto& ch = prog.channels[c];
                if (ch.mode == Param::xy) {
                    s(prog.param_index(j, c, 0)) = prob_.options.amp_scale_hz;
                    s(prog.param_index(j, c, 1)) = prob_.options.amp_scale_hz;
                } else if (ch.mode == Param::amp_phase) {
                    s(prog.param_index(j, c, 0)) = prob_.options.amp_scale_hz;
                }
            }
        return s;
    }

    PulseProgram to_program(const RVector& x) const {
        PulseProgram p = prob_.program;
        p.set_params(x.cwiseProduct(param_scale()));
        return p;
    }

    RVector from_program(const PulseProgram& p) const { return p.params().cwiseQuotient(param_scale()); }

    /// Infidelity (plus optional penalty) in optimizer units.
    double value(const RVector& x, RVector* grad) const { return value(x, grad, prob_.options.mode); }

    double value(const RVector& x, RVector* grad, GradMode mode) const {
        const PulseProgram p = to_program(x);
        RVector g;
        double f = 1.0 - fidelity(p, grad ? &g : nullptr, mode);
        if (grad) *grad = -g.cwiseProduct(param_scale());
        if (prob_.options.penalty > 0) {
            const auto& prog = prob_.program;
            for (int j = 0; j < prog.n_steps; ++j)
                for (std::size_t c = 0; c < prog.channels.size(); ++c) {
                    const auto& ch = prog.channels[c];
                    if (ch.mode == Param::phase_only) continue;
                    const int n_amp = ch.mode == Param::xy ? 2 : 1;
                    for (int k = 0; k < n_amp; ++k) {
                        const int i = prog.param_index(j, c, k);
                        f += prob_.options.penalty * x(i) * x(i) / prog.n_steps;
                        if (grad) (*grad)(i) += 2.0 * prob_.options.penalty * x(i) / prog.n_steps;
                    }
                }
        }
        return f;
    }

    /// Hard amplitude clipping in optimizer units.
    void project(RVector& x) const {
        const auto& prog = prob_.program;
        const double cap = prob_.options.amp_cap_hz / prob_.options.amp_scale_hz;
        for (int j = 0; j < prog.n_steps; ++j)
            for (std::size_t c = 0; c < prog.channels.size(); ++c) {
                const auto& ch = prog.channels[c];
                if (ch.mode == Param::xy && cap > 0) {
                    const int a = prog.param_index(j, c, 0), b = prog.param_index(j, c, 1);
                    const double r = std::hypot(x(a), x(b));
                    if (r > cap) {
                        x(a) *= cap / r;
                        x(b) *= cap / r;
                    }
                } else if (ch.mode == Param::amp_phase) {
                    const int a = prog.param_index(j, c, 0);
                    x(a) = std::max(0.0, x(a));
                    if (cap > 0) x(a) = std::min(cap, x(a));
                }
            }
    }

    /// Phases uniform in [0, 2pi), amplitudes Gaussian with sigma = 10% of the
    /// cap (or of the amplitude unit when uncapped).
    template <class Rng>
    RVector random_start(Rng& rng) const {
        const auto& prog = prob_.program;
        std::uniform_real_distribution<double> ph(0.0, kTwoPi);
        const double amax = prob_.options.amp_cap_hz > 0 ? prob_.options.amp_cap_hz : prob_.options.amp_scale_hz;
        std::normal_distribution<double> amp(0.0, 0.1 * amax / prob_.options.amp_scale_hz);
        RVector x(prog.n_params());
        for (int j = 0; j < prog.n_steps; ++j)
            for (std::size_t c = 0; c < prog.channels.size(); ++c) {
                const auto& ch = prog.channels[c];
                switch (ch.mode) {
                case Param::xy:
                    x(prog.param_index(j, c, 0)) = amp(rng);
                    x(prog.param_index(j, c, 1)) = amp(rng);
                    break;
                case Param::amp_phase:
                    x(prog.param_index(j, c, 0)) = std::abs(amp(rng));
                    x(prog.param_index(j, c, 1)) = ph(rng);
                    break;
                case Param::phase_only: x(prog.param_index(j, c, 0)) = ph(rng); break;
                }
            }
        project(x);
        return x;
    }

private:
    GrapeProblem prob_;
    std::vector<ControlSet> cs_;
    std::vector<std::pair<std::size_t, std::size_t>> jobs_;
};

/// Objective gradient over native parameters for the given mode.
inline RVector grape_gradient(const GrapeProblem& p, const PulseProgram& controls, GradMode mode) {
    GrapeProblem q = p;
    q.program = controls;
    GrapeObjective obj(q);
    RVector g;
    obj.fidelity(controls, &g, mode);
    return g;
}

inline RVector grad_approx(const GrapeProblem& p, const PulseProgram& controls) {
    return grape_gradient(p, controls, GradMode::approx);
}
inline RVector grad_exact(const GrapeProblem& p, const PulseProgram& controls) {
    return grape_gradient(p, controls, GradMode::exact);
}
inline RVector grad_phase_only(const GrapeProblem& p, const PulseProgram& controls) {
    return grape_gradient(p, controls, GradMode::phase_only_exact);
}

struct GrapeResult {
    PulseProgram program;
    double fidelity = 0.0;
    bool converged = false;
    int iterations = 0;     // over all attempts
    int attempts = 0;
    std::vector<double> trace;  // fidelity after each accepted step of the returned attempt
    std::string reason;
};

/// Per-restart seeds drawn from one stream seeded with options.seed.
inline std::vector<std::uint64_t> restart_seeds(std::uint64_t seed, int n) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::vector<std::uint32_t> raw(2 * n);
    sq.generate(raw.begin(), raw.end());
    std::vector<std::uint64_t> out(n);
    for (int i = 0; i < n; ++i) out[i] = (static_cast<std::uint64_t>(raw[2 * i]) << 32) | raw[2 * i + 1];
    return out;
}

inline GrapeResult optimize(const GrapeProblem& problem) {
    GrapeObjective obj(problem);
    const auto& o = problem.options;
    MinimizeOptions mo;
    mo.method = o.method;
    mo.f_goal = o.goal_infidelity;
    mo.grad_tol = o.grad_tol;
    mo.max_iter = o.max_iter;

    const int attempts = 1 + std::max(0, o.restarts);
    const auto seeds = restart_seeds(o.seed, attempts);
    GrapeResult best;
    best.fidelity = -1.0;
    int total_iter = 0;
    for (int a = 0; a < attempts; ++a) {
        std::mt19937_64 rng(seeds[a]);
        RVector x0 = (a == 0 && !o.randomize_first) ? obj.from_program(problem.program) : obj.random_start(rng);
        auto r = minimize([&](const RVector& x, RVector* g) { return obj.value(x, g); }, x0, mo,
                          [&](RVector& x) { obj.project(x); });
        total_iter += r.iterations;
        const PulseProgram prog = obj.to_program(r.x);
        const double f = obj.fidelity(prog, nullptr, o.mode);
        if (f > best.fidelity) {
            best.program = prog;
            best.fidelity = f;
            best.trace.clear();
            for (double v : r.trace) best.trace.push_back(1.0 - v);
            best.reason = r.reason;
        }
        best.attempts = a + 1;
        if (1.0 - f <= o.goal_infidelity) {
            best.converged = true;
            break;
        }
    }
    best.iterations = total_iter;
    return best;
}

/// Weighted mean of per-subsystem ensemble fidelities for one program.
inline double subsystem_objective(const std::vector<SpinSystem>& systems, const std::vector<Matrix>& targets,
                                  const std::vector<double>& weights, const PulseProgram& prog,
                                  const EnsembleSpec& ens = nominal_ensemble()) {
    if (systems.empty()) throw Error("subsystem_objective: no subsystems");
    if (targets.size() != systems.size() || weights.size() != systems.size())
        throw Error("subsystem_objective: weight/target count does not match subsystem count");
    double wsum = 0.0;
    for (double w : weights) {
        if (w < 0) throw Error("subsystem_objective: negative weight");
        wsum += w;
    }
    if (wsum <= 0) throw Error("subsystem_objective: zero total weight");
    double f = 0.0;
    for (std::size_t s = 0; s < systems.size(); ++s)
        f += weights[s] / wsum * ensemble_fidelity(systems[s], prog, std::vector<Matrix>{targets[s]}, ens);
    return f;
}

/// GRAPE problem whose objective is the subsystem average.
inline GrapeProblem subsystem_problem(const std::vector<SpinSystem>& systems, const std::vector<Matrix>& targets,
                                      const std::vector<double>& weights, const PulseProgram& prog,
                                      const EnsembleSpec& ens = nominal_ensemble(), GrapeOptions opt = {}) {
    if (targets.size() != systems.size() || weights.size() != systems.size())
        throw Error("subsystem_problem: weight/target count does not match subsystem count");
    double wsum = 0.0;
    for (double w : weights) wsum += w;
    GrapeProblem p;
    for (std::size_t s = 0; s < systems.size(); ++s) p.terms.push_back({systems[s], targets[s], ens, weights[s] / wsum, {}});
    p.program = prog;
    p.options = opt;
    return p;
}

} // namespace spinforge
