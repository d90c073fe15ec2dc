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

// spinforge command-line driver.

#include "spinforge/spinforge.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <memory>

using namespace spinforge;

namespace {

struct Global {
    std::uint64_t seed = 1;
    unsigned threads = 1;
    std::string out;
    bool quiet = false;
};

/// Resolved configuration, printed to stderr before any work.
class Config {
public:
    template <class T>
    Config& set(const std::string& k, const T& v) {
        std::ostringstream os;
        os << v;
        items_.emplace_back(k, os.str());
        return *this;
    }
    void print(const std::string& cmd) const {
        std::cerr << "# spinforge " << kVersion << ' ' << cmd << '\n';
        for (const auto& [k, v] : items_) std::cerr << "#   " << k << " = " << v << '\n';
    }

private:
    std::vector<std::pair<std::string, std::string>> items_;
};

/// Writes to --out when given, else stdout.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (!path.empty()) {
            file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
            if (!*file_) throw Error("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

std::string g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    for (std::string t; std::getline(ss, t, ',');) v.push_back(detail::parse_real(detail::trim(t), 0));
    if (v.empty()) throw Error("empty list '" + s + "'");
    return v;
}

/// "range:n" -> (range, n)
std::pair<double, int> parse_grid(const std::string& s) {
    auto c = s.find(':');
    if (c == std::string::npos) throw Error("grid must be range:points, got '" + s + "'");
    return {detail::parse_real(s.substr(0, c), 0), detail::parse_int(s.substr(c + 1), 0)};
}

EnsembleSpec parse_ensemble(const std::string& s, std::size_t n_channels, bool per_channel) {
    if (s.empty() || s == "nominal") return nominal_ensemble();
    if (s.rfind("b1:", 0) == 0) {
        const auto scales = parse_list(s.substr(3));
        return per_channel ? b1_grid(scales, n_channels) : b1_ensemble(scales);
    }
    throw Error("unknown ensemble '" + s + "', expected nominal or b1:s1,s2,...");
}

Matrix load_target(const std::string& t, int q) {
    std::ifstream probe(t);
    if (probe.good()) return load_matrix(t);
    return named_gate(t, q).matrix();
}

int run_grape(const Global& g, const std::string& system_path, const std::string& target, const std::string& channel_in,
              const std::string& mode_s, const std::string& grad_s, int steps, double tau, double amp,
              const std::string& ens_s, bool per_channel, int iters, double goal, int restarts, double cap) {
    const SpinSystem sys = load_spin_system(system_path);
    const std::string channel = channel_in.empty() ? sys.channels().front() : channel_in;
    if (!sys.has_channel(channel)) throw Error("system has no spins of species '" + channel + "'");
    const Param mode = parse_param(mode_s);
    PulseProgram prog;
    prog.tau_s = tau;
    prog.n_steps = steps;
    prog.add_channel(channel, mode, mode == Param::phase_only ? amp : 0.0);
    const Matrix tgt = load_target(target, sys.size());
    GrapeOptions o;
    o.mode = grad_s.empty() ? (mode == Param::phase_only ? GradMode::phase_only_exact : GradMode::exact)
                            : parse_grad_mode(grad_s);
    o.max_iter = iters;
    o.goal_infidelity = goal;
    o.restarts = restarts;
    o.seed = g.seed;
    o.amp_cap_hz = cap;
    if (mode != Param::phase_only && amp > 0) o.amp_scale_hz = amp;
    const EnsembleSpec ens = parse_ensemble(ens_s, prog.channels.size(), per_channel);

    Config()
        .set("seed", g.seed)
        .set("threads", g.threads)
        .set("system", system_path)
        .set("spins", sys.size())
        .set("target", target)
        .set("channel", channel)
        .set("mode", param_name(mode))
        .set("gradient", grad_mode_name(o.mode))
        .set("steps", steps)
        .set("tau_s", g12(tau))
        .set("amp_hz", g12(amp))
        .set("ensemble", ens_s.empty() ? "nominal" : ens_s)
        .set("ensemble_members", ens.size())
        .set("max_iter", iters)
        .set("goal_infidelity", g12(goal))
        .set("restarts", restarts)
        .set("amp_cap_hz", g12(cap))
        .set("out", g.out.empty() ? "-" : g.out)
        .print("grape");

    const auto res = optimize(make_problem(sys, tgt, prog, ens, o));
    Sink sink(g.out);
    sink.os() << csv_provenance(g.seed) << '\n';
    write_pulse_program(sink.os(), res.program);
    if (!g.quiet)
        std::cerr << "fidelity " << g12(res.fidelity) << " iterations " << res.iterations << " attempts "
                  << res.attempts << " stop " << res.reason << '\n';
    return 0;
}

int run_compulse(const Global& g, const std::string& pulse, const std::string& grid) {
    const auto [range, n] = parse_grid(grid);
    const CompositePulse p = catalog(pulse);
    Config()
        .set("seed", g.seed)
        .set("threads", g.threads)
        .set("pulse", pulse)
        .set("subpulses", p.size())
        .set("grid_range", g12(range))
        .set("grid_points", n)
        .set("out", g.out.empty() ? "-" : g.out)
        .print("compulse");
    const auto m = error_map(p, range, n);
    Sink sink(g.out);
    write_error_map_csv(sink.os(), m, g.seed);
    return 0;
}

int run_dd(const Global& g, const std::string& seq_s, int echoes, const std::string& grid, const std::string& kmode_s,
           const std::string& koff_s, const std::string& phase_test, const std::string& offset_s) {
    if (!phase_test.empty()) {
        // "udd:4" or "periodic:4"
        auto c = phase_test.find(':');
        if (c == std::string::npos) throw Error("--phase-test expects kind:n");
        const std::string kind = phase_test.substr(0, c);
        const int n = detail::parse_int(phase_test.substr(c + 1), 0);
        Poly off;
        if (offset_s.rfind("legendre:", 0) == 0)
            off = shifted_legendre(detail::parse_int(offset_s.substr(9), 0));
        else
            off = parse_list(offset_s);
        std::vector<double> t;
        if (kind == "udd")
            t = udd_times(n);
        else if (kind == "periodic")
            for (int k = 0; k < n; ++k) t.push_back((k + 0.5) / n);
        else
            throw Error("--phase-test kind must be udd or periodic");
        Config()
            .set("seed", g.seed)
            .set("phase_test", phase_test)
            .set("offset", offset_s)
            .print("dd");
        Sink sink(g.out);
        sink.os() << "times";
        for (double x : t) sink.os() << ' ' << g12(x);
        sink.os() << "\naccumulated_phase " << g12(accumulated_phase(off, t, 1.0))
                  << "\nfree_phase_scale " << g12(std::abs(accumulated_phase({1.0}, {}, 1.0))) << '\n';
        return 0;
    }
    const DDKind kind = parse_dd_kind(seq_s);
    const KddMode km = kmode_s == "composite" ? KddMode::composite : KddMode::phase_cycle;
    if (kmode_s != "composite" && kmode_s != "phase_cycle") throw Error("--kdd-mode must be phase_cycle or composite");
    const KddOffsets ko = koff_s == "cyclic" ? KddOffsets::xy4_cyclic : KddOffsets::xy4;
    if (koff_s != "cyclic" && koff_s != "xy4") throw Error("--kdd-offsets must be xy4 or cyclic");
    const DDSequence seq = sequence_for_echoes(kind, echoes, km, ko);
    const auto [range, n] = parse_grid(grid);
    Config()
        .set("seed", g.seed)
        .set("threads", g.threads)
        .set("sequence", seq.name)
        .set("echoes", echoes)
        .set("pulses", seq.pulses.size())
        .set("kdd_mode", kmode_s)
        .set("kdd_offsets", koff_s)
        .set("grid_range", g12(range))
        .set("grid_points", n)
        .set("out", g.out.empty() ? "-" : g.out)
        .print("dd");
    const auto m = error_map([&](double e, double f) { return 1.0 - memory_fidelity(seq, e, f); }, range, range, n);
    Sink sink(g.out);
    write_error_map_csv(sink.os(), m, g.seed);
    return 0;
}

int run_refocus(const Global& g, const std::string& system_path, const std::string& targets_s, const std::string& z_s,
                bool symmetrize) {
    const SpinSystem sys = load_spin_system(system_path);
    const PairTargets targets = parse_pair_targets(targets_s);
    std::vector<double> z;
    if (!z_s.empty()) {
        for (double v : parse_list(z_s)) z.push_back(deg2rad(v));
        if (static_cast<int>(z.size()) != sys.size()) throw Error("--z needs one angle per spin");
    }
    Config()
        .set("seed", g.seed)
        .set("system", system_path)
        .set("spins", sys.size())
        .set("targets", targets_s.empty() ? "(none)" : targets_s)
        .set("z_deg", z_s.empty() ? "(none)" : z_s)
        .set("symmetrize", symmetrize)
        .set("out", g.out.empty() ? "-" : g.out)
        .print("refocus");
    const auto sch = lp_schedule(sys, targets);
    const auto prog = compile_program(sch, z, symmetrize);
    const double err = verify_schedule(sys, prog, targets, z);
    Sink sink(g.out);
    sink.os() << csv_provenance(g.seed) << '\n';
    write_refocus_program(sink.os(), prog);
    if (!g.quiet)
        std::cerr << "total_time_s " << g12(program_duration(prog)) << " verify_infidelity " << g12(err) << '\n';
    return 0;
}

int run_pps(const Global& g, const std::string& system_path, const std::string& method, const std::string& report,
            double eps) {
    const SpinSystem sys = load_spin_system(system_path);
    Config()
        .set("seed", g.seed)
        .set("system", system_path)
        .set("method", method)
        .set("report", report)
        .set("eps", g12(eps))
        .set("out", g.out.empty() ? "-" : g.out)
        .print("pps");
    if (report != "spectrum") throw Error("--report must be spectrum");
    DensityState dev;
    if (method == "two-spin-homo")
        dev = pps_two_spin_homonuclear(sys);
    else if (method == "two-spin-hetero")
        dev = pps_two_spin_heteronuclear(sys);
    else if (method == "crotonic")
        dev = pps_crotonic_chain(sys).state;
    else if (method == "temporal")
        dev = temporal_pps(thermal_deviation(sys.size()));
    else
        throw Error("unknown pps method '" + method + "'");
    Sink sink(g.out);
    sink.os() << spectrum_report(dev, eps);
    return 0;
}

int run_fid(const Global& g, const std::vector<std::string>& uj, const std::vector<std::string>& unitary,
            const std::string& method) {
    Config().set("seed", g.seed).set("method", method).print("fid");
    Sink sink(g.out);
    if (!uj.empty()) {
        const UjMethod m = method == "classic" ? UjMethod::classic : UjMethod::fast;
        if (method != "classic" && method != "fast") throw Error("--method must be classic or fast");
        sink.os() << g12(uj_fidelity(load_matrix(uj[0]), load_matrix(uj[1]), m)) << '\n';
    } else if (!unitary.empty()) {
        sink.os() << g12(unitary_fidelity(load_matrix(unitary[0]), load_matrix(unitary[1]))) << '\n';
    } else {
        throw CLI::ValidationError("fid", "one of --uj or --unitary is required");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"spinforge: NMR quantum control toolkit"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", kVersion);
    Global g;
    app.add_option("--seed", g.seed, "RNG seed")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::Range(1u, 256u))->capture_default_str();
    app.add_option("--out", g.out, "output file (default stdout)");
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    std::function<int()> action;

    auto* grape = app.add_subcommand("grape", "optimize a shaped pulse");
    std::string system_path, target, channel, mode_s = "phase_only", grad_s, ens_s;
    int steps = 250, iters = 2000, restarts = 5;
    double tau = 1e-5, amp = 25000, goal = 1e-4, cap = 0;
    bool per_channel = false;
    grape->add_option("--system", system_path, "spin-system file")->required()->check(CLI::ExistingFile);
    grape->add_option("--target", target, "named gate or matrix file")->required();
    grape->add_option("--channel", channel, "controlled species (default: first)");
    grape->add_option("--mode", mode_s, "xy | amp_phase | phase_only")->capture_default_str();
    grape->add_option("--grad", grad_s, "approx | exact | phase_only_exact");
    grape->add_option("--steps", steps)->check(CLI::PositiveNumber)->capture_default_str();
    grape->add_option("--tau", tau, "step length in seconds")->capture_default_str();
    grape->add_option("--amp", amp, "amplitude in Hz (phase_only) or scale")->capture_default_str();
    grape->add_option("--ensemble", ens_s, "nominal | b1:s1,s2,...");
    grape->add_flag("--per-channel-b1", per_channel, "independent B1 scaling per channel");
    grape->add_option("--iters", iters)->capture_default_str();
    grape->add_option("--goal", goal, "target infidelity")->capture_default_str();
    grape->add_option("--restarts", restarts)->capture_default_str();
    grape->add_option("--amp-cap", cap, "amplitude clip in Hz, 0 = none")->capture_default_str();
    grape->callback([&] {
        action = [&] {
            return run_grape(g, system_path, target, channel, mode_s, grad_s, steps, tau, amp, ens_s, per_channel,
                             iters, goal, restarts, cap);
        };
    });

    auto* comp = app.add_subcommand("compulse", "composite-pulse error map");
    std::string pulse = "knill", grid = "0.1:41";
    comp->add_option("--pulse", pulse, "plain | tycko_b1 | tycko_offres | knill | nine")->capture_default_str();
    comp->add_option("--grid", grid, "range:points")->capture_default_str();
    comp->callback([&] { action = [&] { return run_compulse(g, pulse, grid); }; });

    auto* dd = app.add_subcommand("dd", "dynamical decoupling memory map or phase test");
    std::string seq_s = "xy4", dgrid = "0.1:41", kmode = "phase_cycle", koff = "xy4", phase_test,
                       offset_s = "legendre:2";
    int echoes = 180;
    dd->add_option("--sequence", seq_s, "cpmg | xy4 | xy8 | kdd20 | udd")->capture_default_str();
    dd->add_option("--echoes", echoes)->check(CLI::PositiveNumber)->capture_default_str();
    dd->add_option("--grid", dgrid, "range:points")->capture_default_str();
    dd->add_option("--kdd-mode", kmode, "phase_cycle | composite")->capture_default_str();
    dd->add_option("--kdd-offsets", koff, "xy4 | cyclic")->capture_default_str();
    dd->add_option("--phase-test", phase_test, "udd:n | periodic:n");
    dd->add_option("--offset", offset_s, "legendre:k or c0,c1,...")->capture_default_str();
    dd->callback([&] { action = [&] { return run_dd(g, seq_s, echoes, dgrid, kmode, koff, phase_test, offset_s); }; });

    auto* rf = app.add_subcommand("refocus", "compile a Walsh refocusing program");
    std::string rsys, targets_s, z_s;
    bool symmetrize = false;
    rf->add_option("--system", rsys, "spin-system file")->required()->check(CLI::ExistingFile);
    rf->add_option("--targets", targets_s, "\"i,j:angle;...\" (rad, or deg suffix)");
    rf->add_option("--z", z_s, "z rotation per spin in degrees, comma separated");
    rf->add_flag("--symmetrize", symmetrize, "mirror the bin order");
    rf->callback([&] { action = [&] { return run_refocus(g, rsys, targets_s, z_s, symmetrize); }; });

    auto* pp = app.add_subcommand("pps", "pseudo-pure state preparation");
    std::string psys, method = "two-spin-homo", report = "spectrum";
    double eps = 1e-2;
    pp->add_option("--system", psys, "spin-system file")->required()->check(CLI::ExistingFile);
    pp->add_option("--method", method, "two-spin-homo | two-spin-hetero | crotonic | temporal")->capture_default_str();
    pp->add_option("--report", report)->capture_default_str();
    pp->add_option("--eps", eps, "polarization scale for the spectrum")->capture_default_str();
    pp->callback([&] { action = [&] { return run_pps(g, psys, method, report, eps); }; });

    auto* fd = app.add_subcommand("fid", "fidelity between two matrix files");
    std::vector<std::string> uj, un;
    std::string fmethod = "fast";
    fd->add_option("--uj", uj, "two density-matrix files")->expected(2)->check(CLI::ExistingFile);
    fd->add_option("--unitary", un, "two unitary files")->expected(2)->check(CLI::ExistingFile);
    fd->add_option("--method", fmethod, "fast | classic")->capture_default_str();
    fd->callback([&] { action = [&] { return run_fid(g, uj, un, fmethod); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    try {
        set_threads(g.threads);
        return action();
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
