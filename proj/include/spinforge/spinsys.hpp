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

#include "spinforge/core.hpp"

#include <bit>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace spinforge {

inline constexpr int kMaxSpins = 12;

struct Spin {
    std::string label;
    std::string species;
    double offset_hz = 0.0;
};

struct Coupling {
    int i = 0;
    int j = 0;
    double j_hz = 0.0;
};

/// Spin indices are 0-based in the API; files and the CLI use 1-based indices.
class SpinSystem {
public:
    SpinSystem() = default;

    SpinSystem(std::vector<Spin> spins, const std::vector<Coupling>& couplings = {})
        : spins_(std::move(spins)) {
        const int q = size();
        if (q < 1 || q > kMaxSpins) {
            throw Error("spin count " + std::to_string(q) + " outside 1.." + std::to_string(kMaxSpins));
        }
        for (const auto& c : couplings) {
            if (c.i == c.j) throw Error("self-coupling on spin " + std::to_string(c.i + 1));
            if (c.i < 0 || c.j < 0 || c.i >= q || c.j >= q) {
                throw Error("coupling references unknown spin (" + std::to_string(c.i + 1) + "," +
                            std::to_string(c.j + 1) + ")");
            }
            if (!std::isfinite(c.j_hz)) throw Error("non-finite coupling");
            auto key = std::minmax(c.i, c.j);
            if (!couplings_.emplace(std::pair{key.first, key.second}, c.j_hz).second) {
                throw Error("duplicate coupling (" + std::to_string(key.first + 1) + "," +
                            std::to_string(key.second + 1) + ")");
            }
        }
        for (int k = 0; k < q; ++k) {
            if (!std::isfinite(spins_[k].offset_hz)) throw Error("non-finite offset");
            if (spins_[k].species.empty()) throw Error("empty species tag");
            if (spins_[k].label.empty()) spins_[k].label = spins_[k].species + std::to_string(k + 1);
            auto it = std::find(species_.begin(), species_.end(), spins_[k].species);
            if (it == species_.end()) {
                species_.push_back(spins_[k].species);
                members_.push_back({k});
            } else {
                members_[it - species_.begin()].push_back(k);
            }
        }
    }

    int size() const { return static_cast<int>(spins_.size()); }
    long dim() const { return 1L << size(); }
    const std::vector<Spin>& spins() const { return spins_; }
    const Spin& spin(int k) const { return spins_.at(k); }
    const std::map<std::pair<int, int>, double>& couplings() const { return couplings_; }

    double coupling(int i, int j) const {
        if (i == j) return 0.0;
        auto key = std::minmax(i, j);
        auto it = couplings_.find({key.first, key.second});
        return it == couplings_.end() ? 0.0 : it->second;
    }

    /// Species in order of first appearance; each is one channel.
    const std::vector<std::string>& channels() const { return species_; }

    const std::vector<int>& channel_members(const std::string& species) const {
        auto it = std::find(species_.begin(), species_.end(), species);
        if (it == species_.end()) throw Error("unknown channel '" + species + "'");
        return members_[it - species_.begin()];
    }

    bool has_channel(const std::string& species) const {
        return std::find(species_.begin(), species_.end(), species) != species_.end();
    }

    bool operator==(const SpinSystem& o) const {
        if (size() != o.size() || couplings_ != o.couplings_) return false;
        for (int k = 0; k < size(); ++k) {
            if (spins_[k].label != o.spins_[k].label || spins_[k].species != o.spins_[k].species ||
                spins_[k].offset_hz != o.spins_[k].offset_hz)
                return false;
        }
        return true;
    }

private:
    std::vector<Spin> spins_;
    std::map<std::pair<int, int>, double> couplings_;
    std::vector<std::string> species_;
    std::vector<std::vector<int>> members_;
};

/// Bit mask of spin k in a q-spin basis index. Spin 0 is the leftmost factor.
inline long spin_mask(int q, int k) { return 1L << (q - 1 - k); }

/// m_z of spin k in basis state r: +1/2 for bit 0, -1/2 for bit 1.
inline double iz_value(int q, int k, long r) { return (r & spin_mask(q, k)) ? -0.5 : 0.5; }

struct SpinOps {
    Operator Ix, Iy, Iz;
};

inline SpinOps single_spin_ops(int q, int k) {
    if (q < 1 || q > kMaxSpins) throw Error("spin count out of range");
    if (k < 0 || k >= q) throw Error("spin index " + std::to_string(k + 1) + " out of range 1.." + std::to_string(q));
    const long d = 1L << q, mask = spin_mask(q, k);
    Matrix x = Matrix::Zero(d, d), y = Matrix::Zero(d, d), z = Matrix::Zero(d, d);
    for (long r = 0; r < d; ++r) {
        const long s = r ^ mask;
        x(r, s) = 0.5;
        // <r|Iy|s>: raising part -i/2 when r has the bit clear (m=+1/2)
        y(r, s) = (r & mask) ? cplx(0, 0.5) : cplx(0, -0.5);
        z(r, r) = iz_value(q, k, r);
    }
    return {Operator::hermitian(std::move(x)), Operator::hermitian(std::move(y)),
            Operator::hermitian(std::move(z))};
}

/// Diagonal of the sum of Iz over the given spins.
inline RVector iz_sum_diagonal(int q, const std::vector<int>& spins) {
    const long d = 1L << q;
    RVector v = RVector::Zero(d);
    for (long r = 0; r < d; ++r)
        for (int k : spins) v(r) += iz_value(q, k, r);
    return v;
}

struct TotalOps {
    Operator Fx, Fy;
    RVector fz;  // diagonal of Fz
};

inline TotalOps total_ops(const SpinSystem& sys, const std::string& species) {
    const auto& members = sys.channel_members(species);
    const int q = sys.size();
    const long d = sys.dim();
    Matrix x = Matrix::Zero(d, d), y = Matrix::Zero(d, d);
    for (int k : members) {
        const long mask = spin_mask(q, k);
        for (long r = 0; r < d; ++r) {
            x(r, r ^ mask) += 0.5;
            y(r, r ^ mask) += (r & mask) ? cplx(0, 0.5) : cplx(0, -0.5);
        }
    }
    return {Operator::hermitian(std::move(x)), Operator::hermitian(std::move(y)), iz_sum_diagonal(q, members)};
}

/// Diagonal of H0 in rad/s.
inline RVector drift_diagonal(const SpinSystem& sys) {
    const int q = sys.size();
    const long d = sys.dim();
    RVector h = RVector::Zero(d);
    for (long r = 0; r < d; ++r) {
        double e = 0.0;
        for (int k = 0; k < q; ++k) e += kTwoPi * sys.spin(k).offset_hz * iz_value(q, k, r);
        for (const auto& [pair, j] : sys.couplings())
            e += kPi * j * 2.0 * iz_value(q, pair.first, r) * iz_value(q, pair.second, r);
        h(r) = e;
    }
    return h;
}

inline Operator drift_hamiltonian(const SpinSystem& sys) {
    return Operator::hermitian(drift_diagonal(sys).cast<cplx>().asDiagonal());
}

inline SpinSystem subsystem(const SpinSystem& sys, std::vector<int> keep) {
    if (keep.empty()) throw Error("subsystem: empty keep set");
    std::sort(keep.begin(), keep.end());
    if (std::adjacent_find(keep.begin(), keep.end()) != keep.end()) throw Error("subsystem: repeated spin");
    for (int k : keep)
        if (k < 0 || k >= sys.size()) throw Error("subsystem: spin index out of range");
    std::vector<Spin> spins;
    for (int k : keep) spins.push_back(sys.spin(k));
    std::vector<Coupling> cs;
    for (const auto& [pair, j] : sys.couplings()) {
        auto a = std::find(keep.begin(), keep.end(), pair.first);
        auto b = std::find(keep.begin(), keep.end(), pair.second);
        if (a != keep.end() && b != keep.end())
            cs.push_back({static_cast<int>(a - keep.begin()), static_cast<int>(b - keep.begin()), j});
    }
    return SpinSystem(std::move(spins), cs);
}

struct PassiveMember {
    unsigned long state = 0;  // bit i set: passive spin i in |1>
    double weight = 0.0;
    RVector drift;            // diagonal of the active-subsystem Hamiltonian, rad/s
};

/// Effective active-subsystem drift for every computational state of the
/// passive spins. `multiplicity` maps passive states to weights; when given,
/// only the listed states become members. Weights are normalized to 1.
inline std::vector<PassiveMember> passive_ensemble(const SpinSystem& sys, const std::vector<int>& active,
                                                   const std::vector<int>& passive,
                                                   const std::optional<std::map<unsigned long, double>>& multiplicity = {}) {
    std::vector<int> seen(sys.size(), 0);
    for (int k : active) {
        if (k < 0 || k >= sys.size()) throw Error("passive_ensemble: active index out of range");
        ++seen[k];
    }
    for (int k : passive) {
        if (k < 0 || k >= sys.size()) throw Error("passive_ensemble: passive index out of range");
        ++seen[k];
    }
    for (int k = 0; k < sys.size(); ++k) {
        if (seen[k] > 1) throw Error("passive_ensemble: spin " + std::to_string(k + 1) + " is both active and passive");
        if (seen[k] == 0) throw Error("passive_ensemble: spin " + std::to_string(k + 1) + " unassigned");
    }
    const SpinSystem sub = subsystem(sys, active);
    std::vector<int> act = active;
    std::sort(act.begin(), act.end());
    const int qa = sub.size();
    const RVector base = drift_diagonal(sub);

    std::vector<std::pair<unsigned long, double>> states;
    if (multiplicity) {
        for (const auto& [s, w] : *multiplicity) {
            if (s >= (1UL << passive.size())) throw Error("passive_ensemble: state out of range");
            if (w < 0) throw Error("passive_ensemble: negative multiplicity");
            states.emplace_back(s, w);
        }
    } else {
        for (unsigned long s = 0; s < (1UL << passive.size()); ++s) states.emplace_back(s, 1.0);
    }
    double total = 0.0;
    for (auto& s : states) total += s.second;
    if (states.empty() || total <= 0) throw Error("passive_ensemble: empty ensemble");

    std::vector<PassiveMember> out;
    for (const auto& [s, w] : states) {
        RVector h = base;
        for (std::size_t p = 0; p < passive.size(); ++p) {
            const double sign = (s >> p) & 1UL ? -1.0 : 1.0;
            for (int a = 0; a < qa; ++a) {
                const double j = sys.coupling(act[a], passive[p]);
                if (j == 0.0) continue;
                for (long r = 0; r < h.size(); ++r) h(r) += sign * kPi * j * 2.0 * iz_value(qa, a, r) * 0.5;
            }
        }
        out.push_back({s, w / total, std::move(h)});
    }
    return out;
}

/// Multiplicities for passive spins where each group holds indistinguishable
/// spins: states are identified by the number of |1> spins per group.
inline std::map<unsigned long, double> indistinguishable_multiplicities(std::size_t n_passive,
                                                                        const std::vector<std::vector<int>>& groups) {
    std::vector<int> group_of(n_passive, -1);
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (int p : groups[g]) {
            if (p < 0 || static_cast<std::size_t>(p) >= n_passive) throw Error("group index out of range");
            if (group_of[p] >= 0) throw Error("passive spin in two groups");
            group_of[p] = static_cast<int>(g);
        }
    std::map<unsigned long, double> out;
    for (unsigned long s = 0; s < (1UL << n_passive); ++s) {
        // canonical representative: within each group, the |1> spins fill the
        // lowest-listed members first
        unsigned long canon = s;
        for (const auto& grp : groups) {
            int ones = 0;
            for (int p : grp) {
                ones += (s >> p) & 1UL;
                canon &= ~(1UL << p);
            }
            for (int i = 0; i < ones; ++i) canon |= 1UL << grp[i];
        }
        out[canon] += 1.0;
    }
    return out;
}

struct CoherenceOrderTable {
    std::vector<std::string> species;
    std::vector<Eigen::MatrixXi> order;

    const Eigen::MatrixXi& of(const std::string& s) const {
        auto it = std::find(species.begin(), species.end(), s);
        if (it == species.end()) throw Error("unknown species '" + s + "'");
        return order[it - species.begin()];
    }
};

/// order[s](r,c) = sum over spins of species s of 2*(m(r) - m(c)).
inline CoherenceOrderTable coherence_orders(const SpinSystem& sys) {
    CoherenceOrderTable t;
    const int q = sys.size();
    const long d = sys.dim();
    for (const auto& sp : sys.channels()) {
        long mask = 0;
        for (int k : sys.channel_members(sp)) mask |= spin_mask(q, k);
        Eigen::MatrixXi o(d, d);
        for (long r = 0; r < d; ++r)
            for (long c = 0; c < d; ++c)
                o(r, c) = std::popcount(static_cast<unsigned long>(c & mask)) -
                          std::popcount(static_cast<unsigned long>(r & mask));
        t.species.push_back(sp);
        t.order.push_back(std::move(o));
    }
    return t;
}

namespace detail {

inline std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_real(const std::string& tok, int line) {
    std::size_t pos = 0;
    double v = 0;
    try {
        v = std::stod(tok, &pos);
    } catch (...) {
        pos = 0;
    }
    if (pos != tok.size() || !std::isfinite(v))
        throw Error("line " + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

inline int parse_int(const std::string& tok, int line) {
    std::size_t pos = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &pos);
    } catch (...) {
        pos = 0;
    }
    if (pos != tok.size()) throw Error("line " + std::to_string(line) + ": bad integer '" + tok + "'");
    return v;
}

} // namespace detail

inline SpinSystem parse_spin_system(std::istream& in) {
    enum { none, spins, couplings } section = none;
    std::map<int, Spin> by_index;
    std::vector<Coupling> cs;
    std::set<std::pair<int, int>> pairs;
    std::vector<int> coupling_lines;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        if (s == "[spins]") {
            section = spins;
            continue;
        }
        if (s == "[couplings]") {
            section = couplings;
            continue;
        }
        std::istringstream ls(s);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        const std::string at = "line " + std::to_string(line) + ": ";
        if (section == spins) {
            if (tok.size() != 3) throw Error(at + "expected 'index species offset_hz'");
            int idx = detail::parse_int(tok[0], line);
            if (idx < 1) throw Error(at + "spin index must be >= 1");
            if (by_index.count(idx)) throw Error(at + "duplicate spin " + tok[0]);
            by_index[idx] = Spin{tok[1] + std::to_string(idx), tok[1], detail::parse_real(tok[2], line)};
        } else if (section == couplings) {
            if (tok.size() != 3) throw Error(at + "expected 'i j J_hz'");
            int i = detail::parse_int(tok[0], line), j = detail::parse_int(tok[1], line);
            if (i == j) throw Error(at + "self-coupling on spin " + tok[0]);
            auto key = std::minmax(i, j);
            if (!pairs.insert({key.first, key.second}).second)
                throw Error(at + "duplicate coupling " + tok[0] + " " + tok[1]);
            cs.push_back({i - 1, j - 1, detail::parse_real(tok[2], line)});
            coupling_lines.push_back(line);
        } else {
            throw Error(at + "content outside a [spins] or [couplings] section");
        }
    }
    if (by_index.empty()) throw Error("no spins defined");
    if (static_cast<int>(by_index.size()) > kMaxSpins)
        throw Error(std::to_string(by_index.size()) + " spins exceed the cap of " + std::to_string(kMaxSpins));
    int expect = 1;
    std::vector<Spin> spins_v;
    for (auto& [idx, sp] : by_index) {
        if (idx != expect) throw Error("spin indices must be 1.." + std::to_string(by_index.size()) + " without gaps");
        spins_v.push_back(sp);
        ++expect;
    }
    const int q = static_cast<int>(spins_v.size());
    for (std::size_t c = 0; c < cs.size(); ++c)
        if (cs[c].i < 0 || cs[c].j < 0 || cs[c].i >= q || cs[c].j >= q)
            throw Error("line " + std::to_string(coupling_lines[c]) + ": coupling references unknown spin");
    return SpinSystem(std::move(spins_v), cs);
}

inline SpinSystem load_spin_system(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open spin-system file '" + path + "'");
    try {
        return parse_spin_system(f);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

inline void write_spin_system(std::ostream& out, const SpinSystem& sys) {
    out << "[spins]\n" << std::setprecision(17);
    for (int k = 0; k < sys.size(); ++k)
        out << k + 1 << ' ' << sys.spin(k).species << ' ' << sys.spin(k).offset_hz << '\n';
    out << "[couplings]\n";
    for (const auto& [pair, j] : sys.couplings()) out << pair.first + 1 << ' ' << pair.second + 1 << ' ' << j << '\n';
}

} // namespace spinforge
