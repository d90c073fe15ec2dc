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

#include <regex>

namespace spinforge {

namespace detail {

inline Matrix single_gate(const std::string& n) {
    Matrix g(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    if (n == "identity" || n == "I") {
        g << 1, 0, 0, 1;
    } else if (n == "X" || n == "not") {
        g << 0, 1, 1, 0;
    } else if (n == "Y") {
        g << 0, cplx(0, -1), cplx(0, 1), 0;
    } else if (n == "Z") {
        g << 1, 0, 0, -1;
    } else if (n == "H" || n == "hadamard") {
        g << s, s, s, -s;
    } else if (n == "x90") {
        g = pulse_su2(90, 0, 0, 0).matrix();
    } else if (n == "x180") {
        g = pulse_su2(180, 0, 0, 0).matrix();
    } else if (n == "y90") {
        g = pulse_su2(90, 90, 0, 0).matrix();
    } else if (n == "y180") {
        g = pulse_su2(180, 90, 0, 0).matrix();
    } else {
        throw Error("unknown gate '" + n + "'");
    }
    return g;
}

/// 2x2 gate on spin k of q (spin 0 is the leftmost factor).
inline Matrix embed(const Matrix& g, int q, int k) {
    const long d = 1L << q, mask = spin_mask(q, k);
    Matrix out = Matrix::Zero(d, d);
    for (long r = 0; r < d; ++r)
        for (long c = 0; c < d; ++c)
            if ((r & ~mask) == (c & ~mask)) out(r, c) = g((r & mask) ? 1 : 0, (c & mask) ? 1 : 0);
    return out;
}

} // namespace detail

/// Gates by name: identity, X, Y, Z, H/hadamard, x90, x180, y90, y180 with an
/// optional 1-based spin "(k)", and cnot(c,t), cz(c,t). Without a spin index a
/// one-qubit gate acts on spin 1.
inline Operator named_gate(const std::string& spec, int q) {
    if (q < 1 || q > kMaxSpins) throw Error("named_gate: spin count out of range");
    static const std::regex re(R"(^\s*([A-Za-z0-9_]+)\s*(?:\(\s*(\d+)\s*(?:,\s*(\d+)\s*)?\))?\s*$)");
    std::smatch m;
    if (!std::regex_match(spec, m, re)) throw Error("bad gate spec '" + spec + "'");
    const std::string name = m[1];
    const long d = 1L << q;
    auto spin_arg = [&](int i, int def) {
        if (!m[i].matched) return def;
        const int k = std::stoi(m[i]) - 1;
        if (k < 0 || k >= q) throw Error("gate '" + spec + "': spin out of range");
        return k;
    };
    if (name == "identity" && !m[2].matched) return Operator::identity(d);
    if (name == "cnot" || name == "cz") {
        if (q < 2 || !m[2].matched || !m[3].matched) throw Error("gate '" + spec + "' needs (control,target)");
        const int c = spin_arg(2, 0), t = spin_arg(3, 1);
        if (c == t) throw Error("gate '" + spec + "': control equals target");
        const long cm = spin_mask(q, c), tm = spin_mask(q, t);
        Matrix u = Matrix::Zero(d, d);
        for (long r = 0; r < d; ++r) {
            if (name == "cnot")
                u((r & cm) ? (r ^ tm) : r, r) = 1.0;
            else
                u(r, r) = ((r & cm) && (r & tm)) ? -1.0 : 1.0;
        }
        return Operator::unitary(u);
    }
    if (m[3].matched) throw Error("gate '" + spec + "' takes one spin index");
    return Operator::unitary(detail::embed(detail::single_gate(name), q, spin_arg(2, 0)));
}

/// One row per line; entries "re,im" separated by whitespace; %.17g.
inline void write_matrix(std::ostream& out, const Matrix& a) {
    char buf[96];
    for (long r = 0; r < a.rows(); ++r) {
        for (long c = 0; c < a.cols(); ++c) {
            std::snprintf(buf, sizeof buf, "%s%.17g,%.17g", c ? " " : "", a(r, c).real(), a(r, c).imag());
            out << buf;
        }
        out << '\n';
    }
}

inline Matrix read_matrix(std::istream& in) {
    std::vector<std::vector<cplx>> rows;
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        auto hash = raw.find('#');
        const std::string s = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (s.empty()) continue;
        std::istringstream ls(s);
        std::vector<cplx> row;
        for (std::string tok; ls >> tok;) {
            auto comma = tok.find(',');
            if (comma == std::string::npos) throw Error("line " + std::to_string(line) + ": expected re,im");
            row.emplace_back(detail::parse_real(tok.substr(0, comma), line), detail::parse_real(tok.substr(comma + 1), line));
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error("line " + std::to_string(line) + ": row length differs");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw Error("matrix file is empty");
    Matrix a(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) a(r, c) = rows[r][c];
    return a;
}

inline Matrix load_matrix(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open '" + path + "'");
    try {
        return read_matrix(f);
    } catch (const Error& e) {
        throw Error(path + ": " + e.what());
    }
}

} // namespace spinforge
