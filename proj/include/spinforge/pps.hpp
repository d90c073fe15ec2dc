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

/// Density matrix tagged as trace 1 (density) or trace 0 (deviation).
struct DensityState {
    enum class Norm { density, deviation };
    Matrix m;
    Norm norm = Norm::deviation;

    long dim() const { return m.rows(); }

    void validate() const {
        if (m.rows() != m.cols() || !is_power_of_two(m.rows())) throw Error("density state: bad dimension");
        if (max_abs(m - m.adjoint()) > 1e-10 * std::max(1.0, max_abs(m))) throw Error("density state: not Hermitian");
        const double tr = m.trace().real();
        if (norm == Norm::density) {
            if (std::abs(tr - 1.0) > 1e-12) throw Error("density state: trace is not 1");
            validate_density(m, "density state");
        } else if (std::abs(tr) > 1e-12 * std::max(1.0, max_abs(m))) {
            throw Error("density state: deviation has nonzero trace");
        }
    }
};

/// Largest |element| among off-diagonal elements with zero order for every species.
inline double zero_quantum_amplitude(const Matrix& rho, const CoherenceOrderTable& orders) {
    double worst = 0.0;
    for (long r = 0; r < rho.rows(); ++r)
        for (long c = 0; c < rho.cols(); ++c) {
            if (r == c) continue;
            bool zq = true;
            for (const auto& o : orders.order) zq = zq && o(r, c) == 0;
            if (zq) worst = std::max(worst, std::abs(rho(r, c)));
        }
    return worst;
}

/// Gradient dephasing: keep an element only if its order is zero for every
/// species (distinct species taken as incommensurate).
inline DensityState crush(const DensityState& rho, const CoherenceOrderTable& orders) {
    DensityState out = rho;
    for (const auto& o : orders.order) {
        if (o.rows() != rho.dim()) throw Error("crush: order table does not match state dimension");
        for (long r = 0; r < rho.dim(); ++r)
            for (long c = 0; c < rho.dim(); ++c)
                if (o(r, c) != 0) out.m(r, c) = 0.0;
    }
    return out;
}

/// exp(-i theta sum_k (cos(phi) Ix^k + sin(phi) Iy^k)) over the listed spins.
inline Matrix rotation(int q, const std::vector<int>& spins, double theta_deg, double phase_deg) {
    const long d = 1L << q;
    Matrix h = Matrix::Zero(d, d);
    const double ph = deg2rad(phase_deg);
    for (int k : spins) {
        const auto ops = single_spin_ops(q, k);
        h += std::cos(ph) * ops.Ix.matrix() + std::sin(ph) * ops.Iy.matrix();
    }
    return HermitianEigen(h).expm(deg2rad(theta_deg));
}

/// Isolated coupling evolution for 1/(2|J|): exp(-i sign(J) (pi/2) 2 Iz^k Iz^l).
inline Matrix couple_half_j(int q, int k, int l, double j_hz) {
    if (j_hz == 0.0) throw Error("couple: J = 0, 1/2J delay undefined");
    const long d = 1L << q;
    const double s = j_hz > 0 ? 1.0 : -1.0;
    CVector diag(d);
    for (long r = 0; r < d; ++r)
        diag(r) = std::exp(cplx(0, -s * kPi / 2 * 2.0 * iz_value(q, k, r) * iz_value(q, l, r)));
    return diag.asDiagonal();
}

inline DensityState conjugate_by(const Matrix& u, const DensityState& rho) {
    return {u * rho.m * u.adjoint(), rho.norm};
}

/// tr(O rho) / tr(O O) for Hermitian O.
inline double coefficient(const Matrix& op, const Matrix& rho) {
    const double oo = (op * op).trace().real();
    if (oo == 0.0) throw Error("coefficient: zero operator");
    return (op * rho).trace().real() / oo;
}

/// 2 Iz^k Iz^l
inline Matrix zz(int q, int k, int l) {
    return 2.0 * single_spin_ops(q, k).Iz.matrix() * single_spin_ops(q, l).Iz.matrix();
}

/// Unit-polarization thermal deviation sum_k w_k Iz^k (all weights 1 by default).
inline DensityState thermal_deviation(int q, const std::vector<double>& weights = {}) {
    const long d = 1L << q;
    Matrix m = Matrix::Zero(d, d);
    for (int k = 0; k < q; ++k) m += (weights.empty() ? 1.0 : weights.at(k)) * single_spin_ops(q, k).Iz.matrix();
    return {m, DensityState::Norm::deviation};
}

/// E/N + eps * dev
inline DensityState to_density(const DensityState& dev, double eps) {
    if (dev.norm != DensityState::Norm::deviation) throw Error("to_density: input is not a deviation");
    const long n = dev.dim();
    return {Matrix::Identity(n, n) / static_cast<double>(n) + eps * dev.m, DensityState::Norm::density};
}

/// Frame rotation exp(-i angle sum Iz) applied before the final crush; has no
/// effect on the result, exposed for checking that.
struct PrepOptions {
    double frame_z_rad = 0.0;
};

namespace detail {

inline DensityState frame_then_crush(const DensityState& rho, const SpinSystem& sys, const PrepOptions& o) {
    DensityState r = rho;
    if (o.frame_z_rad != 0.0) {
        std::vector<int> all(sys.size());
        for (int k = 0; k < sys.size(); ++k) all[k] = k;
        const RVector fz = iz_sum_diagonal(sys.size(), all);
        CVector diag(fz.size());
        for (long i = 0; i < fz.size(); ++i) diag(i) = std::exp(cplx(0, -o.frame_z_rad * fz(i)));
        r = conjugate_by(diag.asDiagonal(), r);
    }
    return crush(r, coherence_orders(sys));
}

} // namespace detail

/// 60 Sx, crush; 45 Ix, couple, 45 I-y, crush. Starts from Iz + Sz.
inline DensityState pps_two_spin_homonuclear(const SpinSystem& sys, const PrepOptions& o = {},
                                             DensityState* after_first_crush = nullptr) {
    if (sys.size() != 2) throw Error("pps_two_spin_homonuclear: need 2 spins");
    if (sys.spin(0).species != sys.spin(1).species) throw Error("pps_two_spin_homonuclear: spins must share a species");
    const double j = sys.coupling(0, 1);
    if (j == 0.0) throw Error("pps_two_spin_homonuclear: J = 0");
    const auto orders = coherence_orders(sys);
    DensityState rho = thermal_deviation(2);
    rho = crush(conjugate_by(rotation(2, {1}, 60, 0), rho), orders);
    if (after_first_crush) *after_first_crush = rho;
    rho = conjugate_by(rotation(2, {0}, 45, 0), rho);
    rho = conjugate_by(couple_half_j(2, 0, 1, j), rho);
    rho = conjugate_by(rotation(2, {0}, 45, j > 0 ? -90 : 90), rho);
    return detail::frame_then_crush(rho, sys, o);
}

/// 45 (Ix+Sx), couple, 30 (I-y + S-y), crush. Equal polarizations assumed.
inline DensityState pps_two_spin_heteronuclear(const SpinSystem& sys, const PrepOptions& o = {}) {
    if (sys.size() != 2) throw Error("pps_two_spin_heteronuclear: need 2 spins");
    if (sys.spin(0).species == sys.spin(1).species) throw Error("pps_two_spin_heteronuclear: spins must differ in species");
    const double j = sys.coupling(0, 1);
    if (j == 0.0) throw Error("pps_two_spin_heteronuclear: J = 0");
    DensityState rho = thermal_deviation(2);
    rho = conjugate_by(rotation(2, {0, 1}, 45, 0), rho);
    rho = conjugate_by(couple_half_j(2, 0, 1, j), rho);
    rho = conjugate_by(rotation(2, {0, 1}, 30, j > 0 ? -90 : 90), rho);
    return detail::frame_then_crush(rho, sys, o);
}

struct CrotonicResult {
    DensityState state;
    DensityState after_populations;
    std::vector<double> zq_before_crush;  // ZQ amplitude just before each crush
};

inline std::vector<double> crotonic_population_angles_deg() {
    return {60.0, rad2deg(std::acos(0.25)), rad2deg(std::acos(0.125))};
}

/// Four-spin chain: population adjustment, then five controlled-transfer
/// blocks with ideal isolated 1/2J couplings and three crushes.
inline CrotonicResult pps_crotonic_chain(const SpinSystem& sys) {
    if (sys.size() != 4) throw Error("pps_crotonic_chain: need a 4-spin chain");
    for (int k = 0; k + 1 < 4; ++k)
        if (sys.coupling(k, k + 1) == 0.0)
            throw Error("pps_crotonic_chain: missing nearest-neighbour coupling " + std::to_string(k + 1) + "-" +
                        std::to_string(k + 2));
    const int q = 4;
    const auto orders = coherence_orders(sys);
    CrotonicResult res;
    auto crush_logged = [&](const DensityState& r) {
        res.zq_before_crush.push_back(zero_quantum_amplitude(r.m, orders));
        return crush(r, orders);
    };
    DensityState rho = thermal_deviation(q);
    const auto ang = crotonic_population_angles_deg();
    for (int k = 1; k < 4; ++k) rho = conjugate_by(rotation(q, {k}, ang[k - 1], 0), rho);
    rho = crush_logged(rho);
    res.after_populations = rho;

    auto block = [&](int k, int l, double theta) {
        const double j = sys.coupling(k, l);
        rho = conjugate_by(rotation(q, {k}, theta, 0), rho);
        rho = conjugate_by(couple_half_j(q, k, l, j), rho);
        rho = conjugate_by(rotation(q, {k}, theta, j > 0 ? -90 : 90), rho);
    };
    block(0, 1, 90);
    block(1, 2, 90);
    block(2, 3, 45);
    rho = crush_logged(rho);
    block(1, 2, 45);
    rho = crush_logged(rho);
    block(0, 1, 45);
    rho = crush_logged(rho);
    res.state = rho;
    return res;
}

inline DensityState temporal_average(const std::vector<DensityState>& states) {
    if (states.empty()) throw Error("temporal_average: empty list");
    DensityState out = states.front();
    for (std::size_t i = 1; i < states.size(); ++i) {
        if (states[i].dim() != out.dim()) throw Error("temporal_average: dimension mismatch");
        out.m += states[i].m;
    }
    out.m /= static_cast<double>(states.size());
    return out;
}

/// Unitary sending |i> to |perm[i]>.
inline Matrix permutation_unitary(const std::vector<long>& perm) {
    const long n = static_cast<long>(perm.size());
    Matrix p = Matrix::Zero(n, n);
    std::vector<bool> seen(n, false);
    for (long i = 0; i < n; ++i) {
        if (perm[i] < 0 || perm[i] >= n || seen[perm[i]]) throw Error("permutation_unitary: not a permutation");
        seen[perm[i]] = true;
        p(perm[i], i) = 1.0;
    }
    return p;
}

/// The N-1 cyclic shifts (including identity) of the excited populations
/// |1>..|N-1>, ground state fixed.
inline std::vector<Matrix> cyclic_population_permutations(int q) {
    const long n = 1L << q;
    std::vector<Matrix> out;
    for (long s = 0; s < n - 1; ++s) {
        std::vector<long> perm(n);
        perm[0] = 0;
        for (long i = 1; i < n; ++i) perm[i] = 1 + (i - 1 + s) % (n - 1);
        out.push_back(permutation_unitary(perm));
    }
    return out;
}

/// Thermal state and its cyclic excited-population permutations, averaged.
inline DensityState temporal_pps(const DensityState& thermal) {
    int q = 0;
    while ((1L << q) < thermal.dim()) ++q;
    std::vector<DensityState> runs;
    for (const auto& p : cyclic_population_permutations(q)) runs.push_back(conjugate_by(p, thermal));
    return temporal_average(runs);
}

struct PseudoPurity {
    bool is_pps = false;
    bool degenerate = false;  // all eigenvalues equal
    double p = 0.0;
    long target_index = -1;  // basis state carrying most weight of the raised eigenvector
    RVector eigenvalues;     // ascending
};

inline PseudoPurity pseudo_purity(const DensityState& rho, double tol = 1e-10) {
    if (rho.norm != DensityState::Norm::density) throw Error("pseudo_purity: needs a density-normalized state");
    rho.validate();
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho.m + rho.m.adjoint()));
    PseudoPurity r;
    r.eigenvalues = es.eigenvalues();
    const long n = rho.dim();
    const double lmax = r.eigenvalues(n - 1);
    const double lo = r.eigenvalues(0), hi = n > 1 ? r.eigenvalues(n - 2) : lo;
    const bool rest_equal = hi - lo <= tol;
    r.degenerate = lmax - lo <= tol;
    r.is_pps = rest_equal && (r.degenerate || lmax > hi + tol);
    r.p = n > 1 ? (lmax - 1.0 / n) / (1.0 - 1.0 / n) : 1.0;
    if (r.degenerate) r.p = 0.0;
    if (!r.degenerate) es.eigenvectors().col(n - 1).cwiseAbs2().maxCoeff(&r.target_index);
    return r;
}

/// Eigenvalue spectrum report of E/N + eps * dev.
inline std::string spectrum_report(const DensityState& dev, double eps) {
    const auto pp = pseudo_purity(to_density(dev, eps));
    std::ostringstream os;
    os << "eigenvalues:";
    char buf[64];
    for (long i = 0; i < pp.eigenvalues.size(); ++i) {
        std::snprintf(buf, sizeof buf, " %.12g", pp.eigenvalues(i));
        os << buf;
    }
    std::snprintf(buf, sizeof buf, "\nis_pps=%d p=%.12g target_index=%ld degenerate=%d\n", pp.is_pps ? 1 : 0, pp.p,
                  pp.target_index, pp.degenerate ? 1 : 0);
    os << buf;
    return os.str();
}

} // namespace spinforge
