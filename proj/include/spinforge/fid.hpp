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

#include "spinforge/prop.hpp"

#include <random>

namespace spinforge {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

/// |tr(U^+ V) / tr(U^+ U)|^2 without clamping.
inline double unitary_fidelity_raw(const Matrix& U, const Matrix& V) {
    require_same_dim(U, V, "unitary_fidelity");
    const cplx num = (U.adjoint() * V).trace();
    const double den = (U.adjoint() * U).trace().real();
    return std::norm(num / den);
}

inline double unitary_fidelity(const Matrix& U, const Matrix& V) { return clamp01(unitary_fidelity_raw(U, V)); }
inline double unitary_fidelity(const Operator& U, const Operator& V) {
    return unitary_fidelity(U.matrix(), V.matrix());
}

inline double infidelity(double f) { return 1.0 - f; }

/// |<U|V>|^2 with <U|V> = tr(U^+ V).
inline double phi4(const Matrix& U, const Matrix& V) {
    require_same_dim(U, V, "phi4");
    return std::norm(U.conjugate().cwiseProduct(V).sum());
}
inline double phi4(const Operator& U, const Operator& V) { return phi4(U.matrix(), V.matrix()); }

namespace detail {

inline RVector checked_density_spectrum(const Matrix& rho, const char* what) {
    if (max_abs(rho - rho.adjoint()) > 1e-10) throw Error(std::string(what) + ": density matrix not hermitian");
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-8) throw Error(std::string(what) + ": trace " + std::to_string(tr) + " != 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw Error(std::string(what) + ": density matrix not positive semidefinite");
    return es.eigenvalues();
}

} // namespace detail

inline void validate_density(const Matrix& rho, const char* what = "density") {
    (void)detail::checked_density_spectrum(rho, what);
}

/// <psi|rho|psi>.
inline double state_fidelity(const CVector& psi, const Matrix& rho) {
    if (psi.size() != rho.rows()) throw Error("state_fidelity: dimension mismatch");
    if (std::abs(psi.squaredNorm() - 1.0) > 1e-10) throw Error("state_fidelity: psi not normalized");
    validate_density(rho, "state_fidelity");
    return clamp01((psi.adjoint() * rho * psi)(0, 0).real());
}

enum class UjMethod { classic, fast };

/// Matrix square root of a PSD hermitian matrix, eigenvalues floored at 0.
inline Matrix psd_sqrt(const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(a);
    const RVector& l = es.eigenvalues();
    const double floor = 1e-15 * static_cast<double>(l.size()) * std::max(1e-300, l.cwiseAbs().maxCoeff());
    RVector s = l.unaryExpr([floor](double v) { return v > floor ? std::sqrt(v) : 0.0; });
    return es.eigenvectors() * s.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint();
}

namespace detail {

/// sum sqrt(lambda) over eigenvalues above the round-off floor; the square
/// root would otherwise turn 1e-17 noise on rank-deficient states into 1e-9.
inline double sqrt_sum(const RVector& lambda) {
    const double floor = 1e-15 * static_cast<double>(lambda.size()) * std::max(1e-300, lambda.cwiseAbs().maxCoeff());
    double t = 0.0;
    for (long i = 0; i < lambda.size(); ++i)
        if (lambda(i) > floor) t += std::sqrt(lambda(i));
    return t;
}

} // namespace detail

/// [tr sqrt(sqrt(rho) sigma sqrt(rho))]^2
inline double uj_classic_raw(const Matrix& rho, const Matrix& sigma) {
    const Matrix r = psd_sqrt(rho);
    Matrix m = r * sigma * r;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double t = detail::sqrt_sum(es.eigenvalues());
    return t * t;
}

/// [sum_i sqrt(lambda_i(rho sigma))]^2. With rho = B B^+ from a pivoted
/// LDL^T factor, rho sigma is similar to the Hermitian B^+ sigma B.
inline double uj_fast_raw(const Matrix& rho, const Matrix& sigma) {
    Eigen::LDLT<Matrix> f(rho);
    const RVector d = f.vectorD().real().cwiseMax(0.0).cwiseSqrt();
    const Matrix L = f.matrixL();
    const Matrix B = f.transpositionsP().transpose() * (L * d.cast<cplx>().asDiagonal());
    Matrix m = B.adjoint() * sigma * B;
    m = 0.5 * (m + m.adjoint()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    const double t = detail::sqrt_sum(es.eigenvalues());
    return t * t;
}

inline double uj_fidelity_raw(const Matrix& rho, const Matrix& sigma, UjMethod m = UjMethod::fast) {
    require_same_dim(rho, sigma, "uj_fidelity");
    validate_density(rho, "uj_fidelity(rho)");
    validate_density(sigma, "uj_fidelity(sigma)");
    return m == UjMethod::classic ? uj_classic_raw(rho, sigma) : uj_fast_raw(rho, sigma);
}

inline double uj_fidelity(const Matrix& rho, const Matrix& sigma, UjMethod m = UjMethod::fast) {
    return clamp01(uj_fidelity_raw(rho, sigma, m));
}

/// tr(rho sigma). Only meaningful when comparing one state against unitary
/// images of another; it is not a fidelity and does not reach 1 for rho = sigma.
inline double naive_overlap(const Matrix& rho, const Matrix& sigma) {
    require_same_dim(rho, sigma, "naive_overlap");
    return (rho * sigma).trace().real();
}

/// +x, +y, +z single-qubit states.
inline std::array<CVector, 3> cardinal_states() {
    const double s = 1.0 / std::sqrt(2.0);
    CVector x(2), y(2), z(2);
    x << s, s;
    y << s, cplx(0, s);
    z << 1, 0;
    return {x, y, z};
}

/// Mean over +x, +y, +z of |<U psi|V psi>|^2.
inline double cardinal_average_fidelity(const Matrix& U, const Matrix& V) {
    if (U.rows() != 2 || V.rows() != 2 || U.cols() != 2 || V.cols() != 2)
        throw Error("cardinal_average_fidelity: single-qubit operators required");
    double f = 0.0;
    for (const auto& psi : cardinal_states()) f += std::norm((U * psi).dot(V * psi));
    return clamp01(f / 3.0);
}

/// Sum over members of weight * unitary_fidelity(target_m, V_m). A single
/// target applies to every member.
inline double ensemble_fidelity(const SpinSystem& sys, const PulseProgram& prog, const std::vector<Matrix>& targets,
                                const EnsembleSpec& ens) {
    validate_ensemble(ens);
    if (targets.size() != 1 && targets.size() != ens.size()) throw Error("ensemble_fidelity: target count mismatch");
    prog.validate();
    const ControlSet cs = ControlSet::build(sys, prog);
    std::vector<double> f(ens.size());
    parallel_for(ens.size(), [&](std::size_t m) {
        const Matrix& u = targets.size() == 1 ? targets[0] : targets[m];
        f[m] = unitary_fidelity(u, sequence_matrix(cs, prog, ens[m]));
    });
    double acc = 0.0;
    for (std::size_t m = 0; m < ens.size(); ++m) acc += ens[m].weight * f[m];
    return acc;
}

inline double ensemble_fidelity(const SpinSystem& sys, const PulseProgram& prog, const Operator& target,
                                const EnsembleSpec& ens) {
    return ensemble_fidelity(sys, prog, std::vector<Matrix>{target.matrix()}, ens);
}

/// sigma = E/2 + r (sin(theta) cos(phi) Ix + sin(theta) sin(phi) Iy + cos(theta) Iz)
inline Matrix bloch_mixed_state(double r, double theta, double phi = 0.0) {
    const double x = r * std::sin(theta) * std::cos(phi), y = r * std::sin(theta) * std::sin(phi),
                 z = r * std::cos(theta);
    Matrix s(2, 2);
    s << 0.5 + 0.5 * z, 0.5 * cplx(x, -y), 0.5 * cplx(x, y), 0.5 - 0.5 * z;
    return s;
}

/// Random density matrix A A^+ / tr(A A^+) with complex Gaussian A.
template <class Rng>
Matrix random_density(long dim, Rng& rng) {
    std::normal_distribution<double> g;
    Matrix a(dim, dim);
    for (long r = 0; r < dim; ++r)
        for (long c = 0; c < dim; ++c) a(r, c) = cplx(g(rng), g(rng));
    Matrix rho = a * a.adjoint();
    rho /= rho.trace().real();
    return 0.5 * (rho + rho.adjoint());
}

/// Haar-distributed unitary from QR of a complex Gaussian matrix.
template <class Rng>
Matrix random_unitary(long dim, Rng& rng) {
    std::normal_distribution<double> g;
    Matrix a(dim, dim);
    for (long r = 0; r < dim; ++r)
        for (long c = 0; c < dim; ++c) a(r, c) = cplx(g(rng), g(rng));
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    Matrix rr = qr.matrixQR();
    for (long c = 0; c < dim; ++c) {
        const cplx d = rr(c, c);
        q.col(c) *= std::abs(d) > 0 ? d / std::abs(d) : cplx(1);
    }
    return q;
}

} // namespace spinforge
