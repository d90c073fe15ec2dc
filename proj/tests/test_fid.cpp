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

#include "spinforge/fid.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spinforge;

namespace {

Matrix xgate() {
    Matrix x(2, 2);
    x << 0, 1, 1, 0;
    return x;
}

Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Matrix pure(const CVector& v) { return v * v.adjoint(); }

CVector random_state(long d, std::mt19937_64& rng) {
    std::normal_distribution<double> g;
    CVector v(d);
    for (long i = 0; i < d; ++i) v(i) = cplx(g(rng), g(rng));
    return v.normalized();
}

} // namespace

TEST(UnitaryFidelity, Examples) {
    std::mt19937_64 rng(1);
    const Matrix u = random_unitary(4, rng);
    EXPECT_NEAR(unitary_fidelity(u, u), 1.0, 1e-14);
    const Matrix pix = (cplx(0, -1) * xgate()).eval();  // exp(-i pi Ix)
    EXPECT_NEAR(unitary_fidelity(xgate(), pix), 1.0, 1e-15);
    EXPECT_NEAR(unitary_fidelity(Matrix::Identity(2, 2), xgate()), 0.0, 1e-15);
}

TEST(UnitaryFidelity, SymmetricAndInvariant) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
        const long d = 1L << (1 + t % 3);
        const Matrix u = random_unitary(d, rng), v = random_unitary(d, rng);
        const Matrix a = random_unitary(d, rng), b = random_unitary(d, rng);
        const double f = unitary_fidelity(u, v);
        EXPECT_NEAR(f, unitary_fidelity(v, u), 1e-12);
        EXPECT_NEAR(f, unitary_fidelity(a * u * b, a * v * b), 1e-12);
        EXPECT_NEAR(f, unitary_fidelity(u, std::exp(cplx(0, 0.7)) * v), 1e-12);
    }
}

TEST(UnitaryFidelity, DimensionMismatch) {
    EXPECT_THROW(unitary_fidelity(Matrix::Identity(2, 2), Matrix::Identity(4, 4)), Error);
}

TEST(Phi4, Values) {
    std::mt19937_64 rng(3);
    const Matrix u2 = random_unitary(2, rng), u4 = random_unitary(4, rng);
    EXPECT_NEAR(phi4(u2, u2), 4.0, 1e-12);
    EXPECT_NEAR(phi4(u4, u4), 16.0, 1e-12);
    const Matrix v = random_unitary(4, rng);
    EXPECT_NEAR(phi4(u4, std::exp(cplx(0, 1.3)) * v), phi4(u4, v), 1e-12);
    EXPECT_NEAR(phi4(u4, v) / 16.0, unitary_fidelity(u4, v), 1e-12);
}

TEST(StateFidelity, Examples) {
    std::mt19937_64 rng(4);
    const CVector psi = random_state(4, rng);
    EXPECT_NEAR(state_fidelity(psi, pure(psi)), 1.0, 1e-12);
    CVector z(2);
    z << 1, 0;
    EXPECT_NEAR(state_fidelity(z, Matrix::Identity(2, 2) / 2.0), 0.5, 1e-15);
    EXPECT_NEAR(state_fidelity(z, diag2(0.75, 0.25)), 0.75, 1e-15);
}

TEST(StateFidelity, Rejections) {
    CVector z(2);
    z << 2, 0;
    EXPECT_THROW(state_fidelity(z, diag2(0.5, 0.5)), Error);
    z << 1, 0;
    EXPECT_THROW(state_fidelity(z, diag2(0.6, 0.6)), Error);
    EXPECT_THROW(state_fidelity(z, diag2(1.2, -0.2)), Error);
}

TEST(UhlmannJozsa, Examples) {
    const Matrix rho = diag2(0.75, 0.25);
    for (auto m : {UjMethod::classic, UjMethod::fast}) {
        EXPECT_NEAR(uj_fidelity(rho, rho, m), 1.0, 1e-12);
        EXPECT_NEAR(uj_fidelity(rho, diag2(1, 0), m), 0.75, 1e-12);
    }
}

TEST(UhlmannJozsa, NaiveOverlapFallsShort) {
    const Matrix rho = diag2(0.75, 0.25);
    EXPECT_NEAR(naive_overlap(rho, rho), 5.0 / 8.0, 1e-15);
}

TEST(UhlmannJozsa, FastAgreesWithClassic) {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 1000; ++t) {
        const long d = 2 + t % 15;
        const Matrix a = random_density(d, rng), b = random_density(d, rng);
        EXPECT_NEAR(uj_fidelity_raw(a, b, UjMethod::fast), uj_fidelity_raw(a, b, UjMethod::classic), 1e-10) << d;
    }
}

TEST(UhlmannJozsa, SymmetryInvarianceAndPureReduction) {
    std::mt19937_64 rng(6);
    for (int t = 0; t < 100; ++t) {
        const long d = 2 + t % 7;
        const Matrix a = random_density(d, rng), b = random_density(d, rng), u = random_unitary(d, rng);
        const double f = uj_fidelity(a, b);
        EXPECT_NEAR(f, uj_fidelity(b, a), 1e-10);
        EXPECT_NEAR(f, uj_fidelity(u * a * u.adjoint(), u * b * u.adjoint()), 1e-10);
        const CVector psi = random_state(d, rng);
        EXPECT_NEAR(uj_fidelity(pure(psi), a), state_fidelity(psi, a), 1e-10);
        EXPECT_NEAR(uj_fidelity(a, pure(psi), UjMethod::classic), state_fidelity(psi, a), 1e-10);
    }
}

TEST(UhlmannJozsa, BlochScanPeaksAtTarget) {
    const Matrix rho = diag2(0.75, 0.25);
    double best = -1, br = -1, bt = -1;
    int at_best = 0;
    for (int i = 0; i <= 100; ++i)
        for (int k = 0; k <= 314; ++k) {
            const double r = 0.01 * i, th = 0.01 * k;
            const double f = uj_fidelity(rho, bloch_mixed_state(r, th));
            if (f > best + 1e-12) {
                best = f;
                br = r;
                bt = th;
                at_best = 1;
            } else if (std::abs(f - best) <= 1e-12) {
                ++at_best;
            }
        }
    EXPECT_NEAR(best, 1.0, 1e-12);
    EXPECT_NEAR(br, 0.5, 1e-12);
    EXPECT_NEAR(bt, 0.0, 1e-12);
    EXPECT_EQ(at_best, 1);
}

TEST(Cardinal, Examples) {
    std::mt19937_64 rng(7);
    const Matrix u = random_unitary(2, rng);
    EXPECT_NEAR(cardinal_average_fidelity(u, u), 1.0, 1e-12);
    EXPECT_NEAR(cardinal_average_fidelity(u, std::exp(cplx(0, 2.0)) * u), 1.0, 1e-12);
    EXPECT_NEAR(cardinal_average_fidelity(Matrix::Identity(2, 2), diag2(1, -1)), 1.0 / 3.0, 1e-12);
    EXPECT_THROW(cardinal_average_fidelity(Matrix::Identity(4, 4), Matrix::Identity(4, 4)), Error);
}

TEST(Ensemble, SingleMemberIsPlainFidelity) {
    SpinSystem s({{"", "H", 100}, {"", "H", -200}}, {{0, 1, 50}});
    std::mt19937_64 rng(8);
    auto p = PulseProgram::phase_only("H", 5000, 10, 1e-5);
    std::uniform_real_distribution<double> u(0, kTwoPi);
    for (auto& v : p.channels[0].values) v[0] = u(rng);
    const Matrix tgt = random_unitary(4, rng);
    EXPECT_NEAR(ensemble_fidelity(s, p, std::vector<Matrix>{tgt}, nominal_ensemble()),
                unitary_fidelity(tgt, sequence_propagator(s, p).matrix()), 1e-14);
    const auto b1 = b1_ensemble({0.97, 1.0, 1.03});
    double acc = 0.0;
    for (const auto& m : b1) acc += unitary_fidelity(tgt, sequence_propagator(s, p, m).matrix()) / 3.0;
    EXPECT_NEAR(ensemble_fidelity(s, p, std::vector<Matrix>{tgt}, b1), acc, 1e-14);
    EXPECT_THROW(ensemble_fidelity(s, p, std::vector<Matrix>{tgt}, EnsembleSpec{}), Error);
}

TEST(Ensemble, PassiveThirtyTwoTerms) {
    std::vector<Spin> spins{{"", "C", 0}};
    std::vector<Coupling> cs;
    for (int k = 0; k < 5; ++k) {
        spins.push_back({"", "H", 0});
        cs.push_back({0, 1 + k, 20.0 * (k + 1)});
    }
    const SpinSystem full(spins, cs);
    const auto pm = passive_ensemble(full, {0}, {1, 2, 3, 4, 5});
    const auto ens = passive_members(pm);
    ASSERT_EQ(ens.size(), 32u);
    auto p = PulseProgram::phase_only("C", 3000, 20, 2e-5);
    for (int j = 0; j < 20; ++j) p.channels[0].values[j][0] = 0.1 * j;
    const SpinSystem active = subsystem(full, {0});
    const Matrix tgt = Matrix::Identity(2, 2);
    double acc = 0.0;
    for (const auto& m : ens) acc += m.weight * unitary_fidelity(tgt, sequence_propagator(active, p, m).matrix());
    EXPECT_NEAR(ensemble_fidelity(active, p, std::vector<Matrix>{tgt}, ens), acc, 1e-14);
}

TEST(RandomHelpers, DensityAndUnitaryAreValid) {
    std::mt19937_64 rng(9);
    for (long d : {2L, 5L, 16L}) {
        EXPECT_NO_THROW(validate_density(random_density(d, rng)));
        const Matrix u = random_unitary(d, rng);
        EXPECT_LT(max_abs(u.adjoint() * u - Matrix::Identity(d, d)), 1e-12);
    }
}
