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

#include "spinforge/pps.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spinforge;

namespace {

SpinSystem homo() { return SpinSystem({{"I", "H", 250}, {"S", "H", -250}}, {{0, 1, 100}}); }
SpinSystem hetero() { return SpinSystem({{"I", "H", 0}, {"S", "C", 0}}, {{0, 1, 200}}); }

Matrix iz(int q, int k) { return single_spin_ops(q, k).Iz.matrix(); }

DensityState dev(const Matrix& m) { return {m, DensityState::Norm::deviation}; }

} // namespace

TEST(Crush, SingleSpin) {
    SpinSystem s({{"", "H", 0}});
    const auto o = coherence_orders(s);
    const auto ops = single_spin_ops(1, 0);
    EXPECT_LT(max_abs(crush(dev(ops.Ix.matrix()), o).m), 1e-15);
    EXPECT_LT(max_abs(crush(dev(ops.Iz.matrix()), o).m - ops.Iz.matrix()), 1e-15);
}

TEST(Crush, ZeroQuantumSurvivesOnlyForHomonuclear) {
    Matrix zq = Matrix::Zero(4, 4);
    zq(1, 2) = 1;
    zq(2, 1) = 1;
    EXPECT_LT(max_abs(crush(dev(zq), coherence_orders(homo())).m - zq), 1e-15);
    EXPECT_LT(max_abs(crush(dev(zq), coherence_orders(hetero())).m), 1e-15);
    EXPECT_EQ(zero_quantum_amplitude(zq, coherence_orders(homo())), 1.0);
    EXPECT_EQ(zero_quantum_amplitude(zq, coherence_orders(hetero())), 0.0);
}

TEST(Crush, RandomStateKeepsOnlyAllSpeciesZeroOrder) {
    std::mt19937_64 rng(1);
    const Matrix r = random_density(8, rng);
    SpinSystem s({{"", "H", 0}, {"", "C", 0}, {"", "H", 0}});
    const auto o = coherence_orders(s);
    const Matrix c = crush({r, DensityState::Norm::density}, o).m;
    for (long a = 0; a < 8; ++a)
        for (long b = 0; b < 8; ++b) {
            const bool keep = o.order[0](a, b) == 0 && o.order[1](a, b) == 0;
            EXPECT_EQ(c(a, b), keep ? r(a, b) : cplx(0));
        }
}

TEST(TwoSpin, HomonuclearCoefficients) {
    DensityState mid;
    const auto out = pps_two_spin_homonuclear(homo(), {}, &mid);
    EXPECT_NEAR(coefficient(iz(2, 0), out.m), 0.5, 1e-12);
    EXPECT_NEAR(coefficient(iz(2, 1), out.m), 0.5, 1e-12);
    EXPECT_NEAR(coefficient(zz(2, 0, 1), out.m), 0.5, 1e-12);
    EXPECT_LT(max_abs(out.m - 0.5 * (iz(2, 0) + iz(2, 1) + zz(2, 0, 1))), 1e-12);
    EXPECT_LT(max_abs(mid.m - (iz(2, 0) + 0.5 * iz(2, 1))), 1e-12);
}

TEST(TwoSpin, HomonuclearSpectrum) {
    const auto out = pps_two_spin_homonuclear(homo());
    const auto pp = pseudo_purity(to_density(out, 1e-3));
    EXPECT_TRUE(pp.is_pps);
    EXPECT_FALSE(pp.degenerate);
    EXPECT_EQ(pp.target_index, 0);
    EXPECT_NEAR(pp.eigenvalues(2) - pp.eigenvalues(0), 0.0, 1e-12);
    EXPECT_GT(pp.eigenvalues(3) - pp.eigenvalues(2), 1e-4);
}

TEST(TwoSpin, NegativeCouplingAndFrameGiveSameState) {
    SpinSystem neg({{"I", "H", 0}, {"S", "H", 0}}, {{0, 1, -80}});
    const auto a = pps_two_spin_homonuclear(homo());
    EXPECT_LT(max_abs(pps_two_spin_homonuclear(neg).m - a.m), 1e-12);
    PrepOptions o;
    o.frame_z_rad = 0.77;
    EXPECT_LT(max_abs(pps_two_spin_homonuclear(homo(), o).m - a.m), 1e-12);
    EXPECT_LT(max_abs(pps_two_spin_heteronuclear(hetero(), o).m - pps_two_spin_heteronuclear(hetero()).m), 1e-12);
}

TEST(TwoSpin, HeteronuclearCoefficients) {
    const auto out = pps_two_spin_heteronuclear(hetero());
    const double c = std::sqrt(3.0 / 8.0);
    EXPECT_NEAR(coefficient(iz(2, 0), out.m), c, 1e-12);
    EXPECT_NEAR(coefficient(iz(2, 1), out.m), c, 1e-12);
    EXPECT_NEAR(coefficient(zz(2, 0, 1), out.m), c, 1e-12);
    EXPECT_LT(max_abs(out.m - c * (iz(2, 0) + iz(2, 1) + zz(2, 0, 1))), 1e-12);
    EXPECT_TRUE(pseudo_purity(to_density(out, 1e-3)).is_pps);
}

TEST(TwoSpin, ProportionalToGroundProjector) {
    // deviation part of |00><00|: (Iz + Sz + 2IzSz)/2
    const auto out = pps_two_spin_heteronuclear(hetero());
    Matrix p00 = Matrix::Zero(4, 4);
    p00(0, 0) = 1;
    const Matrix devp = p00 - Matrix::Identity(4, 4) / 4.0;
    EXPECT_LT(max_abs(out.m - std::sqrt(3.0 / 8.0) * 2.0 * devp), 1e-12);
}

TEST(TwoSpin, SpeciesChecks) {
    EXPECT_THROW(pps_two_spin_heteronuclear(homo()), Error);
    EXPECT_THROW(pps_two_spin_homonuclear(hetero()), Error);
    EXPECT_THROW(pps_two_spin_homonuclear(SpinSystem({{"", "H", 0}, {"", "H", 0}})), Error);
}

TEST(Crotonic, PopulationsHalve) {
    SpinSystem s({{"", "C", 1000}, {"", "C", -500}, {"", "C", 700}, {"", "C", -900}},
                 {{0, 1, 72}, {1, 2, 69}, {2, 3, 41}, {0, 2, 1.5}, {1, 3, 7}});
    const auto r = pps_crotonic_chain(s);
    const double want[] = {1, 0.5, 0.25, 0.125};
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(coefficient(iz(4, k), r.after_populations.m), want[k], 1e-12);
    EXPECT_NEAR(crotonic_population_angles_deg()[1], 75.5, 0.1);
    EXPECT_NEAR(crotonic_population_angles_deg()[2], 82.8, 0.1);
}

TEST(Crotonic, OutputIsPseudoPure) {
    SpinSystem s({{"", "C", 1000}, {"", "C", -500}, {"", "C", 700}, {"", "C", -900}},
                 {{0, 1, 72}, {1, 2, -69}, {2, 3, 41}});
    const auto r = pps_crotonic_chain(s);
    const auto pp = pseudo_purity(to_density(r.state, 1e-3));
    EXPECT_TRUE(pp.is_pps);
    EXPECT_NEAR(pp.eigenvalues(14) - pp.eigenvalues(0), 0.0, 1e-10);
    EXPECT_GT(pp.eigenvalues(15) - pp.eigenvalues(14), 1e-5);
    EXPECT_EQ(r.zq_before_crush.size(), 4u);
}

TEST(Crotonic, Topology) {
    SpinSystem s({{"", "C", 0}, {"", "C", 0}, {"", "C", 0}, {"", "C", 0}}, {{0, 1, 72}, {2, 3, 41}});
    EXPECT_THROW(pps_crotonic_chain(s), Error);
    EXPECT_THROW(pps_crotonic_chain(homo()), Error);
}

TEST(Temporal, CyclicAveragingIsPseudoPure) {
    for (int q = 2; q <= 4; ++q) {
        const auto out = temporal_pps(thermal_deviation(q));
        EXPECT_TRUE(pseudo_purity(to_density(out, 1e-3)).is_pps) << q;
        EXPECT_EQ(cyclic_population_permutations(q).size(), static_cast<std::size_t>((1 << q) - 1));
    }
    EXPECT_THROW(permutation_unitary({0, 0}), Error);
}

TEST(PseudoPurity, Cases) {
    EXPECT_TRUE(pseudo_purity({Matrix::Identity(4, 4) / 4.0, DensityState::Norm::density}).degenerate);
    Matrix pure = Matrix::Zero(4, 4);
    pure(2, 2) = 1;
    const auto pp = pseudo_purity({pure, DensityState::Norm::density});
    EXPECT_TRUE(pp.is_pps);
    EXPECT_NEAR(pp.p, 1.0, 1e-14);
    EXPECT_EQ(pp.target_index, 2);
    Matrix mixed = Matrix::Zero(4, 4);
    mixed.diagonal() << 0.4, 0.3, 0.2, 0.1;
    EXPECT_FALSE(pseudo_purity({mixed, DensityState::Norm::density}).is_pps);
    EXPECT_THROW(pseudo_purity(thermal_deviation(2)), Error);
}

TEST(PseudoPurity, SpectrumInvariantUnderUnitary) {
    std::mt19937_64 rng(2);
    const Matrix r = random_density(8, rng), u = random_unitary(8, rng);
    const auto a = pseudo_purity({r, DensityState::Norm::density});
    const auto b = pseudo_purity({u * r * u.adjoint(), DensityState::Norm::density});
    EXPECT_LT((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(PseudoPurity, Report) {
    const auto txt = spectrum_report(pps_two_spin_heteronuclear(hetero()), 1e-2);
    EXPECT_EQ(txt.rfind("eigenvalues:", 0), 0u);
    EXPECT_NE(txt.find("is_pps=1"), std::string::npos);
    EXPECT_NE(txt.find("target_index=0"), std::string::npos);
}

TEST(DensityStateType, Validation) {
    EXPECT_NO_THROW(thermal_deviation(3).validate());
    EXPECT_THROW((DensityState{Matrix::Identity(2, 2), DensityState::Norm::deviation}).validate(), Error);
    EXPECT_THROW((DensityState{Matrix::Identity(3, 3) / 3.0, DensityState::Norm::density}).validate(), Error);
    EXPECT_THROW(to_density(to_density(thermal_deviation(1), 0.1), 0.1), Error);
}
