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

#include "spinforge/dd.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spinforge;

namespace {

// Quadrature oracle: composite Simpson on each window between pulses.
double numeric_phase(const Poly& p, const std::vector<double>& times, int n = 64) {
    auto delta = [&](double x) {
        double v = 0.0, xp = 1.0;
        for (double c : p) v += c * xp, xp *= x;
        return v;
    };
    std::vector<double> edges{0.0};
    edges.insert(edges.end(), times.begin(), times.end());
    edges.push_back(1.0);
    double acc = 0.0;
    for (std::size_t w = 0; w + 1 < edges.size(); ++w) {
        const double a = edges[w], h = (edges[w + 1] - a) / (2 * n);
        double s = delta(a) + delta(edges[w + 1]);
        for (int i = 1; i < 2 * n; ++i) s += (i % 2 ? 4 : 2) * delta(a + i * h);
        acc += (w % 2 ? -1 : 1) * s * h / 3;
    }
    return acc;
}

} // namespace

TEST(Udd, Times) {
    const auto t2 = udd_times(2, 1.0);
    EXPECT_DOUBLE_EQ(t2[0], 0.25);
    EXPECT_DOUBLE_EQ(t2[1], 0.75);
    EXPECT_NEAR(udd_times(1, 2.0)[0], 1.0, 1e-15);
    const auto t4 = udd_times(4, 1.0);
    const double want[] = {0.0955, 0.3455, 0.6545, 0.9045};
    for (int k = 0; k < 4; ++k) EXPECT_NEAR(t4[k], want[k], 5e-5);
    EXPECT_NEAR(2 * t4[0], 0.191, 0.001);
    EXPECT_THROW(udd_times(0, 1.0), Error);
}

TEST(Build, PeriodicLayouts) {
    const auto c = build_sequence(DDKind::cpmg, 4);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(c.pulses[k].time, (2 * k + 1) / 8.0);
    const auto x = build_sequence(DDKind::xy4, 4);
    EXPECT_EQ((std::vector<double>{x.pulses[0].phase_deg, x.pulses[1].phase_deg, x.pulses[2].phase_deg,
                                   x.pulses[3].phase_deg}),
              (std::vector<double>{0, 90, 0, 90}));
    const auto x8 = build_sequence(DDKind::xy8, 8);
    const double p8[] = {0, 90, 0, 90, 90, 0, 90, 0};
    for (int k = 0; k < 8; ++k) EXPECT_EQ(x8.pulses[k].phase_deg, p8[k]);
    EXPECT_EQ(build_sequence(DDKind::kdd20, 20).pulses.size(), 20u);
    EXPECT_THROW(build_sequence(DDKind::xy4, 6), Error);
    EXPECT_THROW(build_sequence(DDKind::kdd20, 10), Error);
    EXPECT_THROW(build_sequence(DDKind::cpmg, 3), Error);
}

TEST(Build, KddRestoresOnlyAtCycleEnd) {
    const auto s = build_sequence(DDKind::kdd20, 20);
    for (int n = 1; n < 20; ++n) {
        SU2 u;
        for (int k = 0; k < n; ++k) u = pulse_su2(180, s.pulses[k].phase_deg, 0, 0) * u;
        EXPECT_LT(cardinal_average_fidelity(Matrix::Identity(2, 2), u.matrix()), 1 - 1e-6) << n;
    }
    EXPECT_NEAR(memory_fidelity(s, 1, 0, 0), 1.0, 1e-12);
}

TEST(Memory, IdealPulsesPreserveState) {
    for (auto k : {DDKind::cpmg, DDKind::xy4, DDKind::xy8, DDKind::kdd20})
        EXPECT_NEAR(memory_fidelity(sequence_for_echoes(k, 180), 0, 0), 1.0, 1e-12);
    EXPECT_NEAR(memory_fidelity(sequence_for_echoes(DDKind::kdd20, 180, KddMode::composite), 0, 0), 1.0, 1e-12);
}

TEST(Memory, Ordering) {
    const double c = 1 - memory_fidelity(sequence_for_echoes(DDKind::cpmg, 180), 0.05, 0.05);
    const double x = 1 - memory_fidelity(sequence_for_echoes(DDKind::xy4, 180), 0.05, 0.05);
    const double k = 1 - memory_fidelity(sequence_for_echoes(DDKind::kdd20, 180), 0.05, 0.05);
    EXPECT_GT(c, x);
    EXPECT_GT(x, k);
}

TEST(Memory, CpmgAlongPulseAxisIsFourthOrder) {
    // joint amplitude and offset error eps = f = d
    const auto s = build_sequence(DDKind::cpmg, 2);
    const double r = 1 / std::sqrt(2.0);
    CVector px(2), py(2);
    px << r, r;
    py << r, cplx(0, r);
    auto order = [&](int n, const CVector& psi) {
        auto err = [&](double d) { return 1 - state_memory_fidelity(s, n, psi, d, d); };
        return std::log(err(1e-2) / err(5e-3)) / std::log(2.0);
    };
    EXPECT_NEAR(order(1, px), 2.0, 0.05);
    EXPECT_NEAR(order(2, px), 4.0, 0.05);
    EXPECT_NEAR(order(2, py), 2.0, 0.05);
}

TEST(Memory, CombinedModeReducesToPulseOnly) {
    const auto s = sequence_for_echoes(DDKind::xy4, 40);
    EXPECT_NEAR(combined_memory_fidelity(s, 0.03, 0.02, {0.0}, 0, 1), memory_fidelity(s, 0.03, 0.02), 1e-12);
    EXPECT_NEAR(combined_memory_fidelity(s, 0, 0, {1.0}, 50.0, 1.0), 1.0, 1e-12);
}

TEST(Phase, MatchesNumericOracle) {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 5; ++t) {
        Poly p{u(rng), u(rng), u(rng), u(rng)};
        const auto times = udd_times(3);
        EXPECT_NEAR(accumulated_phase(p, times, 1.0), numeric_phase(p, times), 1e-14);
    }
}

TEST(Phase, LegendreRefocusing) {
    const auto udd = udd_times(4, 1.0), per = build_sequence(DDKind::cpmg, 4).times(1.0);
    const double scale = std::abs(accumulated_phase(shifted_legendre(0), {}, 1.0));
    EXPECT_NEAR(scale, 1.0, 1e-15);
    for (int n : {0, 1}) {
        EXPECT_LE(std::abs(accumulated_phase(shifted_legendre(n), udd, 1.0)), 1e-12 * scale);
        EXPECT_LE(std::abs(accumulated_phase(shifted_legendre(n), per, 1.0)), 1e-12 * scale);
    }
    EXPECT_LE(std::abs(accumulated_phase(shifted_legendre(2), udd, 1.0)), 1e-12 * scale);
    EXPECT_GE(std::abs(accumulated_phase(shifted_legendre(2), per, 1.0)), 1e-3 * scale);
    EXPECT_THROW(shifted_legendre(3), Error);
}

TEST(Phase, UddSuppressesLowMonomials) {
    for (int n = 1; n <= 8; ++n) {
        const auto t = udd_times(n);
        for (int k = 0; k < n; ++k) {
            Poly mono(k + 1, 0.0);
            mono[k] = 1.0;
            EXPECT_LE(std::abs(accumulated_phase(mono, t, 1.0)), 1e-10) << n << " " << k;
        }
    }
}

TEST(Phase, SymmetricPatternsKillOddMonomials) {
    // odd about the centre: (x - 1/2)^3
    const Poly odd{-0.125, 0.75, -1.5, 1.0};
    for (int n : {2, 4, 6}) EXPECT_NEAR(accumulated_phase(odd, build_sequence(DDKind::cpmg, n).times(), 1.0), 0, 1e-15);
}

TEST(Phase, CompositeUddKeepsConstantRefocused) {
    const auto t = udd_times(4, 1.0);
    for (const auto& n : {"knill", "tycko_b1", "nine"}) {
        const int sub = static_cast<int>(catalog(n).size());
        EXPECT_LE(std::abs(accumulated_phase({1.0}, composite_flip_times(t, sub, 0.005), 1.0)), 1e-12) << n;
    }
}

TEST(Phase, TimesValidated) {
    EXPECT_THROW(accumulated_phase({1.0}, {1.5}, 1.0), Error);
    EXPECT_THROW(accumulated_phase({1.0}, {0.5}, 0.0), Error);
}
