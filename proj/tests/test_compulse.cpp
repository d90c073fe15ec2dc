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

#include "spinforge/compulse.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace spinforge;

namespace {

// Quaternion oracle: rotation by angle w about unit axis n.
struct Quat {
    double w, x, y, z;
    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
    }
};

Quat pulse_quat(double flip_deg, double phase_deg, double eps, double f) {
    const double phi = deg2rad(phase_deg);
    double nx = (1 + eps) * std::cos(phi), ny = (1 + eps) * std::sin(phi), nz = f;
    const double w = std::sqrt(nx * nx + ny * ny + nz * nz);
    const double ang = deg2rad(flip_deg) * w;
    return {std::cos(ang / 2), std::sin(ang / 2) * nx / w, std::sin(ang / 2) * ny / w, std::sin(ang / 2) * nz / w};
}

// fidelity against X = rotation by pi about x: |<q, (0,1,0,0)>|^2
double quat_infidelity_vs_x(const std::vector<double>& phases, double eps, double f) {
    Quat q{1, 0, 0, 0};
    for (double p : phases) q = pulse_quat(180, p, eps, f) * q;
    return 1 - q.x * q.x;
}

} // namespace

TEST(Pulse, IdealIsExpIPiIx) {
    const Matrix u = pulse_su2(180, 0, 0, 0).matrix();
    Matrix want(2, 2);
    want << 0, cplx(0, -1), cplx(0, -1), 0;
    EXPECT_LT(max_abs(u - want), 1e-15);
}

TEST(Pulse, AmplitudeErrorOverRotates) {
    // 198 degrees about x
    const SU2 u = pulse_su2(180, 0, 0.1, 0);
    EXPECT_NEAR(2 * std::acos(u.a.real()), deg2rad(198), 1e-12);
    EXPECT_NEAR(u.a.imag(), 0, 1e-15);
    EXPECT_NEAR(u.b.real(), 0, 1e-15);
}

TEST(Pulse, OffResonanceMatchesQuaternion) {
    for (double f : {0.1, -0.07, 0.3})
        EXPECT_NEAR(composite_infidelity(catalog("plain"), 0, f), quat_infidelity_vs_x({0}, 0, f), 1e-14);
}

TEST(Catalog, PhasesFromTables) {
    EXPECT_EQ(catalog("knill").phases_deg, (std::vector<double>{240, 210, 300, 210, 240}));
    EXPECT_EQ(catalog("tycko_b1").phases_deg, (std::vector<double>{120, 240, 120}));
    EXPECT_EQ(catalog("tycko_offres").phases_deg, (std::vector<double>{60, 120, 60}));
    EXPECT_NEAR(nine_alpha_deg(), -77.9, 0.05);
    EXPECT_NEAR(nine_beta_deg(), -20.6, 0.05);
    EXPECT_EQ(catalog("nine").size(), 9u);
    EXPECT_THROW(catalog("bb1"), Error);
}

TEST(Catalog, ExactWithoutErrors) {
    for (const auto& n : catalog_names()) EXPECT_LE(composite_infidelity(catalog(n), 0, 0), 1e-12) << n;
}

TEST(Catalog, MatchesQuaternionOracleOnGrid) {
    for (const auto& n : catalog_names())
        for (double e : {-0.1, -0.03, 0.0, 0.05})
            for (double f : {-0.1, 0.02, 0.05})
                EXPECT_NEAR(composite_infidelity(catalog(n), e, f), quat_infidelity_vs_x(catalog(n).phases_deg, e, f),
                            1e-12)
                    << n;
}

TEST(Catalog, NineAtLeastAsGoodAsKnill) {
    EXPECT_LE(composite_infidelity(catalog("nine"), 0.05, 0.05), composite_infidelity(catalog("knill"), 0.05, 0.05));
}

TEST(Catalog, KnillBeatsPlainAtCorner) {
    EXPECT_LT(composite_infidelity(catalog("knill"), 0.05, 0.05), composite_infidelity(catalog("plain"), 0.05, 0.05));
}

TEST(Catalog, KnillSuppressesAmplitudeErrorToHigherOrder) {
    auto exponent = [](const std::string& n) {
        const double a = composite_infidelity(catalog(n), 1e-2, 0), b = composite_infidelity(catalog(n), 5e-3, 0);
        return std::log(a / b) / std::log(2.0);
    };
    EXPECT_NEAR(exponent("plain"), 2.0, 0.05);
    EXPECT_GE(exponent("knill"), 4.0 - 0.05);
}

TEST(Catalog, PalindromeEqualsReversed) {
    for (const auto& n : catalog_names()) {
        auto p = catalog(n), r = p;
        std::reverse(r.phases_deg.begin(), r.phases_deg.end());
        EXPECT_LT(max_abs(composite_su2(p, 0.04, -0.06).matrix() - composite_su2(r, 0.04, -0.06).matrix()), 1e-12) << n;
    }
}

TEST(Catalog, SubPulseOneActsFirst) {
    CompositePulse p;
    p.flips_deg = {90, 90};
    p.phases_deg = {0, 90};
    const Matrix want = pulse_su2(90, 90, 0, 0).matrix() * pulse_su2(90, 0, 0, 0).matrix();
    EXPECT_LT(max_abs(composite_propagator(p, 0, 0).matrix() - want), 1e-15);
}

TEST(ErrorMap, OriginExactAndKnillSymmetricInF) {
    const auto m = error_map(catalog("knill"), 0.1, 41);
    ASSERT_EQ(m.eps.size(), 41u);
    EXPECT_LE(m.at(20, 20), 1e-12);
    for (std::size_t i = 0; i < 41; ++i)
        for (std::size_t j = 0; j < 41; ++j) EXPECT_NEAR(m.at(i, j), m.at(i, 40 - j), 1e-12);
}

TEST(ErrorMap, CsvLayout) {
    const auto m = error_map(catalog("plain"), 0.1, 3);
    std::ostringstream os;
    write_error_map_csv(os, m, 42);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line.rfind("# spinforge", 0), 0u);
    std::getline(is, line);
    EXPECT_EQ(line, "eps,f,infidelity");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    EXPECT_EQ(rows, 9);
    EXPECT_THROW(error_map(catalog("plain"), 0.1, 0), Error);
}

TEST(ZRotation, PairsGiveZRotations) {
    auto fid = [](const Matrix& a, const Matrix& b) { return unitary_fidelity(a, b); };
    EXPECT_NEAR(fid(z_rotation_pair(30, 30).matrix(), Matrix::Identity(2, 2)), 1, 1e-14);
    EXPECT_LT(max_abs(z_rotation_pair(30, 30).matrix() + Matrix::Identity(2, 2)), 1e-14);  // spinor sign
    EXPECT_NEAR(fid(z_rotation_pair(0, 90).matrix(), rz(kPi)), 1, 1e-14);
    EXPECT_NEAR(fid(z_rotation_pair(0, 45).matrix(), rz(kPi / 2)), 1, 1e-14);
}
