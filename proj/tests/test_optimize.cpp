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

#include "spinforge/optimize.hpp"

#include <gtest/gtest.h>

using namespace spinforge;

namespace {

double rosenbrock(const RVector& x, RVector* g) {
    const double a = 1 - x(0), b = x(1) - x(0) * x(0);
    if (g) {
        g->resize(2);
        (*g)(0) = -2 * a - 400 * x(0) * b;
        (*g)(1) = 200 * b;
    }
    return a * a + 100 * b * b;
}

double bowl(const RVector& x, RVector* g) {
    RVector w(x.size());
    for (long i = 0; i < x.size(); ++i) w(i) = 1.0 + i;
    if (g) *g = 2.0 * w.cwiseProduct(x - RVector::Ones(x.size()));
    return w.dot((x - RVector::Ones(x.size())).cwiseAbs2());
}

} // namespace

TEST(Minimize, BfgsSolvesRosenbrock) {
    MinimizeOptions o;
    o.max_iter = 500;
    RVector x0(2);
    x0 << -1.2, 1.0;
    const auto r = minimize(rosenbrock, x0, o);
    EXPECT_TRUE(r.converged) << r.reason;
    EXPECT_NEAR(r.x(0), 1.0, 1e-5);
    EXPECT_NEAR(r.x(1), 1.0, 1e-5);
}

TEST(Minimize, SteepestDescentOnBowl) {
    MinimizeOptions o;
    o.method = Method::steepest;
    o.max_iter = 5000;
    o.grad_tol = 1e-8;
    const auto r = minimize(bowl, RVector::Zero(4), o);
    EXPECT_TRUE(r.converged) << r.reason;
    EXPECT_LT((r.x - RVector::Ones(4)).norm(), 1e-7);
}

TEST(Minimize, TraceIsMonotone) {
    MinimizeOptions o;
    RVector x0(2);
    x0 << -1.2, 1.0;
    for (auto m : {Method::bfgs, Method::steepest}) {
        o.method = m;
        o.max_iter = 200;
        const auto r = minimize(rosenbrock, x0, o);
        for (std::size_t i = 1; i < r.trace.size(); ++i) EXPECT_LE(r.trace[i], r.trace[i - 1]);
    }
}

TEST(Minimize, StopsAtGoal) {
    MinimizeOptions o;
    o.f_goal = 1e-2;
    const auto r = minimize(bowl, RVector::Zero(3), o);
    EXPECT_EQ(r.reason, "goal");
    EXPECT_LE(r.f, 1e-2);
}

TEST(Minimize, IterationCap) {
    MinimizeOptions o;
    o.method = Method::steepest;
    o.max_iter = 3;
    RVector x0(2);
    x0 << -1.2, 1.0;
    const auto r = minimize(rosenbrock, x0, o);
    EXPECT_EQ(r.reason, "max_iter");
    EXPECT_EQ(r.iterations, 3);
}

TEST(Minimize, ProjectionIsApplied) {
    MinimizeOptions o;
    auto clip = [](RVector& x) { x = x.cwiseMin(0.5); };
    const auto r = minimize(bowl, RVector::Zero(2), o, clip);
    EXPECT_LE(r.x.maxCoeff(), 0.5);
    EXPECT_NEAR(r.x(0), 0.5, 1e-6);
}

TEST(Minimize, NonFiniteStartRejected) {
    auto bad = [](const RVector&, RVector* g) {
        if (g) g->setZero(1);
        return std::nan("");
    };
    EXPECT_THROW(minimize(bad, RVector::Zero(1), {}), Error);
}
