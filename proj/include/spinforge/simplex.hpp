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

namespace spinforge {

struct LPResult {
    enum class Status { optimal, infeasible, unbounded } status = Status::infeasible;
    RVector x;
    double objective = 0.0;
    int violated_row = -1;  // infeasible: a constraint that could not be met
};

namespace detail {

class Tableau {
public:
    Tableau(long m, long ncols) : T(Eigen::MatrixXd::Zero(m + 1, ncols + 1)), basis(m, -1) {}

    Eigen::MatrixXd T;  // rows 0..m-1 constraints, row m reduced costs; last column rhs
    std::vector<long> basis;

    long m() const { return T.rows() - 1; }
    long rhs() const { return T.cols() - 1; }

    void pivot(long r, long c) {
        T.row(r) /= T(r, c);
        for (long i = 0; i < T.rows(); ++i)
            if (i != r && T(i, c) != 0.0) T.row(i) -= T(i, c) * T.row(r);
        basis[r] = c;
    }

    /// Bland's rule iterations; columns >= allowed are never entered.
    LPResult::Status run(long allowed, double tol) {
        for (long guard = 0; guard < 100000; ++guard) {
            long enter = -1;
            for (long j = 0; j < allowed; ++j)
                if (T(m(), j) < -tol) {
                    enter = j;
                    break;
                }
            if (enter < 0) return LPResult::Status::optimal;
            long leave = -1;
            double best = 0.0;
            for (long i = 0; i < m(); ++i) {
                if (T(i, enter) <= tol) continue;
                const double ratio = T(i, rhs()) / T(i, enter);
                if (leave < 0 || ratio < best - 1e-15 || (std::abs(ratio - best) <= 1e-15 && basis[i] < basis[leave])) {
                    leave = i;
                    best = ratio;
                }
            }
            if (leave < 0) return LPResult::Status::unbounded;
            pivot(leave, enter);
        }
        throw Error("simplex: iteration limit");
    }
};

} // namespace detail

/// min c.x subject to A x = b, x >= 0. Dense two-phase primal simplex with
/// Bland's anti-cycling rule.
inline LPResult simplex_solve(Eigen::MatrixXd A, RVector b, const RVector& c, double tol = 1e-9) {
    const long m = A.rows(), n = A.cols();
    if (b.size() != m || c.size() != n) throw Error("simplex: dimension mismatch");
    for (long i = 0; i < m; ++i)
        if (b(i) < 0) {
            A.row(i) *= -1.0;
            b(i) *= -1.0;
        }
    detail::Tableau tab(m, n + m);
    tab.T.topLeftCorner(m, n) = A;
    tab.T.block(0, n, m, m).setIdentity();
    tab.T.col(n + m).head(m) = b;
    for (long i = 0; i < m; ++i) tab.basis[i] = n + i;
    // phase 1 costs: sum of artificials, expressed in the nonbasic columns
    for (long i = 0; i < m; ++i) tab.T.row(m) -= tab.T.row(i);
    tab.T.block(m, n, 1, m).setZero();

    LPResult res;
    const double scale = 1.0 + b.cwiseAbs().sum();
    tab.run(n + m, tol);
    if (-tab.T(m, n + m) > tol * scale) {
        res.status = LPResult::Status::infeasible;
        double worst = 0.0;
        for (long i = 0; i < m; ++i)
            if (tab.basis[i] >= n && tab.T(i, n + m) > worst) {
                worst = tab.T(i, n + m);
                res.violated_row = static_cast<int>(tab.basis[i] - n);
            }
        return res;
    }
    // drive remaining artificials out of the basis
    for (long i = 0; i < m; ++i) {
        if (tab.basis[i] < n) continue;
        for (long j = 0; j < n; ++j)
            if (std::abs(tab.T(i, j)) > tol) {
                tab.pivot(i, j);
                break;
            }
    }
    // phase 2 costs
    tab.T.row(m).setZero();
    tab.T.row(m).head(n) = c.transpose();
    for (long i = 0; i < m; ++i) {
        const long bj = tab.basis[i];
        if (bj < n && c(bj) != 0.0) tab.T.row(m) -= c(bj) * tab.T.row(i);
    }
    // artificial rows that stayed basic are redundant; their columns are barred
    const auto st = tab.run(n, tol);
    if (st == LPResult::Status::unbounded) {
        res.status = st;
        return res;
    }
    res.status = LPResult::Status::optimal;
    res.x = RVector::Zero(n);
    for (long i = 0; i < m; ++i)
        if (tab.basis[i] < n) res.x(tab.basis[i]) = std::max(0.0, tab.T(i, n + m));
    res.objective = c.dot(res.x);
    return res;
}

} // namespace spinforge
