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

#include <limits>

namespace spinforge {

/// Returns f(x); fills *grad when non-null.
using Objective = std::function<double(const RVector& x, RVector* grad)>;
/// Maps a trial point onto the feasible set in place.
using Projection = std::function<void(RVector& x)>;

enum class Method { steepest, bfgs };

struct MinimizeOptions {
    Method method = Method::bfgs;
    int max_iter = 2000;
    double f_goal = -std::numeric_limits<double>::infinity();
    double grad_tol = 1e-10;
    double armijo_c1 = 1e-4;
    double contraction = 0.5;
    double initial_step = 0.1;  // largest first move in any coordinate
    double min_step = 1e-14;
};

struct MinimizeResult {
    RVector x;
    double f = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    std::string reason;
    std::vector<double> trace;  // f after each accepted step, starting with f(x0)
};

/// Line-search descent. Steepest descent starts each search from a step whose
/// largest component is `initial_step` (scaled by 1/|g|_inf) and grows it
/// after success. BFGS keeps an inverse Hessian estimate and tries the full
/// quasi-Newton step first. Both use Armijo backtracking.
inline MinimizeResult minimize(const Objective& fn, RVector x, const MinimizeOptions& opt,
                               const Projection& project = nullptr) {
    MinimizeResult res;
    const long n = x.size();
    if (project) project(x);
    RVector g(n);
    double f = fn(x, &g);
    ++res.evaluations;
    if (!std::isfinite(f)) throw Error("objective is not finite at the starting point");
    res.trace.push_back(f);

    Eigen::MatrixXd Hinv;
    bool h_init = false, just_reset = false;
    double sd_scale = opt.initial_step;

    for (int it = 0;; ++it) {
        if (f <= opt.f_goal) {
            res.converged = true;
            res.reason = "goal";
            break;
        }
        if (g.norm() <= opt.grad_tol) {
            res.converged = true;
            res.reason = "gradient";
            break;
        }
        if (it >= opt.max_iter) {
            res.reason = "max_iter";
            break;
        }
        const double ginf = g.cwiseAbs().maxCoeff();
        RVector d;
        double alpha = 1.0;
        if (opt.method == Method::bfgs) {
            if (!h_init) {
                Hinv = Eigen::MatrixXd::Identity(n, n) * (opt.initial_step / ginf);
                h_init = true;
                just_reset = true;
            }
            d = -Hinv * g;
            if (d.dot(g) >= 0) {  // lost positive definiteness
                Hinv = Eigen::MatrixXd::Identity(n, n) * (opt.initial_step / ginf);
                d = -Hinv * g;
            }
        } else {
            d = -g;
            alpha = sd_scale / ginf;
        }

        RVector xn(n), gn(n);
        double fn_val = f;
        bool accepted = false;
        for (;;) {
            xn = x + alpha * d;
            if (project) project(xn);
            fn_val = fn(xn, &gn);
            ++res.evaluations;
            const double decrease = opt.armijo_c1 * g.dot(xn - x);
            if (std::isfinite(fn_val) && fn_val <= f + decrease && fn_val <= f) {
                accepted = true;
                break;
            }
            alpha *= opt.contraction;
            if (alpha * d.cwiseAbs().maxCoeff() < opt.min_step) break;
        }
        if (!accepted) {
            if (opt.method == Method::bfgs && !just_reset) {
                // retry once along the gradient before giving up
                h_init = false;
                continue;
            }
            res.reason = "line_search";
            break;
        }
        res.iterations = it + 1;
        const bool first_update = just_reset;
        just_reset = false;

        if (opt.method == Method::bfgs) {
            const RVector s = xn - x, y = gn - g;
            const double sy = s.dot(y);
            if (sy > 1e-300) {
                if (first_update) Hinv = Eigen::MatrixXd::Identity(n, n) * (sy / y.squaredNorm());
                const RVector hy = Hinv * y;
                const double rho = 1.0 / sy;
                Hinv += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) -
                        rho * (hy * s.transpose() + s * hy.transpose());
            }
        } else {
            sd_scale = std::min(1.0, 2.0 * alpha * ginf);
        }
        x = std::move(xn);
        g = std::move(gn);
        f = fn_val;
        res.trace.push_back(f);
    }
    res.x = std::move(x);
    res.f = f;
    return res;
}

} // namespace spinforge
