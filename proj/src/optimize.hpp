// Copyright 2026 The qje Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied. See the License for the specific language governing
// permissions and limitations under the License.

#pragma once

// Unconstrained quasi-Newton minimization (BFGS with backtracking line
// search) for the small smooth problems in the likelihood fits.

#include <cmath>
#include <functional>

#include <Eigen/Dense>

namespace qje::optimize {

/// Returns f(x) and writes the gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BfgsOptions {
    int max_iterations = 2000;
    double gradient_tolerance = 1e-10;
    double value_tolerance = 1e-15;  ///< relative change over one iteration
};

struct BfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

inline BfgsResult minimize_bfgs(const Objective& f, Eigen::VectorXd x, const BfgsOptions& opt = {}) {
    const Eigen::Index n = x.size();
    Eigen::VectorXd g(n);
    double fx = f(x, g);
    Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g_new(n);
    BfgsResult res;
    int stalls = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        res.iterations = it + 1;
        if (g.lpNorm<Eigen::Infinity>() <= opt.gradient_tolerance) {
            res.converged = true;
            break;
        }
        Eigen::VectorXd dir = -h_inv * g;
        double slope = g.dot(dir);
        if (!(slope < 0.0)) {
            h_inv.setIdentity();
            dir = -g;
            slope = -g.squaredNorm();
        }
        double step = 1.0;
        Eigen::VectorXd x_new = x;
        double f_new = fx;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + step * dir;
            f_new = f(x_new, g_new);
            if (std::isfinite(f_new) && f_new <= fx + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // Line search exhausted: restart from steepest descent once.
            if (h_inv.isIdentity()) {
                res.converged = true;
                break;
            }
            h_inv.setIdentity();
            continue;
        }
        const Eigen::VectorXd s = x_new - x;
        const Eigen::VectorXd y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-300) {
            if (it == 0) h_inv *= sy / y.squaredNorm();
            const double rho = 1.0 / sy;
            const Eigen::VectorXd hy = h_inv * y;
            h_inv += ((sy + y.dot(hy)) * rho * rho) * (s * s.transpose()) -
                     rho * (hy * s.transpose() + s * hy.transpose());
        }
        const double change = std::abs(fx - f_new);
        x = std::move(x_new);
        g = g_new;
        fx = f_new;
        if (change <= opt.value_tolerance * std::max(1.0, std::abs(fx))) {
            if (++stalls >= 5) {
                res.converged = true;
                break;
            }
        } else {
            stalls = 0;
        }
    }
    res.x = std::move(x);
    res.value = fx;
    return res;
}

}  // namespace qje::optimize
