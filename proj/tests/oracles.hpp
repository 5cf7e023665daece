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

// Reference computations used only by the tests. None of these call into the
// library's numerical paths; they take a different route to the same number.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace qje::testing {

/// <m|D(alpha)|n> for real alpha from the normal-ordered expansion
/// exp(-alpha^2/2) exp(alpha a^dag) exp(-alpha a).
inline long double displacement_amplitude_series(long double alpha, int m, int n) {
    long double sum = 0.0L;
    for (int k = 0; k <= std::min(m, n); ++k) {
        const long double log_mag = 0.5L * (std::lgamma(static_cast<long double>(m + 1)) +
                                            std::lgamma(static_cast<long double>(n + 1))) -
                                    std::lgamma(static_cast<long double>(k + 1)) -
                                    std::lgamma(static_cast<long double>(m - k + 1)) -
                                    std::lgamma(static_cast<long double>(n - k + 1));
        const int up = m - k;
        const int down = n - k;
        long double term = std::exp(log_mag);
        if (alpha == 0.0L) {
            if (up + down != 0) term = 0.0L;
        } else {
            term *= std::pow(alpha, static_cast<long double>(up + down));
            if (down % 2 == 1) term = -term;
        }
        sum += term;
    }
    return std::exp(-alpha * alpha / 2.0L) * sum;
}

/// P(m <- n) for h(theta) = a^dag a + lambda(theta)(a + a^dag), by RK4 in a
/// padded Fock basis, projected on the eigenvectors of the final Hamiltonian.
inline Eigen::MatrixXd transition_rk4(const std::function<double(double)>& lambda, double theta_total,
                                      int levels, int pad = 40, double dt_target = 1e-3) {
    using cplx = std::complex<double>;
    const int dim = levels + pad;
    const int steps = static_cast<int>(std::ceil(theta_total / dt_target));
    const double dt = theta_total / steps;
    auto apply_h = [&](double lam, const Eigen::VectorXcd& v) {
        Eigen::VectorXcd out(dim);
        for (int k = 0; k < dim; ++k) {
            cplx acc = static_cast<double>(k) * v(k);
            if (k > 0) acc += lam * std::sqrt(static_cast<double>(k)) * v(k - 1);
            if (k + 1 < dim) acc += lam * std::sqrt(static_cast<double>(k + 1)) * v(k + 1);
            out(k) = acc;
        }
        return out;
    };
    const cplx minus_i(0.0, -1.0);

    Eigen::MatrixXd final_h = Eigen::MatrixXd::Zero(dim, dim);
    const double lam_end = lambda(theta_total);
    for (int k = 0; k < dim; ++k) {
        final_h(k, k) = k;
        if (k + 1 < dim) {
            final_h(k, k + 1) = final_h(k + 1, k) = lam_end * std::sqrt(static_cast<double>(k + 1));
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(final_h);

    Eigen::MatrixXd probs(levels, levels);
    for (int n = 0; n < levels; ++n) {
        Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
        psi(n) = 1.0;
        for (int s = 0; s < steps; ++s) {
            const double t = s * dt;
            const Eigen::VectorXcd k1 = minus_i * apply_h(lambda(t), psi);
            const Eigen::VectorXcd k2 = minus_i * apply_h(lambda(t + dt / 2), psi + dt / 2 * k1);
            const Eigen::VectorXcd k3 = minus_i * apply_h(lambda(t + dt / 2), psi + dt / 2 * k2);
            const Eigen::VectorXcd k4 = minus_i * apply_h(lambda(t + dt), psi + dt * k3);
            psi += dt / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        for (int m = 0; m < levels; ++m) {
            const cplx amp = eig.eigenvectors().col(m).cast<cplx>().dot(psi);
            probs(m, n) = std::norm(amp);
        }
    }
    return probs;
}

/// Balanced birth-death evolution dp_n/ds = (n+1)p_{n+1} - (2n+1)p_n + n p_{n-1}
/// integrated with RK4 over s in [0, delta_nbar].
inline std::vector<double> heating_rk4(std::vector<double> p, double delta_nbar, int steps = 4000) {
    const std::size_t size = p.size();
    auto rhs = [size](const std::vector<double>& q) {
        std::vector<double> out(size, 0.0);
        for (std::size_t n = 0; n < size; ++n) {
            const double dn = static_cast<double>(n);
            double v = -(2.0 * dn + 1.0) * q[n];
            if (n + 1 < size) v += (dn + 1.0) * q[n + 1];
            if (n > 0) v += dn * q[n - 1];
            out[n] = v;
        }
        return out;
    };
    const double h = delta_nbar / steps;
    for (int s = 0; s < steps; ++s) {
        auto k1 = rhs(p);
        std::vector<double> tmp(size);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = p[i] + h / 2 * k1[i];
        auto k2 = rhs(tmp);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = p[i] + h / 2 * k2[i];
        auto k3 = rhs(tmp);
        for (std::size_t i = 0; i < size; ++i) tmp[i] = p[i] + h * k3[i];
        auto k4 = rhs(tmp);
        for (std::size_t i = 0; i < size; ++i) p[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return p;
}

/// Dissipated work of one classical trajectory, W + d^2 with
/// dW/dtheta = sqrt(2) lambda'(theta) x, integrated by RK4 separately on
/// each interval between `knots` so slope jumps never fall inside a step.
inline double classical_work_rk4(const std::function<double(double)>& lambda, const std::vector<double>& knots,
                                 double x0, double p0, int steps = 20000) {
    const double root2 = std::sqrt(2.0);
    const double total = knots.back() - knots.front();
    Eigen::Vector3d s(x0, p0, 0.0);
    for (std::size_t seg = 0; seg + 1 < knots.size(); ++seg) {
        const double a = knots[seg];
        const double b = knots[seg + 1];
        const double slope = (lambda(b) - lambda(a)) / (b - a);
        const int n = std::max(1, static_cast<int>(std::ceil(steps * (b - a) / total)));
        const double h = (b - a) / n;
        auto f = [&](double t, const Eigen::Vector3d& y) {
            return Eigen::Vector3d(y(1), -y(0) - root2 * (lambda(a) + slope * (t - a)), root2 * slope * y(0));
        };
        for (int k = 0; k < n; ++k) {
            const double t = a + k * h;
            const Eigen::Vector3d k1 = f(t, s);
            const Eigen::Vector3d k2 = f(t + h / 2, s + h / 2 * k1);
            const Eigen::Vector3d k3 = f(t + h / 2, s + h / 2 * k2);
            const Eigen::Vector3d k4 = f(t + h, s + h * k3);
            s += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        }
    }
    const double d = lambda(knots.back());
    return s(2) + d * d;
}

/// |<down|U|up>|^2 for H = (delta sigma_z + Omega sigma_x) / 2 with
/// Omega = omega sqrt(n) sin(pi t / T), delta = delta0 cos(pi t / T), in
/// rad/us, by RK4.
inline double two_level_transfer_rk4(int n, double pulse_us, double delta0, double omega, int steps = 200000) {
    using cplx = std::complex<double>;
    const double pi = 3.14159265358979323846;
    const double h = pulse_us / steps;
    auto f = [&](double t, const Eigen::Vector2cd& v) {
        const double del = delta0 * std::cos(pi * t / pulse_us);
        const double om = omega * std::sqrt(static_cast<double>(n)) * std::sin(pi * t / pulse_us);
        const cplx mi(0.0, -0.5);
        return Eigen::Vector2cd(mi * (del * v(0) + om * v(1)), mi * (om * v(0) - del * v(1)));
    };
    Eigen::Vector2cd v(1.0, 0.0);
    for (int k = 0; k < steps; ++k) {
        const double t = k * h;
        const Eigen::Vector2cd k1 = f(t, v);
        const Eigen::Vector2cd k2 = f(t + h / 2, v + h / 2 * k1);
        const Eigen::Vector2cd k3 = f(t + h / 2, v + h / 2 * k2);
        const Eigen::Vector2cd k4 = f(t + h, v + h * k3);
        v += h / 6 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return std::norm(v(1));
}

/// Report distribution of the iterated subtraction readout without heating
/// or subtraction errors: true n reported as j.
inline double readout_probability(int j, int n, double eps_dark, double eps_bright) {
    if (j < n) return std::pow(1.0 - eps_dark, j) * eps_dark;
    return std::pow(1.0 - eps_dark, n) * std::pow(eps_bright, j - n) * (1.0 - eps_bright);
}

}  // namespace qje::testing
