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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "dynamics.hpp"
#include "errors.hpp"
#include "oracles.hpp"

using namespace qje;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::Internal;
}

double max_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, int rows, int cols) {
    return (a.topLeftCorner(rows, cols) - b.topLeftCorner(rows, cols)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("ramp durations in units of the trap period") {
    CHECK(ramp_theta(20000.0, 5.0) == doctest::Approx(0.6283185307179586).epsilon(1e-14));
    CHECK(ramp_theta(20000.0, 45.0) == doctest::Approx(5.654866776461628).epsilon(1e-14));
}

TEST_CASE("residual amplitude of the linear ramp") {
    const double d = 0.9317;
    // |alpha|^2 at 5, 25 and 45 us.
    CHECK(std::pow(residual_amplitude(RampProtocol::linear(d, ramp_theta(2e4, 5))), 2) ==
          doctest::Approx(0.8398798727509383).epsilon(1e-12));
    CHECK(std::pow(residual_amplitude(RampProtocol::linear(d, ramp_theta(2e4, 25))), 2) ==
          doctest::Approx(4 * d * d / (std::numbers::pi * std::numbers::pi)).epsilon(1e-12));
    CHECK(std::pow(residual_amplitude(RampProtocol::linear(d, ramp_theta(2e4, 45))), 2) ==
          doctest::Approx(0.01036888731791286).epsilon(1e-10));
    CHECK(residual_amplitude(RampProtocol::linear(d, 2 * std::numbers::pi)) < 1e-15);
}

TEST_CASE("tabulated ramp with collinear knots reproduces the linear drive integral") {
    const double theta = 3.7;
    const auto lin = RampProtocol::linear(0.8, theta);
    const auto tab = RampProtocol::tabulated({0.0, 1.0, 2.5, theta}, {0.0, 0.8 / theta, 2.0 / theta, 0.8});
    const auto a = drive_integral(lin);
    const auto b = drive_integral(tab);
    CHECK(a.cos_part == doctest::Approx(b.cos_part).epsilon(1e-12));
    CHECK(a.sin_part == doctest::Approx(b.sin_part).epsilon(1e-12));
}

TEST_CASE("ramp table validation and parsing") {
    CHECK(code_of([] { RampProtocol::tabulated({0.1, 1.0}, {0.0, 1.0}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { RampProtocol::tabulated({0.0, 1.0, 1.0}, {0.0, 0.5, 1.0}); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { RampProtocol::linear(1.0, 0.0); }) == ErrorCode::Domain);
    std::istringstream in("# theta lambda\n0 0\n0.5 0.2  # knee\n\n2.0 1.0\n");
    const auto p = RampProtocol::read_table(in);
    CHECK(p.shape() == RampShape::Tabulated);
    CHECK(p.knots().size() == 3);
    CHECK(p.lambda(1.25) == doctest::Approx(0.6));
    CHECK(p.peak() == 1.0);
}

TEST_CASE("analytic transition matrix matches RK4 propagation in a padded basis") {
    for (double theta : {0.62832, std::numbers::pi, 5.65487}) {
        const auto protocol = RampProtocol::linear(0.9317, theta);
        const auto tm = transition_matrix_analytic(protocol, 48);
        const Eigen::MatrixXd ref = testing::transition_rk4([&](double t) { return protocol.lambda(t); }, theta, 12);
        CHECK(max_diff(tm.probs, ref, 12, 12) < 1e-8);
        CHECK(tm.delta_f_over_hnu == doctest::Approx(-0.9317 * 0.9317));
    }
}

TEST_CASE("numeric propagator agrees with the closed form") {
    const auto protocol = RampProtocol::linear(0.9317, ramp_theta(2e4, 25));
    const auto a = transition_matrix_analytic(protocol, 64);
    const auto b = transition_matrix_numeric(protocol, 64, 200);
    CHECK(max_diff(a.probs, b.probs, 64, 33) < 1e-8);
    CHECK(b.alpha_res_abs == doctest::Approx(a.alpha_res_abs).epsilon(1e-6));
}

TEST_CASE("numeric propagator on a kinked tabulated ramp matches RK4") {
    const auto protocol = RampProtocol::tabulated({0.0, 0.7, 1.5, 2.4}, {0.0, 0.6, 0.5, 1.1});
    const auto b = transition_matrix_numeric(protocol, 64, 200);
    const Eigen::MatrixXd ref = testing::transition_rk4([&](double t) { return protocol.lambda(t); }, 2.4, 10);
    CHECK(max_diff(b.probs, ref, 10, 10) < 1e-7);
    const auto a = transition_matrix_analytic(protocol, 64);
    CHECK(max_diff(a.probs, ref, 10, 10) < 1e-8);
}

TEST_CASE("numeric propagator flags an undersized basis") {
    CHECK(code_of([] { transition_matrix_numeric(RampProtocol::linear(3.0, 0.5), 12, 100); }) ==
          ErrorCode::TruncationInsufficient);
}

TEST_CASE("heating matches direct integration of the rate equations") {
    const std::size_t n_trunc = 48;
    for (std::size_t n0 : {std::size_t{0}, std::size_t{2}, std::size_t{5}}) {
        PhononDistribution start = PhononDistribution::fock(n0, n_trunc);
        const auto heated = apply_heating(start, HeatingModel{0.157, 0.3});
        const auto ref = testing::heating_rk4(start.probs, 0.157 * 0.3);
        for (std::size_t n = 0; n < 20; ++n) CHECK(heated.probs[n] == doctest::Approx(ref[n]).epsilon(1e-10).scale(1.0));
        CHECK(heated.mean() == doctest::Approx(n0 + 0.157 * 0.3).epsilon(1e-10));
    }
}

TEST_CASE("heating keeps a thermal state thermal") {
    const auto heated = apply_heating(thermal_distribution(0.157, 96), HeatingModel{0.5, 0.1});
    const auto expected = thermal_distribution(0.207, 96);
    for (std::size_t n = 0; n < 30; ++n) CHECK(heated.probs[n] == doctest::Approx(expected.probs[n]).epsilon(1e-10));
    const auto same = apply_heating(thermal_distribution(0.157, 96), HeatingModel{0.5, 0.0});
    CHECK(same.probs == thermal_distribution(0.157, 96).probs);
    CHECK(code_of([] { apply_heating(thermal_distribution(0.1, 16), HeatingModel{-1.0, 1.0}); }) == ErrorCode::Domain);
}

TEST_CASE("heated transition matrix heats every column") {
    const auto protocol = RampProtocol::linear(0.9317, 2.0);
    const auto tm = transition_matrix_analytic(protocol, 40);
    const auto heated = apply_heating(tm, HeatingModel{1.0, 0.02});
    for (int n : {0, 3}) {
        std::vector<double> col(40);
        for (int m = 0; m < 40; ++m) col[m] = tm.probs(m, n);
        const auto ref = testing::heating_rk4(col, 0.02);
        for (int m = 0; m < 15; ++m) CHECK(heated.probs(m, n) == doctest::Approx(ref[m]).epsilon(1e-10).scale(1.0));
    }
}

}
