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

#include "dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <istream>
#include <sstream>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "errors.hpp"

namespace qje {

RampProtocol RampProtocol::linear(double peak, double theta_total) {
    if (!(peak >= 0.0) || !std::isfinite(peak)) raise(ErrorCode::Domain, "ramp peak must be >= 0");
    if (!(theta_total > 0.0) || !std::isfinite(theta_total)) {
        raise(ErrorCode::Domain, "ramp duration must be > 0");
    }
    RampProtocol p;
    p.shape_ = RampShape::Linear;
    p.peak_ = peak;
    p.theta_total_ = theta_total;
    p.theta_ = {0.0, theta_total};
    p.lambda_ = {0.0, peak};
    return p;
}

RampProtocol RampProtocol::tabulated(std::vector<double> theta, std::vector<double> lambda) {
    if (theta.size() != lambda.size() || theta.size() < 2) {
        raise(ErrorCode::InvalidArgument, "ramp table needs >= 2 (theta, lambda) rows");
    }
    if (theta.front() != 0.0 || lambda.front() != 0.0) {
        raise(ErrorCode::InvalidArgument, "ramp table must start at (0, 0)");
    }
    for (std::size_t i = 1; i < theta.size(); ++i) {
        if (!(theta[i] > theta[i - 1])) {
            raise(ErrorCode::InvalidArgument,
                  "ramp table theta not strictly increasing at row " + std::to_string(i));
        }
        if (!std::isfinite(lambda[i])) raise(ErrorCode::InvalidArgument, "non-finite lambda in ramp table");
    }
    RampProtocol p;
    p.shape_ = RampShape::Tabulated;
    p.peak_ = lambda.back();
    p.theta_total_ = theta.back();
    p.theta_ = std::move(theta);
    p.lambda_ = std::move(lambda);
    return p;
}

RampProtocol RampProtocol::read_table(std::istream& in) {
    std::vector<double> theta;
    std::vector<double> lambda;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double t = 0.0;
        double l = 0.0;
        if (!(row >> t)) continue;
        if (!(row >> l)) {
            raise(ErrorCode::InvalidArgument, "ramp table line " + std::to_string(lineno) + ": expected two columns");
        }
        theta.push_back(t);
        lambda.push_back(l);
    }
    return tabulated(std::move(theta), std::move(lambda));
}

namespace {

std::size_t segment_of(const std::vector<double>& knots, double theta) {
    auto it = std::upper_bound(knots.begin(), knots.end(), theta);
    std::size_t idx = static_cast<std::size_t>(it - knots.begin());
    if (idx == 0) return 0;
    return std::min(idx - 1, knots.size() - 2);
}

}  // namespace

double RampProtocol::lambda(double theta) const {
    if (theta <= 0.0) return lambda_.front();
    if (theta >= theta_total_) return lambda_.back();
    const std::size_t k = segment_of(theta_, theta);
    const double w = (theta - theta_[k]) / (theta_[k + 1] - theta_[k]);
    return lambda_[k] + w * (lambda_[k + 1] - lambda_[k]);
}

double RampProtocol::slope(double theta) const {
    const std::size_t k = segment_of(theta_, std::clamp(theta, 0.0, theta_total_));
    return (lambda_[k + 1] - lambda_[k]) / (theta_[k + 1] - theta_[k]);
}

double ramp_theta(double nu_hz, double tau_us) {
    return 2.0 * physical::pi * nu_hz * tau_us * 1e-6;
}

DriveIntegral drive_integral(const RampProtocol& protocol) {
    DriveIntegral out;
    if (protocol.shape() == RampShape::Linear) {
        const double big_theta = protocol.theta_total();
        const double s = protocol.peak() / big_theta;
        out.cos_part = s * std::sin(big_theta);
        out.sin_part = 2.0 * s * std::sin(0.5 * big_theta) * std::sin(0.5 * big_theta);
        return out;
    }
    using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;
    const auto& knots = protocol.knots();
    for (std::size_t k = 0; k + 1 < knots.size(); ++k) {
        const double a = knots[k];
        const double b = knots[k + 1];
        const double s = protocol.slope(0.5 * (a + b));
        double err_c = 0.0;
        double err_s = 0.0;
        const double c = Quad::integrate([](double t) { return std::cos(t); }, a, b, 15, 1e-13, &err_c);
        const double sn = Quad::integrate([](double t) { return std::sin(t); }, a, b, 15, 1e-13, &err_s);
        if (std::abs(s) * std::max(err_c, err_s) > 1e-10) {
            raise(ErrorCode::QuadratureFailure,
                  "drive integral on segment " + std::to_string(k) + " did not reach 1e-10");
        }
        out.cos_part += s * c;
        out.sin_part += s * sn;
    }
    return out;
}

double residual_amplitude(const RampProtocol& protocol) {
    if (protocol.shape() == RampShape::Linear) {
        const double half = 0.5 * protocol.theta_total();
        const double sinc = half < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
        return protocol.peak() * std::abs(sinc);
    }
    const DriveIntegral di = drive_integral(protocol);
    return std::hypot(di.cos_part, di.sin_part);
}

TransitionMatrix transition_matrix_analytic(const RampProtocol& protocol, std::size_t n_trunc) {
    const double alpha = residual_amplitude(protocol);
    DisplacementElements el = displacement_elements(alpha, n_trunc);
    TransitionMatrix tm;
    tm.probs = std::move(el.matrix);
    tm.alpha_res_abs = alpha;
    tm.delta_f_over_hnu = -protocol.peak() * protocol.peak();
    tm.leakage = std::move(el.leakage);
    return tm;
}

namespace {

using Complex = std::complex<double>;

/// exp(-i h dt) applied to every column of `u` by a Taylor series, where
/// h = diag(k) + lambda (a + a^dag) in the truncated basis.
class StepPropagator {
public:
    explicit StepPropagator(std::size_t dim) : dim_(dim), sqrt_k_(dim + 1) {
        for (std::size_t k = 0; k <= dim; ++k) sqrt_k_[k] = std::sqrt(static_cast<double>(k));
    }

    void apply(Eigen::MatrixXcd& u, double lambda, double dt) {
        const double hnorm = (static_cast<double>(dim_) - 1.0) + 2.0 * std::abs(lambda) * sqrt_k_[dim_];
        const int substeps = std::max(1, static_cast<int>(std::ceil(hnorm * dt / 0.5)));
        const double h = dt / substeps;
        for (int s = 0; s < substeps; ++s) taylor(u, lambda, h);
    }

private:
    void hamiltonian_times(const Eigen::MatrixXcd& in, Eigen::MatrixXcd& out, double lambda) const {
        const auto cols = in.cols();
        const auto n = static_cast<std::size_t>(in.rows());
        for (Eigen::Index c = 0; c < cols; ++c) {
            const Complex* x = in.col(c).data();
            Complex* y = out.col(c).data();
            for (std::size_t k = 0; k < n; ++k) {
                Complex v = static_cast<double>(k) * x[k];
                if (k > 0) v += lambda * sqrt_k_[k] * x[k - 1];
                if (k + 1 < n) v += lambda * sqrt_k_[k + 1] * x[k + 1];
                y[k] = v;
            }
        }
    }

    void taylor(Eigen::MatrixXcd& u, double lambda, double dt) {
        term_ = u;
        scratch_.resize(u.rows(), u.cols());
        const double ref = u.squaredNorm();
        for (int j = 1; j < 60; ++j) {
            hamiltonian_times(term_, scratch_, lambda);
            term_ = scratch_ * Complex(0.0, -dt / j);
            u += term_;
            if (term_.squaredNorm() <= 1e-34 * ref) break;
        }
    }

    std::size_t dim_;
    std::vector<double> sqrt_k_;
    Eigen::MatrixXcd term_;
    Eigen::MatrixXcd scratch_;
};

struct PropagationLevel {
    Eigen::MatrixXd probs;
    double unitarity_defect = 0.0;
    double max_edge_population = 0.0;
};

PropagationLevel propagate(const RampProtocol& protocol, std::size_t n_trunc, std::size_t steps,
                           const Eigen::MatrixXd& final_basis) {
    const auto dim = static_cast<Eigen::Index>(n_trunc);
    const Eigen::Index checked = dim / 2 + 1;
    const auto edge = static_cast<Eigen::Index>(std::ceil(0.9 * static_cast<double>(n_trunc)));

    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(dim, dim);
    StepPropagator step(n_trunc);
    const double dt = protocol.theta_total() / static_cast<double>(steps);
    PropagationLevel level;
    for (std::size_t k = 0; k < steps; ++k) {
        const double mid = (static_cast<double>(k) + 0.5) * dt;
        step.apply(u, protocol.lambda(mid), dt);
        if (edge < dim) {
            const double top =
                u.block(edge, 0, dim - edge, checked).cwiseAbs2().colwise().sum().maxCoeff();
            level.max_edge_population = std::max(level.max_edge_population, top);
        }
    }

    const Eigen::MatrixXcd low = u.leftCols(checked);
    const Eigen::MatrixXcd gram = low.adjoint() * low;
    level.unitarity_defect =
        (gram - Eigen::MatrixXcd::Identity(checked, checked)).cwiseAbs().maxCoeff();

    const Eigen::MatrixXcd amplitudes = final_basis.transpose().cast<Complex>() * u;
    level.probs = amplitudes.cwiseAbs2();
    return level;
}

}  // namespace

TransitionMatrix transition_matrix_numeric(const RampProtocol& protocol, std::size_t n_trunc,
                                           std::size_t steps) {
    if (n_trunc < 2) raise(ErrorCode::InvalidArgument, "numeric propagator needs n_trunc >= 2");
    if (steps < 1) raise(ErrorCode::InvalidArgument, "numeric propagator needs steps >= 1");

    // Final equilibrium eigenstates |m(Theta)> = D(-peak)|m>, computed with
    // padding so the low block is free of truncation artifacts.
    const Eigen::MatrixXd final_basis = displacement_operator(-protocol.peak(), n_trunc, n_trunc);
    const auto dim = static_cast<Eigen::Index>(n_trunc);
    const Eigen::Index checked = dim / 2 + 1;

    PropagationLevel coarse = propagate(protocol, n_trunc, steps, final_basis);
    PropagationLevel fine = propagate(protocol, n_trunc, 2 * steps, final_basis);
    Eigen::MatrixXd extrapolated = (4.0 * fine.probs - coarse.probs) / 3.0;
    std::size_t current = 2 * steps;
    bool converged = false;
    for (int refinement = 0; refinement < kMaxStepRefinements; ++refinement) {
        current *= 2;
        PropagationLevel finer = propagate(protocol, n_trunc, current, final_basis);
        Eigen::MatrixXd next = (4.0 * finer.probs - fine.probs) / 3.0;
        const double change = (next - extrapolated).leftCols(checked).cwiseAbs().maxCoeff();
        fine = std::move(finer);
        extrapolated = std::move(next);
        if (change <= kStepConvergenceTolerance) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        raise(ErrorCode::StepSizeTooCoarse,
              "numeric propagator did not converge to 1e-8 with " + std::to_string(current) + " steps");
    }
    if (fine.max_edge_population > kEdgePopulationTolerance) {
        raise(ErrorCode::TruncationInsufficient,
              "population " + std::to_string(fine.max_edge_population) +
                  " reached the top 10% of " + std::to_string(n_trunc) + " levels");
    }
    if (fine.unitarity_defect > 1e-10) {
        raise(ErrorCode::Internal,
              "propagator unitarity defect " + std::to_string(fine.unitarity_defect));
    }

    TransitionMatrix tm;
    tm.probs = extrapolated.cwiseMax(0.0);
    tm.alpha_res_abs = std::numeric_limits<double>::quiet_NaN();
    tm.delta_f_over_hnu = -protocol.peak() * protocol.peak();
    tm.leakage.resize(n_trunc);
    for (Eigen::Index n = 0; n < dim; ++n) {
        tm.leakage[static_cast<std::size_t>(n)] = std::max(0.0, 1.0 - tm.probs.col(n).sum());
    }
    // Mean shift of the lowest column recovers |alpha_res|^2 without the closed form.
    double shift = 0.0;
    for (Eigen::Index m = 0; m < dim; ++m) shift += static_cast<double>(m) * tm.probs(m, 0);
    tm.alpha_res_abs = std::sqrt(std::max(0.0, shift));
    return tm;
}

namespace {

/// exp(delta * G) p for the balanced birth-death generator
/// (G p)_n = (n+1) p_{n+1} - (2n+1) p_n + n p_{n-1}; mass flowing past the top
/// level is lost and shows up as extra leakage.
std::vector<double> heat_vector(std::vector<double> p, double delta) {
    const std::size_t n = p.size();
    if (delta == 0.0 || n == 0) return p;
    const double gnorm = 4.0 * static_cast<double>(n);
    const int substeps = std::max(1, static_cast<int>(std::ceil(gnorm * delta / 0.5)));
    const double h = delta / substeps;
    std::vector<double> term(n);
    std::vector<double> next(n);
    for (int s = 0; s < substeps; ++s) {
        term = p;
        const double ref = std::max(1e-300, *std::max_element(p.begin(), p.end()));
        for (int j = 1; j < 60; ++j) {
            double biggest = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double kd = static_cast<double>(k);
                double v = -(2.0 * kd + 1.0) * term[k];
                if (k + 1 < n) v += (kd + 1.0) * term[k + 1];
                if (k > 0) v += kd * term[k - 1];
                next[k] = v * h / j;
                biggest = std::max(biggest, std::abs(next[k]));
            }
            term.swap(next);
            for (std::size_t k = 0; k < n; ++k) p[k] += term[k];
            if (biggest <= 1e-18 * ref) break;
        }
        for (double& v : p) v = std::max(0.0, v);
    }
    return p;
}

}  // namespace

PhononDistribution apply_heating(const PhononDistribution& dist, const HeatingModel& model) {
    if (!(model.rate_quanta_per_ms >= 0.0) || !(model.duration_ms >= 0.0)) {
        raise(ErrorCode::Domain, "heating rate and duration must be >= 0");
    }
    const double before = dist.total();
    PhononDistribution out;
    out.probs = heat_vector(dist.probs, model.delta_nbar());
    out.leakage = dist.leakage + std::max(0.0, before - out.total());
    return out;
}

TransitionMatrix apply_heating(const TransitionMatrix& transitions, const HeatingModel& model) {
    if (!(model.rate_quanta_per_ms >= 0.0) || !(model.duration_ms >= 0.0)) {
        raise(ErrorCode::Domain, "heating rate and duration must be >= 0");
    }
    TransitionMatrix out = transitions;
    const auto dim = transitions.probs.rows();
    for (Eigen::Index n = 0; n < transitions.probs.cols(); ++n) {
        std::vector<double> col(transitions.probs.col(n).data(), transitions.probs.col(n).data() + dim);
        const double before = std::accumulate(col.begin(), col.end(), 0.0);
        col = heat_vector(std::move(col), model.delta_nbar());
        const double after = std::accumulate(col.begin(), col.end(), 0.0);
        out.probs.col(n) = Eigen::Map<const Eigen::VectorXd>(col.data(), dim);
        out.leakage[static_cast<std::size_t>(n)] += std::max(0.0, before - after);
    }
    return out;
}

}  // namespace qje
