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

#include "sideband.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "errors.hpp"
#include "random.hpp"

namespace qje {

const char* to_string(SidebandKind kind) noexcept {
    return kind == SidebandKind::Blue ? "blue" : "red";
}

SidebandKind sideband_kind_from_string(const std::string& name) {
    if (name == "blue") return SidebandKind::Blue;
    if (name == "red") return SidebandKind::Red;
    raise(ErrorCode::InvalidArgument, "unknown sideband kind '" + name + "' (expected blue|red)");
}

double sideband_rabi(SidebandKind kind, std::size_t n, double rabi_base_khz) {
    const double base = 2.0 * physical::pi * rabi_base_khz * 1e-3;
    const double level = kind == SidebandKind::Blue ? static_cast<double>(n + 1) : static_cast<double>(n);
    return base * std::sqrt(level);
}

double sideband_probability(const PhononDistribution& dist, SidebandKind kind, double rabi_base_khz,
                            double gamma_per_us, double contrast, double t_us) {
    const double envelope = std::exp(-gamma_per_us * t_us) * contrast;
    double p = 0.0;
    for (std::size_t n = 0; n < dist.n_trunc(); ++n) {
        const double pn = dist.probs[n];
        if (pn == 0.0) continue;
        p += pn * (1.0 - envelope * std::cos(2.0 * sideband_rabi(kind, n, rabi_base_khz) * t_us));
    }
    return 0.5 * p;
}

SidebandTrace synthesize_sideband(const PhononDistribution& dist, SidebandKind kind,
                                  const SidebandSettings& settings, std::uint64_t seed) {
    if (settings.points < 1) raise(ErrorCode::InvalidArgument, "trace needs at least one point");
    if (!(settings.spacing_us > 0.0) || !(settings.rabi_base_khz > 0.0) || !(settings.eta > 0.0)) {
        raise(ErrorCode::InvalidArgument, "trace spacing, Rabi scale and eta must be positive");
    }
    if (!(settings.gamma_per_us >= 0.0) || !(settings.contrast > 0.0 && settings.contrast <= 1.0)) {
        raise(ErrorCode::InvalidArgument, "trace needs gamma >= 0 and contrast in (0, 1]");
    }
    SidebandTrace tr;
    tr.kind = kind;
    tr.rabi_base_khz = settings.rabi_base_khz;
    tr.eta = settings.eta;
    tr.gamma = settings.gamma_per_us;
    tr.contrast = settings.contrast;
    tr.times_us.resize(settings.points);
    tr.p_up.resize(settings.points);
    tr.shots.assign(settings.points, settings.shots_per_point);

    auto eng = rng::stream(seed, kind == SidebandKind::Blue ? 0x5B1EULL : 0x5EEDULL);
    for (std::size_t i = 0; i < settings.points; ++i) {
        const double t = settings.spacing_us * static_cast<double>(i + 1);
        tr.times_us[i] = t;
        const double p = std::clamp(
            sideband_probability(dist, kind, settings.rabi_base_khz, settings.gamma_per_us,
                                 settings.contrast, t),
            0.0, 1.0);
        if (settings.shots_per_point == 0) {
            tr.p_up[i] = 0.0;
            continue;
        }
        std::binomial_distribution<std::uint32_t> bin(settings.shots_per_point, p);
        tr.p_up[i] = static_cast<double>(bin(eng)) / settings.shots_per_point;
    }
    return tr;
}

void write_trace_csv(const SidebandTrace& trace, std::ostream& out) {
    out << "time_us,p_up,shots\n";
    out.precision(17);
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << trace.times_us[i] << ',' << trace.p_up[i] << ',' << trace.shots[i] << '\n';
    }
}

SidebandTrace read_trace_csv(std::istream& in, SidebandKind kind, const SidebandSettings& settings) {
    SidebandTrace tr;
    tr.kind = kind;
    tr.rabi_base_khz = settings.rabi_base_khz;
    tr.eta = settings.eta;
    tr.gamma = settings.gamma_per_us;
    tr.contrast = settings.contrast;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1) {
            if (line.rfind("time_us,p_up,shots", 0) != 0) {
                raise(ErrorCode::Io, "trace CSV must start with header time_us,p_up,shots");
            }
            continue;
        }
        std::istringstream row(line);
        double t = 0.0, p = 0.0;
        std::uint32_t n = 0;
        char c1 = 0, c2 = 0;
        if (!(row >> t >> c1 >> p >> c2 >> n) || c1 != ',' || c2 != ',') {
            raise(ErrorCode::Io, "malformed trace CSV line " + std::to_string(lineno));
        }
        if (!tr.times_us.empty() && !(t > tr.times_us.back())) {
            raise(ErrorCode::Io, "trace times must increase (line " + std::to_string(lineno) + ")");
        }
        if (!(p >= 0.0 && p <= 1.0)) raise(ErrorCode::Io, "p_up outside [0,1] on line " + std::to_string(lineno));
        tr.times_us.push_back(t);
        tr.p_up.push_back(p);
        tr.shots.push_back(n);
    }
    if (tr.times_us.empty()) raise(ErrorCode::Io, "trace CSV has no data rows");
    return tr;
}

}  // namespace qje
