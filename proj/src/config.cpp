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

#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace qje {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
    double v = 0.0;
    const auto s = trim(text);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw std::invalid_argument("expected a number, got '" + s + "'");
    }
    return v;
}

std::uint64_t parse_unsigned(const std::string& text) {
    const auto s = trim(text);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return v;
    // Accept integral values written in exponent form, e.g. 1e6.
    const double d = parse_double(s);
    if (d < 0.0 || d != std::floor(d) || d > 1.8e19) {
        throw std::invalid_argument("expected a non-negative integer, got '" + s + "'");
    }
    return static_cast<std::uint64_t>(d);
}

bool parse_bool(const std::string& text) {
    std::string s = trim(text);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw std::invalid_argument("expected a boolean, got '" + s + "'");
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item));
    if (out.empty()) throw std::invalid_argument("expected a comma-separated list");
    return out;
}

std::string format_list(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ", ";
        out += format_double(v[i]);
    }
    return out;
}

struct Entry {
    const char* section;
    const char* key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

template <typename Field>
Entry real(const char* section, const char* key, Field field) {
    return {section, key, [field](const ExperimentConfig& c) { return format_double(field(const_cast<ExperimentConfig&>(c))); },
            [field](ExperimentConfig& c, const std::string& v) { field(c) = parse_double(v); }};
}

template <typename Field>
Entry integer(const char* section, const char* key, Field field) {
    return {section, key,
            [field](const ExperimentConfig& c) { return std::to_string(field(const_cast<ExperimentConfig&>(c))); },
            [field](ExperimentConfig& c, const std::string& v) {
                using T = std::remove_reference_t<decltype(field(c))>;
                const std::uint64_t u = parse_unsigned(v);
                if (u > static_cast<std::uint64_t>(std::numeric_limits<T>::max())) {
                    throw std::invalid_argument("value out of range");
                }
                field(c) = static_cast<T>(u);
            }};
}

const std::vector<Entry>& entries() {
    using C = ExperimentConfig;
    static const std::vector<Entry> table = {
        real("trap", "nu_hz", [](C& c) -> double& { return c.trap.nu_hz; }),
        real("trap", "omega_x_hz", [](C& c) -> double& { return c.trap.omega_x_hz; }),
        real("drive", "d", [](C& c) -> double& { return c.drive.d; }),
        {"drive", "tau_us", [](const C& c) { return format_list(c.drive.tau_us); },
         [](C& c, const std::string& v) { c.drive.tau_us = parse_list(v); }},
        {"drive", "ramp_table", [](const C& c) { return c.drive.ramp_table; },
         [](C& c, const std::string& v) { c.drive.ramp_table = trim(v); }},
        {"thermal", "nbar_list", [](const C& c) { return format_list(c.thermal.nbar_list); },
         [](C& c, const std::string& v) { c.thermal.nbar_list = parse_list(v); }},
        integer("truncation", "n_trunc", [](C& c) -> std::size_t& { return c.truncation.n_trunc; }),
        integer("sampling", "shots", [](C& c) -> std::uint64_t& { return c.sampling.shots; }),
        integer("sampling", "seed", [](C& c) -> std::uint64_t& { return c.sampling.seed; }),
        integer("sampling", "bootstrap_B", [](C& c) -> std::size_t& { return c.sampling.bootstrap_b; }),
        real("detection", "eps_dark", [](C& c) -> double& { return c.detection.eps_dark; }),
        real("detection", "eps_bright", [](C& c) -> double& { return c.detection.eps_bright; }),
        real("detection", "subtraction_error", [](C& c) -> double& { return c.detection.subtraction_error; }),
        real("detection", "heating_rate_quanta_per_ms",
             [](C& c) -> double& { return c.detection.heating_rate_quanta_per_ms; }),
        real("detection", "iteration_time_ms", [](C& c) -> double& { return c.detection.iteration_time_ms; }),
        integer("detection", "max_iterations", [](C& c) -> int& { return c.detection.max_iterations; }),
        {"heating", "enabled", [](const C& c) { return std::string(c.heating.enabled ? "true" : "false"); },
         [](C& c, const std::string& v) { c.heating.enabled = parse_bool(v); }},
        real("heating", "rate_quanta_per_ms", [](C& c) -> double& { return c.heating.rate_quanta_per_ms; }),
        real("heating", "return_delta_nbar", [](C& c) -> double& { return c.heating.return_delta_nbar; }),
        integer("mle", "n_support", [](C& c) -> std::size_t& { return c.mle.n_support; }),
        integer("mle", "starts", [](C& c) -> std::size_t& { return c.mle.starts; }),
        integer("mle", "bootstrap_B", [](C& c) -> std::size_t& { return c.mle.bootstrap_b; }),
        {"mle", "adaptive_support", [](const C& c) { return std::string(c.mle.adaptive_support ? "true" : "false"); },
         [](C& c, const std::string& v) { c.mle.adaptive_support = parse_bool(v); }},
        integer("sideband", "points", [](C& c) -> std::size_t& { return c.sideband.points; }),
        real("sideband", "spacing_us", [](C& c) -> double& { return c.sideband.spacing_us; }),
        integer("sideband", "shots_per_point", [](C& c) -> std::uint32_t& { return c.sideband.shots_per_point; }),
        real("sideband", "rabi_base_khz", [](C& c) -> double& { return c.sideband.rabi_base_khz; }),
        real("sideband", "eta", [](C& c) -> double& { return c.sideband.eta; }),
        real("sideband", "gamma_per_us", [](C& c) -> double& { return c.sideband.gamma_per_us; }),
        real("sideband", "contrast", [](C& c) -> double& { return c.sideband.contrast; }),
        integer("workstats", "max_initial_n", [](C& c) -> std::size_t& { return c.workstats.max_initial_n; }),
        real("workstats", "min_initial_weight", [](C& c) -> double& { return c.workstats.min_initial_weight; }),
        real("workstats", "skew_threshold", [](C& c) -> double& { return c.workstats.skew_threshold; }),
        real("transfer", "pulse_time_us", [](C& c) -> double& { return c.transfer.pulse_time_us; }),
        real("transfer", "delta0_khz", [](C& c) -> double& { return c.transfer.delta0_khz; }),
        real("transfer", "omega_max_khz", [](C& c) -> double& { return c.transfer.omega_max_khz; }),
        real("transfer", "prep_infidelity", [](C& c) -> double& { return c.transfer.prep_infidelity; }),
        integer("classical", "samples", [](C& c) -> std::size_t& { return c.classical.samples; }),
        integer("classical", "bootstrap_B", [](C& c) -> std::size_t& { return c.classical.bootstrap_b; }),
    };
    return table;
}

const Entry* find_entry(const std::string& section, const std::string& key) {
    for (const auto& e : entries()) {
        if (section == e.section && key == e.key) return &e;
    }
    return nullptr;
}

bool known_section(const std::string& section) {
    return std::any_of(entries().begin(), entries().end(),
                       [&](const Entry& e) { return section == e.section; });
}

void require(bool ok, const std::string& key, const std::string& what) {
    if (!ok) raise(ErrorCode::Config, key + ": " + what);
}

}  // namespace

void ExperimentConfig::validate() const {
    require(trap.nu_hz > 0.0, "trap.nu_hz", "must be > 0");
    require(drive.d >= 0.0, "drive.d", "must be >= 0");
    require(!drive.tau_us.empty(), "drive.tau_us", "needs at least one duration");
    for (double t : drive.tau_us) require(t > 0.0, "drive.tau_us", "durations must be > 0");
    require(!thermal.nbar_list.empty(), "thermal.nbar_list", "needs at least one entry");
    for (double n : thermal.nbar_list) require(n > 0.0, "thermal.nbar_list", "entries must be > 0");
    require(truncation.n_trunc >= 8, "truncation.n_trunc", "must be >= 8");
    require(sampling.shots >= 1, "sampling.shots", "must be >= 1");
    try {
        detection.validate();
    } catch (const Error& e) {
        raise(ErrorCode::Config, std::string("detection: ") + e.what());
    }
    require(heating.rate_quanta_per_ms >= 0.0, "heating.rate_quanta_per_ms", "must be >= 0");
    require(heating.return_delta_nbar >= 0.0, "heating.return_delta_nbar", "must be >= 0");
    require(mle.n_support >= 1 && mle.n_support <= 12, "mle.n_support", "must be in 1..12");
    require(sideband.points >= 1, "sideband.points", "must be >= 1");
    require(sideband.spacing_us > 0.0, "sideband.spacing_us", "must be > 0");
    require(sideband.rabi_base_khz > 0.0, "sideband.rabi_base_khz", "must be > 0");
    require(sideband.eta > 0.0, "sideband.eta", "must be > 0");
    require(sideband.gamma_per_us >= 0.0, "sideband.gamma_per_us", "must be >= 0");
    require(sideband.contrast > 0.0 && sideband.contrast <= 1.0, "sideband.contrast", "must be in (0, 1]");
    require(workstats.min_initial_weight >= 0.0 && workstats.min_initial_weight < 1.0,
            "workstats.min_initial_weight", "must be in [0, 1)");
    require(transfer.pulse_time_us > 0.0, "transfer.pulse_time_us", "must be > 0");
    require(transfer.delta0_khz >= 0.0, "transfer.delta0_khz", "must be >= 0");
    require(transfer.omega_max_khz > 0.0, "transfer.omega_max_khz", "must be > 0");
    require(transfer.prep_infidelity >= 0.0 && transfer.prep_infidelity < 1.0, "transfer.prep_infidelity",
            "must be in [0, 1)");
    require(classical.samples >= 1, "classical.samples", "must be >= 1");
}

void set_config_value(ExperimentConfig& config, const std::string& section, const std::string& key,
                      const std::string& value) {
    if (!known_section(section)) raise(ErrorCode::Config, "unknown section [" + section + "]");
    const Entry* e = find_entry(section, key);
    if (!e) raise(ErrorCode::Config, "unknown key '" + key + "' in [" + section + "]");
    try {
        e->set(config, value);
    } catch (const std::invalid_argument& ex) {
        raise(ErrorCode::Config, section + "." + key + ": " + ex.what());
    }
}

ExperimentConfig parse_config(const std::string& text, const std::string& source) {
    ExperimentConfig config;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        const std::string body = trim(cut == std::string::npos ? line : line.substr(0, cut));
        if (body.empty()) continue;
        const std::string where = source + ":" + std::to_string(lineno) + ": ";
        if (body.front() == '[') {
            if (body.back() != ']') raise(ErrorCode::Config, where + "malformed section header");
            section = trim(std::string_view(body).substr(1, body.size() - 2));
            if (!known_section(section)) raise(ErrorCode::Config, where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = body.find('=');
        if (eq == std::string::npos) raise(ErrorCode::Config, where + "expected 'key = value'");
        if (section.empty()) raise(ErrorCode::Config, where + "key outside of any section");
        try {
            set_config_value(config, section, trim(std::string_view(body).substr(0, eq)),
                             body.substr(eq + 1));
        } catch (const Error& e) {
            raise(ErrorCode::Config, where + e.what());
        }
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::Io, "cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

void apply_env_overrides(ExperimentConfig& config, const EnvLookup& lookup) {
    for (const auto& e : entries()) {
        std::string name = std::string(kEnvPrefix) + e.section + "__" + e.key;
        std::transform(name.begin(), name.end(), name.begin(),
                       [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
        if (const auto value = lookup(name)) {
            try {
                e.set(config, *value);
            } catch (const std::invalid_argument& ex) {
                raise(ErrorCode::Config, name + ": " + ex.what());
            }
        }
    }
    config.validate();
}

void apply_env_overrides(ExperimentConfig& config) {
    apply_env_overrides(config, [](const std::string& name) -> std::optional<std::string> {
        if (const char* v = std::getenv(name.c_str())) return std::string(v);
        return std::nullopt;
    });
}

std::string emit_config(const ExperimentConfig& config) {
    std::string out;
    std::string section;
    for (const auto& e : entries()) {
        if (section != e.section) {
            if (!section.empty()) out += '\n';
            section = e.section;
            out += "[" + section + "]\n";
        }
        out += std::string(e.key) + " = " + e.get(config) + "\n";
    }
    return out;
}

}  // namespace qje
