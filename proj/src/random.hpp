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

// Seeded, splittable random streams. Every Monte Carlo routine draws from
// `stream(seed, id)` keyed by a fixed chunk/stream index so results do not
// depend on how work is spread over threads.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <thread>
#include <vector>

namespace qje::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

using Engine = std::mt19937_64;

inline Engine stream(std::uint64_t seed, std::uint64_t id) {
    std::uint64_t s = seed ^ (0xD1B54A32D192ED03ULL * (id + 1));
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s))};
    return Engine(seq);
}

/// Uniform double in [0, 1) from the top 53 bits; bit-identical across
/// standard libraries.
inline double uniform(Engine& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Index i with cdf[i-1] <= u < cdf[i]; `cdf` is nondecreasing, last entry
/// is the total mass.
inline std::size_t draw_index(std::span<const double> cdf, Engine& eng) {
    const double u = uniform(eng) * cdf.back();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    return static_cast<std::size_t>(it - cdf.begin());
}

inline std::vector<double> cumulative(std::span<const double> weights) {
    std::vector<double> cdf(weights.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += std::max(0.0, weights[i]);
        cdf[i] = acc;
    }
    return cdf;
}

/// Runs `body(chunk)` for chunk = 0..chunks-1 on up to hardware_concurrency
/// threads. Callers write per-chunk results into preallocated slots and merge
/// in chunk order afterwards.
inline void for_each_chunk(std::size_t chunks, const std::function<void(std::size_t)>& body) {
    const std::size_t workers =
        std::min<std::size_t>(chunks, std::max(1u, std::thread::hardware_concurrency()));
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) body(c);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t c = w; c < chunks; c += workers) body(c);
        });
    }
    for (auto& t : pool) t.join();
}

/// Multinomial draw of `total` items over probabilities `p` via sequential
/// conditional binomials.
inline std::vector<std::uint64_t> multinomial(std::uint64_t total, std::span<const double> p,
                                              Engine& eng) {
    std::vector<std::uint64_t> out(p.size(), 0);
    double remaining_mass = 0.0;
    for (double v : p) remaining_mass += std::max(0.0, v);
    std::uint64_t remaining = total;
    for (std::size_t i = 0; i + 1 < p.size() && remaining > 0; ++i) {
        const double pi = std::max(0.0, p[i]);
        if (remaining_mass <= 0.0) break;
        const double q = std::clamp(pi / remaining_mass, 0.0, 1.0);
        std::binomial_distribution<std::uint64_t> bin(remaining, q);
        out[i] = bin(eng);
        remaining -= out[i];
        remaining_mass -= pi;
    }
    if (!p.empty()) out.back() += remaining;
    return out;
}

}  // namespace qje::rng
