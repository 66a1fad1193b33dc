// Copyright 2026 The qfb Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Reproducible per-shot random streams. Each shot derives its own engine from
// (seed, experiment id, shot index), so results never depend on how shots are
// scheduled across threads.

#ifndef QFB_RNG_HPP
#define QFB_RNG_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <initializer_list>
#include <numbers>
#include <random>
#include <thread>
#include <vector>

namespace qfb {

inline std::uint64_t splitmix64(std::uint64_t &state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Mixes a base seed with a list of stream identifiers into one 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) {
    std::uint64_t state = seed;
    std::uint64_t out = splitmix64(state);
    for (std::uint64_t id : ids) {
        state ^= id + 0x632BE59BD9B4E019ULL + (out << 6) + (out >> 2);
        out = splitmix64(state);
    }
    return out;
}

/// Engine plus the two distributions the simulator needs. Both are computed
/// here rather than through <random> distributions, whose output is
/// implementation-defined; this keeps streams identical across toolchains.
class ShotRng {
   public:
    explicit ShotRng(std::uint64_t seed) : engine_(seed) {}
    ShotRng(std::uint64_t seed, std::initializer_list<std::uint64_t> ids) : engine_(derive_seed(seed, ids)) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; the second variate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t next_u64() { return engine_(); }

   private:
    std::mt19937_64 engine_;
    double spare_ = 0;
    bool has_spare_ = false;
};

/// Runs body(i, worker) for i in [0, n) over `threads` workers using static
/// contiguous chunks. Callers write into per-index slots and reduce in index order, which
/// makes the result independent of the thread count.
inline unsigned worker_count(std::size_t n, unsigned threads) {
    return std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
}

template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body &&body) {
    unsigned workers = worker_count(n, threads);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) {
            body(i, 0u);
        }
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t lo = w * chunk;
        std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, w, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) {
                    body(i, w);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto &t : pool) {
        t.join();
    }
    for (auto &e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

}  // namespace qfb

#endif  // QFB_RNG_HPP
