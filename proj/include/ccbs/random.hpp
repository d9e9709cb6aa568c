/*
 * Copyright 2026 The ccbs Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#ifndef CCBS_RANDOM_HPP
#define CCBS_RANDOM_HPP

#include <cstdint>
#include <random>
#include <string_view>

namespace ccbs {

using Rng = std::mt19937_64;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the named sub-stream of `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : stream) {
        h = (h ^ ch) * 0x100000001b3ULL;
    }
    return mix64(master ^ mix64(h));
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view stream, std::uint64_t index)
{
    return mix64(derive_seed(master, stream) + mix64(index + 1));
}

/// Uniform double in [0, 1) from the top 53 bits; portable across standard libraries.
inline double uniform01(Rng& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi)
{
    return lo + (hi - lo) * uniform01(rng);
}

} // namespace ccbs

#endif
