// SPDX-License-Identifier: Apache-2.0
//
// onebit-doa: direction-of-arrival estimation from dithered one-bit array data
// Copyright (C) 2026 The onebit-doa Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace onebit
{

// Stream tags. Every random draw in the library comes from a substream keyed by
// (seed, tag, index), so results do not depend on evaluation order or threading.
enum class StreamTag : std::uint64_t
{
    snapshots = 0x534e4150, // source amplitudes and sensor noise, index = snapshot
    dither_1 = 0x44495431,  // first dither sequence, index = snapshot
    dither_2 = 0x44495432,  // second dither sequence, index = snapshot
    scene = 0x5343454e,     // scene sampling, index = sample
    sample = 0x53414d50,    // per training sample seed derivation, index = sample
    shuffle = 0x53485546,   // minibatch order, index = epoch
    test = 0x54455354,      // free for tests and Monte-Carlo drivers
};

inline std::uint64_t splitmix64(std::uint64_t &state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Mixes a key triple into a single 64-bit seed.
inline std::uint64_t derive_seed(std::uint64_t seed, StreamTag tag, std::uint64_t index)
{
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s = h ^ static_cast<std::uint64_t>(tag);
    h = splitmix64(s);
    s = h ^ index;
    return splitmix64(s);
}

// xoshiro256** seeded through splitmix64. Satisfies UniformRandomBitGenerator so it
// can drive the <random> distributions. Cheap to construct, which is what makes
// one substream per snapshot affordable.
class Substream
{
  public:
    using result_type = std::uint64_t;

    explicit Substream(std::uint64_t seed)
    {
        std::uint64_t s = seed;
        for (auto &w : state_)
            w = splitmix64(s);
    }

    Substream(std::uint64_t seed, StreamTag tag, std::uint64_t index)
        : Substream(derive_seed(seed, tag, index))
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> state_{};
};

} // namespace onebit
