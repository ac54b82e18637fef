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

// Little-endian primitives shared by the binary file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace onebit::io
{

class FormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline void write_magic(std::ostream &os, std::string_view magic)
{
    os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void write_u32(std::ostream &os, std::uint32_t v)
{
    std::array<char, 4> b{};
    for (int i = 0; i < 4; ++i)
        b[i] = static_cast<char>((v >> (8 * i)) & 0xffu);
    os.write(b.data(), 4);
}

inline void write_f64(std::ostream &os, double v)
{
    const auto u = std::bit_cast<std::uint64_t>(v);
    std::array<char, 8> b{};
    for (int i = 0; i < 8; ++i)
        b[i] = static_cast<char>((u >> (8 * i)) & 0xffu);
    os.write(b.data(), 8);
}

inline void read_exact(std::istream &is, char *dst, std::size_t n, const char *what)
{
    is.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw FormatError(std::string("truncated file while reading ") + what);
}

inline void expect_magic(std::istream &is, std::string_view magic)
{
    std::array<char, 4> b{};
    read_exact(is, b.data(), 4, "magic");
    if (std::string_view(b.data(), 4) != magic)
        throw FormatError("bad magic, expected \"" + std::string(magic) + "\"");
}

inline std::uint32_t read_u32(std::istream &is)
{
    std::array<unsigned char, 4> b{};
    read_exact(is, reinterpret_cast<char *>(b.data()), 4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
    return v;
}

inline double read_f64(std::istream &is)
{
    std::array<unsigned char, 8> b{};
    read_exact(is, reinterpret_cast<char *>(b.data()), 8, "f64");
    std::uint64_t u = 0;
    for (int i = 0; i < 8; ++i)
        u |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return std::bit_cast<double>(u);
}

} // namespace onebit::io
