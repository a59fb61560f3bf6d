/*
   Copyright 2026 The bftlab Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace bftlab {

/// 256-bit digest value. Simulation-grade: deterministic and well mixed,
/// not a cryptographic primitive (nothing in the lab needs one).
struct Digest256 {
    std::array<std::uint64_t, 4> w{};

    auto operator<=>(const Digest256&) const = default;

    bool is_zero() const {
        return w[0] == 0 && w[1] == 0 && w[2] == 0 && w[3] == 0;
    }

    std::string hex() const;
    /// Short prefix for logs and trace records.
    std::string short_hex() const;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Incremental hasher over a byte stream, 4 independent 64-bit lanes.
class Hasher {
  public:
    Hasher();
    explicit Hasher(std::uint64_t seed);

    Hasher& update(const void* data, std::size_t len);
    Hasher& update_u8(std::uint8_t v);
    Hasher& update_u32(std::uint32_t v);
    Hasher& update_u64(std::uint64_t v);
    Hasher& update_bytes(const std::vector<std::uint8_t>& bytes);
    Hasher& update_str(const char* tag);
    Hasher& update_digest(const Digest256& d);

    Digest256 finalize() const;

  private:
    void absorb_word(std::uint64_t word);

    std::array<std::uint64_t, 4> lanes_;
    std::uint64_t pending_ = 0;
    unsigned pending_len_ = 0;
    std::uint64_t total_len_ = 0;
};

/// Deterministic RNG (splitmix64 core). Used instead of <random>
/// distributions, whose output is implementation-defined.
class DetRng {
  public:
    explicit DetRng(std::uint64_t seed) : state_(seed ^ 0x9e3779b97f4a7c15ULL) {}

    std::uint64_t next() { return splitmix64(state_); }

    /// Uniform in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform in [lo, hi] inclusive.
    std::int64_t range(std::int64_t lo, std::int64_t hi);

    /// True with probability per_mille/1000.
    bool chance_per_mille(std::uint32_t per_mille);

  private:
    std::uint64_t state_;
};

}  // namespace bftlab
