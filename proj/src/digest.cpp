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

#include "bftlab/digest.hpp"

#include <cstring>

namespace bftlab {

namespace {

constexpr std::uint64_t kLaneSeeds[4] = {
    0x6a09e667f3bcc908ULL,
    0xbb67ae8584caa73bULL,
    0x3c6ef372fe94f82bULL,
    0xa54ff53a5f1d36f1ULL,
};

inline std::uint64_t rotl(std::uint64_t x, int r) {
    return (x << r) | (x >> (64 - r));
}

inline std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v * 0x9e3779b97f4a7c15ULL;
    h = rotl(h, 31);
    h *= 0xff51afd7ed558ccdULL;
    return h;
}

inline std::uint64_t fmix(std::uint64_t h) {
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    h *= 0xc4ceb9fe1a85ec53ULL;
    h ^= h >> 33;
    return h;
}

const char kHexDigits[] = "0123456789abcdef";

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string Digest256::hex() const {
    std::string out;
    out.reserve(64);
    for (std::uint64_t word : w) {
        for (int shift = 60; shift >= 0; shift -= 4) {
            out.push_back(kHexDigits[(word >> shift) & 0xf]);
        }
    }
    return out;
}

std::string Digest256::short_hex() const {
    return hex().substr(0, 12);
}

Hasher::Hasher() : Hasher(0) {}

Hasher::Hasher(std::uint64_t seed) {
    for (int i = 0; i < 4; ++i) {
        lanes_[i] = kLaneSeeds[i] ^ (seed + 0x2545f4914f6cdd1dULL * (i + 1));
    }
}

void Hasher::absorb_word(std::uint64_t word) {
    lanes_[0] = mix(lanes_[0], word);
    lanes_[1] = mix(lanes_[1], rotl(word, 17) ^ 0x94d049bb133111ebULL);
    lanes_[2] = mix(lanes_[2], rotl(word, 29) + 0xbf58476d1ce4e5b9ULL);
    lanes_[3] = mix(lanes_[3], ~word);
}

Hasher& Hasher::update(const void* data, std::size_t len) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    total_len_ += len;
    for (std::size_t i = 0; i < len; ++i) {
        pending_ |= static_cast<std::uint64_t>(p[i]) << (8 * pending_len_);
        if (++pending_len_ == 8) {
            absorb_word(pending_);
            pending_ = 0;
            pending_len_ = 0;
        }
    }
    return *this;
}

Hasher& Hasher::update_u8(std::uint8_t v) { return update(&v, 1); }

Hasher& Hasher::update_u32(std::uint32_t v) {
    std::uint8_t b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return update(b, 4);
}

Hasher& Hasher::update_u64(std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(v >> (8 * i));
    return update(b, 8);
}

Hasher& Hasher::update_bytes(const std::vector<std::uint8_t>& bytes) {
    update_u64(bytes.size());
    return update(bytes.data(), bytes.size());
}

Hasher& Hasher::update_str(const char* tag) {
    std::size_t n = std::strlen(tag);
    update_u64(n);
    return update(tag, n);
}

Hasher& Hasher::update_digest(const Digest256& d) {
    for (std::uint64_t word : d.w) update_u64(word);
    return *this;
}

Digest256 Hasher::finalize() const {
    std::array<std::uint64_t, 4> lanes = lanes_;
    // Fold in the partial word and total length so prefixes differ.
    std::uint64_t tail = pending_ ^ (static_cast<std::uint64_t>(pending_len_) << 56);
    for (int i = 0; i < 4; ++i) {
        lanes[i] = mix(lanes[i], tail + total_len_ * (i + 1));
    }
    Digest256 out;
    std::uint64_t cross = lanes[0] ^ rotl(lanes[1], 13) ^ rotl(lanes[2], 27) ^ rotl(lanes[3], 41);
    for (int i = 0; i < 4; ++i) {
        out.w[i] = fmix(lanes[i] + rotl(cross, 7 * i + 1));
    }
    return out;
}

std::uint64_t DetRng::below(std::uint64_t bound) {
    // Rejection sampling keeps the distribution exact.
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t r = next();
        if (r >= threshold) return r % bound;
    }
}

std::int64_t DetRng::range(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo + 1)));
}

bool DetRng::chance_per_mille(std::uint32_t per_mille) {
    if (per_mille == 0) return false;
    if (per_mille >= 1000) return true;
    return below(1000) < per_mille;
}

}  // namespace bftlab
