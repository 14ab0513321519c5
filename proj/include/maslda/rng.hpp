#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace maslda {

// All randomness in the library flows from a single master seed. Independent
// streams are derived by hashing a stream name into the seed sequence, so
// adding a new consumer never perturbs the draws of existing ones.
inline std::uint64_t hash_stream_name(std::string_view name) {
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name) {
    const std::uint64_t h = hash_stream_name(name);
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h),
                      static_cast<std::uint32_t>(h >> 32)};
    return std::mt19937_64(seq);
}

}  // namespace maslda
