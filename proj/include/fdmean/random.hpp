#pragma once

#include <cstdint>
#include <random>

namespace fdmean {

using Engine = std::mt19937_64;

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// 64-bit child seed for (seed, stream).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream)
{
    return mix64(mix64(seed ^ 0x73656564u) ^ mix64(stream + 0x5bd1e995u));
}

/// Independent generator for (seed, stream): curve i of a panel, replicate r
/// of a benchmark. Streams do not depend on scheduling order.
inline Engine stream_engine(std::uint64_t seed, std::uint64_t stream)
{
    return Engine(mix64(derive_seed(seed, stream) ^ 0x66646d65u));
}

} // namespace fdmean
