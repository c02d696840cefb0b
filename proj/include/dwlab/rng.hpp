#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dwlab {

/// splitmix64 finalizer; the building block for per-run seed derivation.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and a path of
/// indices, e.g. derive_seed(master, {repeat, fold}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) noexcept {
    std::uint64_t h = mix64(master);
    for (std::uint64_t p : path) {
        h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
    }
    return h;
}

using Engine = std::mt19937_64;

inline double uniform01(Engine& eng) {
    return std::uniform_real_distribution<double>(0.0, 1.0)(eng);
}

inline double standard_normal(Engine& eng) {
    return std::normal_distribution<double>(0.0, 1.0)(eng);
}

}  // namespace dwlab
