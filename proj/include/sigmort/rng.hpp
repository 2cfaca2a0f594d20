#pragma once

#include <cstdint>
#include <random>

namespace sigmort {

/// Standard normal draws from a seeded mt19937_64.
///
/// Uniforms are taken as the top 53 bits of each engine output scaled to
/// (0, 1]; normals use the Box-Muller transform and are consumed in pairs
/// (cosine branch first). Both the engine and this mapping are fully specified,
/// so streams are reproducible across compilers and platforms, unlike
/// std::normal_distribution.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double uniform();
    double normal();

private:
    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

/// splitmix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix64(std::uint64_t x);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt);

/// FNV-1a over raw bytes, for fingerprints.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace sigmort
