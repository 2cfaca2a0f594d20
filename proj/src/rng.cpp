#include "sigmort/rng.hpp"

#include <cmath>
#include <numbers>

#include <omp.h>

#include "sigmort/exec.hpp"

namespace sigmort {

double NormalStream::uniform() {
    // (0, 1]: never zero, so log() below is finite.
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
}

double NormalStream::normal() {
    if (has_cached_) {
        has_cached_ = false;
        return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = r * std::sin(angle);
    has_cached_ = true;
    return r * std::cos(angle);
}

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt) {
    return mix64(mix64(master) ^ salt);
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t h) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

void set_thread_count(int jobs) {
    if (jobs > 0) omp_set_num_threads(jobs);
}

int thread_count() { return omp_get_max_threads(); }

}  // namespace sigmort
