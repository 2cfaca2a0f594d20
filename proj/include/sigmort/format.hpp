#pragma once

#include <cstdint>
#include <string>

namespace sigmort {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

std::string hex64(std::uint64_t x);

}  // namespace sigmort
