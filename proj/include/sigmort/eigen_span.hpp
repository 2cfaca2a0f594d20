#pragma once

#include <cstddef>
#include <span>

#include <Eigen/Dense>

namespace sigmort {

inline std::span<const double> as_span(const Eigen::VectorXd& v) {
    return {v.data(), static_cast<std::size_t>(v.size())};
}

}  // namespace sigmort
