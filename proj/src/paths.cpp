#include "sigmort/paths.hpp"

#include <cmath>
#include <string>

#include "sigmort/errors.hpp"

namespace sigmort {

Path::Path(std::size_t dim, std::vector<double> coords) : dim_(dim), coords_(std::move(coords)) {
    if (dim_ == 0) throw DataError("path dimension must be at least 1");
    if (coords_.size() % dim_ != 0)
        throw DataError("path coordinate count " + std::to_string(coords_.size()) +
                        " is not a multiple of dimension " + std::to_string(dim_));
    if (coords_.size() / dim_ < 2) throw DataError("path needs at least two points");
    for (std::size_t i = 0; i < coords_.size(); ++i) {
        if (!std::isfinite(coords_[i]))
            throw DataError("non-finite path value at point " + std::to_string(i / dim_));
    }
}

Path from_series(std::span<const double> values) {
    if (values.size() < 2)
        throw DataError("series of length " + std::to_string(values.size()) +
                        " is too short; need at least 2 values");
    return Path(1, std::vector<double>(values.begin(), values.end()));
}

Path basepoint_augment(const Path& p) {
    std::vector<double> out(p.dim(), 0.0);
    out.insert(out.end(), p.coords().begin(), p.coords().end());
    return Path(p.dim(), std::move(out));
}

Path lead_lag(const Path& p) {
    if (p.dim() != 1)
        throw DimensionError("lead-lag supports 1-dimensional paths only, got dimension " +
                             std::to_string(p.dim()));
    const auto& x = p.coords();
    const std::size_t n = p.increments();
    std::vector<double> out;
    out.reserve(2 * (2 * n + 1));
    for (std::size_t j = 0; j < n; ++j) {
        out.push_back(x[j]);
        out.push_back(x[j]);
        out.push_back(x[j + 1]);
        out.push_back(x[j]);
    }
    out.push_back(x[n]);
    out.push_back(x[n]);
    return Path(2, std::move(out));
}

Path time_augment(const Path& p) {
    const std::size_t d = p.dim();
    const std::size_t n = p.increments();
    std::vector<double> out;
    out.reserve((d + 1) * p.size());
    for (std::size_t j = 0; j <= n; ++j) {
        const auto pt = p.point(j);
        out.insert(out.end(), pt.begin(), pt.end());
        out.push_back(j == n ? 1.0 : static_cast<double>(j) / static_cast<double>(n));
    }
    return Path(d + 1, std::move(out));
}

Path embed_series(std::span<const double> values) {
    return time_augment(lead_lag(basepoint_augment(from_series(values))));
}

}  // namespace sigmort
