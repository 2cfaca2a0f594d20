#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace sigmort {

/// A sampled d-dimensional path with N+1 points, implicitly parameterized on
/// equidistant times j/N in [0, 1]. Points are stored row-major.
class Path {
public:
    /// Throws DataError unless dim >= 1, there are at least two points,
    /// `coords.size()` is a multiple of `dim` and every value is finite.
    Path(std::size_t dim, std::vector<double> coords);

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return coords_.size() / dim_; }
    std::size_t increments() const { return size() - 1; }

    std::span<const double> point(std::size_t j) const {
        return {coords_.data() + j * dim_, dim_};
    }
    double operator()(std::size_t j, std::size_t i) const { return coords_[j * dim_ + i]; }
    const std::vector<double>& coords() const { return coords_; }

    bool operator==(const Path&) const = default;

private:
    std::size_t dim_;
    std::vector<double> coords_;
};

Path from_series(std::span<const double> values);

/// Prepends the zero vector.
Path basepoint_augment(const Path& p);

/// Lead-lag embedding of a scalar path: point 2j is (x_j, x_j) and point
/// 2j+1 is (x_{j+1}, x_j), giving 2N+1 points. The lead moves first.
Path lead_lag(const Path& p);

/// Appends j/N as a trailing time coordinate.
Path time_augment(const Path& p);

/// basepoint -> lead-lag -> time. A series of length n yields a 3-d path with
/// 2n+1 points.
Path embed_series(std::span<const double> values);

/// Dimension of embed_series output.
inline constexpr std::size_t kEmbeddingDim = 3;

}  // namespace sigmort
