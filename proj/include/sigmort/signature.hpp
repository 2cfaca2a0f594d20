#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sigmort/paths.hpp"

namespace sigmort {

/// Number of coefficients of a signature truncated at `order`:
/// 1 + d + d^2 + ... + d^order. Throws OverflowError if it does not fit.
std::size_t sig_dim(std::size_t dim, std::size_t order);

/// Element of the truncated tensor algebra over R^dim.
///
/// Coefficients are stored level by level; within level l the multi-index
/// (i_1, ..., i_l) sits at offset(l) + sum_k i_k * dim^(l-k), i.e. lexicographic
/// order. Level 0 is the scalar 1 for every signature.
class TruncatedSignature {
public:
    /// The unit element (1, 0, 0, ...).
    TruncatedSignature(std::size_t dim, std::size_t order);
    TruncatedSignature(std::size_t dim, std::size_t order, std::vector<double> coeffs);

    std::size_t dim() const { return dim_; }
    std::size_t order() const { return order_; }
    const std::vector<double>& coeffs() const { return coeffs_; }
    std::vector<double>& coeffs() { return coeffs_; }

    std::size_t level_offset(std::size_t level) const;
    std::size_t level_size(std::size_t level) const;
    std::span<const double> level(std::size_t l) const {
        return {coeffs_.data() + level_offset(l), level_size(l)};
    }
    std::span<double> level(std::size_t l) {
        return {coeffs_.data() + level_offset(l), level_size(l)};
    }

    /// Coefficient S^I for a 0-based multi-index I.
    double at(std::span<const std::size_t> multi_index) const;

private:
    std::size_t dim_;
    std::size_t order_;
    std::vector<std::size_t> offsets_;
    std::vector<double> coeffs_;
};

/// exp(increment) truncated at `order`: level l is increment^{(x)l} / l!.
/// This is the exact signature of a straight segment.
TruncatedSignature segment_signature(std::span<const double> increment, std::size_t order);

/// Signature of the piecewise-linear interpolation of the path's points,
/// accumulated segment by segment with Chen's relation.
TruncatedSignature truncated_signature(const Path& p, std::size_t order);

/// Truncated tensor product: level l of the result is sum_{i+j=l} a_i (x) b_j.
TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b);

}  // namespace sigmort
