#include "sigmort/signature.hpp"

#include <limits>
#include <string>

#include "sigmort/errors.hpp"

namespace sigmort {

namespace {

std::vector<std::size_t> offsets_for(std::size_t dim, std::size_t order) {
    std::vector<std::size_t> off(order + 2);
    std::size_t width = 1;
    off[0] = 0;
    for (std::size_t l = 0; l <= order; ++l) {
        off[l + 1] = off[l] + width;
        width *= dim;
    }
    return off;
}

// out += a (x) b for blocks of width dim^i and dim^j.
void tensor_accumulate(std::span<const double> a, std::span<const double> b, std::span<double> out) {
    const std::size_t nb = b.size();
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double ai = a[i];
        if (ai == 0.0) continue;
        double* row = out.data() + i * nb;
        for (std::size_t j = 0; j < nb; ++j) row[j] += ai * b[j];
    }
}

}  // namespace

std::size_t sig_dim(std::size_t dim, std::size_t order) {
    if (dim == 0) throw DataError("signature dimension must be at least 1");
    constexpr auto kMax = std::numeric_limits<std::size_t>::max();
    std::size_t total = 1;
    std::size_t width = 1;
    for (std::size_t l = 1; l <= order; ++l) {
        if (width > kMax / dim)
            throw OverflowError("sig_dim overflows for dim=" + std::to_string(dim) +
                                " order=" + std::to_string(order));
        width *= dim;
        if (total > kMax - width)
            throw OverflowError("sig_dim overflows for dim=" + std::to_string(dim) +
                                " order=" + std::to_string(order));
        total += width;
    }
    return total;
}

TruncatedSignature::TruncatedSignature(std::size_t dim, std::size_t order)
    : dim_(dim), order_(order), offsets_(offsets_for(dim, order)), coeffs_(sig_dim(dim, order), 0.0) {
    coeffs_[0] = 1.0;
}

TruncatedSignature::TruncatedSignature(std::size_t dim, std::size_t order, std::vector<double> coeffs)
    : dim_(dim), order_(order), offsets_(offsets_for(dim, order)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != sig_dim(dim, order))
        throw DimensionError("coefficient vector length " + std::to_string(coeffs_.size()) +
                             " does not match sig_dim(" + std::to_string(dim) + ", " +
                             std::to_string(order) + ")");
}

std::size_t TruncatedSignature::level_offset(std::size_t level) const { return offsets_.at(level); }

std::size_t TruncatedSignature::level_size(std::size_t level) const {
    return offsets_.at(level + 1) - offsets_[level];
}

double TruncatedSignature::at(std::span<const std::size_t> multi_index) const {
    if (multi_index.size() > order_) throw DataError("multi-index longer than truncation order");
    std::size_t flat = 0;
    for (std::size_t i : multi_index) {
        if (i >= dim_) throw DataError("multi-index entry out of range");
        flat = flat * dim_ + i;
    }
    return coeffs_[level_offset(multi_index.size()) + flat];
}

TruncatedSignature segment_signature(std::span<const double> increment, std::size_t order) {
    const std::size_t d = increment.size();
    TruncatedSignature s(d, order);
    for (std::size_t l = 1; l <= order; ++l) {
        auto prev = std::as_const(s).level(l - 1);
        auto cur = s.level(l);
        const double inv = 1.0 / static_cast<double>(l);
        for (std::size_t i = 0; i < prev.size(); ++i) {
            for (std::size_t j = 0; j < d; ++j) cur[i * d + j] = prev[i] * increment[j] * inv;
        }
    }
    return s;
}

TruncatedSignature truncated_signature(const Path& p, std::size_t order) {
    const std::size_t d = p.dim();
    TruncatedSignature sig(d, order);
    std::vector<double> inc(d);
    for (std::size_t n = 1; n < p.size(); ++n) {
        for (std::size_t i = 0; i < d; ++i) inc[i] = p(n, i) - p(n - 1, i);
        const TruncatedSignature seg = segment_signature(inc, order);
        // In-place sig <- sig (x) seg. Descending levels keep lower levels
        // unmodified while they are still needed.
        for (std::size_t l = order; l >= 1; --l) {
            auto out = sig.level(l);
            for (std::size_t i = 0; i < l; ++i)
                tensor_accumulate(std::as_const(sig).level(i), seg.level(l - i), out);
        }
    }
    return sig;
}

TruncatedSignature chen_concat(const TruncatedSignature& a, const TruncatedSignature& b) {
    if (a.dim() != b.dim() || a.order() != b.order())
        throw DimensionError("chen_concat needs matching dimension and order (got d=" +
                             std::to_string(a.dim()) + ",m=" + std::to_string(a.order()) + " and d=" +
                             std::to_string(b.dim()) + ",m=" + std::to_string(b.order()) + ")");
    TruncatedSignature out(a.dim(), a.order(), std::vector<double>(a.coeffs().size(), 0.0));
    for (std::size_t l = 0; l <= a.order(); ++l) {
        for (std::size_t i = 0; i <= l; ++i) tensor_accumulate(a.level(i), b.level(l - i), out.level(l));
    }
    return out;
}

}  // namespace sigmort
