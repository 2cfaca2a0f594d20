#include "sigmort/smoothing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "sigmort/errors.hpp"
#include "sigmort/eigen_span.hpp"
#include "sigmort/format.hpp"

namespace sigmort {

void SmoothingConfig::validate() const {
    if (basis_size != 0 && basis_size < 4) throw UsageError("basis size must be at least 4");
    if (penalty_order < 1 || penalty_order > 3) throw UsageError("penalty order must be 1, 2 or 3");
    if (lambda && !(*lambda > 0.0)) throw UsageError("fixed lambda must be positive");
}

std::string SmoothingConfig::describe() const {
    std::ostringstream ss;
    ss << "basis=" << (basis_size == 0 ? std::string("auto") : std::to_string(basis_size))
       << " penalty=" << penalty_order << " lambda=" << (lambda ? format_double(*lambda) : std::string("gcv"))
       << " weights=" << (weights_mode == WeightsMode::uniform ? "uniform" : "exposure")
       << " monotone=" << (monotone_from_age ? format_double(*monotone_from_age) : std::string("off"));
    return ss.str();
}

std::vector<double> gcv_lambda_grid() {
    std::vector<double> grid(30);
    for (int i = 0; i < 30; ++i) grid[i] = std::pow(10.0, -4.0 + 10.0 * i / 29.0);
    return grid;
}

Eigen::VectorXd weights_from_exposure(std::span<const double> mx, std::span<const double> exposure) {
    if (mx.size() != exposure.size()) throw DimensionError("rate and exposure vectors differ in length");
    const auto n = static_cast<Eigen::Index>(mx.size());
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (exposure[i] < 0.0 || !std::isfinite(exposure[i])) throw DataError("exposures must be finite and >= 0");
        w(i) = exposure[i] * std::max(mx[i], 0.0);
    }
    const double mean = w.mean();
    if (!(mean > 0.0)) throw DataError("all exposures are zero");
    w /= mean;
    return w.cwiseMax(kWeightFloor);
}

Eigen::MatrixXd bspline_basis(std::span<const double> x, double lo, double hi, std::size_t basis_size) {
    if (basis_size < 4) throw UsageError("basis size must be at least 4");
    if (!(hi > lo)) throw DataError("B-spline range is empty");
    const auto nb = static_cast<Eigen::Index>(basis_size);
    const Eigen::Index intervals = nb - 3;
    const double h = (hi - lo) / static_cast<double>(intervals);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.size()), nb);
    for (std::size_t r = 0; r < x.size(); ++r) {
        const double s = (x[r] - lo) / h;
        auto j = static_cast<Eigen::Index>(std::floor(s));
        j = std::clamp<Eigen::Index>(j, 0, intervals - 1);
        const double u = s - static_cast<double>(j);
        const double u2 = u * u, u3 = u2 * u;
        const auto row = static_cast<Eigen::Index>(r);
        B(row, j) = (1.0 - u) * (1.0 - u) * (1.0 - u) / 6.0;
        B(row, j + 1) = (3.0 * u3 - 6.0 * u2 + 4.0) / 6.0;
        B(row, j + 2) = (-3.0 * u3 + 3.0 * u2 + 3.0 * u + 1.0) / 6.0;
        B(row, j + 3) = u3 / 6.0;
    }
    return B;
}

namespace {

// Rows are the order-th differences of the coefficient vector.
Eigen::MatrixXd difference_matrix(std::size_t n, int order) {
    if (order < 0 || static_cast<std::size_t>(order) >= n)
        throw DataError("difference order " + std::to_string(order) + " needs more than " + std::to_string(n) +
                        " coefficients");
    Eigen::MatrixXd D = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (int k = 0; k < order; ++k) {
        const Eigen::Index r = D.rows() - 1;
        D = (D.bottomRows(r) - D.topRows(r)).eval();
    }
    return D;
}

}  // namespace

Eigen::MatrixXd difference_penalty(std::size_t n, int order) {
    const Eigen::MatrixXd D = difference_matrix(n, order);
    return D.transpose() * D;
}

namespace {

std::size_t resolve_basis_size(const SmoothingConfig& cfg, std::size_t p) {
    if (cfg.basis_size != 0) return cfg.basis_size;
    return std::max<std::size_t>(4, std::min<std::size_t>(25, p / 2));
}

struct Fitter {
    Eigen::MatrixXd B;
    Eigen::MatrixXd WB;  ///< sqrt(w) B
    Eigen::VectorXd Wy;  ///< sqrt(w) y
    Eigen::MatrixXd D;
    Eigen::VectorXd w;
    Eigen::VectorXd y;

    // Least squares on [sqrt(w) B; sqrt(lambda) D] rather than the normal
    // equations, which lose half the digits once lambda is large.
    CurveFit fit(double lambda) const {
        const Eigen::Index rows = WB.rows() + D.rows();
        Eigen::MatrixXd M(rows, WB.cols());
        M << WB, std::sqrt(lambda) * D;
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
        rhs.head(Wy.size()) = Wy;
        const Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
        const auto R = qr.matrixQR().topRows(M.cols()).triangularView<Eigen::Upper>();
        const Eigen::VectorXd diag = qr.matrixQR().diagonal().cwiseAbs();
        if (!(diag.minCoeff() > 1e-13 * diag.maxCoeff()))
            throw NumericError("singular penalized least squares at lambda=" + format_double(lambda));
        CurveFit out;
        out.lambda = lambda;
        out.fitted = B * qr.solve(rhs);
        // edf = trace(B A^-1 B^T W) with A = R^T R.
        out.edf = R.transpose().solve(WB.transpose()).squaredNorm();
        const double rss = (w.array() * (y - out.fitted).array().square()).sum();
        const double n = static_cast<double>(y.size());
        const double denom = n - out.edf;
        out.gcv = denom > 1e-8 ? n * rss / (denom * denom) : std::numeric_limits<double>::infinity();
        return out;
    }
};

}  // namespace

CurveFit smooth_curve(std::span<const double> ages, std::span<const double> y, std::span<const double> w,
                      const SmoothingConfig& cfg) {
    cfg.validate();
    if (ages.size() != y.size() || ages.size() != w.size())
        throw DimensionError("ages, values and weights differ in length");
    const std::size_t p = ages.size();
    const std::size_t nb = resolve_basis_size(cfg, p);
    std::size_t positive = 0;
    for (std::size_t i = 0; i < p; ++i) {
        if (!std::isfinite(y[i]) || !std::isfinite(ages[i]) || !std::isfinite(w[i]) || w[i] < 0.0)
            throw DataError("non-finite or negative input to smooth_curve at index " + std::to_string(i));
        if (w[i] > 0.0) ++positive;
    }
    if (positive < nb)
        throw DataError("smooth_curve needs at least " + std::to_string(nb) + " positively weighted points, got " +
                        std::to_string(positive));

    Fitter f;
    f.y = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(p));
    f.w = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(p));
    f.w /= f.w.mean();
    f.B = bspline_basis(ages, ages.front(), ages.back(), nb);
    const Eigen::VectorXd root = f.w.cwiseSqrt();
    f.WB = root.asDiagonal() * f.B;
    f.Wy = root.cwiseProduct(f.y);
    f.D = difference_matrix(nb, cfg.penalty_order);

    CurveFit best;
    if (cfg.lambda) {
        best = f.fit(*cfg.lambda);
    } else {
        bool have = false;
        for (double lambda : gcv_lambda_grid()) {
            CurveFit c = f.fit(lambda);
            // Ascending grid: "<=" (with a relative slack) hands ties to the larger lambda.
            if (!have || c.gcv <= best.gcv + 1e-12 * std::abs(best.gcv)) {
                best = std::move(c);
                have = true;
            }
        }
    }
    if (cfg.monotone_from_age) {
        const auto it = std::lower_bound(ages.begin(), ages.end(), *cfg.monotone_from_age);
        const auto start = static_cast<std::size_t>(it - ages.begin());
        if (start < p) isotonic_increasing(std::span<double>(best.fitted.data() + start, p - start));
    }
    return best;
}

void isotonic_increasing(std::span<double> values) {
    // Blocks of (mean, size) merged while they violate the ordering.
    std::vector<double> mean;
    std::vector<std::size_t> size;
    for (double v : values) {
        mean.push_back(v);
        size.push_back(1);
        while (mean.size() > 1 && mean[mean.size() - 2] > mean.back()) {
            const std::size_t n1 = size[size.size() - 2], n2 = size.back();
            const double m = (mean[mean.size() - 2] * n1 + mean.back() * n2) / static_cast<double>(n1 + n2);
            mean.pop_back();
            size.pop_back();
            mean.back() = m;
            size.back() = n1 + n2;
        }
    }
    std::size_t i = 0;
    for (std::size_t b = 0; b < mean.size(); ++b)
        for (std::size_t j = 0; j < size[b]; ++j) values[i++] = mean[b];
}

SmoothedSurface smooth_surface(const MortalitySurface& raw, const SmoothingConfig& cfg, Exec exec) {
    cfg.validate();
    raw.validate();
    if (cfg.weights_mode == WeightsMode::exposure && !raw.exposures)
        throw UsageError("exposure weighting requested but the surface carries no exposures");
    const auto ny = static_cast<std::ptrdiff_t>(raw.year_count());
    const auto na = static_cast<Eigen::Index>(raw.age_count());

    SmoothedSurface out;
    out.config = cfg;
    out.surface = raw;
    out.lambdas.assign(raw.year_count(), 0.0);

    auto smooth_year = [&](std::ptrdiff_t t) {
        const Eigen::VectorXd y = raw.values.row(t).transpose();
        Eigen::VectorXd w = Eigen::VectorXd::Ones(na);
        if (cfg.weights_mode == WeightsMode::exposure) {
            const Eigen::VectorXd mx = y.array().exp();
            const Eigen::VectorXd e = raw.exposures->row(t).transpose();
            w = weights_from_exposure(as_span(mx), as_span(e));
        }
        const CurveFit fit = smooth_curve(raw.ages, as_span(y), as_span(w), cfg);
        out.surface.values.row(t) = fit.fitted.transpose();
        out.lambdas[static_cast<std::size_t>(t)] = fit.lambda;
    };

    for_each_index(ny, exec, smooth_year);
    return out;
}

}  // namespace sigmort
