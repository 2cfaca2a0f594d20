#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigmort/exec.hpp"
#include "sigmort/io.hpp"

namespace sigmort {

enum class WeightsMode { uniform, exposure };

struct SmoothingConfig {
    /// Number of cubic B-spline basis functions; 0 selects min(25, p/2), at least 4.
    std::size_t basis_size = 0;
    int penalty_order = 2;
    /// Fixed smoothing parameter; empty selects it by GCV.
    std::optional<double> lambda;
    WeightsMode weights_mode = WeightsMode::uniform;
    /// When set, fitted values at ages >= this are projected onto
    /// non-decreasing sequences.
    std::optional<double> monotone_from_age;

    void validate() const;
    std::string describe() const;
};

/// Weight floor applied after normalization.
inline constexpr double kWeightFloor = 1e-4;

/// Candidate smoothing parameters searched by GCV: 30 log-spaced values in [1e-4, 1e6].
std::vector<double> gcv_lambda_grid();

/// Inverse-variance weights for log rates under Poisson counts: exposure * mx,
/// normalized to mean 1, then floored at kWeightFloor.
Eigen::VectorXd weights_from_exposure(std::span<const double> mx, std::span<const double> exposure);

/// Equally spaced cubic B-spline basis on [lo, hi] evaluated at `x`
/// (rows = points, cols = basis functions).
Eigen::MatrixXd bspline_basis(std::span<const double> x, double lo, double hi, std::size_t basis_size);

/// D^T D for the order-r difference matrix on n coefficients.
Eigen::MatrixXd difference_penalty(std::size_t n, int order);

struct CurveFit {
    Eigen::VectorXd fitted;
    double lambda = 0.0;
    double gcv = 0.0;
    double edf = 0.0;  ///< trace of the hat matrix
};

/// Penalized regression spline minimizing sum w (y - f)^2 + lambda |D c|^2.
/// Weights are rescaled to mean 1 before fitting, so a common factor on w
/// changes nothing. With no fixed lambda the GCV-optimal grid value is used,
/// ties going to the larger lambda.
CurveFit smooth_curve(std::span<const double> ages, std::span<const double> y, std::span<const double> w,
                      const SmoothingConfig& cfg);

struct SmoothedSurface {
    MortalitySurface surface;
    std::vector<double> lambdas;  ///< per year
    SmoothingConfig config;
};

/// Smooths each year's curve independently.
SmoothedSurface smooth_surface(const MortalitySurface& raw, const SmoothingConfig& cfg,
                               Exec exec = Exec::parallel);

/// Pool-adjacent-violators projection onto non-decreasing sequences.
void isotonic_increasing(std::span<double> values);

}  // namespace sigmort
