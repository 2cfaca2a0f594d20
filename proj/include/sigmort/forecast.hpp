#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "sigmort/arima.hpp"
#include "sigmort/decompose.hpp"
#include "sigmort/exec.hpp"

namespace sigmort {

struct SurfaceForecast {
    Eigen::MatrixXd curves;          ///< h x p: mu + sum_k beta_hat(n+j, k) Z_k
    Eigen::MatrixXd scores;          ///< h x K
    std::vector<ArimaModel> models;  ///< one per component
};

/// Forecasts each score series independently with fit_arima / forecast_arima
/// and rebuilds the curves. K = 0 yields mu at every horizon.
SurfaceForecast forecast_surface(const Decomposition& dec, std::size_t h, const ArimaOptions& opts = {},
                                 Exec exec = Exec::parallel);

}  // namespace sigmort
