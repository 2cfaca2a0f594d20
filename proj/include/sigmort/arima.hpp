#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sigmort {

/// ARIMA(p, d, q) for y, written for the differenced series w = (1 - B)^d y:
///
///   (w_t - c) = sum_i ar[i] (w_{t-i} - c) + e_t + sum_j ma[j] e_{t-j},  e_t ~ N(0, sigma2)
///
/// With `drift` the constant c is estimated (a mean when d = 0, a drift
/// slope when d = 1); otherwise c = 0. Drift is not allowed for d = 2.
struct ArimaModel {
    int p = 0;
    int d = 0;
    int q = 0;
    bool drift = false;
    std::vector<double> ar;
    std::vector<double> ma;
    double constant = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    std::size_t n = 0;         ///< length of the series it was fitted on
    std::size_t n_eff = 0;     ///< observations entering the likelihood
    bool degenerate = false;   ///< exact (zero-variance) model
    std::vector<std::string> warnings;

    std::size_t parameter_count() const { return static_cast<std::size_t>(p + q + (drift ? 1 : 0) + 1); }
    std::string describe() const;
};

struct ArimaOptions {
    int max_p = 2;
    int max_d = 2;
    int max_q = 2;
    bool allow_drift = true;
    double param_tol = 1e-8;
    int max_iter = 500;
    /// Candidates whose AR or MA roots lie within 1 + root_margin of the unit
    /// circle are discarded; near-boundary fits are usually spurious
    /// cancellations.
    double root_margin = 0.01;
};

/// Minimum series length accepted by fit_arima.
inline constexpr std::size_t kMinArimaLength = 10;

/// Fits one candidate by conditional sum of squares followed by exact
/// Gaussian likelihood maximization (BFGS). Returns nothing if the optimizer
/// does not converge or the estimate is not stationary and invertible.
///
/// The likelihood is that of y_{c+1..n} given y_1..y_c, where c =
/// `condition_on` >= d, so models with different d are scored on the same
/// observations.
std::optional<ArimaModel> estimate_arima(std::span<const double> series, int p, int d, int q, bool drift,
                                         std::size_t condition_on, const ArimaOptions& opts = {});

/// Automatic order selection by AICc over p, q in 0..max, d in 0..max_d, with
/// and without drift (d <= 1). AICc ties within 1e-6 go to the smaller p+q+d,
/// then the smaller d. Constant series give the trivial model; a series with
/// constant first differences gives an exact random walk with drift. If no
/// candidate converges, a random walk with drift is returned with a warning.
ArimaModel fit_arima(std::span<const double> series, const ArimaOptions& opts = {});

/// Minimum-MSE point forecasts for horizons 1..h given the observed series.
std::vector<double> forecast_arima(const ArimaModel& model, std::span<const double> series, std::size_t h);

/// Maps unconstrained reals to coefficients of a stationary AR polynomial via
/// partial autocorrelations tanh(u) and the Durbin-Levinson recursion.
std::vector<double> pacf_to_ar(std::span<const double> u);

/// True when all roots of 1 - sum coef_i z^i lie outside the unit circle by
/// more than `margin`.
bool roots_outside_unit_circle(std::span<const double> coef, double margin = 1e-6);

}  // namespace sigmort
