#include "sigmort/forecast.hpp"

#include <string>

#include "sigmort/errors.hpp"

namespace sigmort {

SurfaceForecast forecast_surface(const Decomposition& dec, std::size_t h, const ArimaOptions& opts, Exec exec) {
    if (h < 1) throw DataError("forecast horizon must be at least 1");
    const Eigen::Index K = dec.basis.cols();
    const auto hh = static_cast<Eigen::Index>(h);
    SurfaceForecast out;
    out.scores.resize(hh, K);
    out.models.resize(static_cast<std::size_t>(K));

    auto one = [&](Eigen::Index k) {
        const Eigen::VectorXd series = dec.scores.col(k);
        const std::span<const double> s(series.data(), static_cast<std::size_t>(series.size()));
        ArimaModel m = fit_arima(s, opts);
        const std::vector<double> f = forecast_arima(m, s, h);
        for (Eigen::Index j = 0; j < hh; ++j) out.scores(j, k) = f[static_cast<std::size_t>(j)];
        out.models[static_cast<std::size_t>(k)] = std::move(m);
    };
    for_each_index(K, exec, one);
    out.curves = out.scores * dec.basis.transpose();
    out.curves.rowwise() += dec.mu.transpose();
    return out;
}

}  // namespace sigmort
