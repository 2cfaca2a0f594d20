#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigmort/arima.hpp"
#include "sigmort/decompose.hpp"
#include "sigmort/exec.hpp"
#include "sigmort/forecast.hpp"
#include "sigmort/io.hpp"
#include "sigmort/randsig.hpp"
#include "sigmort/smoothing.hpp"

namespace sigmort {

/// hurs: randomized-signature PCR; huts: truncated-signature PCR;
/// hu: plain FPCA; whu: FPCA with geometrically decaying year weights.
enum class ModelKind { hurs, huts, hu, whu };

ModelKind parse_model(const std::string& name);
std::string to_string(ModelKind m);

struct PipelineConfig {
    ModelKind model = ModelKind::hurs;
    std::size_t k = 100;
    std::size_t order = 3;
    std::size_t components = 6;
    std::string activation = "linear";
    InitialState initial_state = InitialState::normal;
    double kappa = 0.1;
    std::uint64_t seed = 20250101;
    bool smooth = true;
    SmoothingConfig smoothing;
    ArimaOptions arima;

    void validate() const;
    /// Resolved settings as "key=value" lines; model-irrelevant keys omitted.
    std::vector<std::string> describe() const;
};

struct PipelineFit {
    MortalitySurface smoothed;
    std::vector<double> lambdas;  ///< per year; empty when smoothing was skipped
    Eigen::MatrixXd fstar;
    std::optional<FeatureMatrix> features;
    Decomposition decomposition;
    std::vector<std::string> notes;
};

/// Featurizer for the signature models, with the reservoir drawn from `seed`.
Featurizer make_featurizer(const PipelineConfig& cfg, std::uint64_t seed);

/// Smoothing, mean adjustment, features and decomposition. `seed` overrides
/// cfg.seed for the reservoir draw (the backtest passes per-origin seeds).
/// K is clamped to what the data supports, with a note.
PipelineFit fit_pipeline(const MortalitySurface& surface, const PipelineConfig& cfg,
                         std::optional<std::uint64_t> seed = std::nullopt, Exec exec = Exec::parallel);

SurfaceForecast forecast_pipeline(const PipelineFit& fit, std::size_t h, const PipelineConfig& cfg,
                                  Exec exec = Exec::parallel);

}  // namespace sigmort
