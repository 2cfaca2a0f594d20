#include "sigmort/pipeline.hpp"

#include <algorithm>

#include "sigmort/errors.hpp"
#include "sigmort/format.hpp"
#include "sigmort/paths.hpp"

namespace sigmort {

ModelKind parse_model(const std::string& name) {
    if (name == "hurs") return ModelKind::hurs;
    if (name == "huts") return ModelKind::huts;
    if (name == "hu") return ModelKind::hu;
    if (name == "whu") return ModelKind::whu;
    throw UsageError("unknown model '" + name + "' (expected hurs, huts, hu or whu)");
}

std::string to_string(ModelKind m) {
    switch (m) {
        case ModelKind::hurs: return "hurs";
        case ModelKind::huts: return "huts";
        case ModelKind::hu: return "hu";
        case ModelKind::whu: return "whu";
    }
    return "?";
}

void PipelineConfig::validate() const {
    if (components < 1) throw UsageError("components must be at least 1");
    if (model == ModelKind::hurs) {
        if (k < 1) throw UsageError("k must be at least 1");
        parse_activation(activation, kEmbeddingDim, k);
    }
    if (model == ModelKind::huts && order < 1) throw UsageError("truncation order must be at least 1");
    if (model == ModelKind::whu && !(kappa >= 0.0 && kappa < 1.0)) throw UsageError("kappa must lie in [0, 1)");
    smoothing.validate();
}

std::vector<std::string> PipelineConfig::describe() const {
    std::vector<std::string> out;
    out.push_back("model=" + to_string(model));
    if (model == ModelKind::hurs) {
        out.push_back("k=" + std::to_string(k));
        out.push_back("activation=" + parse_activation(activation, kEmbeddingDim, k).tag());
        out.push_back(std::string("z0=") + (initial_state == InitialState::zero ? "zero" : "normal"));
        out.push_back("seed=" + std::to_string(seed));
    }
    if (model == ModelKind::huts) out.push_back("order=" + std::to_string(order));
    if (model == ModelKind::hurs || model == ModelKind::huts)
        out.push_back("embedding=basepoint,lead-lag,time");
    if (model == ModelKind::whu) out.push_back("kappa=" + format_double(kappa));
    out.push_back("components=" + std::to_string(components));
    out.push_back("smoothing=" + (smooth ? smoothing.describe() : std::string("off")));
    out.push_back("arima=max(" + std::to_string(arima.max_p) + "," + std::to_string(arima.max_d) + "," +
                  std::to_string(arima.max_q) + ") drift=" + (arima.allow_drift ? "yes" : "no"));
    return out;
}

Featurizer make_featurizer(const PipelineConfig& cfg, std::uint64_t seed) {
    if (cfg.model == ModelKind::huts) return TruncatedFeatures{cfg.order};
    if (cfg.model != ModelKind::hurs) throw UsageError("model " + to_string(cfg.model) + " has no featurizer");
    const Activation act = parse_activation(cfg.activation, kEmbeddingDim, cfg.k);
    return RandomizedFeatures{sample_params(kEmbeddingDim, cfg.k, seed, act, cfg.initial_state)};
}

PipelineFit fit_pipeline(const MortalitySurface& surface, const PipelineConfig& cfg, std::optional<std::uint64_t> seed,
                         Exec exec) {
    cfg.validate();
    surface.validate();
    if (surface.year_count() < 3) throw DataError("at least 3 years are needed to fit");
    PipelineFit fit;

    if (cfg.smooth && surface.age_count() >= 4) {
        SmoothedSurface s = smooth_surface(surface, cfg.smoothing, exec);
        fit.smoothed = std::move(s.surface);
        fit.lambdas = std::move(s.lambdas);
    } else {
        if (cfg.smooth) fit.notes.push_back("smoothing skipped: fewer than 4 ages");
        fit.smoothed = surface;
    }

    const Eigen::VectorXd mu = mean_function(fit.smoothed.values);
    fit.fstar = center(fit.smoothed.values, mu);
    const auto n = static_cast<std::size_t>(fit.fstar.rows());
    const auto p = static_cast<std::size_t>(fit.fstar.cols());

    std::size_t K = cfg.components;
    auto clamp_k = [&](std::size_t limit) {
        if (K > limit) {
            fit.notes.push_back("components reduced from " + std::to_string(K) + " to " + std::to_string(limit));
            K = limit;
        }
    };

    switch (cfg.model) {
        case ModelKind::hurs:
        case ModelKind::huts: {
            const Featurizer f = make_featurizer(cfg, seed.value_or(cfg.seed));
            fit.features = feature_matrix(fit.fstar, f, exec);
            if (!fit.features->dropped.empty())
                fit.notes.push_back("dropped " + std::to_string(fit.features->dropped.size()) +
                                    " zero-variance feature columns");
            clamp_k(std::min({n, p, static_cast<std::size_t>(fit.features->values.cols()) + 1}));
            fit.decomposition = pcr_decompose(fit.fstar, mu, *fit.features, K, fit.smoothed.ages);
            break;
        }
        case ModelKind::hu:
            clamp_k(std::min(n, p));
            fit.decomposition = fpca_decompose(fit.fstar, mu, K, {}, fit.smoothed.ages);
            break;
        case ModelKind::whu: {
            clamp_k(std::min(n, p));
            const std::vector<double> w = geometric_weights(n, cfg.kappa);
            fit.decomposition = fpca_decompose(fit.fstar, mu, K, w, fit.smoothed.ages);
            break;
        }
    }
    for (const auto& w : fit.decomposition.warnings) fit.notes.push_back(w);
    return fit;
}

SurfaceForecast forecast_pipeline(const PipelineFit& fit, std::size_t h, const PipelineConfig& cfg, Exec exec) {
    return forecast_surface(fit.decomposition, h, cfg.arima, exec);
}

}  // namespace sigmort
