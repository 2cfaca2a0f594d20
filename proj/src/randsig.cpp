#include "sigmort/randsig.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "sigmort/errors.hpp"
#include "sigmort/rng.hpp"

namespace sigmort {

Activation Activation::scaled_linear(std::size_t d, std::size_t k) {
    return {ActivationKind::linear_scaled, 1.0 / (static_cast<double>(d) * std::sqrt(static_cast<double>(k)))};
}

std::string Activation::tag() const {
    char buf[64];
    switch (kind) {
        case ActivationKind::linear_scaled:
            std::snprintf(buf, sizeof buf, "linear(%.17g)", scale);
            return buf;
        case ActivationKind::constant:
            std::snprintf(buf, sizeof buf, "constant(%.17g)", scale);
            return buf;
        case ActivationKind::tanh:
            return "tanh";
        case ActivationKind::identity:
            return "identity";
    }
    return "unknown";
}

Activation parse_activation(const std::string& name, std::size_t d, std::size_t k) {
    if (name == "linear") return Activation::scaled_linear(d, k);
    if (name == "tanh") return Activation::hyperbolic();
    if (name == "identity") return Activation::identity();
    if (name == "constant") return {ActivationKind::constant, Activation::scaled_linear(d, k).scale};
    throw UsageError("unknown activation '" + name + "' (expected linear, tanh, identity or constant)");
}

std::uint64_t RandSigParams::fingerprint() const {
    std::uint64_t h = fnv1a(&k, sizeof k);
    h = fnv1a(&d, sizeof d, h);
    h = fnv1a(&seed, sizeof seed, h);
    h = fnv1a(&activation.kind, sizeof activation.kind, h);
    h = fnv1a(&activation.scale, sizeof activation.scale, h);
    for (const auto& a : A) h = fnv1a(a.data(), sizeof(double) * a.size(), h);
    for (const auto& v : b) h = fnv1a(v.data(), sizeof(double) * v.size(), h);
    return fnv1a(z0.data(), sizeof(double) * z0.size(), h);
}

RandSigParams sample_params(std::size_t d, std::size_t k, std::uint64_t seed, Activation activation,
                            InitialState initial_state) {
    if (d == 0 || k == 0)
        throw DataError("randomized signature needs d >= 1 and k >= 1 (got d=" + std::to_string(d) +
                        ", k=" + std::to_string(k) + ")");
    RandSigParams params;
    params.k = k;
    params.d = d;
    params.seed = seed;
    params.activation = activation;
    params.initial_state = initial_state;

    NormalStream rng(seed);
    const auto kk = static_cast<Eigen::Index>(k);
    params.A.assign(d, Eigen::MatrixXd(kk, kk));
    for (auto& a : params.A) {
        for (Eigen::Index r = 0; r < kk; ++r)
            for (Eigen::Index c = 0; c < kk; ++c) a(r, c) = rng.normal();
    }
    params.b.assign(d, Eigen::VectorXd(kk));
    for (auto& v : params.b) {
        for (Eigen::Index r = 0; r < kk; ++r) v(r) = rng.normal();
    }
    params.z0.resize(kk);
    for (Eigen::Index r = 0; r < kk; ++r) params.z0(r) = rng.normal();
    if (initial_state == InitialState::zero) params.z0.setZero();
    return params;
}

namespace {

void apply_activation(const Activation& act, Eigen::VectorXd& v) {
    switch (act.kind) {
        case ActivationKind::linear_scaled:
            v *= act.scale;
            break;
        case ActivationKind::tanh:
            v = v.array().tanh().matrix();
            break;
        case ActivationKind::identity:
            break;
        case ActivationKind::constant:
            v.setConstant(act.scale);
            break;
    }
}

}  // namespace

RandomizedSignature randomized_signature(const Path& p, const RandSigParams& params, bool keep_trajectory) {
    if (p.dim() != params.d)
        throw DimensionError("path dimension " + std::to_string(p.dim()) +
                             " does not match reservoir dimension " + std::to_string(params.d));
    RandomizedSignature out;
    out.params_fingerprint = params.fingerprint();
    Eigen::VectorXd z = params.z0;
    Eigen::VectorXd step(z.size());
    Eigen::VectorXd pre(z.size());
    if (keep_trajectory) out.trajectory.push_back(z);
    for (std::size_t n = 1; n < p.size(); ++n) {
        step.setZero();
        for (std::size_t i = 0; i < params.d; ++i) {
            const double dx = p(n, i) - p(n - 1, i);
            if (dx == 0.0) continue;
            pre.noalias() = params.A[i] * z;
            pre += params.b[i];
            apply_activation(params.activation, pre);
            step += dx * pre;
        }
        z += step;
        const double peak = z.cwiseAbs().maxCoeff();
        if (!std::isfinite(peak) || peak > kDivergenceBound)
            throw NumericError("randomized signature diverged at step " + std::to_string(n) +
                               " (max |Z| exceeds 1e12)");
        if (keep_trajectory) out.trajectory.push_back(z);
    }
    out.state = std::move(z);
    return out;
}

Eigen::MatrixXd randomized_signatures(const std::vector<Path>& paths, const RandSigParams& params, Exec exec) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(paths.size()), static_cast<Eigen::Index>(params.k));
    for_each_index(static_cast<std::ptrdiff_t>(paths.size()), exec, [&](std::ptrdiff_t i) {
        out.row(i) = randomized_signature(paths[static_cast<std::size_t>(i)], params).state.transpose();
    });
    return out;
}

std::size_t jl_min_dimension(std::size_t n_points, double eps) {
    if (n_points < 2) throw DataError("JL bound needs at least 2 points");
    if (!(eps > 0.0 && eps < 1.0)) throw DataError("JL distortion must lie in (0, 1)");
    const double bound = 4.0 * std::log(static_cast<double>(n_points)) / (3.0 * eps * eps - 2.0 * eps * eps * eps);
    return static_cast<std::size_t>(std::floor(bound)) + 1;
}

Eigen::MatrixXd gaussian_projection(std::size_t k, std::size_t dim, std::uint64_t seed) {
    if (k == 0 || dim == 0) throw DataError("projection shape must be positive");
    NormalStream rng(seed);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(dim));
    const double scale = 1.0 / std::sqrt(static_cast<double>(k));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = scale * rng.normal();
    return m;
}

}  // namespace sigmort
