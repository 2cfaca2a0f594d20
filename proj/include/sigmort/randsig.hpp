#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sigmort/exec.hpp"
#include "sigmort/paths.hpp"

namespace sigmort {

enum class ActivationKind {
    linear_scaled,  ///< sigma(x) = c * x
    tanh,           ///< sigma(x) = tanh(x)
    identity,       ///< sigma(x) = x
    constant,       ///< sigma(x) = c, ignores its argument (sensitivity variant)
};

struct Activation {
    ActivationKind kind = ActivationKind::linear_scaled;
    double scale = 1.0;

    /// Linear activation with slope 1 / (d * sqrt(k)).
    static Activation scaled_linear(std::size_t d, std::size_t k);
    static Activation identity() { return {ActivationKind::identity, 1.0}; }
    static Activation hyperbolic() { return {ActivationKind::tanh, 1.0}; }

    std::string tag() const;
};

/// Parses "linear", "tanh", "identity" or "constant"; the scale of the
/// linear and constant variants defaults to 1 / (d * sqrt(k)).
Activation parse_activation(const std::string& name, std::size_t d, std::size_t k);

enum class InitialState { normal, zero };

/// Random reservoir for the randomized signature.
///
/// sample_params draws every entry from NormalStream(seed) in this order:
/// A_1 row-major, ..., A_d row-major, then b_1, ..., b_d, then z0. The z0 draws
/// are consumed even for InitialState::zero so that A and b do not depend on it.
struct RandSigParams {
    std::size_t k = 0;
    std::size_t d = 0;
    std::uint64_t seed = 0;
    Activation activation;
    InitialState initial_state = InitialState::normal;
    std::vector<Eigen::MatrixXd> A;
    std::vector<Eigen::VectorXd> b;
    Eigen::VectorXd z0;

    std::uint64_t fingerprint() const;
};

RandSigParams sample_params(std::size_t d, std::size_t k, std::uint64_t seed, Activation activation,
                            InitialState initial_state = InitialState::normal);

struct RandomizedSignature {
    Eigen::VectorXd state;
    std::uint64_t params_fingerprint = 0;
    /// Z_{t_0} ... Z_{t_N}; only filled when requested.
    std::vector<Eigen::VectorXd> trajectory;
};

/// Magnitude beyond which the recursion is declared divergent.
inline constexpr double kDivergenceBound = 1e12;

/// Euler recursion Z_n = Z_{n-1} + sum_i sigma(A_i Z_{n-1} + b_i) dX^i_n, from
/// Z_0 = z0; returns Z_N. Throws NumericError naming the step if any state
/// entry leaves [-1e12, 1e12] or becomes non-finite.
RandomizedSignature randomized_signature(const Path& p, const RandSigParams& params,
                                         bool keep_trajectory = false);

/// Randomized signatures of many paths sharing one reservoir; rows of the
/// result are the terminal states.
Eigen::MatrixXd randomized_signatures(const std::vector<Path>& paths, const RandSigParams& params,
                                      Exec exec = Exec::parallel);

/// Smallest integer k with k > 4 ln(N) / (3 eps^2 - 2 eps^3).
std::size_t jl_min_dimension(std::size_t n_points, double eps);

/// k x dim matrix of i.i.d. standard normals scaled by 1/sqrt(k), drawn
/// row-major from NormalStream(seed).
Eigen::MatrixXd gaussian_projection(std::size_t k, std::size_t dim, std::uint64_t seed);

}  // namespace sigmort
