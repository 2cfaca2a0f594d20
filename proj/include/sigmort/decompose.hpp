#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "sigmort/exec.hpp"
#include "sigmort/randsig.hpp"

namespace sigmort {

/// Pointwise mean over years (rows) of a year x age matrix.
Eigen::VectorXd mean_function(const Eigen::MatrixXd& curves);

/// Subtracts mu from every row.
Eigen::MatrixXd center(const Eigen::MatrixXd& curves, const Eigen::VectorXd& mu);

struct TruncatedFeatures {
    std::size_t order = 3;
};

struct RandomizedFeatures {
    RandSigParams params;
};

using Featurizer = std::variant<TruncatedFeatures, RandomizedFeatures>;

std::string featurizer_tag(const Featurizer& f);

/// Standardized signature features, one row per age.
struct FeatureMatrix {
    Eigen::MatrixXd values;               ///< p x R, columns mean 0 and sd 1
    Eigen::VectorXd column_means;         ///< of the kept raw columns
    Eigen::VectorXd column_sds;           ///< population sd of the kept raw columns
    std::vector<std::size_t> kept;        ///< raw column index of each kept column
    std::vector<std::size_t> dropped;     ///< zero-variance raw columns
    std::size_t raw_width = 0;
    std::string tag;
};

/// Raw (unstandardized) signature rows: row i is the signature of
/// embed_series(fstar.col(i)) without its constant term.
Eigen::MatrixXd raw_features(const Eigen::MatrixXd& fstar, const Featurizer& featurizer,
                             Exec exec = Exec::parallel);

/// Standardizes raw feature columns, dropping columns whose population sd is
/// at most 1e-12 * (1 + |mean|).
FeatureMatrix standardize_features(const Eigen::MatrixXd& raw, std::string tag);

/// raw_features followed by standardize_features. Needs at least 3 years.
FeatureMatrix feature_matrix(const Eigen::MatrixXd& fstar, const Featurizer& featurizer,
                             Exec exec = Exec::parallel);

/// f_t(x) = mu(x) + sum_k scores(t,k) basis(x,k) + residuals(t,x).
struct Decomposition {
    Eigen::VectorXd mu;                 ///< p
    Eigen::MatrixXd basis;              ///< p x K, orthonormal columns
    Eigen::MatrixXd scores;             ///< n x K
    Eigen::MatrixXd residuals;          ///< n x p
    Eigen::VectorXd variance_explained; ///< K, non-increasing
    std::vector<double> ages;           ///< grid the basis lives on
    std::vector<std::string> warnings;

    std::size_t components() const { return static_cast<std::size_t>(basis.cols()); }

    /// mu + scores * basis^T + residuals.
    Eigen::MatrixXd reconstruct() const;

    /// Linear interpolation of basis column k at an arbitrary age (clamped to
    /// the grid ends).
    double basis_at(std::size_t k, double age) const;
};

/// Principal component regression on signature features.
///
/// The basis is the constant age profile (the regression intercept) plus the
/// top K-1 principal directions of the standardized features, viewed as score
/// vectors over ages. The per-year coefficients are least-squares projections
/// of fstar rows onto span{Z}. Components are ordered by the share of fstar's
/// sum of squares they explain. K-1 above the numerical rank of the features
/// is reduced with a warning; K above min(p, R + 1, n) throws.
Decomposition pcr_decompose(const Eigen::MatrixXd& fstar, const Eigen::VectorXd& mu, const FeatureMatrix& features,
                            std::size_t K, std::span<const double> ages = {});

/// Functional PCA of the curves. With weights (one per year, positive) the
/// covariance is sum_t w_t f_t f_t^T with w normalized to sum 1.
Decomposition fpca_decompose(const Eigen::MatrixXd& fstar, const Eigen::VectorXd& mu, std::size_t K,
                             std::span<const double> year_weights = {}, std::span<const double> ages = {});

/// w_t proportional to (1 - kappa)^(n - t), t = 1..n, normalized to sum 1.
std::vector<double> geometric_weights(std::size_t n, double kappa);

/// Flips each column so its largest-magnitude entry is positive. Returns the
/// applied signs.
Eigen::VectorXd normalize_signs(Eigen::MatrixXd& columns);

}  // namespace sigmort
