#include "sigmort/decompose.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "sigmort/errors.hpp"
#include "sigmort/format.hpp"
#include "sigmort/paths.hpp"
#include "sigmort/signature.hpp"

namespace sigmort {

Eigen::VectorXd mean_function(const Eigen::MatrixXd& curves) {
    if (curves.rows() < 1) throw DataError("mean function needs at least one year");
    return curves.colwise().mean().transpose();
}

Eigen::MatrixXd center(const Eigen::MatrixXd& curves, const Eigen::VectorXd& mu) {
    if (curves.cols() != mu.size())
        throw DimensionError("mean function has " + std::to_string(mu.size()) + " ages, curves have " +
                             std::to_string(curves.cols()));
    return curves.rowwise() - mu.transpose();
}

std::string featurizer_tag(const Featurizer& f) {
    if (const auto* t = std::get_if<TruncatedFeatures>(&f)) return "truncated(m=" + std::to_string(t->order) + ")";
    const auto& r = std::get<RandomizedFeatures>(f).params;
    return "randomized(k=" + std::to_string(r.k) + ",seed=" + std::to_string(r.seed) +
           ",activation=" + r.activation.tag() + ",z0=" + (r.initial_state == InitialState::zero ? "zero" : "normal") +
           ",fingerprint=" + hex64(r.fingerprint()) + ")";
}

Eigen::MatrixXd raw_features(const Eigen::MatrixXd& fstar, const Featurizer& featurizer, Exec exec) {
    if (fstar.rows() < 3) throw DataError("signature features need at least 3 years, got " + std::to_string(fstar.rows()));
    const Eigen::Index p = fstar.cols();
    std::vector<Path> paths;
    paths.reserve(static_cast<std::size_t>(p));
    for (Eigen::Index i = 0; i < p; ++i) {
        const Eigen::VectorXd series = fstar.col(i);
        paths.push_back(embed_series({series.data(), static_cast<std::size_t>(series.size())}));
    }

    if (const auto* rf = std::get_if<RandomizedFeatures>(&featurizer)) {
        if (rf->params.d != kEmbeddingDim)
            throw DimensionError("randomized features need a reservoir of dimension 3");
        return randomized_signatures(paths, rf->params, exec);
    }

    const std::size_t order = std::get<TruncatedFeatures>(featurizer).order;
    if (order < 1) throw UsageError("truncation order must be at least 1");
    const auto width = static_cast<Eigen::Index>(sig_dim(kEmbeddingDim, order) - 1);
    Eigen::MatrixXd out(p, width);
    auto row = [&](Eigen::Index i) {
        const TruncatedSignature s = truncated_signature(paths[static_cast<std::size_t>(i)], order);
        out.row(i) = Eigen::Map<const Eigen::RowVectorXd>(s.coeffs().data() + 1, width);
    };
    for_each_index(p, exec, row);
    return out;
}

FeatureMatrix standardize_features(const Eigen::MatrixXd& raw, std::string tag) {
    FeatureMatrix fm;
    fm.raw_width = static_cast<std::size_t>(raw.cols());
    fm.tag = std::move(tag);
    const double n = static_cast<double>(raw.rows());
    std::vector<double> means, sds;
    for (Eigen::Index c = 0; c < raw.cols(); ++c) {
        const double mean = raw.col(c).mean();
        const double sd = std::sqrt((raw.col(c).array() - mean).square().sum() / n);
        if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) {
            fm.dropped.push_back(static_cast<std::size_t>(c));
            continue;
        }
        fm.kept.push_back(static_cast<std::size_t>(c));
        means.push_back(mean);
        sds.push_back(sd);
    }
    fm.values.resize(raw.rows(), static_cast<Eigen::Index>(fm.kept.size()));
    fm.column_means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
    fm.column_sds = Eigen::Map<Eigen::VectorXd>(sds.data(), static_cast<Eigen::Index>(sds.size()));
    for (std::size_t j = 0; j < fm.kept.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        fm.values.col(jj) = (raw.col(static_cast<Eigen::Index>(fm.kept[j])).array() - means[j]) / sds[j];
    }
    return fm;
}

FeatureMatrix feature_matrix(const Eigen::MatrixXd& fstar, const Featurizer& featurizer, Exec exec) {
    return standardize_features(raw_features(fstar, featurizer, exec), featurizer_tag(featurizer));
}

Eigen::MatrixXd Decomposition::reconstruct() const {
    Eigen::MatrixXd out = scores * basis.transpose() + residuals;
    out.rowwise() += mu.transpose();
    return out;
}

double Decomposition::basis_at(std::size_t k, double age) const {
    const auto col = static_cast<Eigen::Index>(k);
    if (ages.empty()) throw DataError("decomposition carries no age grid");
    if (age <= ages.front()) return basis(0, col);
    if (age >= ages.back()) return basis(basis.rows() - 1, col);
    const auto it = std::upper_bound(ages.begin(), ages.end(), age);
    const auto hi = static_cast<Eigen::Index>(it - ages.begin());
    const auto lo = hi - 1;
    const double t = (age - ages[lo]) / (ages[hi] - ages[lo]);
    return (1.0 - t) * basis(lo, col) + t * basis(hi, col);
}

Eigen::VectorXd normalize_signs(Eigen::MatrixXd& columns) {
    Eigen::VectorXd signs = Eigen::VectorXd::Ones(columns.cols());
    for (Eigen::Index k = 0; k < columns.cols(); ++k) {
        Eigen::Index idx = 0;
        columns.col(k).cwiseAbs().maxCoeff(&idx);
        if (columns(idx, k) < 0.0) {
            columns.col(k) *= -1.0;
            signs(k) = -1.0;
        }
    }
    return signs;
}

namespace {

std::vector<double> grid_or_index(std::span<const double> ages, Eigen::Index p) {
    if (!ages.empty()) {
        if (static_cast<Eigen::Index>(ages.size()) != p) throw DimensionError("age grid length does not match curves");
        return {ages.begin(), ages.end()};
    }
    std::vector<double> g(static_cast<std::size_t>(p));
    std::iota(g.begin(), g.end(), 0.0);
    return g;
}

void complete(Decomposition& dec, const Eigen::MatrixXd& fstar) {
    dec.scores = fstar * dec.basis;
    dec.residuals = fstar - dec.scores * dec.basis.transpose();
}

}  // namespace

Decomposition pcr_decompose(const Eigen::MatrixXd& fstar, const Eigen::VectorXd& mu, const FeatureMatrix& features,
                            std::size_t K, std::span<const double> ages) {
    const Eigen::Index n = fstar.rows();
    const Eigen::Index p = fstar.cols();
    const Eigen::Index R = features.values.cols();
    if (features.values.rows() != p)
        throw DimensionError("feature matrix has " + std::to_string(features.values.rows()) + " rows for " +
                             std::to_string(p) + " ages");
    if (mu.size() != p) throw DimensionError("mean function length does not match curves");
    const auto Ki = static_cast<Eigen::Index>(K);
    if (Ki > std::min({p, R + 1, n}))
        throw DataError("K=" + std::to_string(K) + " exceeds min(ages, features + 1, years)=" +
                        std::to_string(std::min({p, R + 1, n})));

    Decomposition dec;
    dec.mu = mu;
    dec.ages = grid_or_index(ages, p);

    Eigen::Index rank = 0;
    Eigen::MatrixXd U;
    if (R > 0) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(features.values, Eigen::ComputeThinU);
        const Eigen::VectorXd& s = svd.singularValues();
        const double tol = std::max<double>(p, R) * std::numeric_limits<double>::epsilon() * (s.size() ? s(0) : 0.0);
        while (rank < s.size() && s(rank) > tol) ++rank;
        U = svd.matrixU();
    }
    // The regression carries an intercept over ages. Centered features can
    // never produce it, so the constant direction takes one of the K slots.
    const Eigen::Index pcs = std::max<Eigen::Index>(Ki - 1, 0);
    Eigen::Index take = pcs;
    if (take > rank) {
        dec.warnings.push_back("feature matrix rank " + std::to_string(rank) + " < K-1=" + std::to_string(pcs) +
                               "; using " + std::to_string(rank + 1) + " components");
        take = rank;
    }
    const Eigen::Index use = Ki > 0 ? take + 1 : 0;
    Eigen::MatrixXd Z(p, use);
    if (use > 0) {
        Z.col(0).setConstant(1.0 / std::sqrt(static_cast<double>(p)));
        Z.rightCols(take) = U.leftCols(take);
    }
    normalize_signs(Z);

    // Order by the share of fstar explained.
    const double total = fstar.squaredNorm();
    Eigen::VectorXd share(use);
    for (Eigen::Index k = 0; k < use; ++k) share(k) = total > 0.0 ? (fstar * Z.col(k)).squaredNorm() / total : 0.0;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(use));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return share(a) > share(b); });
    dec.basis.resize(p, use);
    dec.variance_explained.resize(use);
    for (Eigen::Index k = 0; k < use; ++k) {
        dec.basis.col(k) = Z.col(order[static_cast<std::size_t>(k)]);
        dec.variance_explained(k) = share(order[static_cast<std::size_t>(k)]);
    }
    complete(dec, fstar);
    return dec;
}

std::vector<double> geometric_weights(std::size_t n, double kappa) {
    if (!(kappa >= 0.0 && kappa < 1.0)) throw UsageError("kappa must lie in [0, 1)");
    std::vector<double> w(n);
    double sum = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        w[t] = std::pow(1.0 - kappa, static_cast<double>(n - 1 - t));
        sum += w[t];
    }
    for (double& v : w) v /= sum;
    return w;
}

Decomposition fpca_decompose(const Eigen::MatrixXd& fstar, const Eigen::VectorXd& mu, std::size_t K,
                             std::span<const double> year_weights, std::span<const double> ages) {
    const Eigen::Index n = fstar.rows();
    const Eigen::Index p = fstar.cols();
    const auto Ki = static_cast<Eigen::Index>(K);
    if (Ki > std::min(n, p))
        throw DataError("K=" + std::to_string(K) + " exceeds min(years, ages)=" + std::to_string(std::min(n, p)));
    if (mu.size() != p) throw DimensionError("mean function length does not match curves");

    Eigen::VectorXd w = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
    if (!year_weights.empty()) {
        if (static_cast<Eigen::Index>(year_weights.size()) != n) throw DimensionError("one weight per year required");
        double sum = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!(year_weights[t] > 0.0)) throw DataError("year weights must be positive");
            w(t) = year_weights[t];
            sum += w(t);
        }
        w /= sum;
    }

    Decomposition dec;
    dec.mu = mu;
    dec.ages = grid_or_index(ages, p);
    // Eigenvectors of sum_t w_t f_t f_t^T are the right singular vectors of diag(sqrt(w)) F.
    const Eigen::MatrixXd weighted = w.array().sqrt().matrix().asDiagonal() * fstar;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(weighted, Eigen::ComputeThinV);
    const Eigen::VectorXd s2 = svd.singularValues().array().square();
    const double total = s2.sum();
    dec.basis = svd.matrixV().leftCols(Ki);
    normalize_signs(dec.basis);
    dec.variance_explained = total > 0.0 ? Eigen::VectorXd(s2.head(Ki) / total) : Eigen::VectorXd::Zero(Ki);
    complete(dec, fstar);
    return dec;
}

}  // namespace sigmort
