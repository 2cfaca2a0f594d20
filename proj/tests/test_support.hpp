#pragma once

// Shared generators and independent oracles for the test suites. Nothing here
// calls into the code paths it is used to check.

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sigmort/io.hpp"
#include "sigmort/paths.hpp"
#include "sigmort/rng.hpp"

namespace sigmort::test {

inline Path random_path(NormalStream& rng, std::size_t dim, std::size_t points, double scale = 1.0) {
    std::vector<double> c(dim * points);
    for (auto& v : c) v = scale * rng.normal();
    return Path(dim, std::move(c));
}

/// Iterated integrals up to level 3 of the piecewise-linear path by nested
/// trapezoidal sums on a grid with `refinement` sub-steps in total. Returns
/// coefficients in level-major lexicographic order, constant term first.
inline std::vector<double> brute_force_signature(const Path& p, std::size_t order, std::size_t refinement) {
    const std::size_t d = p.dim();
    const std::size_t segments = p.increments();
    const std::size_t per = std::max<std::size_t>(1, refinement / segments);
    std::vector<std::vector<double>> grid;
    for (std::size_t s = 0; s < segments; ++s) {
        for (std::size_t k = 0; k < per; ++k) {
            const double t = static_cast<double>(k) / static_cast<double>(per);
            std::vector<double> x(d);
            for (std::size_t i = 0; i < d; ++i) x[i] = (1 - t) * p(s, i) + t * p(s + 1, i);
            grid.push_back(x);
        }
    }
    grid.push_back(std::vector<double>(p.point(segments).begin(), p.point(segments).end()));

    std::vector<double> l1(d, 0.0), l2(d * d, 0.0), l3(d * d * d, 0.0);
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
        std::vector<double> dx(d);
        for (std::size_t i = 0; i < d; ++i) dx[i] = grid[k + 1][i] - grid[k][i];
        std::vector<double> l1n(d), l2n(d * d);
        for (std::size_t i = 0; i < d; ++i) l1n[i] = l1[i] + dx[i];
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) l2n[i * d + j] = l2[i * d + j] + 0.5 * (l1[i] + l1n[i]) * dx[j];
        if (order >= 3) {
            for (std::size_t a = 0; a < d * d; ++a)
                for (std::size_t j = 0; j < d; ++j) l3[a * d + j] += 0.5 * (l2[a] + l2n[a]) * dx[j];
        }
        l1 = l1n;
        l2 = l2n;
    }
    std::vector<double> out{1.0};
    out.insert(out.end(), l1.begin(), l1.end());
    if (order >= 2) out.insert(out.end(), l2.begin(), l2.end());
    if (order >= 3) out.insert(out.end(), l3.begin(), l3.end());
    return out;
}

/// Lee-Carter style log rates a(x) + b(x) kappa_t + noise with linear kappa.
struct LeeCarter {
    Eigen::VectorXd a;
    Eigen::VectorXd b;
    Eigen::VectorXd kappa;
    Eigen::MatrixXd truth;
    Eigen::MatrixXd observed;
};

inline LeeCarter lee_carter(std::size_t years, std::size_t ages, double drift, double noise_sd, std::uint64_t seed) {
    LeeCarter lc;
    const auto ny = static_cast<Eigen::Index>(years);
    const auto na = static_cast<Eigen::Index>(ages);
    lc.a.resize(na);
    lc.b.resize(na);
    for (Eigen::Index x = 0; x < na; ++x) {
        const double age = static_cast<double>(x) * 100.0 / static_cast<double>(std::max<std::size_t>(ages - 1, 1));
        lc.a(x) = -9.5 + 0.085 * age + 3.0 * std::exp(-age / 2.0);
        lc.b(x) = 0.6 + 0.8 * std::exp(-age / 40.0);
    }
    lc.b /= lc.b.sum();
    lc.kappa.resize(ny);
    for (Eigen::Index t = 0; t < ny; ++t) lc.kappa(t) = -drift * (static_cast<double>(t) - 0.5 * static_cast<double>(ny - 1));
    lc.truth = lc.a.transpose().replicate(ny, 1) + lc.kappa * lc.b.transpose();
    NormalStream rng(seed);
    lc.observed = lc.truth;
    for (Eigen::Index t = 0; t < ny; ++t)
        for (Eigen::Index x = 0; x < na; ++x) lc.observed(t, x) += noise_sd * rng.normal();
    return lc;
}

inline std::vector<int> year_range(int first, std::size_t n) {
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = first + static_cast<int>(i);
    return y;
}

inline Eigen::MatrixXd random_matrix(NormalStream& rng, Eigen::Index rows, Eigen::Index cols) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = rng.normal();
    return m;
}

inline std::vector<double> simulate_ar1(NormalStream& rng, double phi, std::size_t n, std::size_t burn = 100) {
    std::vector<double> y;
    double v = 0.0;
    for (std::size_t t = 0; t < n + burn; ++t) {
        v = phi * v + rng.normal();
        if (t >= burn) y.push_back(v);
    }
    return y;
}

}  // namespace sigmort::test
