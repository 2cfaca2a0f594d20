#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sigmort/errors.hpp"
#include "sigmort/randsig.hpp"
#include "test_support.hpp"

using namespace sigmort;

namespace {

// Straight-line Euler recursion with plain loops, independent of the Eigen path.
std::vector<double> reference_recursion(const Path& p, const RandSigParams& prm) {
    const std::size_t k = prm.k;
    std::vector<double> z(prm.z0.data(), prm.z0.data() + k);
    for (std::size_t n = 1; n < p.size(); ++n) {
        std::vector<double> next = z;
        for (std::size_t i = 0; i < prm.d; ++i) {
            const double dx = p(n, i) - p(n - 1, i);
            for (std::size_t r = 0; r < k; ++r) {
                double pre = prm.b[i](static_cast<Eigen::Index>(r));
                for (std::size_t c = 0; c < k; ++c)
                    pre += prm.A[i](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) * z[c];
                double act = pre;
                switch (prm.activation.kind) {
                    case ActivationKind::linear_scaled: act = prm.activation.scale * pre; break;
                    case ActivationKind::tanh: act = std::tanh(pre); break;
                    case ActivationKind::identity: break;
                    case ActivationKind::constant: act = prm.activation.scale; break;
                }
                next[r] += act * dx;
            }
        }
        z = next;
    }
    return z;
}

}  // namespace

TEST_CASE("sample_params is deterministic and follows the draw order") {
    const auto a = sample_params(3, 8, 99, Activation::scaled_linear(3, 8));
    const auto b = sample_params(3, 8, 99, Activation::scaled_linear(3, 8));
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.A[i] == b.A[i]);
        CHECK(a.b[i] == b.b[i]);
    }
    CHECK(a.z0 == b.z0);
    CHECK(a.fingerprint() == b.fingerprint());

    const auto c = sample_params(3, 8, 100, Activation::scaled_linear(3, 8));
    CHECK(c.A[0] != a.A[0]);
    CHECK(c.fingerprint() != a.fingerprint());

    NormalStream rng(99);
    CHECK(a.A[0](0, 0) == rng.normal());
    CHECK(a.A[0](0, 1) == rng.normal());
    for (int i = 0; i < 8 * 8 * 3 - 2; ++i) rng.normal();
    CHECK(a.b[0](0) == rng.normal());
    for (int i = 0; i < 8 * 3 - 1; ++i) rng.normal();
    CHECK(a.z0(0) == rng.normal());

    const auto z = sample_params(3, 8, 99, Activation::scaled_linear(3, 8), InitialState::zero);
    CHECK(z.z0.isZero());
    CHECK(z.A[2] == a.A[2]);
    CHECK(z.b[2] == a.b[2]);
}

TEST_CASE("full-sized reservoir shapes") {
    const auto p = sample_params(3, 100, 1, Activation::scaled_linear(3, 100));
    std::size_t a_entries = 0, b_entries = 0;
    for (const auto& m : p.A) a_entries += static_cast<std::size_t>(m.size());
    for (const auto& v : p.b) b_entries += static_cast<std::size_t>(v.size());
    CHECK(a_entries == 30000);
    CHECK(b_entries == 300);
    CHECK(p.activation.scale == doctest::Approx(1.0 / 30.0));
    CHECK_THROWS_AS(sample_params(0, 10, 1, Activation::identity()), DataError);
    CHECK_THROWS_AS(sample_params(3, 0, 1, Activation::identity()), DataError);
}

TEST_CASE("zero feedback closed form") {
    auto prm = sample_params(3, 6, 4, Activation::identity());
    for (auto& a : prm.A) a.setZero();
    NormalStream rng(8);
    const Path p = test::random_path(rng, 3, 7);
    const Eigen::VectorXd z = randomized_signature(p, prm).state;
    Eigen::VectorXd expect = prm.z0;
    for (std::size_t i = 0; i < 3; ++i) expect += prm.b[i] * (p(6, i) - p(0, i));
    CHECK((z - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constant path returns z0") {
    const auto prm = sample_params(3, 10, 4, Activation::hyperbolic());
    const Path p(3, std::vector<double>(15, 0.4));
    CHECK(randomized_signature(p, prm).state == prm.z0);
}

TEST_CASE("matches the loop-based recursion") {
    const std::vector<double> series{1, 2};
    const Path p = embed_series(series);
    for (const Activation act : {Activation::scaled_linear(3, 8), Activation::hyperbolic(), Activation::identity(),
                                 Activation{ActivationKind::constant, 0.5}}) {
        const auto prm = sample_params(3, 8, 31, act);
        const auto got = randomized_signature(p, prm).state;
        const auto ref = reference_recursion(p, prm);
        for (std::size_t r = 0; r < 8; ++r) CHECK(std::abs(got(static_cast<Eigen::Index>(r)) - ref[r]) < 1e-12);
    }
}

TEST_CASE("dimension mismatch and divergence") {
    const auto prm = sample_params(3, 4, 1, Activation::identity());
    CHECK_THROWS_AS(randomized_signature(Path(2, {0, 0, 1, 1}), prm), DimensionError);

    auto big = sample_params(1, 4, 1, Activation::identity());
    big.A[0] *= 50.0;
    std::vector<double> ramp(200);
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = static_cast<double>(i);
    try {
        randomized_signature(Path(1, ramp), big);
        FAIL("expected divergence");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
}

TEST_CASE("determinism, refinement stability and trajectory") {
    NormalStream rng(3);
    const Path p = test::random_path(rng, 3, 9);
    const auto prm = sample_params(3, 12, 5, Activation::scaled_linear(3, 12));
    const auto a = randomized_signature(p, prm, true);
    const auto b = randomized_signature(p, prm);
    CHECK(a.state == b.state);
    CHECK(a.trajectory.size() == p.size());
    CHECK(a.trajectory.back() == a.state);
    CHECK(b.trajectory.empty());

    std::vector<double> dup = p.coords();
    dup.insert(dup.begin() + 12, dup.begin() + 9, dup.begin() + 12);
    CHECK(randomized_signature(Path(3, dup), prm).state == a.state);
}

TEST_CASE("linear activation is affine in z0") {
    NormalStream rng(12);
    const Path p = test::random_path(rng, 3, 6, 0.5);
    const auto base = sample_params(3, 5, 21, Activation::scaled_linear(3, 5));
    auto other = base;
    for (Eigen::Index r = 0; r < 5; ++r) other.z0(r) = rng.normal();
    // Homogeneous system: no shifts, start at the difference.
    auto homog = base;
    for (auto& v : homog.b) v.setZero();
    homog.z0 = base.z0 - other.z0;
    const Eigen::VectorXd diff = randomized_signature(p, base).state - randomized_signature(p, other).state;
    const Eigen::VectorXd h = randomized_signature(p, homog).state;
    CHECK((diff - h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jl_min_dimension") {
    CHECK(jl_min_dimension(100, 0.5) == 37);
    // 4 ln 2 / (3*0.81 - 2*0.729) = 2.852...
    CHECK(jl_min_dimension(2, 0.9) == 3);
    CHECK(jl_min_dimension(50, 0.5) == 32);
    std::size_t prev = 0;
    for (double eps : {0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05}) {
        const std::size_t k = jl_min_dimension(1000, eps);
        CHECK(k > prev);
        prev = k;
    }
    CHECK_THROWS_AS(jl_min_dimension(1, 0.5), DataError);
    CHECK_THROWS_AS(jl_min_dimension(10, 0.0), DataError);
    CHECK_THROWS_AS(jl_min_dimension(10, 1.0), DataError);
}

TEST_CASE("gaussian projection preserves pairwise distances") {
    NormalStream rng(2718);
    const Eigen::MatrixXd pts = test::random_matrix(rng, 50, 256);
    const std::size_t k = jl_min_dimension(50, 0.5);
    const Eigen::MatrixXd proj = gaussian_projection(k, 256, 31415);
    const Eigen::MatrixXd low = pts * proj.transpose();
    int inside = 0, total = 0;
    for (int i = 0; i < 50; ++i)
        for (int j = i + 1; j < 50; ++j) {
            const double ratio = (low.row(i) - low.row(j)).squaredNorm() / (pts.row(i) - pts.row(j)).squaredNorm();
            inside += ratio >= 0.5 && ratio <= 1.5;
            ++total;
        }
    CHECK(inside >= 0.95 * total);
}
