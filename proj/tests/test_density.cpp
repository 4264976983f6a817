#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "stein/density.hpp"
#include "stein/errors.hpp"
#include "stein/rng.hpp"

using namespace stein;

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::VectorXd vec2(double a, double b) {
    Eigen::VectorXd v(2);
    v << a, b;
    return v;
}
}  // namespace

TEST_CASE("standard normal log density at the mode") {
    const auto gm = GaussianMixture::standard_normal(2);
    CHECK(gm.log_density(vec2(0, 0)) == doctest::Approx(-kLog2Pi).epsilon(1e-12));
}

TEST_CASE("benchmark mixture log density at the symmetric midpoint") {
    const auto gm = GaussianMixture::two_component_benchmark();
    // both components contribute exp(-1.125)/(2 pi) at the origin
    const double expected = -1.125 - kLog2Pi;
    CHECK(gm.log_density(vec2(0, 0)) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("beta product log density at (0.25, 0.25)") {
    const auto bp = BetaProduct::benchmark_2d();
    const double per_coord = std::log(20.0) + std::log(0.25) + 3.0 * std::log(0.75);
    CHECK(bp.log_density(vec2(0.25, 0.25)) == doctest::Approx(2.0 * per_coord).epsilon(1e-12));
}

TEST_CASE("beta product rejects boundary points naming the coordinate") {
    const auto bp = BetaProduct::benchmark_2d();
    CHECK_THROWS_AS(bp.log_density(vec2(0.5, 0.0)), DomainError);
    CHECK_THROWS_AS(bp.score(vec2(-0.1, 0.5)), DomainError);
    try {
        bp.log_density(vec2(0.5, 1.0));
        FAIL("expected DomainError");
    } catch (const DomainError& e) {
        CHECK(std::string(e.what()).find("coordinate 1") != std::string::npos);
    }
}

TEST_CASE("standard normal score is -p") {
    const auto gm = GaussianMixture::standard_normal(2);
    const Eigen::VectorXd s = gm.score(vec2(1, 0));
    CHECK(s[0] == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("benchmark mixture score vanishes on the symmetry axis") {
    const auto gm = GaussianMixture::two_component_benchmark();
    for (double y : {-2.0, -0.3, 0.0, 0.7, 3.1}) {
        CHECK(std::abs(gm.score(vec2(0, y))[0]) < 1e-14);
    }
}

TEST_CASE("beta product score is zero at the mode") {
    const auto bp = BetaProduct::benchmark_2d();
    const Eigen::VectorXd s = bp.score(vec2(0.25, 0.25));
    CHECK(std::abs(s[0]) < 1e-12);
    CHECK(std::abs(s[1]) < 1e-12);
}

TEST_CASE("mixture score stays finite far from all modes") {
    const auto gm = GaussianMixture::two_component_benchmark();
    const Eigen::VectorXd s = gm.score(vec2(1e3, -1e3));
    CHECK(s.allFinite());
}

TEST_CASE("standard normal score jacobian is -I") {
    const auto gm = GaussianMixture::standard_normal(2);
    for (auto p : {vec2(0, 0), vec2(1.2, -0.7), vec2(-3, 4)}) {
        const Eigen::MatrixXd h = gm.score_jacobian(p);
        CHECK((h + Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("beta product score jacobian at (0.25, 0.25)") {
    const auto bp = BetaProduct::benchmark_2d();
    const Eigen::MatrixXd h = bp.score_jacobian(vec2(0.25, 0.25));
    const double expected = -16.0 - 16.0 / 3.0;
    CHECK(h(0, 0) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(h(1, 1) == doctest::Approx(expected).epsilon(1e-12));
    CHECK(h(0, 1) == 0.0);
    CHECK(h(1, 0) == 0.0);
}

TEST_CASE("score matches finite differences of log density") {
    const auto gm = GaussianMixture::two_component_benchmark();
    const auto bp = BetaProduct::benchmark_2d();
    Rng rng(7);

    auto check_density = [&](const ScoredDensity& density, const PointSet& points) {
        for (Eigen::Index i = 0; i < points.count(); ++i) {
            const Eigen::VectorXd p = points.data.row(i);
            const Eigen::VectorXd fd = oracles::fd_gradient(
                [&](const Eigen::VectorXd& x) { return density.log_density(x); }, p);
            const Eigen::VectorXd s = density.score(p);
            for (Eigen::Index k = 0; k < p.size(); ++k)
                CHECK(oracles::rel_error(s[k], fd[k], 1e-4) < 1e-5);
        }
    };

    check_density(gm, gm.sample(100, rng));
    // keep finite-difference steps clear of the unit-box boundary
    PointSet beta_points = bp.sample(300, rng);
    Eigen::MatrixXd kept(100, 2);
    Eigen::Index kept_count = 0;
    for (Eigen::Index i = 0; i < beta_points.count() && kept_count < 100; ++i) {
        const auto row = beta_points.data.row(i);
        if (row.minCoeff() > 0.01 && row.maxCoeff() < 0.99) kept.row(kept_count++) = row;
    }
    REQUIRE(kept_count == 100);
    check_density(bp, PointSet(kept));
}

TEST_CASE("score jacobian matches finite differences of score and is symmetric") {
    const auto gm = GaussianMixture::two_component_benchmark();
    Rng rng(11);
    const PointSet points = gm.sample(25, rng);
    for (Eigen::Index i = 0; i < points.count(); ++i) {
        const Eigen::VectorXd p = points.data.row(i);
        const Eigen::MatrixXd h = gm.score_jacobian(p);
        const Eigen::MatrixXd fd = oracles::fd_jacobian(
            [&](const Eigen::VectorXd& x) { return gm.score(x); }, p);
        CHECK(oracles::max_rel_error(h, fd, 1e-4) < 1e-5);
        CHECK((h - h.transpose()).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("beta samples stay strictly inside the unit box") {
    const auto bp = BetaProduct::benchmark_2d();
    Rng rng(3);
    const PointSet points = bp.sample(20000, rng);
    CHECK(points.data.minCoeff() > 0.0);
    CHECK(points.data.maxCoeff() < 1.0);
    // Beta(2,4) has mean 1/3
    CHECK(points.data.col(0).mean() == doctest::Approx(1.0 / 3.0).epsilon(0.02));
}

TEST_CASE("mixture component assignment is balanced") {
    const auto gm = GaussianMixture::two_component_benchmark();
    Rng rng(5);
    const PointSet points = gm.sample(100000, rng);
    // by symmetry the negative-x half carries probability 1/2
    const double frac = (points.data.col(0).array() < 0.0).cast<double>().mean();
    CHECK(std::abs(frac - 0.5) < 0.015);
}

TEST_CASE("sampling is deterministic under a fixed seed") {
    const auto gm = GaussianMixture::two_component_benchmark();
    const auto bp = BetaProduct::benchmark_2d();
    Rng a(42), b(42);
    CHECK(gm.sample(50, a).data == gm.sample(50, b).data);
    Rng c(42), d(42);
    CHECK(bp.sample(50, c).data == bp.sample(50, d).data);
}

TEST_CASE("mixture sample mean concentrates at the overall mean") {
    const auto gm = GaussianMixture::two_component_benchmark();
    Rng rng(9);
    const PointSet points = gm.sample(100000, rng);
    CHECK(std::abs(points.data.col(0).mean()) < 0.02);
    CHECK(std::abs(points.data.col(1).mean()) < 0.02);
}

TEST_CASE("sample mean estimates E[x1^2] = 1 under the standard normal") {
    const auto gm = GaussianMixture::standard_normal(2);
    Rng rng(13);
    const PointSet points = gm.sample(100000, rng);
    const double estimate = points.data.col(0).array().square().mean();
    CHECK(std::abs(estimate - 1.0) < 0.05);
}

TEST_CASE("mixture construction validates weights and covariances") {
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(GaussianMixture({{0.6, vec2(0, 0), eye}, {0.6, vec2(1, 1), eye}}),
                    ConfigError);
    Eigen::MatrixXd indefinite(2, 2);
    indefinite << 1.0, 2.0, 2.0, 1.0;
    CHECK_THROWS_AS(GaussianMixture({{1.0, vec2(0, 0), indefinite}}), ConfigError);
}

TEST_CASE("beta product validates shape parameters") {
    CHECK_THROWS_AS(BetaProduct({2.0, -1.0}, {4.0, 4.0}), ConfigError);
    CHECK_THROWS_AS(BetaProduct({2.0}, {4.0, 4.0}), ConfigError);
}

TEST_CASE("sample rejects invalid counts") {
    const auto gm = GaussianMixture::standard_normal(2);
    Rng rng(1);
    CHECK_THROWS_AS(gm.sample(0, rng), ConfigError);
}
