#include "stein/stein_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "stein/errors.hpp"

namespace stein {

double canonical_sum(std::span<const double> values) {
    if (values.empty()) return 0.0;
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    // pairwise summation over the sorted values
    std::vector<double> level = std::move(sorted);
    while (level.size() > 1) {
        std::vector<double> next;
        next.reserve((level.size() + 1) / 2);
        std::size_t i = 0;
        for (; i + 1 < level.size(); i += 2) next.push_back(level[i] + level[i + 1]);
        if (i < level.size()) next.push_back(level[i]);
        level = std::move(next);
    }
    return level[0];
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double median_bandwidth(const PointSet& points) {
    const Eigen::Index n = points.count();
    if (n < 2) throw ConfigError("median_bandwidth needs at least two points");
    std::vector<double> dists;
    dists.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            dists.push_back((points.data.row(i) - points.data.row(j)).norm());
    const double med = median_of(std::move(dists));
    if (med == 0.0) throw NumericalError("median_bandwidth: all points coincide");
    return std::sqrt(med * med / (2.0 * std::log(static_cast<double>(n) + 1.0)));
}

double median_bandwidth_or_fallback(const PointSet& points, const ScoredDensity& density,
                                    std::uint64_t fallback_seed) {
    if (points.count() >= 2) return median_bandwidth(points);
    Rng rng(fallback_seed);
    return median_bandwidth(density.sample(100, rng));
}

double resolve_bandwidth(const PointSet& points, const KernelConfig& config) {
    if (config.policy == BandwidthPolicy::Fixed) {
        if (!(config.bandwidth > 0.0) || !std::isfinite(config.bandwidth))
            throw ConfigError("fixed bandwidth must be positive and finite");
        return config.bandwidth;
    }
    return median_bandwidth(points);
}

double rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double h) {
    return std::exp(-(x - y).squaredNorm() / (2.0 * h * h));
}

RbfDerivatives rbf_derivatives(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double h) {
    const Eigen::VectorXd delta = x - y;
    const double h2 = h * h;
    const double r2 = delta.squaredNorm();
    const double k = std::exp(-r2 / (2.0 * h2));
    RbfDerivatives out;
    out.grad_x = -(k / h2) * delta;
    out.grad_y = (k / h2) * delta;
    out.div_grad = k * (static_cast<double>(x.size()) / h2 - r2 / (h2 * h2));
    return out;
}

// k0 factors as k * a with
//   a = d/h^2 - r^2/h^4 + delta.(sx - sy)/h^2 + sx.sy,  delta = x - y.
// Every term of a maps to itself bit-exactly under the swap
// (x, sx) <-> (y, sy), which makes the kernel exactly symmetric.
double stein_k0_value(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& sx, const Eigen::VectorXd& sy, double h) {
    const Eigen::VectorXd delta = x - y;
    const double h2 = h * h;
    const double r2 = delta.squaredNorm();
    const double k = std::exp(-r2 / (2.0 * h2));
    const double a = static_cast<double>(x.size()) / h2 - r2 / (h2 * h2) +
                     delta.dot(sx - sy) / h2 + sx.dot(sy);
    return k * a;
}

SteinK0Partials stein_k0_partials(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& sx, const Eigen::VectorXd& sy,
                                  double h) {
    const Eigen::VectorXd delta = x - y;
    const double h2 = h * h;
    const double h4 = h2 * h2;
    const double r2 = delta.squaredNorm();
    const double k = std::exp(-r2 / (2.0 * h2));
    const Eigen::VectorXd sdiff = sx - sy;
    const double a =
        static_cast<double>(x.size()) / h2 - r2 / h4 + delta.dot(sdiff) / h2 + sx.dot(sy);

    SteinK0Partials out;
    out.value = k * a;
    // d(k a)/dx = (grad_x k) a + k (grad_x a)
    //           = k [ -(a/h^2) delta - 2 delta/h^4 + (sx - sy)/h^2 ]
    out.dx = k * ((-(a / h2) - 2.0 / h4) * delta + sdiff / h2);
    out.dsx = k * (delta / h2 + sy);
    out.dsy = k * (-delta / h2 + sx);
    return out;
}

double stein_k0(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double h,
                const ScoredDensity& density) {
    return stein_k0_value(x, y, density.score(x), density.score(y), h);
}

SteinKernelMatrix stein_kernel_matrix(const PointSet& points, double h,
                                      const ScoredDensity& density) {
    const Eigen::Index n = points.count();
    const Eigen::Index d = points.dim();
    if (d != density.dim()) throw ConfigError("stein_kernel_matrix: dimension mismatch");

    std::vector<Eigen::VectorXd> scores(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        try {
            scores[static_cast<std::size_t>(i)] = density.score(points.data.row(i));
        } catch (const DomainError& e) {
            throw DomainError("point " + std::to_string(i) + ": " + e.what());
        }
    }

    SteinKernelMatrix out;
    out.bandwidth = h;
    out.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = points.data.row(i);
        for (Eigen::Index j = i; j < n; ++j) {
            const double v =
                stein_k0_value(xi, points.data.row(j), scores[static_cast<std::size_t>(i)],
                               scores[static_cast<std::size_t>(j)], h);
            out.values(i, j) = v;
            out.values(j, i) = v;
        }
    }
    return out;
}

namespace {

/// (1/N^2) sum_ij of a symmetric matrix via the canonical (value-sorted,
/// cascade) summation of the diagonal and strict upper triangle.
double symmetric_matrix_mean(const Eigen::MatrixXd& k) {
    const Eigen::Index n = k.rows();
    std::vector<double> diag(static_cast<std::size_t>(n));
    std::vector<double> upper;
    upper.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        diag[static_cast<std::size_t>(i)] = k(i, i);
        for (Eigen::Index j = i + 1; j < n; ++j) upper.push_back(k(i, j));
    }
    const double total = canonical_sum(diag) + 2.0 * canonical_sum(upper);
    return total / (static_cast<double>(n) * static_cast<double>(n));
}

}  // namespace

double ksd_fixed_bandwidth(const PointSet& points, const ScoredDensity& density, double h) {
    if (points.count() < 1) throw ConfigError("ksd needs at least one point");
    const SteinKernelMatrix k = stein_kernel_matrix(points, h, density);
    return std::sqrt(std::max(0.0, symmetric_matrix_mean(k.values)));
}

double ksd(const PointSet& points, const ScoredDensity& density, const KernelConfig& config) {
    return ksd_fixed_bandwidth(points, density, resolve_bandwidth(points, config));
}

double generalized_discrepancy(
    const PointSet& points,
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& kernel,
    const std::function<double(const Eigen::VectorXd&)>& kernel_mean, double kernel_double_mean) {
    const Eigen::Index n = points.count();
    if (n < 1) throw ConfigError("generalized_discrepancy needs at least one point");

    std::vector<double> mean_terms(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        mean_terms[static_cast<std::size_t>(i)] = kernel_mean(points.data.row(i));

    std::vector<double> diag(static_cast<std::size_t>(n));
    std::vector<double> upper;
    upper.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = points.data.row(i);
        diag[static_cast<std::size_t>(i)] = kernel(xi, xi);
        for (Eigen::Index j = i + 1; j < n; ++j) upper.push_back(kernel(xi, points.data.row(j)));
    }
    const double nn = static_cast<double>(n);
    const double pair_mean = (canonical_sum(diag) + 2.0 * canonical_sum(upper)) / (nn * nn);
    const double radicand = kernel_double_mean - 2.0 / nn * canonical_sum(mean_terms) + pair_mean;
    if (radicand < -1e-12)
        throw NumericalError("generalized_discrepancy: radicand " + std::to_string(radicand) +
                             " below round-off tolerance");
    return std::sqrt(std::max(0.0, radicand));
}

double mc_estimate(const PointSet& points,
                   const std::function<double(const Eigen::VectorXd&)>& q) {
    const Eigen::Index n = points.count();
    if (n < 1) throw ConfigError("mc_estimate needs at least one point");
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) vals[static_cast<std::size_t>(i)] = q(points.data.row(i));
    return canonical_sum(vals) / static_cast<double>(n);
}

}  // namespace stein
