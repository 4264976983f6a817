#pragma once

#include <Eigen/Core>
#include <functional>
#include <span>

#include "stein/density.hpp"
#include "stein/point_set.hpp"

namespace stein {

enum class BandwidthPolicy { Fixed, MedianHeuristic };

/// RBF base-kernel configuration: a fixed bandwidth or the per-set median
/// heuristic h = sqrt(med^2 / (2 log(N+1))) with natural log.
struct KernelConfig {
    BandwidthPolicy policy = BandwidthPolicy::MedianHeuristic;
    double bandwidth = 1.0;

    static KernelConfig fixed(double h) { return {BandwidthPolicy::Fixed, h}; }
    static KernelConfig median() { return {BandwidthPolicy::MedianHeuristic, 0.0}; }
};

struct SteinKernelMatrix {
    Eigen::MatrixXd values;  // N x N, symmetric
    double bandwidth;
};

/// Numerically stable sum of a value list: values are sorted ascending and
/// accumulated by pairwise (cascade) summation, so the result depends only on
/// the multiset of inputs, not on their original order.
double canonical_sum(std::span<const double> values);

/// Median of the N(N-1)/2 strictly-pairwise Euclidean distances, plugged into
/// h = sqrt(med^2 / (2 log(N+1))). Throws ConfigError for N < 2 and
/// NumericalError when all points coincide.
double median_bandwidth(const PointSet& points);

/// median_bandwidth when possible, otherwise (N < 2) the median heuristic of
/// a 100-point IID reference sample drawn from the target with a dedicated
/// stream seeded by fallback_seed.
double median_bandwidth_or_fallback(const PointSet& points, const ScoredDensity& density,
                                    std::uint64_t fallback_seed);

/// Resolve a KernelConfig against a concrete point set.
double resolve_bandwidth(const PointSet& points, const KernelConfig& config);

/// exp(-||x - y||^2 / (2 h^2)).
double rbf(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double h);

struct RbfDerivatives {
    Eigen::VectorXd grad_x;  // -(x-y)/h^2 * k
    Eigen::VectorXd grad_y;  // +(x-y)/h^2 * k
    double div_grad;         // k * (d/h^2 - ||x-y||^2/h^4)
};

RbfDerivatives rbf_derivatives(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double h);

/// Langevin Stein kernel about the RBF base kernel, evaluated from
/// precomputed scores sx = score(x), sy = score(y). The expression is
/// arranged so that swapping (x, sx) with (y, sy) produces the bit-identical
/// result.
double stein_k0_value(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& sx, const Eigen::VectorXd& sy, double h);

/// stein_k0_value together with its partial derivatives with respect to each
/// argument, treating sx and sy as independent inputs. dy == -dx always
/// (translation invariance), so only dx is stored.
struct SteinK0Partials {
    double value;
    Eigen::VectorXd dx;   // d k0 / d x; d k0 / d y is -dx
    Eigen::VectorXd dsx;  // d k0 / d sx
    Eigen::VectorXd dsy;  // d k0 / d sy
};

SteinK0Partials stein_k0_partials(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                                  const Eigen::VectorXd& sx, const Eigen::VectorXd& sy,
                                  double h);

/// Four-term Stein kernel k0(x, y) under the given target.
double stein_k0(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double h,
                const ScoredDensity& density);

/// Full N x N Stein kernel matrix; each (i <= j) entry computed once and
/// mirrored. Scores are evaluated once per point.
SteinKernelMatrix stein_kernel_matrix(const PointSet& points, double h,
                                      const ScoredDensity& density);

/// Kernel Stein discrepancy sqrt(max(0, (1/N^2) sum_ij k0(X_i, X_j))). The
/// matrix sum is canonicalized (sorted cascade over diagonal and strict upper
/// triangle), so permuting the point order leaves the result bit-identical.
double ksd(const PointSet& points, const ScoredDensity& density, const KernelConfig& config);

/// ksd with the bandwidth already resolved.
double ksd_fixed_bandwidth(const PointSet& points, const ScoredDensity& density, double h);

/// Generalized kernel discrepancy
///   sqrt(kFF - (2/N) sum_i kF(X_i) + (1/N^2) sum_ij k(X_i, X_j)).
/// A radicand below -1e-12 raises NumericalError; within round-off it is
/// clamped to zero.
double generalized_discrepancy(
    const PointSet& points,
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& kernel,
    const std::function<double(const Eigen::VectorXd&)>& kernel_mean, double kernel_double_mean);

/// Sample-mean estimator (1/N) sum_i q(X_i).
double mc_estimate(const PointSet& points, const std::function<double(const Eigen::VectorXd&)>& q);

}  // namespace stein
