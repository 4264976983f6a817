#include "stein/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "stein/errors.hpp"

namespace stein {

double evaluate_ksd(const PointSet& points, const ScoredDensity& density,
                    std::uint64_t fallback_seed, double* bandwidth_out) {
    const double h = median_bandwidth_or_fallback(points, density, fallback_seed);
    if (bandwidth_out) *bandwidth_out = h;
    return ksd_fixed_bandwidth(points, density, h);
}

// ---------------------------------------------------------------------------
// Stein-MPMC
// ---------------------------------------------------------------------------

MPMCResult stein_mpmc(const ScoredDensity& density, int n, const MPMCTrainConfig& config,
                      Rng& rng) {
    if (n < 2) throw ConfigError("stein_mpmc needs at least two points");
    if (config.epochs < 1) throw ConfigError("stein_mpmc: epochs must be >= 1");
    if (!(config.learning_rate > 0.0 && config.learning_rate < 1.0))
        throw ConfigError("stein_mpmc: learning rate must lie in (0, 1)");

    ModelConfig model = config.model;
    model.dim = density.dim();
    model.squash = density.support() == Support::OpenUnitBox ? Squash::LogisticUnitBox
                                                             : Squash::Identity;

    MPMCResult result;
    result.model_config = model;
    result.inputs = density.sample(n, rng);

    const double radius = model.graph.fixed_radius > 0.0
                              ? model.graph.fixed_radius
                              : select_radius(result.inputs, model.graph.target_degree);
    const GraphEdges edges = build_radius_graph(result.inputs, radius);
    const double mean_degree =
        static_cast<double>(edges.edge_count()) / static_cast<double>(n);

    ModelParams params = ModelParams::init(model, rng, mean_degree);
    AdamState adam = AdamState::init(params);
    const KernelConfig policy = KernelConfig::median();

    result.best_loss = std::numeric_limits<double>::infinity();
    result.loss_trace.reserve(static_cast<std::size_t>(config.epochs) + 1);

    for (long t = 1; t <= config.epochs; ++t) {
        const long epoch = t - 1;  // params being evaluated
        LossResult step;
        try {
            step = ksd_loss_and_gradients(result.inputs, params, edges, model, density, policy);
        } catch (const DivergenceError& e) {
            throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch),
                                  epoch);
        } catch (const NumericalError& e) {
            // a degenerate (coincident) transformed set has no median bandwidth
            throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(epoch),
                                  epoch);
        }
        result.loss_trace.push_back(step.loss);
        if (epoch % config.eval_every == 0 && step.loss < result.best_loss) {
            result.best_loss = step.loss;
            result.best_epoch = epoch;
            result.points = step.transformed;
            result.best_params = params;
        }
        adam_step(params, step.gradients, adam, config.learning_rate, config.weight_decay);
    }

    // evaluate the final parameters as one more snapshot candidate
    PointSet final_points;
    double final_loss = 0.0;
    try {
        final_points = model_forward(result.inputs, params, edges, model);
        final_loss = std::pow(evaluate_ksd(final_points, density, /*fallback_seed=*/0), 2);
    } catch (const NumericalError& e) {
        throw DivergenceError(std::string(e.what()) + " at epoch " + std::to_string(config.epochs),
                              config.epochs);
    }
    result.loss_trace.push_back(final_loss);
    if (final_loss < result.best_loss) {
        result.best_loss = final_loss;
        result.best_epoch = config.epochs;
        result.points = final_points;
        result.best_params = std::move(params);
    }
    return result;
}

// ---------------------------------------------------------------------------
// SVGD
// ---------------------------------------------------------------------------

namespace {

void reflect_into_unit_box(Eigen::MatrixXd& points, double eps) {
    const double lo = eps, hi = 1.0 - eps;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        for (Eigen::Index j = 0; j < points.cols(); ++j) {
            double x = points(i, j);
            while (x < lo || x > hi) {
                if (x < lo) x = 2.0 * lo - x;
                if (x > hi) x = 2.0 * hi - x;
            }
            points(i, j) = x;
        }
    }
}

}  // namespace

PointSet svgd(const ScoredDensity& density, int n, const SVGDConfig& config, Rng& rng) {
    if (n < 1) throw ConfigError("svgd needs at least one particle");
    return svgd_evolve(density.sample(n, rng), density, config);
}

PointSet svgd_evolve(PointSet particles, const ScoredDensity& density, const SVGDConfig& config) {
    if (!(config.step_size > 0.0)) throw ConfigError("svgd: step size must be positive");
    const Eigen::Index n = particles.count();
    const Eigen::Index d = particles.dim();
    const bool bounded = density.support() == Support::OpenUnitBox;
    const double eps = BetaProduct::kBoundaryEps;

    Eigen::MatrixXd scores(n, d);
    Eigen::MatrixXd updates(n, d);
    for (long it = 1; it <= config.iterations; ++it) {
        // h is irrelevant for a single particle: k(x,x)=1 and grad k vanishes
        const double h = n >= 2 ? median_bandwidth(particles) : 1.0;
        const double h2 = h * h;

        for (Eigen::Index j = 0; j < n; ++j) scores.row(j) = density.score(particles.data.row(j));

        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(d);
            for (Eigen::Index j = 0; j < n; ++j) {
                const Eigen::RowVectorXd diff = particles.data.row(i) - particles.data.row(j);
                const double k = std::exp(-diff.squaredNorm() / (2.0 * h2));
                // k(x_j, x_i) grad log f(x_j) + grad_{x_j} k(x_j, x_i)
                sum += k * scores.row(j) + (k / h2) * diff;
            }
            updates.row(i) = (config.step_size / static_cast<double>(n)) * sum;
        }
        particles.data += updates;
        if (bounded) reflect_into_unit_box(particles.data, eps);
        if (!particles.all_finite())
            throw DivergenceError("svgd produced a non-finite particle at iteration " +
                                      std::to_string(it),
                                  it);
    }
    return particles;
}

// ---------------------------------------------------------------------------
// Stein Points
// ---------------------------------------------------------------------------

namespace {

struct InnerObjective {
    const ScoredDensity& density;
    const std::vector<Eigen::VectorXd>& existing;
    const std::vector<Eigen::VectorXd>& existing_scores;
    double h;

    // J(x) = k0(x, x)/2 + sum_i k0(X_i, x), with d J/dx assembled from the
    // per-pair partials plus the score-Jacobian chain through s(x).
    double value_and_gradient(const Eigen::VectorXd& x, Eigen::VectorXd* grad) const {
        const Eigen::VectorXd sx = density.score(x);
        double value = 0.5 * stein_k0_value(x, x, sx, sx, h);
        Eigen::VectorXd direct = Eigen::VectorXd::Zero(x.size());
        Eigen::VectorXd through_score = sx;  // from the self term: d/dsx [s.s / 2] * 2 = s
        for (std::size_t i = 0; i < existing.size(); ++i) {
            const SteinK0Partials p =
                stein_k0_partials(existing[i], x, existing_scores[i], sx, h);
            value += p.value;
            if (grad) {
                direct -= p.dx;  // d k0 / d(second argument) = -dx
                through_score += p.dsy;
            }
        }
        if (grad) *grad = direct + density.score_jacobian(x) * through_score;
        return value;
    }
};

struct VectorAdam {
    Eigen::MatrixXd m, v;
    long step = 0;
    AdamConfig config;

    explicit VectorAdam(Eigen::Index d)
        : m(Eigen::MatrixXd::Zero(d, 1)), v(Eigen::MatrixXd::Zero(d, 1)) {}

    void update(Eigen::MatrixXd& x, const Eigen::MatrixXd& grad, double lr) {
        step += 1;
        adam_update_array(x, grad, m, v, step, lr, 0.0, config);
    }
};

}  // namespace

SteinPointsResult stein_points(const ScoredDensity& density, int n_max,
                               const SteinPointsConfig& config, Rng& rng,
                               const std::vector<int>& checkpoints) {
    if (n_max < 1) throw ConfigError("stein_points: n_max must be >= 1");
    if (!(config.inner_learning_rate > 0.0) || config.inner_iterations < 1 || config.restarts < 1)
        throw ConfigError("stein_points: learning rate, inner iterations and restarts must be positive");
    for (int c : checkpoints)
        if (c < 1 || c > n_max)
            throw ConfigError("stein_points: checkpoint " + std::to_string(c) +
                              " outside 1.." + std::to_string(n_max));
    std::vector<int> wanted = checkpoints;
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    const std::uint64_t fallback_seed = rng.next_u64();
    const int d = density.dim();
    const auto start_time = std::chrono::steady_clock::now();

    std::vector<Eigen::VectorXd> accepted;
    std::vector<Eigen::VectorXd> accepted_scores;
    SteinPointsResult result;

    for (int n = 1; n <= n_max; ++n) {
        PointSet current(Eigen::MatrixXd(static_cast<Eigen::Index>(accepted.size()), d));
        for (std::size_t i = 0; i < accepted.size(); ++i)
            current.data.row(static_cast<Eigen::Index>(i)) = accepted[i].transpose();
        const double h = median_bandwidth_or_fallback(current, density, fallback_seed);

        InnerObjective objective{density, accepted, accepted_scores, h};

        std::vector<Eigen::VectorXd> starts;
        if (n > 1) starts.push_back(accepted.back());  // warm start
        const PointSet random_starts = density.sample(config.restarts, rng);
        for (Eigen::Index r = 0; r < random_starts.count(); ++r)
            starts.push_back(random_starts.data.row(r));

        double best_value = std::numeric_limits<double>::infinity();
        Eigen::VectorXd best_point;
        int diverged = 0;
        for (const Eigen::VectorXd& start : starts) {
            Eigen::MatrixXd x = start;
            VectorAdam adam(d);
            double local_best = std::numeric_limits<double>::infinity();
            Eigen::VectorXd local_point = start;
            bool ok = true;
            try {
                Eigen::VectorXd grad;
                for (int it = 0; it <= config.inner_iterations; ++it) {
                    const double value = objective.value_and_gradient(x.col(0), &grad);
                    if (!std::isfinite(value) || !grad.allFinite())
                        throw DivergenceError("non-finite inner objective");
                    if (value < local_best) {
                        local_best = value;
                        local_point = x.col(0);
                    }
                    if (it == config.inner_iterations) break;
                    adam.update(x, grad, config.inner_learning_rate);
                }
            } catch (const DomainError&) {
                ok = false;  // stepped outside the support; drop this restart
            } catch (const DivergenceError&) {
                ok = false;
            }
            if (!ok) {
                ++diverged;
                continue;
            }
            if (local_best < best_value) {
                best_value = local_best;
                best_point = local_point;
            }
        }
        if (diverged == static_cast<int>(starts.size()))
            throw DivergenceError("stein_points: every restart diverged at point " +
                                      std::to_string(n),
                                  n);

        accepted.push_back(best_point);
        accepted_scores.push_back(density.score(best_point));

        if (std::binary_search(wanted.begin(), wanted.end(), n)) {
            PointSet prefix(Eigen::MatrixXd(n, d));
            for (int i = 0; i < n; ++i) prefix.data.row(i) = accepted[static_cast<std::size_t>(i)];
            double bandwidth = 0.0;
            const double value = evaluate_ksd(prefix, density, fallback_seed, &bandwidth);
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time)
                    .count();
            result.trace.push_back({n, value, bandwidth, elapsed});
        }
    }

    result.points = PointSet(Eigen::MatrixXd(n_max, d));
    for (int i = 0; i < n_max; ++i)
        result.points.data.row(i) = accepted[static_cast<std::size_t>(i)];
    return result;
}

PointSet iid_baseline(const ScoredDensity& density, int n, Rng& rng) {
    if (n < 1) throw ConfigError("iid_baseline: n must be >= 1");
    return density.sample(n, rng);
}

}  // namespace stein
