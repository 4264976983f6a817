#pragma once

#include <cstdint>
#include <vector>

#include "stein/adam.hpp"
#include "stein/density.hpp"
#include "stein/model.hpp"
#include "stein/point_set.hpp"
#include "stein/rng.hpp"
#include "stein/stein_kernel.hpp"

namespace stein {

struct MPMCTrainConfig {
    long epochs = 50000;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    ModelConfig model;
    std::uint64_t seed = 0;
    long eval_every = 100;  // snapshot / best-loss evaluation cadence
};

struct SVGDConfig {
    double step_size = 0.001;
    long iterations = 50000;
    std::uint64_t seed = 0;
};

struct SteinPointsConfig {
    double inner_learning_rate = 0.01;
    int inner_iterations = 200;
    int restarts = 10;
    std::uint64_t seed = 0;
};

struct MPMCResult {
    PointSet points;                // transformed set from the best evaluated epoch
    std::vector<double> loss_trace; // loss_trace[t] = squared-KSD loss of the params at epoch t
    double best_loss = 0.0;
    long best_epoch = 0;
    ModelParams best_params;
    ModelConfig model_config;       // resolved config (dim and squash filled in)
    PointSet inputs;                // the IID input set the graph was built on
};

/// Train the message-passing network on the squared-KSD objective: draw N IID
/// inputs, freeze the radius graph built on them, run Adam for the configured
/// epochs, and return the transformed set from the best epoch evaluated at
/// the eval_every cadence (plus the final epoch).
MPMCResult stein_mpmc(const ScoredDensity& density, int n, const MPMCTrainConfig& config,
                      Rng& rng);

/// Stein variational gradient descent with the median-heuristic RBF kernel,
/// updating all particles simultaneously. Bounded targets reflect particles
/// back into [eps, 1-eps]^d after each step.
PointSet svgd(const ScoredDensity& density, int n, const SVGDConfig& config, Rng& rng);

/// The SVGD iteration applied to caller-supplied initial particles.
PointSet svgd_evolve(PointSet particles, const ScoredDensity& density, const SVGDConfig& config);

struct SteinPointsCheckpoint {
    int n;
    double ksd;
    double bandwidth;
    double elapsed_s;  // wall time from run start until this prefix was reached
};

struct SteinPointsResult {
    PointSet points;
    std::vector<SteinPointsCheckpoint> trace;
};

/// Greedy Stein Points: each new point minimizes the augmented set's KSD via
/// J(x) = k0(x,x)/2 + sum_i k0(X_i, x), optimized by multi-start Adam. The
/// bandwidth is fixed per outer step from the current set (reference-sample
/// fallback while fewer than two points exist) and held constant during the
/// inner optimization.
SteinPointsResult stein_points(const ScoredDensity& density, int n_max,
                               const SteinPointsConfig& config, Rng& rng,
                               const std::vector<int>& checkpoints);

/// N IID draws; the control baseline.
PointSet iid_baseline(const ScoredDensity& density, int n, Rng& rng);

/// KSD of a point set using its own median-heuristic bandwidth, falling back
/// to a 100-point reference sample for sets smaller than two points. Returns
/// the bandwidth used through bandwidth_out when non-null.
double evaluate_ksd(const PointSet& points, const ScoredDensity& density,
                    std::uint64_t fallback_seed, double* bandwidth_out = nullptr);

}  // namespace stein
