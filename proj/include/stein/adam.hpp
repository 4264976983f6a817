#pragma once

#include <Eigen/Core>

#include "stein/model.hpp"

namespace stein {

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment arrays mirroring the parameter shapes, plus the step
/// counter. Weight decay is decoupled: theta <- theta (1 - lr wd) before the
/// moment update.
struct AdamState {
    ModelParams m;
    ModelParams v;
    long step = 0;
    AdamConfig config;

    static AdamState init(const ModelParams& like) {
        return AdamState{like.zeros_like(), like.zeros_like(), 0, AdamConfig{}};
    }
};

/// One bias-corrected Adam update of a single array; step is 1-based.
/// Non-finite gradients raise DivergenceError.
void adam_update_array(Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, Eigen::MatrixXd& m,
                       Eigen::MatrixXd& v, long step, double lr, double weight_decay,
                       const AdamConfig& config);

/// One Adam step over every parameter array.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double weight_decay);

}  // namespace stein
