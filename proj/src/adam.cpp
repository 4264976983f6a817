#include "stein/adam.hpp"

#include <cmath>
#include <vector>

#include "stein/errors.hpp"

namespace stein {

void adam_update_array(Eigen::MatrixXd& theta, const Eigen::MatrixXd& grad, Eigen::MatrixXd& m,
                       Eigen::MatrixXd& v, long step, double lr, double weight_decay,
                       const AdamConfig& config) {
    if (!grad.allFinite()) throw DivergenceError("non-finite gradient in Adam update", step);
    if (weight_decay > 0.0) theta *= (1.0 - lr * weight_decay);
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v.array() = config.beta2 * v.array() + (1.0 - config.beta2) * grad.array().square();
    const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(step));
    const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(step));
    theta.array() -= lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + config.eps);
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr,
               double weight_decay) {
    if (!(lr > 0.0)) throw ConfigError("adam_step: learning rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("adam_step: weight decay must be >= 0");
    state.step += 1;

    std::vector<Eigen::MatrixXd*> p, m, v;
    std::vector<const Eigen::MatrixXd*> g;
    params.for_each([&](Eigen::MatrixXd& a) { p.push_back(&a); });
    grads.for_each([&](const Eigen::MatrixXd& a) { g.push_back(&a); });
    state.m.for_each([&](Eigen::MatrixXd& a) { m.push_back(&a); });
    state.v.for_each([&](Eigen::MatrixXd& a) { v.push_back(&a); });
    if (p.size() != g.size() || p.size() != m.size())
        throw ConfigError("adam_step: parameter and state shapes disagree");

    for (std::size_t i = 0; i < p.size(); ++i)
        adam_update_array(*p[i], *g[i], *m[i], *v[i], state.step, lr, weight_decay, state.config);
}

}  // namespace stein
