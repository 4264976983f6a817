#include "stein/density.hpp"

#include <cmath>
#include <string>

#include "stein/errors.hpp"

namespace stein {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)
}

// ---------------------------------------------------------------------------
// GaussianMixture
// ---------------------------------------------------------------------------

GaussianMixture::GaussianMixture(std::vector<Component> components)
    : components_(std::move(components)) {
    if (components_.empty()) throw ConfigError("mixture needs at least one component");
    const auto d = components_[0].mean.size();
    double weight_sum = 0.0;
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        if (!(c.weight > 0.0 && c.weight <= 1.0))
            throw ConfigError("mixture weight " + std::to_string(k) + " outside (0,1]");
        if (c.mean.size() != d || c.covariance.rows() != d || c.covariance.cols() != d)
            throw ConfigError("mixture component " + std::to_string(k) + " has inconsistent shape");
        weight_sum += c.weight;
    }
    if (std::abs(weight_sum - 1.0) > 1e-12)
        throw ConfigError("mixture weights sum to " + std::to_string(weight_sum) + ", expected 1");

    prepared_.reserve(components_.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const auto& c = components_[k];
        Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
        if (llt.info() != Eigen::Success)
            throw ConfigError("covariance of component " + std::to_string(k) +
                              " is not positive definite");
        Prepared p;
        p.chol_lower = llt.matrixL();
        p.precision = llt.solve(Eigen::MatrixXd::Identity(d, d));
        double log_det_half = 0.0;
        for (Eigen::Index i = 0; i < d; ++i) log_det_half += std::log(p.chol_lower(i, i));
        p.log_norm = std::log(c.weight) - 0.5 * static_cast<double>(d) * kLog2Pi - log_det_half;
        prepared_.push_back(std::move(p));
    }
}

GaussianMixture GaussianMixture::two_component_benchmark() {
    Eigen::VectorXd m1(2), m2(2);
    m1 << -1.5, 0.0;
    m2 << 1.5, 0.0;
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
    return GaussianMixture({{0.5, m1, eye}, {0.5, m2, eye}});
}

GaussianMixture GaussianMixture::standard_normal(int dim) {
    return GaussianMixture(
        {{1.0, Eigen::VectorXd::Zero(dim), Eigen::MatrixXd::Identity(dim, dim)}});
}

Eigen::VectorXd GaussianMixture::component_log_terms(const Eigen::VectorXd& p) const {
    Eigen::VectorXd terms(static_cast<Eigen::Index>(components_.size()));
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const Eigen::VectorXd diff = p - components_[k].mean;
        terms[static_cast<Eigen::Index>(k)] =
            prepared_[k].log_norm - 0.5 * diff.dot(prepared_[k].precision * diff);
    }
    return terms;
}

double GaussianMixture::log_density(const Eigen::VectorXd& p) const {
    const Eigen::VectorXd terms = component_log_terms(p);
    const double m = terms.maxCoeff();
    return m + std::log((terms.array() - m).exp().sum());
}

Eigen::VectorXd GaussianMixture::score(const Eigen::VectorXd& p) const {
    const Eigen::VectorXd terms = component_log_terms(p);
    const double m = terms.maxCoeff();
    const Eigen::ArrayXd unnorm = (terms.array() - m).exp();
    const double total = unnorm.sum();
    Eigen::VectorXd s = Eigen::VectorXd::Zero(p.size());
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const double resp = unnorm[static_cast<Eigen::Index>(k)] / total;
        s += resp * (prepared_[k].precision * (components_[k].mean - p));
    }
    return s;
}

Eigen::MatrixXd GaussianMixture::score_jacobian(const Eigen::VectorXd& p) const {
    const Eigen::Index d = p.size();
    const Eigen::VectorXd terms = component_log_terms(p);
    const double m = terms.maxCoeff();
    const Eigen::ArrayXd unnorm = (terms.array() - m).exp();
    const double total = unnorm.sum();

    // H = sum_k r_k (s_k s_k^T - P_k) - s_bar s_bar^T
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd s_bar = Eigen::VectorXd::Zero(d);
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const double resp = unnorm[static_cast<Eigen::Index>(k)] / total;
        const Eigen::VectorXd s_k = prepared_[k].precision * (components_[k].mean - p);
        h += resp * (s_k * s_k.transpose() - prepared_[k].precision);
        s_bar += resp * s_k;
    }
    h -= s_bar * s_bar.transpose();
    return h;
}

PointSet GaussianMixture::sample(int n, Rng& rng) const {
    if (n < 1) throw ConfigError("sample: n must be >= 1");
    const int d = dim();
    Eigen::MatrixXd out(n, d);
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        std::size_t k = 0;
        double cum = components_[0].weight;
        while (u >= cum && k + 1 < components_.size()) cum += components_[++k].weight;
        Eigen::VectorXd z(d);
        for (int j = 0; j < d; ++j) z[j] = rng.normal();
        out.row(i) = (components_[k].mean + prepared_[k].chol_lower * z).transpose();
    }
    return PointSet(std::move(out));
}

// ---------------------------------------------------------------------------
// BetaProduct
// ---------------------------------------------------------------------------

BetaProduct::BetaProduct(std::vector<double> alphas, std::vector<double> betas)
    : alphas_(std::move(alphas)), betas_(std::move(betas)) {
    if (alphas_.empty() || alphas_.size() != betas_.size())
        throw ConfigError("beta product needs matching, non-empty alpha/beta lists");
    log_norms_.resize(alphas_.size());
    for (std::size_t i = 0; i < alphas_.size(); ++i) {
        if (!(alphas_[i] > 0.0) || !(betas_[i] > 0.0))
            throw ConfigError("beta shape parameters must be strictly positive");
        log_norms_[i] = std::lgamma(alphas_[i] + betas_[i]) - std::lgamma(alphas_[i]) -
                        std::lgamma(betas_[i]);
    }
}

BetaProduct BetaProduct::benchmark_2d() { return BetaProduct({2.0, 2.0}, {4.0, 4.0}); }

void BetaProduct::check_interior(const Eigen::VectorXd& p) const {
    if (p.size() != dim()) throw ConfigError("beta product: point dimension mismatch");
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        if (!(p[i] >= kBoundaryEps && p[i] <= 1.0 - kBoundaryEps))
            throw DomainError("coordinate " + std::to_string(i) + " = " + std::to_string(p[i]) +
                              " is outside the open unit interval");
    }
}

double BetaProduct::log_density(const Eigen::VectorXd& p) const {
    check_interior(p);
    double total = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        total += log_norms_[k] + (alphas_[k] - 1.0) * std::log(p[i]) +
                 (betas_[k] - 1.0) * std::log1p(-p[i]);
    }
    return total;
}

Eigen::VectorXd BetaProduct::score(const Eigen::VectorXd& p) const {
    check_interior(p);
    Eigen::VectorXd s(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        s[i] = (alphas_[k] - 1.0) / p[i] - (betas_[k] - 1.0) / (1.0 - p[i]);
    }
    return s;
}

Eigen::MatrixXd BetaProduct::score_jacobian(const Eigen::VectorXd& p) const {
    check_interior(p);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p.size(), p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const std::size_t k = static_cast<std::size_t>(i);
        const double om = 1.0 - p[i];
        h(i, i) = -(alphas_[k] - 1.0) / (p[i] * p[i]) - (betas_[k] - 1.0) / (om * om);
    }
    return h;
}

PointSet BetaProduct::sample(int n, Rng& rng) const {
    if (n < 1) throw ConfigError("sample: n must be >= 1");
    const int d = dim();
    Eigen::MatrixXd out(n, d);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            const std::size_t k = static_cast<std::size_t>(j);
            const double ga = rng.gamma(alphas_[k]);
            const double gb = rng.gamma(betas_[k]);
            out(i, j) = ga / (ga + gb);
        }
    }
    return PointSet(std::move(out));
}

}  // namespace stein
