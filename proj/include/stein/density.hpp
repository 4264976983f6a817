#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <memory>
#include <vector>

#include "stein/point_set.hpp"
#include "stein/rng.hpp"

namespace stein {

enum class Support { Unbounded, OpenUnitBox };

/// Target distribution contract: everything the Stein machinery needs from a
/// density f -- log f, the score grad(log f), the score Jacobian (Hessian of
/// log f), and IID sampling for initialization and baselines.
///
/// All evaluations are pure and thread-safe; sampling mutates only the
/// caller-owned generator.
class ScoredDensity {
public:
    virtual ~ScoredDensity() = default;

    virtual int dim() const = 0;
    virtual Support support() const = 0;
    virtual std::string name() const = 0;

    /// log f(p) at an interior point of the support.
    virtual double log_density(const Eigen::VectorXd& p) const = 0;

    /// grad log f(p).
    virtual Eigen::VectorXd score(const Eigen::VectorXd& p) const = 0;

    /// Hessian of log f(p); symmetric.
    virtual Eigen::MatrixXd score_jacobian(const Eigen::VectorXd& p) const = 0;

    /// n IID draws, one per row.
    virtual PointSet sample(int n, Rng& rng) const = 0;
};

/// Gaussian mixture with general SPD covariances. Responsibilities are
/// computed in log space so the score stays finite far from all modes.
class GaussianMixture : public ScoredDensity {
public:
    struct Component {
        double weight;
        Eigen::VectorXd mean;
        Eigen::MatrixXd covariance;
    };

    /// Weights must sum to 1 within 1e-12; every covariance must admit a
    /// Cholesky factorization. Violations raise ConfigError.
    explicit GaussianMixture(std::vector<Component> components);

    /// The paper's two-component benchmark: (1/2)N((-1.5,0),I) + (1/2)N((1.5,0),I).
    static GaussianMixture two_component_benchmark();

    /// Single-component standard normal N(0, I_d).
    static GaussianMixture standard_normal(int dim);

    int dim() const override { return static_cast<int>(components_[0].mean.size()); }
    Support support() const override { return Support::Unbounded; }
    std::string name() const override { return "gaussian_mixture"; }

    double log_density(const Eigen::VectorXd& p) const override;
    Eigen::VectorXd score(const Eigen::VectorXd& p) const override;
    Eigen::MatrixXd score_jacobian(const Eigen::VectorXd& p) const override;
    PointSet sample(int n, Rng& rng) const override;

    const std::vector<Component>& components() const { return components_; }

private:
    struct Prepared {
        Eigen::MatrixXd chol_lower;     // L with Sigma = L L^T
        Eigen::MatrixXd precision;      // Sigma^{-1}
        double log_norm;                // log w_k - (d/2) log(2 pi) - (1/2) log det Sigma
    };

    // log-density of each component including its log-weight
    Eigen::VectorXd component_log_terms(const Eigen::VectorXd& p) const;

    std::vector<Component> components_;
    std::vector<Prepared> prepared_;
};

/// Product of independent Beta(alpha_i, beta_i) marginals on the open unit
/// box. Evaluations reject points outside [eps, 1-eps] per coordinate with
/// eps = 1e-9; the score diverges at the boundary.
class BetaProduct : public ScoredDensity {
public:
    /// One (alpha, beta) pair per coordinate; all parameters strictly positive.
    BetaProduct(std::vector<double> alphas, std::vector<double> betas);

    /// The paper's benchmark: Beta(2,4) x Beta(2,4).
    static BetaProduct benchmark_2d();

    int dim() const override { return static_cast<int>(alphas_.size()); }
    Support support() const override { return Support::OpenUnitBox; }
    std::string name() const override { return "beta_product"; }

    double log_density(const Eigen::VectorXd& p) const override;
    Eigen::VectorXd score(const Eigen::VectorXd& p) const override;
    Eigen::MatrixXd score_jacobian(const Eigen::VectorXd& p) const override;

    /// Gamma-ratio construction: X = G_alpha / (G_alpha + G_beta).
    PointSet sample(int n, Rng& rng) const override;

    const std::vector<double>& alphas() const { return alphas_; }
    const std::vector<double>& betas() const { return betas_; }

    static constexpr double kBoundaryEps = 1e-9;

private:
    void check_interior(const Eigen::VectorXd& p) const;

    std::vector<double> alphas_;
    std::vector<double> betas_;
    std::vector<double> log_norms_;  // -log B(alpha_i, beta_i)
};

}  // namespace stein
