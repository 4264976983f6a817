#pragma once

#include <Eigen/Core>

namespace stein {

/// An ordered collection of N points in R^d, one point per row.
struct PointSet {
    Eigen::MatrixXd data;  // N x d

    PointSet() = default;
    explicit PointSet(Eigen::MatrixXd m) : data(std::move(m)) {}

    Eigen::Index count() const { return data.rows(); }
    Eigen::Index dim() const { return data.cols(); }
    bool all_finite() const { return data.allFinite(); }

    Eigen::MatrixXd::ConstRowXpr point(Eigen::Index i) const { return data.row(i); }
};

}  // namespace stein
