#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "stein/density.hpp"

namespace stein::ad {

/// Minimal reverse-mode tape over dense double matrices.
///
/// Feature matrices are stored one column per node (m x N), so gathering and
/// scattering graph neighborhoods are contiguous column operations. Nodes are
/// created in topological order; backward() walks the tape in reverse. Every
/// forward value is checked for finiteness and a non-finite entry raises
/// DivergenceError naming the operation.
///
/// The two domain-specific primitives are score_cols, whose input Jacobian is
/// the target's score Jacobian, and ksd_sq_loss, the squared kernel Stein
/// discrepancy of a point set with the bandwidth held constant.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Leaf tensor (parameter or constant input).
    int leaf(Eigen::MatrixXd value, const char* tag = "leaf");

    /// value(a) * value(b).
    int matmul(int a, int b);

    /// X + b broadcast over columns; bias is m x 1.
    int add_col_broadcast(int x, int bias);

    int relu(int x);

    /// Stack two matrices with equal column counts on top of each other.
    int concat_rows(int top, int bottom);

    /// out.col(e) = X.col(index[e]).
    int gather_cols(int x, std::vector<int> index);

    /// out has out_cols columns; out.col(dst[e]) accumulates X.col(e).
    int scatter_add_cols(int x, std::vector<int> dst, Eigen::Index out_cols);

    /// Elementwise margin + (1 - 2 margin) / (1 + exp(-x)), mapping into the
    /// open unit interval with the given margin.
    int logistic_unit_box(int x, double margin);

    /// S.col(i) = density.score(X.col(i)); the backward pass applies the
    /// score Jacobian of each column.
    int score_cols(int x, const ScoredDensity& density);

    /// Squared KSD (1/N^2) sum_ij k0(X_i, X_j) of the d x N point matrix
    /// xhat with per-point scores. The bandwidth h is a constant of the
    /// node, not a differentiated input.
    int ksd_sq_loss(int xhat, int scores, double h);

    /// Reverse accumulation from a scalar (1x1) root.
    void backward(int root);

    const Eigen::MatrixXd& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    /// Accumulated gradient; zeros if the node was not reached.
    Eigen::MatrixXd grad(int id) const;

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Eigen::MatrixXd value;
        Eigen::MatrixXd grad;  // empty until first accumulation
        std::function<void()> backprop;
        const char* tag;
    };

    int push(Eigen::MatrixXd value, const char* tag, std::function<void()> backprop);
    Eigen::MatrixXd& grad_buffer(int id);
    const Eigen::MatrixXd& val(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

    std::vector<Node> nodes_;
};

}  // namespace stein::ad
