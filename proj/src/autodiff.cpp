#include "stein/autodiff.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "stein/errors.hpp"
#include "stein/stein_kernel.hpp"

namespace stein::ad {

int Tape::push(Eigen::MatrixXd value, const char* tag, std::function<void()> backprop) {
    if (!value.allFinite())
        throw DivergenceError(std::string("non-finite value in tape op '") + tag + "'");
    nodes_.push_back(Node{std::move(value), Eigen::MatrixXd(), std::move(backprop), tag});
    return static_cast<int>(nodes_.size()) - 1;
}

Eigen::MatrixXd& Tape::grad_buffer(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

Eigen::MatrixXd Tape::grad(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) return Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

int Tape::leaf(Eigen::MatrixXd value, const char* tag) {
    return push(std::move(value), tag, nullptr);
}

int Tape::matmul(int a, int b) {
    if (val(a).cols() != val(b).rows()) throw ConfigError("matmul: inner dimensions disagree");
    Eigen::MatrixXd v = val(a) * val(b);
    const int id = push(std::move(v), "matmul", nullptr);
    nodes_.back().backprop = [this, id, a, b] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        grad_buffer(a).noalias() += g * val(b).transpose();
        grad_buffer(b).noalias() += val(a).transpose() * g;
    };
    return id;
}

int Tape::add_col_broadcast(int x, int bias) {
    if (val(bias).cols() != 1 || val(bias).rows() != val(x).rows())
        throw ConfigError("add_col_broadcast: bias must be m x 1 matching the input rows");
    Eigen::MatrixXd v = val(x).colwise() + Eigen::VectorXd(val(bias).col(0));
    const int id = push(std::move(v), "add_bias", nullptr);
    nodes_.back().backprop = [this, id, x, bias] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        grad_buffer(x) += g;
        grad_buffer(bias).col(0) += g.rowwise().sum();
    };
    return id;
}

int Tape::relu(int x) {
    Eigen::MatrixXd v = val(x).cwiseMax(0.0);
    const int id = push(std::move(v), "relu", nullptr);
    nodes_.back().backprop = [this, id, x] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        grad_buffer(x).array() += g.array() * (val(x).array() > 0.0).cast<double>();
    };
    return id;
}

int Tape::concat_rows(int top, int bottom) {
    if (val(top).cols() != val(bottom).cols())
        throw ConfigError("concat_rows: column counts disagree");
    Eigen::MatrixXd v(val(top).rows() + val(bottom).rows(), val(top).cols());
    v.topRows(val(top).rows()) = val(top);
    v.bottomRows(val(bottom).rows()) = val(bottom);
    const int id = push(std::move(v), "concat_rows", nullptr);
    const Eigen::Index top_rows = val(top).rows();
    nodes_.back().backprop = [this, id, top, bottom, top_rows] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        grad_buffer(top) += g.topRows(top_rows);
        grad_buffer(bottom) += g.bottomRows(g.rows() - top_rows);
    };
    return id;
}

int Tape::gather_cols(int x, std::vector<int> index) {
    const Eigen::MatrixXd& src = val(x);
    Eigen::MatrixXd v(src.rows(), static_cast<Eigen::Index>(index.size()));
    for (std::size_t e = 0; e < index.size(); ++e) {
        if (index[e] < 0 || index[e] >= src.cols())
            throw ConfigError("gather_cols: index out of range");
        v.col(static_cast<Eigen::Index>(e)) = src.col(index[e]);
    }
    const int id = push(std::move(v), "gather_cols", nullptr);
    nodes_.back().backprop = [this, id, x, index = std::move(index)] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        Eigen::MatrixXd& gx = grad_buffer(x);
        for (std::size_t e = 0; e < index.size(); ++e)
            gx.col(index[e]) += g.col(static_cast<Eigen::Index>(e));
    };
    return id;
}

int Tape::scatter_add_cols(int x, std::vector<int> dst, Eigen::Index out_cols) {
    const Eigen::MatrixXd& src = val(x);
    if (static_cast<Eigen::Index>(dst.size()) != src.cols())
        throw ConfigError("scatter_add_cols: one destination per column required");
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(src.rows(), out_cols);
    for (std::size_t e = 0; e < dst.size(); ++e) {
        if (dst[e] < 0 || dst[e] >= out_cols)
            throw ConfigError("scatter_add_cols: destination out of range");
        v.col(dst[e]) += src.col(static_cast<Eigen::Index>(e));
    }
    const int id = push(std::move(v), "scatter_add_cols", nullptr);
    nodes_.back().backprop = [this, id, x, dst = std::move(dst)] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        Eigen::MatrixXd& gx = grad_buffer(x);
        for (std::size_t e = 0; e < dst.size(); ++e)
            gx.col(static_cast<Eigen::Index>(e)) += g.col(dst[e]);
    };
    return id;
}

int Tape::logistic_unit_box(int x, double margin) {
    const Eigen::ArrayXXd sigma = 1.0 / (1.0 + (-val(x).array()).exp());
    Eigen::MatrixXd v = (margin + (1.0 - 2.0 * margin) * sigma).matrix();
    const int id = push(std::move(v), "logistic_unit_box", nullptr);
    nodes_.back().backprop = [this, id, x, margin, sigma] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        grad_buffer(x).array() += g.array() * (1.0 - 2.0 * margin) * sigma * (1.0 - sigma);
    };
    return id;
}

int Tape::score_cols(int x, const ScoredDensity& density) {
    const Eigen::MatrixXd& pts = val(x);
    if (pts.rows() != density.dim()) throw ConfigError("score_cols: dimension mismatch");
    Eigen::MatrixXd v(pts.rows(), pts.cols());
    for (Eigen::Index i = 0; i < pts.cols(); ++i) v.col(i) = density.score(pts.col(i));
    const int id = push(std::move(v), "score", nullptr);
    nodes_.back().backprop = [this, id, x, &density] {
        const Eigen::MatrixXd& g = nodes_[static_cast<std::size_t>(id)].grad;
        const Eigen::MatrixXd& pts = val(x);
        Eigen::MatrixXd& gx = grad_buffer(x);
        for (Eigen::Index i = 0; i < pts.cols(); ++i)
            gx.col(i) += density.score_jacobian(pts.col(i)) * g.col(i);
    };
    return id;
}

int Tape::ksd_sq_loss(int xhat, int scores, double h) {
    const Eigen::MatrixXd& x = val(xhat);
    const Eigen::MatrixXd& s = val(scores);
    if (x.rows() != s.rows() || x.cols() != s.cols())
        throw ConfigError("ksd_sq_loss: point and score shapes disagree");
    const Eigen::Index n = x.cols();
    if (n < 1) throw ConfigError("ksd_sq_loss: empty point set");

    std::vector<double> diag(static_cast<std::size_t>(n));
    std::vector<double> upper;
    upper.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        diag[static_cast<std::size_t>(i)] = stein_k0_value(x.col(i), x.col(i), s.col(i), s.col(i), h);
        for (Eigen::Index j = i + 1; j < n; ++j)
            upper.push_back(stein_k0_value(x.col(i), x.col(j), s.col(i), s.col(j), h));
    }
    const double nn = static_cast<double>(n);
    const double loss = (canonical_sum(diag) + 2.0 * canonical_sum(upper)) / (nn * nn);

    Eigen::MatrixXd v(1, 1);
    v(0, 0) = loss;
    const int id = push(std::move(v), "ksd_sq_loss", nullptr);
    nodes_.back().backprop = [this, id, xhat, scores, h, n] {
        const double c = nodes_[static_cast<std::size_t>(id)].grad(0, 0) /
                         (static_cast<double>(n) * static_cast<double>(n));
        const Eigen::MatrixXd& x = val(xhat);
        const Eigen::MatrixXd& s = val(scores);
        Eigen::MatrixXd& gx = grad_buffer(xhat);
        Eigen::MatrixXd& gs = grad_buffer(scores);
        for (Eigen::Index i = 0; i < n; ++i) {
            // diagonal pair: position gradients cancel, score gradient is 2 s_i
            gs.col(i) += (2.0 * c) * s.col(i);
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const SteinK0Partials p =
                    stein_k0_partials(x.col(i), x.col(j), s.col(i), s.col(j), h);
                // the ordered pairs (i,j) and (j,i) contribute identically
                gx.col(i) += (2.0 * c) * p.dx;
                gx.col(j) -= (2.0 * c) * p.dx;
                gs.col(i) += (2.0 * c) * p.dsx;
                gs.col(j) += (2.0 * c) * p.dsy;
            }
        }
    };
    return id;
}

void Tape::backward(int root) {
    Node& r = nodes_[static_cast<std::size_t>(root)];
    if (r.value.rows() != 1 || r.value.cols() != 1)
        throw ConfigError("backward: root must be a scalar node");
    grad_buffer(root).setOnes();
    for (int i = root; i >= 0; --i) {
        Node& n = nodes_[static_cast<std::size_t>(i)];
        if (n.grad.size() != 0 && n.backprop) n.backprop();
    }
}

}  // namespace stein::ad
