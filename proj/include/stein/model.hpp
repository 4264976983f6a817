#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stein/autodiff.hpp"
#include "stein/density.hpp"
#include "stein/point_set.hpp"
#include "stein/rng.hpp"
#include "stein/stein_kernel.hpp"

namespace stein {

/// Symmetric directed edge list over nodes 0..N-1; no self-loops. Edges are
/// ordered by (dst, src) so scatter order is deterministic.
struct GraphEdges {
    std::vector<int> src;
    std::vector<int> dst;

    std::size_t edge_count() const { return src.size(); }
};

/// Edge (i, j) present iff i != j and ||X_i - X_j|| <= r (boundary inclusive).
GraphEdges build_radius_graph(const PointSet& points, double radius);

/// Median over nodes of the distance to each node's target_degree-th nearest
/// neighbor; N <= target_degree falls back to the set diameter.
double select_radius(const PointSet& points, int target_degree);

enum class Squash { Identity, LogisticUnitBox };

struct GraphRule {
    int target_degree = 10;
    double fixed_radius = 0.0;  // used instead of select_radius when > 0
};

struct ModelConfig {
    int layers = 3;   // L
    int hidden = 64;  // m_0 = ... = m_L
    int dim = 2;      // d
    GraphRule graph;
    Squash squash = Squash::Identity;
    double squash_margin = 1e-6;

    /// Identity for unbounded targets, logistic squash for the unit box.
    static ModelConfig defaults_for(const ScoredDensity& density);

    std::string canonical_json() const;
    static ModelConfig from_json_text(const std::string& text);
};

/// Linear -> ReLU -> Linear -> ReLU -> Linear.
struct Mlp {
    Eigen::MatrixXd w1, b1;  // (m x in), (m x 1)
    Eigen::MatrixXd w2, b2;  // (m x m), (m x 1)
    Eigen::MatrixXd w3, b3;  // (out x m), (out x 1)
};

struct LayerParams {
    Mlp psi;  // edge message network, input 2 m
    Mlp phi;  // node update network, input 2 m
};

/// All trainable arrays of the network, in declaration order: encoder, then
/// per layer psi and phi, then decoder. The same struct doubles as the
/// gradient and Adam-moment container.
struct ModelParams {
    Eigen::MatrixXd enc_w, enc_b;  // (m x d), (m x 1)
    std::vector<LayerParams> layers;
    Eigen::MatrixXd dec_w, dec_b;  // (d x m), (d x 1)

    /// Visit every array in declaration order.
    template <class F>
    void for_each(F&& f) {
        f(enc_w);
        f(enc_b);
        for (auto& l : layers) {
            f(l.psi.w1); f(l.psi.b1); f(l.psi.w2); f(l.psi.b2); f(l.psi.w3); f(l.psi.b3);
            f(l.phi.w1); f(l.phi.b1); f(l.phi.w2); f(l.phi.b2); f(l.phi.w3); f(l.phi.b3);
        }
        f(dec_w);
        f(dec_b);
    }

    template <class F>
    void for_each(F&& f) const {
        const_cast<ModelParams*>(this)->for_each([&](Eigen::MatrixXd& m) {
            f(static_cast<const Eigen::MatrixXd&>(m));
        });
    }

    ModelParams zeros_like() const;
    long parameter_count() const;

    /// Variance-preserving uniform fan-in initialization (gain sqrt(6) ahead
    /// of a ReLU, sqrt(3) for plain linear maps), biases zero. When
    /// mean_degree > 1 the message-network output layers are additionally
    /// scaled by 1/mean_degree so that summed neighborhood messages enter
    /// the node update at unit scale.
    static ModelParams init(const ModelConfig& config, Rng& rng, double mean_degree = 0.0);

    /// All-zero parameters with the shapes implied by the config.
    static ModelParams zeros(const ModelConfig& config);
};

struct ForwardHandles {
    int output;               // d x N tape node
    std::vector<int> params;  // leaves in declaration order
};

/// Build the full network on the tape: affine encoder, L message-passing
/// layers, affine decoder, optional squash. Input points are one per row.
ForwardHandles build_model_forward(ad::Tape& tape, const PointSet& inputs,
                                   const ModelParams& params, const GraphEdges& edges,
                                   const ModelConfig& config);

/// One message-passing layer on the tape: for every node i,
///   out_i = phi(concat(x_i, sum_{j in N_i} psi(concat(x_i, x_j)))).
/// Features are one column per node; isolated nodes aggregate a zero message.
int mp_layer(ad::Tape& tape, int features, const GraphEdges& edges, const Mlp& psi,
             const Mlp& phi, std::vector<int>* param_ids = nullptr);

/// Plain forward evaluation (same tape code path as training).
PointSet model_forward(const PointSet& inputs, const ModelParams& params,
                       const GraphEdges& edges, const ModelConfig& config);

struct LossResult {
    double loss;            // squared KSD
    double bandwidth;       // h used this call
    ModelParams gradients;
    PointSet transformed;   // decoded point set
};

/// Squared-KSD loss and reverse-mode parameter gradients. The bandwidth is
/// resolved from the transformed points on every call (fixed value or median
/// heuristic) and treated as a constant during differentiation.
LossResult ksd_loss_and_gradients(const PointSet& inputs, const ModelParams& params,
                                  const GraphEdges& edges, const ModelConfig& config,
                                  const ScoredDensity& density,
                                  const KernelConfig& bandwidth_policy);

// ---------------------------------------------------------------------------
// Checkpoint format: "SMPCKPT1" magic, u32 version, u64 JSON length, the
// ModelConfig as canonical JSON, then every parameter array in declaration
// order as little-endian 64-bit floats in row-major order.
// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params);

std::pair<ModelConfig, ModelParams> load_checkpoint(const std::filesystem::path& path);

/// Human-readable sidecar next to a checkpoint: loss history every
/// `stride` epochs plus the final loss.
void write_loss_sidecar(const std::filesystem::path& checkpoint_path,
                        const std::vector<double>& loss_trace, long stride = 100);

}  // namespace stein
