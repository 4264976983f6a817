#include "stein/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <vector>

#include "stein/errors.hpp"

namespace stein {

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

GraphEdges build_radius_graph(const PointSet& points, double radius) {
    if (!(radius > 0.0)) throw ConfigError("build_radius_graph: radius must be positive");
    const Eigen::Index n = points.count();
    GraphEdges edges;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if ((points.data.row(i) - points.data.row(j)).norm() <= radius) {
                edges.src.push_back(static_cast<int>(i));
                edges.dst.push_back(static_cast<int>(j));
                edges.src.push_back(static_cast<int>(j));
                edges.dst.push_back(static_cast<int>(i));
            }
        }
    }
    // order by (dst, src) so message aggregation is deterministic
    std::vector<std::size_t> order(edges.src.size());
    for (std::size_t e = 0; e < order.size(); ++e) order[e] = e;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (edges.dst[a] != edges.dst[b]) return edges.dst[a] < edges.dst[b];
        return edges.src[a] < edges.src[b];
    });
    GraphEdges sorted;
    sorted.src.reserve(order.size());
    sorted.dst.reserve(order.size());
    for (std::size_t e : order) {
        sorted.src.push_back(edges.src[e]);
        sorted.dst.push_back(edges.dst[e]);
    }
    return sorted;
}

double select_radius(const PointSet& points, int target_degree) {
    if (target_degree < 1) throw ConfigError("select_radius: target degree must be >= 1");
    const Eigen::Index n = points.count();
    if (n < 2) throw ConfigError("select_radius needs at least two points");
    if (n - 1 <= target_degree) {
        // full-degree request: the complete graph needs the set diameter
        double diameter = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = i + 1; j < n; ++j)
                diameter = std::max(diameter, (points.data.row(i) - points.data.row(j)).norm());
        return diameter;
    }
    std::vector<double> kth(static_cast<std::size_t>(n));
    std::vector<double> dists(static_cast<std::size_t>(n) - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
        std::size_t m = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            dists[m++] = (points.data.row(i) - points.data.row(j)).norm();
        }
        std::nth_element(dists.begin(), dists.begin() + (target_degree - 1), dists.end());
        kth[static_cast<std::size_t>(i)] = dists[static_cast<std::size_t>(target_degree - 1)];
    }
    return median_of(std::move(kth));
}

ModelConfig ModelConfig::defaults_for(const ScoredDensity& density) {
    ModelConfig config;
    config.dim = density.dim();
    config.squash =
        density.support() == Support::OpenUnitBox ? Squash::LogisticUnitBox : Squash::Identity;
    return config;
}

std::string ModelConfig::canonical_json() const {
    nlohmann::json j;
    j["dim"] = dim;
    j["fixed_radius"] = graph.fixed_radius;
    j["hidden"] = hidden;
    j["layers"] = layers;
    j["squash"] = squash == Squash::LogisticUnitBox ? "logistic_unit_box" : "identity";
    j["squash_margin"] = squash_margin;
    j["target_degree"] = graph.target_degree;
    return j.dump();
}

ModelConfig ModelConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model config: ") + e.what());
    }
    ModelConfig config;
    try {
        config.dim = j.at("dim").get<int>();
        config.hidden = j.at("hidden").get<int>();
        config.layers = j.at("layers").get<int>();
        config.graph.fixed_radius = j.at("fixed_radius").get<double>();
        config.graph.target_degree = j.at("target_degree").get<int>();
        config.squash_margin = j.at("squash_margin").get<double>();
        const std::string squash = j.at("squash").get<std::string>();
        if (squash == "identity")
            config.squash = Squash::Identity;
        else if (squash == "logistic_unit_box")
            config.squash = Squash::LogisticUnitBox;
        else
            throw ConfigError("unknown squash kind: " + squash);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("model config: ") + e.what());
    }
    if (config.layers < 1 || config.hidden < 1 || config.dim < 1)
        throw ConfigError("model config: layers, hidden and dim must be positive");
    return config;
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
    const int d = config.dim;
    const int m = config.hidden;
    ModelParams p;
    p.enc_w = Eigen::MatrixXd::Zero(m, d);
    p.enc_b = Eigen::MatrixXd::Zero(m, 1);
    p.layers.resize(static_cast<std::size_t>(config.layers));
    for (auto& layer : p.layers) {
        for (Mlp* mlp : {&layer.psi, &layer.phi}) {
            mlp->w1 = Eigen::MatrixXd::Zero(m, 2 * m);
            mlp->b1 = Eigen::MatrixXd::Zero(m, 1);
            mlp->w2 = Eigen::MatrixXd::Zero(m, m);
            mlp->b2 = Eigen::MatrixXd::Zero(m, 1);
            mlp->w3 = Eigen::MatrixXd::Zero(m, m);
            mlp->b3 = Eigen::MatrixXd::Zero(m, 1);
        }
    }
    p.dec_w = Eigen::MatrixXd::Zero(d, m);
    p.dec_b = Eigen::MatrixXd::Zero(d, 1);
    return p;
}

ModelParams ModelParams::zeros_like() const {
    ModelParams p = *this;
    p.for_each([](Eigen::MatrixXd& m) { m.setZero(); });
    return p;
}

long ModelParams::parameter_count() const {
    long count = 0;
    for_each([&](const Eigen::MatrixXd& m) { count += static_cast<long>(m.size()); });
    return count;
}

namespace {

// Uniform(-bound, bound) with bound = gain * sqrt(1/fan_in). A uniform draw
// has variance bound^2/3, so gain sqrt(3) preserves second moments through a
// linear layer and sqrt(6) additionally compensates the ReLU halving. The
// plain sqrt(1/fan_in) bound contracts activations by ~3x per layer, which
// collapses every decoded point onto the decoder bias for deep stacks.
void fill_uniform_fan_in(Eigen::MatrixXd& w, Rng& rng, double gain) {
    const double bound = gain * std::sqrt(1.0 / static_cast<double>(w.cols()));
    for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = rng.uniform(-bound, bound);
}

constexpr double kReluGain = 2.449489742783178;   // sqrt(6)
constexpr double kLinearGain = 1.7320508075688772;  // sqrt(3)

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, Rng& rng, double mean_degree) {
    ModelParams p = zeros(config);
    fill_uniform_fan_in(p.enc_w, rng, kLinearGain);
    for (auto& layer : p.layers) {
        for (Mlp* mlp : {&layer.psi, &layer.phi}) {
            fill_uniform_fan_in(mlp->w1, rng, kReluGain);
            fill_uniform_fan_in(mlp->w2, rng, kReluGain);
            fill_uniform_fan_in(mlp->w3, rng, kLinearGain);
        }
        if (mean_degree > 1.0) layer.psi.w3 /= mean_degree;
    }
    fill_uniform_fan_in(p.dec_w, rng, kLinearGain);
    return p;
}

namespace {

int mlp_apply(ad::Tape& tape, int x, const Mlp& mlp, std::vector<int>* param_ids) {
    const int w1 = tape.leaf(mlp.w1, "w1");
    const int b1 = tape.leaf(mlp.b1, "b1");
    const int w2 = tape.leaf(mlp.w2, "w2");
    const int b2 = tape.leaf(mlp.b2, "b2");
    const int w3 = tape.leaf(mlp.w3, "w3");
    const int b3 = tape.leaf(mlp.b3, "b3");
    if (param_ids)
        for (int id : {w1, b1, w2, b2, w3, b3}) param_ids->push_back(id);
    const int h1 = tape.relu(tape.add_col_broadcast(tape.matmul(w1, x), b1));
    const int h2 = tape.relu(tape.add_col_broadcast(tape.matmul(w2, h1), b2));
    return tape.add_col_broadcast(tape.matmul(w3, h2), b3);
}

}  // namespace

int mp_layer(ad::Tape& tape, int features, const GraphEdges& edges, const Mlp& psi,
             const Mlp& phi, std::vector<int>* param_ids) {
    const Eigen::Index n = tape.value(features).cols();
    std::vector<int> psi_ids;
    int aggregated;
    if (edges.edge_count() > 0) {
        const int x_dst = tape.gather_cols(features, edges.dst);
        const int x_src = tape.gather_cols(features, edges.src);
        const int edge_in = tape.concat_rows(x_dst, x_src);
        const int messages = mlp_apply(tape, edge_in, psi, &psi_ids);
        aggregated = tape.scatter_add_cols(messages, edges.dst, n);
    } else {
        // no neighbors anywhere: every node aggregates the zero message, and
        // the psi parameters still enter the tape so gradients exist
        for (const Eigen::MatrixXd* m : {&psi.w1, &psi.b1, &psi.w2, &psi.b2, &psi.w3, &psi.b3})
            psi_ids.push_back(tape.leaf(*m, "psi_unused"));
        aggregated = tape.leaf(Eigen::MatrixXd::Zero(psi.w3.rows(), n), "zero_messages");
    }
    if (param_ids) param_ids->insert(param_ids->end(), psi_ids.begin(), psi_ids.end());
    const int node_in = tape.concat_rows(features, aggregated);
    return mlp_apply(tape, node_in, phi, param_ids);
}

ForwardHandles build_model_forward(ad::Tape& tape, const PointSet& inputs,
                                   const ModelParams& params, const GraphEdges& edges,
                                   const ModelConfig& config) {
    if (inputs.dim() != config.dim)
        throw ConfigError("model forward: input dimension does not match the config");
    if (params.enc_w.rows() != config.hidden || params.enc_w.cols() != config.dim ||
        static_cast<int>(params.layers.size()) != config.layers)
        throw ConfigError("model forward: parameter shapes do not match the config");

    ForwardHandles handles;
    const int input = tape.leaf(inputs.data.transpose(), "input");
    const int enc_w = tape.leaf(params.enc_w, "enc_w");
    const int enc_b = tape.leaf(params.enc_b, "enc_b");
    handles.params.push_back(enc_w);
    handles.params.push_back(enc_b);
    int x = tape.add_col_broadcast(tape.matmul(enc_w, input), enc_b);
    for (const auto& layer : params.layers)
        x = mp_layer(tape, x, edges, layer.psi, layer.phi, &handles.params);
    const int dec_w = tape.leaf(params.dec_w, "dec_w");
    const int dec_b = tape.leaf(params.dec_b, "dec_b");
    handles.params.push_back(dec_w);
    handles.params.push_back(dec_b);
    int out = tape.add_col_broadcast(tape.matmul(dec_w, x), dec_b);
    if (config.squash == Squash::LogisticUnitBox)
        out = tape.logistic_unit_box(out, config.squash_margin);
    handles.output = out;
    return handles;
}

PointSet model_forward(const PointSet& inputs, const ModelParams& params,
                       const GraphEdges& edges, const ModelConfig& config) {
    ad::Tape tape;
    const ForwardHandles handles = build_model_forward(tape, inputs, params, edges, config);
    return PointSet(tape.value(handles.output).transpose());
}

LossResult ksd_loss_and_gradients(const PointSet& inputs, const ModelParams& params,
                                  const GraphEdges& edges, const ModelConfig& config,
                                  const ScoredDensity& density,
                                  const KernelConfig& bandwidth_policy) {
    if (density.support() == Support::OpenUnitBox && config.squash != Squash::LogisticUnitBox)
        throw ConfigError(
            "bounded target requires the logistic squash; identity output can leave the support");

    ad::Tape tape;
    const ForwardHandles handles = build_model_forward(tape, inputs, params, edges, config);

    LossResult result;
    result.transformed = PointSet(tape.value(handles.output).transpose());
    result.bandwidth = resolve_bandwidth(result.transformed, bandwidth_policy);

    const int scores = tape.score_cols(handles.output, density);
    const int loss = tape.ksd_sq_loss(handles.output, scores, result.bandwidth);
    result.loss = tape.value(loss)(0, 0);

    tape.backward(loss);
    result.gradients = params.zeros_like();
    std::size_t slot = 0;
    result.gradients.for_each([&](Eigen::MatrixXd& g) {
        g = tape.grad(handles.params[slot]);
        ++slot;
    });
    return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', 'M', 'P', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(buf, 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    unsigned char buf[8];
    in.read(reinterpret_cast<char*>(buf), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    return v;
}

double read_f64(std::istream& in) {
    const std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ModelConfig& config,
                     const ModelParams& params) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open checkpoint file for writing: " + path.string());
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, kVersion);
    const std::string json = config.canonical_json();
    write_u64(out, json.size());
    out.write(json.data(), static_cast<std::streamsize>(json.size()));
    params.for_each([&](const Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) write_f64(out, m(i, j));
    });
    if (!out) throw ConfigError("failed writing checkpoint: " + path.string());
}

std::pair<ModelConfig, ModelParams> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open checkpoint file: " + path.string());
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw ParseError("not a checkpoint file: " + path.string());
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw ParseError("unsupported checkpoint version " + std::to_string(version));
    const std::uint64_t json_len = read_u64(in);
    std::string json(json_len, '\0');
    in.read(json.data(), static_cast<std::streamsize>(json_len));
    if (!in) throw ParseError("truncated checkpoint header: " + path.string());

    const ModelConfig config = ModelConfig::from_json_text(json);
    ModelParams params = ModelParams::zeros(config);
    params.for_each([&](Eigen::MatrixXd& m) {
        for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = read_f64(in);
    });
    if (!in) throw ParseError("truncated checkpoint payload: " + path.string());
    in.peek();
    if (!in.eof()) throw ParseError("trailing bytes after checkpoint payload: " + path.string());
    return {config, std::move(params)};
}

void write_loss_sidecar(const std::filesystem::path& checkpoint_path,
                        const std::vector<double>& loss_trace, long stride) {
    nlohmann::json history = nlohmann::json::array();
    for (std::size_t e = 0; e < loss_trace.size(); ++e) {
        if (e % static_cast<std::size_t>(stride) == 0 || e + 1 == loss_trace.size())
            history.push_back({{"epoch", e}, {"loss", loss_trace[e]}});
    }
    nlohmann::json j;
    j["epochs"] = loss_trace.empty() ? 0 : loss_trace.size() - 1;
    j["final_loss"] = loss_trace.empty() ? 0.0 : loss_trace.back();
    j["history"] = history;

    const std::filesystem::path sidecar = checkpoint_path.string() + ".json";
    std::ofstream out(sidecar, std::ios::trunc);
    if (!out) throw ConfigError("cannot open sidecar file for writing: " + sidecar.string());
    out << j.dump(2) << "\n";
}

}  // namespace stein
