#include "stein/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "stein/errors.hpp"

namespace stein {

namespace {

void reject_unknown_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* k) { return key == k; }) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

Eigen::VectorXd to_vector(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array()) throw ConfigError(where + " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

Eigen::MatrixXd to_matrix(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a non-empty 2d array");
    const std::size_t rows = j.size();
    const std::size_t cols = j[0].size();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        if (!j[i].is_array() || j[i].size() != cols)
            throw ConfigError(where + " rows have inconsistent lengths");
        for (std::size_t k = 0; k < cols; ++k)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
    return m;
}

}  // namespace

std::unique_ptr<ScoredDensity> make_density(const nlohmann::json& spec) {
    if (!spec.is_object() || !spec.contains("target"))
        throw ConfigError("density spec needs a 'target' key");
    const std::string target = spec.at("target").get<std::string>();

    if (target == "gaussian_mixture") {
        reject_unknown_keys(spec, {"target", "weights", "means", "covs"}, "gaussian_mixture spec");
        for (const char* key : {"weights", "means", "covs"})
            if (!spec.contains(key))
                throw ConfigError(std::string("gaussian_mixture spec needs '") + key + "'");
        const auto& weights = spec.at("weights");
        const auto& means = spec.at("means");
        const auto& covs = spec.at("covs");
        if (weights.size() != means.size() || weights.size() != covs.size())
            throw ConfigError("weights, means and covs must have equal lengths");
        std::vector<GaussianMixture::Component> components;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            components.push_back({weights[k].get<double>(),
                                  to_vector(means[k], "means[" + std::to_string(k) + "]"),
                                  to_matrix(covs[k], "covs[" + std::to_string(k) + "]")});
        }
        return std::make_unique<GaussianMixture>(std::move(components));
    }
    if (target == "beta_product") {
        reject_unknown_keys(spec, {"target", "alphas", "betas"}, "beta_product spec");
        for (const char* key : {"alphas", "betas"})
            if (!spec.contains(key))
                throw ConfigError(std::string("beta_product spec needs '") + key + "'");
        std::vector<double> alphas = spec.at("alphas").get<std::vector<double>>();
        std::vector<double> betas = spec.at("betas").get<std::vector<double>>();
        return std::make_unique<BetaProduct>(std::move(alphas), std::move(betas));
    }
    throw ConfigError("unknown target kind '" + target + "'");
}

KernelConfig parse_kernel_config(const nlohmann::json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "median") return KernelConfig::median();
        throw ConfigError("bandwidth must be \"median\" or {\"fixed\": h}");
    }
    if (j.is_object()) {
        reject_unknown_keys(j, {"fixed"}, "bandwidth");
        if (!j.contains("fixed")) throw ConfigError("bandwidth object needs a 'fixed' key");
        const double h = j.at("fixed").get<double>();
        if (!(h > 0.0)) throw ConfigError("fixed bandwidth must be positive");
        return KernelConfig::fixed(h);
    }
    throw ConfigError("bandwidth must be \"median\" or {\"fixed\": h}");
}

std::vector<int> SweepConfig::default_n_values() {
    std::vector<int> values;
    for (int n = 20; n <= 500; n += 40) values.push_back(n);
    return values;
}

const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods = {"stein_mpmc", "svgd", "stein_points", "iid"};
    return methods;
}

nlohmann::json SweepConfig::to_json() const {
    nlohmann::json j;
    j["target"] = target_spec;
    j["methods"] = methods;
    j["n_values"] = n_values;
    j["seeds"] = seeds;
    j["master_seed"] = master_seed;
    j["stein_mpmc"] = {{"epochs", mpmc.epochs},
                       {"learning_rate", mpmc.learning_rate},
                       {"weight_decay", mpmc.weight_decay},
                       {"hidden", mpmc.model.hidden},
                       {"layers", mpmc.model.layers},
                       {"target_degree", mpmc.model.graph.target_degree},
                       {"eval_every", mpmc.eval_every}};
    j["svgd"] = {{"step_size", svgd.step_size}, {"iterations", svgd.iterations}};
    j["stein_points"] = {{"inner_learning_rate", stein_points.inner_learning_rate},
                         {"inner_iterations", stein_points.inner_iterations},
                         {"restarts", stein_points.restarts}};
    return j;
}

SweepConfig parse_sweep_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("sweep config must be a JSON object");
    reject_unknown_keys(j,
                        {"target", "methods", "n_values", "seeds", "master_seed", "stein_mpmc",
                         "svgd", "stein_points"},
                        "sweep config");
    SweepConfig config;
    if (!j.contains("target")) throw ConfigError("sweep config needs a 'target'");
    config.target_spec = j.at("target");
    make_density(config.target_spec);  // validate eagerly

    if (!j.contains("methods")) throw ConfigError("sweep config needs a 'methods' list");
    config.methods = j.at("methods").get<std::vector<std::string>>();
    if (config.methods.empty()) throw ConfigError("sweep config: at least one method required");
    for (const auto& m : config.methods) {
        const auto& known = known_methods();
        if (std::find(known.begin(), known.end(), m) == known.end())
            throw ConfigError("unknown method '" + m + "'");
    }

    config.n_values = j.contains("n_values") ? j.at("n_values").get<std::vector<int>>()
                                             : SweepConfig::default_n_values();
    if (config.n_values.empty()) throw ConfigError("sweep config: n_values must not be empty");
    for (std::size_t i = 0; i < config.n_values.size(); ++i) {
        if (config.n_values[i] < 2) throw ConfigError("sweep config: every N must be >= 2");
        if (i > 0 && config.n_values[i] <= config.n_values[i - 1])
            throw ConfigError("sweep config: n_values must be strictly increasing");
    }

    if (j.contains("seeds")) config.seeds = j.at("seeds").get<int>();
    if (config.seeds < 1) throw ConfigError("sweep config: seeds must be >= 1");
    if (j.contains("master_seed")) config.master_seed = j.at("master_seed").get<std::uint64_t>();

    if (j.contains("stein_mpmc")) {
        const auto& m = j.at("stein_mpmc");
        reject_unknown_keys(m,
                            {"epochs", "learning_rate", "weight_decay", "hidden", "layers",
                             "target_degree", "eval_every"},
                            "stein_mpmc config");
        if (m.contains("epochs")) config.mpmc.epochs = m.at("epochs").get<long>();
        if (m.contains("learning_rate"))
            config.mpmc.learning_rate = m.at("learning_rate").get<double>();
        if (m.contains("weight_decay"))
            config.mpmc.weight_decay = m.at("weight_decay").get<double>();
        if (m.contains("hidden")) config.mpmc.model.hidden = m.at("hidden").get<int>();
        if (m.contains("layers")) config.mpmc.model.layers = m.at("layers").get<int>();
        if (m.contains("target_degree"))
            config.mpmc.model.graph.target_degree = m.at("target_degree").get<int>();
        if (m.contains("eval_every")) config.mpmc.eval_every = m.at("eval_every").get<long>();
    }
    if (j.contains("svgd")) {
        const auto& s = j.at("svgd");
        reject_unknown_keys(s, {"step_size", "iterations"}, "svgd config");
        if (s.contains("step_size")) config.svgd.step_size = s.at("step_size").get<double>();
        if (s.contains("iterations")) config.svgd.iterations = s.at("iterations").get<long>();
    }
    if (j.contains("stein_points")) {
        const auto& s = j.at("stein_points");
        reject_unknown_keys(s, {"inner_learning_rate", "inner_iterations", "restarts"},
                            "stein_points config");
        if (s.contains("inner_learning_rate"))
            config.stein_points.inner_learning_rate = s.at("inner_learning_rate").get<double>();
        if (s.contains("inner_iterations"))
            config.stein_points.inner_iterations = s.at("inner_iterations").get<int>();
        if (s.contains("restarts")) config.stein_points.restarts = s.at("restarts").get<int>();
    }
    return config;
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

nlohmann::json load_json_inline_or_file(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            return nlohmann::json::parse(text);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("inline JSON: ") + e.what());
        }
    }
    return load_json_file(text);
}

std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string format_double(double v, int significant_digits) {
    char buf[64];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general,
                                      significant_digits);
    return std::string(buf, result.ptr);
}

double parse_double_strict(const std::string& text) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    const auto result = std::from_chars(begin, end, v);
    if (result.ec != std::errc() || result.ptr != end)
        throw ParseError("not a number: '" + text + "'");
    return v;
}

}  // namespace stein
