#pragma once

#include <filesystem>
#include <memory>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "stein/density.hpp"
#include "stein/samplers.hpp"
#include "stein/stein_kernel.hpp"

namespace stein {

/// Build a density from its config-file spec:
///   {"target": "gaussian_mixture", "weights": [...], "means": [[...]], "covs": [[[...]]]}
///   {"target": "beta_product", "alphas": [...], "betas": [...]}
/// Unknown keys are rejected with the offending key named.
std::unique_ptr<ScoredDensity> make_density(const nlohmann::json& spec);

/// "median" or {"fixed": 1.0}.
KernelConfig parse_kernel_config(const nlohmann::json& j);

struct SweepConfig {
    nlohmann::json target_spec;
    std::vector<std::string> methods;
    std::vector<int> n_values;  // strictly increasing, >= 2
    int seeds = 3;
    std::uint64_t master_seed = 0;
    MPMCTrainConfig mpmc;
    SVGDConfig svgd;
    SteinPointsConfig stein_points;

    /// The paper's sweep: N = 20, 60, ..., 500.
    static std::vector<int> default_n_values();

    /// Canonical JSON of the effective configuration (defaults resolved).
    nlohmann::json to_json() const;
};

SweepConfig parse_sweep_config(const nlohmann::json& j);

nlohmann::json load_json_file(const std::filesystem::path& path);

/// Parse a density spec given either inline JSON (starts with '{') or a path
/// to a JSON file.
nlohmann::json load_json_inline_or_file(const std::string& text);

std::string hex64(std::uint64_t v);

/// Locale-independent %.Ng-style formatting via std::to_chars.
std::string format_double(double v, int significant_digits);

/// Strict locale-independent double parsing; the whole string must be
/// consumed.
double parse_double_strict(const std::string& text);

/// Methods a sweep may name, in canonical order.
const std::vector<std::string>& known_methods();

}  // namespace stein
