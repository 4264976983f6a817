#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "stein/config.hpp"
#include "stein/csv.hpp"
#include "stein/errors.hpp"
#include "stein/harness.hpp"
#include "stein/model.hpp"
#include "stein/samplers.hpp"
#include "stein/svg_plot.hpp"

namespace {

enum class LogLevel { Quiet = 0, Error = 1, Info = 2, Debug = 3 };

LogLevel g_log_level = LogLevel::Info;

LogLevel level_from_env() {
    const char* env = std::getenv("STEIN_SAMPLER_LOG");
    if (!env) return LogLevel::Info;
    const std::string value = env;
    if (value == "quiet") return LogLevel::Quiet;
    if (value == "error") return LogLevel::Error;
    if (value == "info") return LogLevel::Info;
    if (value == "debug") return LogLevel::Debug;
    return LogLevel::Info;
}

void log_info(const std::string& msg) {
    if (g_log_level >= LogLevel::Info) std::cerr << msg << "\n";
}

struct GlobalOptions {
    std::uint64_t seed = 0;
    bool seed_given = false;
    int workers = static_cast<int>(std::thread::hardware_concurrency());
    bool verbose = false;
};

int cmd_sweep(const std::string& config_path, const std::string& out_dir,
              const std::vector<std::string>& methods_override,
              const std::vector<int>& n_override, int seeds_override,
              const GlobalOptions& global) {
    nlohmann::json config_json = stein::load_json_file(config_path);
    if (!methods_override.empty()) config_json["methods"] = methods_override;
    if (!n_override.empty()) config_json["n_values"] = n_override;
    if (seeds_override > 0) config_json["seeds"] = seeds_override;
    if (global.seed_given) config_json["master_seed"] = global.seed;
    const stein::SweepConfig config = stein::parse_sweep_config(config_json);

    std::filesystem::create_directories(out_dir);
    const std::filesystem::path results_path = std::filesystem::path(out_dir) / "results.csv";
    std::ofstream log(std::filesystem::path(out_dir) / "sweep.log", std::ios::app);

    const auto records = stein::run_sweep(config, results_path, global.workers, &log);

    int failed = 0;
    for (const auto& r : records) {
        if (r.status != "ok") {
            ++failed;
            std::cerr << r.method << " N=" << r.n << " seed=" << r.seed << ": " << r.status
                      << "\n";
        }
    }
    log_info("wrote " + results_path.string() + " (" + std::to_string(records.size()) +
             " records, " + std::to_string(failed) + " failed)");
    return failed == 0 ? 0 : 1;
}

int cmd_train(const std::string& target_text, int n, long epochs, double lr, double wd,
              int hidden, int layers, const std::string& out_prefix,
              const GlobalOptions& global) {
    const auto density = stein::make_density(stein::load_json_inline_or_file(target_text));

    stein::MPMCTrainConfig config;
    config.epochs = epochs;
    config.learning_rate = lr;
    config.weight_decay = wd;
    config.model.hidden = hidden;
    config.model.layers = layers;
    config.seed = stein::derive_seed(global.seed, "train", static_cast<std::uint64_t>(n), 0);

    stein::Rng rng(config.seed);
    const stein::MPMCResult result = stein::stein_mpmc(*density, n, config, rng);

    double bandwidth = 0.0;
    const double ksd = stein::evaluate_ksd(result.points, *density, config.seed, &bandwidth);

    if (!out_prefix.empty()) {
        stein::save_checkpoint(out_prefix + ".ckpt", result.model_config, result.best_params);
        stein::write_loss_sidecar(out_prefix + ".ckpt", result.loss_trace);
        stein::write_point_set_csv(out_prefix + ".points.csv", result.points);
        log_info("wrote " + out_prefix + ".ckpt, " + out_prefix + ".ckpt.json and " + out_prefix +
                 ".points.csv");
    }
    std::cout << "ksd " << stein::format_double(ksd, 12) << "\n";
    std::cout << "bandwidth " << stein::format_double(bandwidth, 12) << "\n";
    std::cout << "best_epoch " << result.best_epoch << "\n";
    return 0;
}

int cmd_ksd(const std::string& points_path, const std::string& target_text,
            const std::string& bandwidth_text) {
    const stein::PointSet points = stein::read_point_set_csv(points_path);
    const auto density = stein::make_density(stein::load_json_inline_or_file(target_text));
    if (points.dim() != density->dim())
        throw stein::ConfigError("point set has dimension " + std::to_string(points.dim()) +
                                 " but the target expects " + std::to_string(density->dim()));

    stein::KernelConfig config = stein::KernelConfig::median();
    if (bandwidth_text != "median")
        config = stein::KernelConfig::fixed(stein::parse_double_strict(bandwidth_text));
    const double h = stein::resolve_bandwidth(points, config);
    const double value = stein::ksd_fixed_bandwidth(points, *density, h);

    std::cout << "ksd " << stein::format_double(value, 12) << "\n";
    std::cout << "bandwidth " << stein::format_double(h, 12) << "\n";
    return 0;
}

int cmd_plot(const std::string& results_path, const std::string& out_path) {
    const auto records = stein::read_results(results_path);
    const std::string svg = stein::render_ksd_plot(records);
    std::ofstream out(out_path, std::ios::trunc | std::ios::binary);
    if (!out) throw stein::ConfigError("cannot open output SVG: " + out_path);
    out << svg;
    log_info("wrote " + out_path);
    return 0;
}

int cmd_search(const std::string& target_text, int n, int trials, long trial_epochs,
               const std::string& out_path, const GlobalOptions& global) {
    const auto density = stein::make_density(stein::load_json_inline_or_file(target_text));

    stein::SearchSpace space;
    space.trials = trials;
    space.trial_epochs = trial_epochs;

    stein::Rng rng(stein::derive_seed(global.seed, "search", static_cast<std::uint64_t>(n), 0));
    const stein::SearchResult result = stein::random_search(space, *density, n, rng);

    if (!out_path.empty()) {
        stein::write_trials_csv(result.trials, out_path);
        log_info("wrote " + out_path);
    }
    nlohmann::json best{{"hidden", result.hidden},
                        {"layers", result.layers},
                        {"learning_rate", result.learning_rate},
                        {"weight_decay", result.weight_decay},
                        {"ksd", result.best_ksd}};
    std::cout << best.dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    g_log_level = level_from_env();

    CLI::App app{"Low-discrepancy point sets from differentiable targets by minimizing kernel "
                 "Stein discrepancy"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions global;
    auto* seed_opt = app.add_option("--seed", global.seed, "Master seed");
    app.add_option("--workers", global.workers, "Worker threads for sweep cells");
    app.add_flag("--verbose", global.verbose, "Debug logging");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run a benchmark sweep from a JSON config");
    std::string sweep_config, sweep_out;
    std::vector<std::string> sweep_methods;
    std::vector<int> sweep_n;
    int sweep_seeds = 0;
    sweep->add_option("--config", sweep_config, "Sweep config JSON path")->required();
    sweep->add_option("--out", sweep_out, "Output directory")->required();
    sweep->add_option("--methods", sweep_methods,
                      "Override the methods list (stein_mpmc svgd stein_points iid)");
    sweep->add_option("--n", sweep_n, "Override the N values");
    sweep->add_option("--seeds", sweep_seeds, "Override seeds per cell");

    // train
    auto* train = app.add_subcommand("train", "Train one Stein-MPMC model");
    std::string train_target, train_out;
    int train_n = 100, train_hidden = 64, train_layers = 3;
    long train_epochs = 50000;
    double train_lr = 1e-3, train_wd = 1e-5;
    train->add_option("--target", train_target, "Target spec (inline JSON or path)")->required();
    train->add_option("--n", train_n, "Point count");
    train->add_option("--epochs", train_epochs, "Training epochs");
    train->add_option("--lr", train_lr, "Learning rate");
    train->add_option("--wd", train_wd, "Weight decay");
    train->add_option("--hidden", train_hidden, "Hidden size");
    train->add_option("--layers", train_layers, "Message-passing layers");
    train->add_option("--out", train_out, "Output prefix for .ckpt/.points.csv");

    // ksd
    auto* ksd_cmd = app.add_subcommand("ksd", "Evaluate the KSD of a point-set CSV");
    std::string ksd_points, ksd_target, ksd_bandwidth = "median";
    ksd_cmd->add_option("--points", ksd_points, "Point-set CSV path")->required();
    ksd_cmd->add_option("--target", ksd_target, "Target spec (inline JSON or path)")->required();
    ksd_cmd->add_option("--bandwidth", ksd_bandwidth, "median or a fixed value");

    // plot
    auto* plot = app.add_subcommand("plot", "Render a KSD-vs-N SVG from a results CSV");
    std::string plot_results, plot_out;
    plot->add_option("--results", plot_results, "Results CSV path")->required();
    plot->add_option("--out", plot_out, "Output SVG path")->required();

    // search
    auto* search = app.add_subcommand("search", "Random hyperparameter search for Stein-MPMC");
    std::string search_target, search_out;
    int search_n = 100, search_trials = 30;
    long search_epochs = 5000;
    search->add_option("--target", search_target, "Target spec (inline JSON or path)")->required();
    search->add_option("--n", search_n, "Point count");
    search->add_option("--trials", search_trials, "Trials");
    search->add_option("--epochs", search_epochs, "Epochs per trial");
    search->add_option("--out", search_out, "Trials CSV path");

    CLI11_PARSE(app, argc, argv);

    global.seed_given = seed_opt->count() > 0;
    if (global.verbose) g_log_level = LogLevel::Debug;
    if (global.workers < 1) global.workers = 1;

    try {
        if (sweep->parsed())
            return cmd_sweep(sweep_config, sweep_out, sweep_methods, sweep_n, sweep_seeds, global);
        if (train->parsed())
            return cmd_train(train_target, train_n, train_epochs, train_lr, train_wd, train_hidden,
                             train_layers, train_out, global);
        if (ksd_cmd->parsed()) return cmd_ksd(ksd_points, ksd_target, ksd_bandwidth);
        if (plot->parsed()) return cmd_plot(plot_results, plot_out);
        if (search->parsed())
            return cmd_search(search_target, search_n, search_trials, search_epochs, search_out,
                              global);
    } catch (const stein::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const stein::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
