#include "stein/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include "stein/csv.hpp"
#include "stein/errors.hpp"

namespace stein {

// ---------------------------------------------------------------------------
// Results CSV
// ---------------------------------------------------------------------------

std::string format_record(const RunRecord& r) {
    std::string line;
    line += csv_escape(r.method);
    line += ',';
    line += csv_escape(r.target);
    line += ',';
    line += std::to_string(r.n);
    line += ',';
    line += std::to_string(r.seed);
    line += ',';
    line += format_double(r.ksd, 17);
    line += ',';
    line += format_double(r.bandwidth, 17);
    line += ',';
    line += format_double(r.walltime_s, 17);
    line += ',';
    line += csv_escape(r.hparams_json);
    line += ',';
    line += csv_escape(r.config_hash);
    line += ',';
    line += csv_escape(r.status);
    return line;
}

void write_results(const std::vector<RunRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open results CSV for writing: " + path.string());
    out << kResultsHeader << "\n";
    for (const auto& r : records) out << format_record(r) << "\n";
    if (!out) throw ConfigError("failed writing results CSV: " + path.string());
}

std::vector<RunRecord> read_results(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open results CSV: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty results CSV", 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = csv_split(line, 1);
    const std::vector<std::string> expected = csv_split(kResultsHeader, 1);
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i >= expected.size() || header[i] != expected[i])
            throw ParseError("unknown column '" + header[i] + "' in results CSV", 1);
    }
    if (header.size() < expected.size())
        throw ParseError("missing column '" + expected[header.size()] + "' in results CSV", 1);

    std::vector<RunRecord> records;
    std::size_t line_number = 1;
    while (std::getline(in, line)) {
        ++line_number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> f = csv_split(line, line_number);
        if (f.size() != expected.size())
            throw ParseError("expected " + std::to_string(expected.size()) + " fields, got " +
                                 std::to_string(f.size()),
                             line_number);
        RunRecord r;
        try {
            r.method = f[0];
            r.target = f[1];
            r.n = static_cast<int>(std::stol(f[2]));
            r.seed = static_cast<int>(std::stol(f[3]));
            r.ksd = parse_double_strict(f[4]);
            r.bandwidth = parse_double_strict(f[5]);
            r.walltime_s = parse_double_strict(f[6]);
            r.hparams_json = f[7];
            r.config_hash = f[8];
            r.status = f[9];
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad results row: ") + e.what(), line_number);
        }
        records.push_back(std::move(r));
    }
    return records;
}

// ---------------------------------------------------------------------------
// Sweep
// ---------------------------------------------------------------------------

namespace {

struct Cell {
    std::string method;
    int n;     // 0 for a sequential stein_points run covering every N
    int seed;
};

std::string mpmc_hparams(const MPMCTrainConfig& c, std::uint64_t seed) {
    nlohmann::json j{{"epochs", c.epochs},
                     {"eval_every", c.eval_every},
                     {"hidden", c.model.hidden},
                     {"layers", c.model.layers},
                     {"learning_rate", c.learning_rate},
                     {"seed", seed},
                     {"target_degree", c.model.graph.target_degree},
                     {"weight_decay", c.weight_decay}};
    return j.dump();
}

std::string svgd_hparams(const SVGDConfig& c, std::uint64_t seed) {
    nlohmann::json j{{"iterations", c.iterations}, {"seed", seed}, {"step_size", c.step_size}};
    return j.dump();
}

std::string stein_points_hparams(const SteinPointsConfig& c, std::uint64_t seed) {
    nlohmann::json j{{"inner_iterations", c.inner_iterations},
                     {"inner_learning_rate", c.inner_learning_rate},
                     {"restarts", c.restarts},
                     {"seed", seed}};
    return j.dump();
}

}  // namespace

std::vector<RunRecord> run_sweep(const SweepConfig& config,
                                 const std::filesystem::path& results_csv, int workers,
                                 std::ostream* log) {
    const auto density = make_density(config.target_spec);
    const std::string target_name = density->name();
    const std::string config_hash = hex64(fnv1a64(config.to_json().dump()));
    const int n_max = config.n_values.back();

    std::vector<Cell> cells;
    for (const auto& method : config.methods) {
        if (method == "stein_points") {
            for (int seed = 0; seed < config.seeds; ++seed) cells.push_back({method, 0, seed});
        } else {
            for (int n : config.n_values)
                for (int seed = 0; seed < config.seeds; ++seed) cells.push_back({method, n, seed});
        }
    }

    std::mutex log_mutex;
    auto log_line = [&](const std::string& text) {
        if (!log) return;
        std::scoped_lock lock(log_mutex);
        const auto now = std::chrono::system_clock::now();
        const auto secs = std::chrono::duration_cast<std::chrono::milliseconds>(
                              now.time_since_epoch())
                              .count();
        (*log) << "[" << secs << "ms] " << text << std::endl;
    };

    auto run_cell = [&](const Cell& cell) -> std::vector<RunRecord> {
        const std::uint64_t stream =
            derive_seed(config.master_seed, cell.method, static_cast<std::uint64_t>(cell.n),
                        static_cast<std::uint64_t>(cell.seed));
        Rng rng(stream);
        RunRecord base;
        base.method = cell.method;
        base.target = target_name;
        base.seed = cell.seed;
        base.config_hash = config_hash;
        base.status = "ok";

        const auto t0 = std::chrono::steady_clock::now();
        auto elapsed = [&] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        };

        try {
            if (cell.method == "iid") {
                base.n = cell.n;
                base.hparams_json = nlohmann::json{{"seed", stream}}.dump();
                const PointSet points = iid_baseline(*density, cell.n, rng);
                base.ksd = evaluate_ksd(points, *density, stream, &base.bandwidth);
                base.walltime_s = elapsed();
                return {base};
            }
            if (cell.method == "svgd") {
                base.n = cell.n;
                base.hparams_json = svgd_hparams(config.svgd, stream);
                const PointSet points = svgd(*density, cell.n, config.svgd, rng);
                base.ksd = evaluate_ksd(points, *density, stream, &base.bandwidth);
                base.walltime_s = elapsed();
                return {base};
            }
            if (cell.method == "stein_mpmc") {
                base.n = cell.n;
                base.hparams_json = mpmc_hparams(config.mpmc, stream);
                const MPMCResult result = stein_mpmc(*density, cell.n, config.mpmc, rng);
                base.ksd = evaluate_ksd(result.points, *density, stream, &base.bandwidth);
                base.walltime_s = elapsed();
                return {base};
            }
            // stein_points: one sequential run serving every configured N
            base.hparams_json = stein_points_hparams(config.stein_points, stream);
            const SteinPointsResult result =
                stein_points(*density, n_max, config.stein_points, rng, config.n_values);
            std::vector<RunRecord> records;
            for (const auto& checkpoint : result.trace) {
                RunRecord r = base;
                r.n = checkpoint.n;
                r.ksd = checkpoint.ksd;
                r.bandwidth = checkpoint.bandwidth;
                r.walltime_s = checkpoint.elapsed_s;
                records.push_back(std::move(r));
            }
            return records;
        } catch (const std::exception& e) {
            base.status = std::string("error: ") + e.what();
            base.ksd = 0.0;
            base.bandwidth = 0.0;
            base.walltime_s = elapsed();
            if (cell.method == "stein_points") {
                std::vector<RunRecord> records;
                for (int n : config.n_values) {
                    RunRecord r = base;
                    r.n = n;
                    records.push_back(std::move(r));
                }
                return records;
            }
            base.n = cell.n;
            return {base};
        }
    };

    std::ofstream out(results_csv, std::ios::trunc);
    if (!out) throw ConfigError("cannot open results CSV for writing: " + results_csv.string());
    out << kResultsHeader << "\n";
    out.flush();

    std::vector<RunRecord> all;
    const int pool = std::max(1, std::min<int>(workers, static_cast<int>(cells.size())));

    if (pool == 1) {
        for (const Cell& cell : cells) {
            log_line("running " + cell.method + " N=" + std::to_string(cell.n) +
                     " seed=" + std::to_string(cell.seed));
            for (auto& r : run_cell(cell)) {
                out << format_record(r) << "\n";
                out.flush();
                all.push_back(std::move(r));
            }
        }
        return all;
    }

    // worker pool with a single ordered writer: records land in the CSV in
    // canonical cell order regardless of scheduling
    std::vector<std::optional<std::vector<RunRecord>>> done(cells.size());
    std::atomic<std::size_t> next{0};
    std::mutex mutex;
    std::condition_variable ready;

    auto worker = [&] {
        for (;;) {
            const std::size_t index = next.fetch_add(1);
            if (index >= cells.size()) return;
            log_line("running " + cells[index].method + " N=" + std::to_string(cells[index].n) +
                     " seed=" + std::to_string(cells[index].seed));
            std::vector<RunRecord> records = run_cell(cells[index]);
            {
                std::scoped_lock lock(mutex);
                done[index] = std::move(records);
            }
            ready.notify_all();
        }
    };

    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int i = 0; i < pool; ++i) threads.emplace_back(worker);

    for (std::size_t index = 0; index < cells.size(); ++index) {
        std::unique_lock lock(mutex);
        ready.wait(lock, [&] { return done[index].has_value(); });
        std::vector<RunRecord> records = std::move(*done[index]);
        done[index].reset();
        lock.unlock();
        for (auto& r : records) {
            out << format_record(r) << "\n";
            out.flush();
            all.push_back(std::move(r));
        }
    }
    for (auto& t : threads) t.join();
    return all;
}

// ---------------------------------------------------------------------------
// Random hyperparameter search
// ---------------------------------------------------------------------------

double sample_log_uniform(Rng& rng, double lo, double hi) {
    if (!(lo > 0.0 && hi > lo)) throw ConfigError("log-uniform bounds must satisfy 0 < lo < hi");
    return std::exp(rng.uniform(std::log(lo), std::log(hi)));
}

SearchResult random_search(const SearchSpace& space, const ScoredDensity& density, int n,
                           Rng& rng) {
    if (space.trials < 1) throw ConfigError("random_search: trial count must be >= 1");
    SearchResult result;
    result.best_ksd = std::numeric_limits<double>::infinity();
    int best_trial = -1;

    for (int trial = 0; trial < space.trials; ++trial) {
        TrialRecord record;
        record.trial = trial;
        record.learning_rate =
            sample_log_uniform(rng, space.learning_rate_min, space.learning_rate_max);
        record.hidden = space.hidden_choices[rng.uniform_int(space.hidden_choices.size())];
        record.layers =
            space.layers_min + static_cast<int>(rng.uniform_int(
                                   static_cast<std::uint64_t>(space.layers_max - space.layers_min + 1)));
        record.weight_decay =
            sample_log_uniform(rng, space.weight_decay_min, space.weight_decay_max);
        const std::uint64_t trial_seed = rng.next_u64();

        MPMCTrainConfig config;
        config.epochs = space.trial_epochs;
        config.learning_rate = record.learning_rate;
        config.weight_decay = record.weight_decay;
        config.model.hidden = record.hidden;
        config.model.layers = record.layers;
        config.seed = trial_seed;

        try {
            Rng trial_rng(trial_seed);
            const MPMCResult trained = stein_mpmc(density, n, config, trial_rng);
            record.ksd = evaluate_ksd(trained.points, density, trial_seed);
            record.status = "ok";
            if (record.ksd < result.best_ksd) {
                result.best_ksd = record.ksd;
                best_trial = trial;
            }
        } catch (const std::exception& e) {
            record.ksd = 0.0;
            record.status = std::string("error: ") + e.what();
        }
        result.trials.push_back(std::move(record));
    }

    if (best_trial < 0) throw DivergenceError("random_search: every trial diverged");
    const TrialRecord& best = result.trials[static_cast<std::size_t>(best_trial)];
    result.learning_rate = best.learning_rate;
    result.hidden = best.hidden;
    result.layers = best.layers;
    result.weight_decay = best.weight_decay;
    return result;
}

void write_trials_csv(const std::vector<TrialRecord>& trials, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open trials CSV for writing: " + path.string());
    out << "trial,learning_rate,hidden,layers,weight_decay,ksd,status\n";
    for (const auto& t : trials) {
        out << t.trial << ',' << format_double(t.learning_rate, 17) << ',' << t.hidden << ','
            << t.layers << ',' << format_double(t.weight_decay, 17) << ','
            << format_double(t.ksd, 17) << ',' << csv_escape(t.status) << "\n";
    }
    if (!out) throw ConfigError("failed writing trials CSV: " + path.string());
}

}  // namespace stein
