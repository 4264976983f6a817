#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stein/config.hpp"
#include "stein/density.hpp"
#include "stein/rng.hpp"
#include "stein/samplers.hpp"

namespace stein {

/// One benchmark measurement. status is "ok" or "error: <message>".
struct RunRecord {
    std::string method;
    std::string target;
    int n = 0;
    int seed = 0;
    double ksd = 0.0;
    double bandwidth = 0.0;
    double walltime_s = 0.0;
    std::string hparams_json;
    std::string config_hash;
    std::string status;

    bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kResultsHeader =
    "method,target,N,seed,ksd,bandwidth,walltime_s,hparams_json,config_hash,status";

/// Results CSV with the fixed column schema. Floating-point fields carry 17
/// significant digits so the round trip is exact.
void write_results(const std::vector<RunRecord>& records, const std::filesystem::path& path);
std::vector<RunRecord> read_results(const std::filesystem::path& path);
std::string format_record(const RunRecord& record);

/// Run every (method, N, seed) cell of the sweep. Stein Points executes one
/// sequential run per seed to max(N) with checkpoints at every configured N;
/// the other methods run one cell per N. Records are appended to results_csv
/// in canonical cell order as they complete (single ordered writer, flushed
/// per row); a failed cell produces an "error:" record and the sweep
/// continues. RNG streams are keyed by (master seed, method, N, seed index),
/// so a cell's results do not depend on which other cells run.
std::vector<RunRecord> run_sweep(const SweepConfig& config,
                                 const std::filesystem::path& results_csv, int workers,
                                 std::ostream* log = nullptr);

// ---------------------------------------------------------------------------
// Random hyperparameter search
// ---------------------------------------------------------------------------

struct SearchSpace {
    double learning_rate_min = 1e-4;  // log-uniform
    double learning_rate_max = 1e-2;
    std::vector<int> hidden_choices = {32, 64, 128, 256};
    int layers_min = 1;
    int layers_max = 5;
    double weight_decay_min = 1e-6;  // log-uniform
    double weight_decay_max = 1e-2;
    int trials = 30;
    long trial_epochs = 5000;  // reduced budget per trial
};

struct TrialRecord {
    int trial = 0;
    double learning_rate = 0.0;
    int hidden = 0;
    int layers = 0;
    double weight_decay = 0.0;
    double ksd = 0.0;
    std::string status;
};

struct SearchResult {
    double learning_rate = 0.0;
    int hidden = 0;
    int layers = 0;
    double weight_decay = 0.0;
    double best_ksd = 0.0;
    std::vector<TrialRecord> trials;
};

double sample_log_uniform(Rng& rng, double lo, double hi);

/// Train one reduced-budget Stein-MPMC model per trial with independently
/// sampled hyperparameters and return the argmin-KSD trial. Diverged trials
/// are recorded and excluded from the ranking; all trials diverging raises
/// DivergenceError.
SearchResult random_search(const SearchSpace& space, const ScoredDensity& density, int n,
                           Rng& rng);

void write_trials_csv(const std::vector<TrialRecord>& trials, const std::filesystem::path& path);

}  // namespace stein
