#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cam/dataset.hpp"
#include "cam/graph.hpp"
#include "cam/pipeline.hpp"
#include "cam/rng.hpp"
#include "cam/simulate.hpp"

namespace cam {

struct ExperimentConfig {
    int p = 10;
    int n = 200;
    int replicates = 10;
    double p_conn = -1.0;  // nonpositive means the sparse default 2/(p-1)
    std::string function_kind = "gp";  // gp | sigmoid
    double gamma = 1.0;
    double omega = 1.0;
    CamConfig cam;
    std::vector<std::string> methods = {"cam", "empty_baseline", "full_order_baseline"};
    // Non-empty grids switch the bench command into sweep mode.
    std::vector<double> gamma_grid;
    std::vector<double> omega_grid;
};

void validate_config(const ExperimentConfig& cfg);
std::string experiment_config_to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_config_from_json(const std::string& text);

// One draw of cfg's generative setting: random truth, then data. Consumes
// rng for the structural spec first, the observations second.
std::pair<SemSpec, Dataset> draw_instance(const ExperimentConfig& cfg, Rng& rng);

struct ResultRow {
    int replicate = 0;
    std::string method;
    int shd = 0;  // -1 marks a failed run
    int sid = 0;  // -1 marks a failed run
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

inline constexpr const char* result_csv_header = "replicate,method,shd,sid,wall_seconds,seed";
void write_result_csv(const std::vector<ResultRow>& rows, const std::string& path);

// One simulated truth per replicate (seed derived from cam.seed by replicate
// index), each method scored against it. Failures yield rows with shd = sid
// = -1 and the run continues.
std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, int threads = 1);

struct StabilityConfig {
    int subsamples = 100;
    int subsample_size = 59;
    int top_k = 20;
    int threshold = 57;
};

void validate_config(const StabilityConfig& cfg, int n);
std::string stability_config_to_json(const StabilityConfig& cfg);
StabilityConfig stability_config_from_json(const std::string& text);

// Edges appearing at least `threshold` times among the per-subsample top_k
// lists (p-value ascending, ties by gain descending then lexicographic).
std::vector<std::pair<int, int>> stability_selection(const Dataset& data, const CamConfig& cfg,
                                                     const StabilityConfig& scfg, Rng& rng,
                                                     int threads = 1);

struct ScoredEdge {
    int k = -1;
    int j = -1;
    double p_value = 1.0;
};

// Ranking caveat reproduced wherever scored edges are written out.
inline constexpr const char* score_caveat =
    "scores come from a selection procedure and should not be interpreted as p-values anymore";

// Edges of dag ranked by covariate-test p-value ascending; first k (all if
// fewer).
std::vector<ScoredEdge> top_scoring_edges(const Dataset& data, const Dag& dag, int k,
                                          int num_basis = 10, int threads = 1);

struct SweepRow {
    double gamma = 1.0;
    double omega = 1.0;
    int replicates = 0;
    double mean_shd_cam = 0.0;
    double mean_shd_empty = 0.0;
    double mean_sid_cam = 0.0;
    double mean_sid_empty = 0.0;
    int errors = 0;
};

inline constexpr const char* sweep_csv_header =
    "gamma,omega,replicates,mean_shd_cam,mean_shd_empty,mean_sid_cam,mean_sid_empty,errors";
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

// One summary row per (gamma, omega) grid point, methods fixed to cam and
// empty_baseline; grid points get independent derived seeds.
std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::vector<double>& gamma_grid,
                                const std::vector<double>& omega_grid, int threads = 1);

}  // namespace cam
