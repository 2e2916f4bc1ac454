#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cam/additive.hpp"
#include "cam/dataset.hpp"
#include "cam/graph.hpp"

namespace cam {

struct CamConfig {
    int num_basis = 10;
    double prune_alpha = 0.001;
    int pns_iterations = 100;
    int pns_top = 10;
    int pns_min_picks = 3;
    bool use_pns = true;
    std::uint64_t seed = 0;
};

void validate_config(const CamConfig& cfg);
std::string cam_config_to_json(const CamConfig& cfg);
CamConfig cam_config_from_json(const std::string& text);

// Candidate parent sets from preliminary neighborhood selection.
struct Neighborhoods {
    std::vector<std::vector<int>> sets;  // ascending indices, j excluded from sets[j]
    int max_size = 0;
    std::vector<std::string> warnings;
};

// gain(k, j) = decrease of the total score when edge k -> j is added to the
// current graph; -inf on the diagonal and wherever additions are disallowed.
struct ScoreMatrix {
    Eigen::MatrixXd gain;
};

struct EdgeRecord {
    int k = -1;
    int j = -1;
    double gain = 0.0;     // score decrease when the edge was added
    double p_value = 1.0;  // prune-stage covariate test (NaN if the test failed)
    bool kept = false;
};

struct IncEdgeResult {
    Dag dag;
    std::vector<double> trajectory;  // total score, initial value first
    std::vector<EdgeRecord> edges;   // in addition order; prune fields unset
    ScoreMatrix initial_gains;
    std::vector<std::string> warnings;
};

struct PruneRecord {
    int k = -1;
    int j = -1;
    double p_value = 1.0;
    bool kept = false;
};

struct PruneResult {
    Dag dag;
    std::vector<PruneRecord> records;  // one per input edge, lexicographic
    std::vector<std::string> warnings;
};

struct CamResult {
    Dag dag;  // pruned
    Dag incedge_dag;
    std::optional<Neighborhoods> nbhd;
    std::vector<double> trajectory;
    std::vector<EdgeRecord> edges;  // addition order, with prune outcome
    std::vector<std::string> warnings;
};

// Greedy search without a neighborhood restriction refuses beyond this size.
inline constexpr int max_p_without_pns = 30;

// Sum over nodes of log sigma_hat, sigma_hat^2 the mean squared residual of
// regressing each node on its parents (sample variance for parent-free
// nodes). Lower is better.
double neg_log_lik_score(const Dataset& data, const Dag& dag, int num_basis);
double neg_log_lik_score(const DesignCache& cache, const Dag& dag);

// Per-node componentwise boosting against all other variables; keeps the
// pns_top most-picked candidates having at least pns_min_picks picks.
Neighborhoods pns(const Dataset& data, const CamConfig& cfg, int threads = 1);

// Greedy edge addition maximizing score decrease, recomputing only the
// affected column after each addition; restricted to k in sets[j] when a
// neighborhood is given, otherwise runs to the full DAG.
Dag inc_edge(const Dataset& data, const CamConfig& cfg, int threads = 1);
Dag inc_edge(const Dataset& data, const Neighborhoods& nbhd, const CamConfig& cfg,
             int threads = 1);

// Covariate significance pruning at cfg.prune_alpha; output edges are a
// subset of the input edges.
Dag prune(const Dataset& data, const Dag& dag, const CamConfig& cfg, int threads = 1);

// Stage variants that keep the full record (trajectory, per-edge outcomes,
// warnings) instead of just the graph.
IncEdgeResult run_inc_edge(const Dataset& data, const std::optional<Neighborhoods>& nbhd,
                           const CamConfig& cfg, int threads = 1);
PruneResult run_prune(const Dataset& data, const Dag& dag, const CamConfig& cfg, int threads = 1);

// PNS (optional) -> IncEdge -> Prune.
Dag cam_pipeline(const Dataset& data, const CamConfig& cfg, int threads = 1);
CamResult run_cam(const Dataset& data, const CamConfig& cfg, int threads = 1);

// Exhaustive-permutation score minimizer; refuses p > 6.
Ordering brute_force_order(const Dataset& data, int num_basis);

}  // namespace cam
