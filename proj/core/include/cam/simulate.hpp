#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "cam/dataset.hpp"
#include "cam/graph.hpp"
#include "cam/rng.hpp"

namespace cam {

struct FunctionSpec {
    enum class Kind { gaussian_process, sigmoid, linear };
    Kind kind = Kind::gaussian_process;
    double bandwidth = 1.0;            // gaussian_process
    double a = 0.0, b = 0.0, c = 0.0;  // sigmoid: a*b(x+c) / (1 + |b(x+c)|)
    double slope = 1.0;                // linear
};

/// X_j = omega * sum_k f_jk(X_k) + (1 - omega) * f_j(X_pa) + eps_j where
/// eps_j = sign(N)|N|^gamma, N ~ N(0, noise_sd_j^2). Source nodes are pure
/// noise with their own (larger) sd.
struct SemSpec {
    Dag dag;
    std::map<std::pair<int, int>, FunctionSpec> edge_functions;
    std::vector<double> noise_sd;          // per node, the sd actually sampled
    std::map<int, double> source_sd;       // parent-free nodes only
    double noise_gamma = 1.0;
    double mixture_omega = 1.0;
    std::map<int, FunctionSpec> joint_functions;  // non-additive part, omega < 1
};

/// Uniform random ordering, then each order-respecting pair independently
/// with probability p_conn.
Dag random_dag(int p, double p_conn, Rng& rng);

/// One GP path evaluated at the given points (one row per observation), RBF
/// kernel exp(-|x - x'|^2 / (2 bw^2)); duplicated rows receive identical
/// values; centered to sample mean zero.
Eigen::VectorXd gp_realize(const Eigen::MatrixXd& points, double bandwidth, Rng& rng);

/// a ~ 1 + Exp(rate 4), |b| ~ U[0.5, 2] with random sign, c ~ U[-2, 2].
FunctionSpec sample_sigmoid(Rng& rng);

/// Closed-form kinds only (sigmoid, linear); GP functions are realized
/// pathwise inside simulate_data.
double eval_function(const FunctionSpec& f, double x);

/// Random DAG plus per-edge functions and noise scales: source sd ~ U[1, √2],
/// non-source sd ~ U[1/5, √2/5]. RNG order: dag, per-node sd (ascending),
/// per-edge parameters (lexicographic), joint functions when omega < 1.
SemSpec random_sem_spec(int p, double p_conn, FunctionSpec::Kind kind,
                        double gamma, double omega, Rng& rng);

/// Ancestral sampling in topological order (lowest index first). Per node:
/// one GP realization per GP parent (ascending), then the joint GP when
/// omega < 1, then n noise draws. GP paths are drawn at the distinct parent
/// coordinates (duplicates share a value) and centered to sample mean zero.
Dataset simulate_data(const SemSpec& spec, int n, Rng& rng);

std::string sem_spec_to_json(const SemSpec& spec);
SemSpec sem_spec_from_json(const std::string& text);

}  // namespace cam
