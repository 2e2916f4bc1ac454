#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cam {

/// Directed acyclic graph over p nodes. Node identity is the positional
/// index; labels are cosmetic. Edges are kept sorted per adjacency list.
class Dag {
public:
    Dag() = default;
    explicit Dag(int p, std::vector<std::string> labels = {});

    /// Builds and validates (range, self-loop, duplicate, acyclicity).
    static Dag from_edges(int p, const std::vector<std::pair<int, int>>& edges,
                          std::vector<std::string> labels = {});

    int p() const { return p_; }
    int edge_count() const { return edge_count_; }
    bool has_edge(int k, int j) const;

    /// Inserts k -> j. Range/self-loop/duplicate checked; acyclicity is the
    /// caller's contract (searches guard additions with EdgeCandidateMask).
    void add_edge(int k, int j);
    void remove_edge(int k, int j);

    const std::vector<int>& parents(int j) const { return parents_[j]; }
    const std::vector<int>& children(int k) const { return children_[k]; }
    const std::vector<std::string>& labels() const { return labels_; }

    /// Edges in lexicographic (k, j) order.
    std::vector<std::pair<int, int>> edges() const;

    bool is_acyclic() const;
    /// Kahn's algorithm, lowest index first; nullopt on a cycle.
    std::optional<std::vector<int>> topological_sort() const;

    bool operator==(const Dag& other) const;

private:
    void check_node(int v) const;

    int p_ = 0;
    int edge_count_ = 0;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
    std::vector<std::string> labels_;
};

/// Permutation of {0,...,p-1}; position i holds node perm[i].
struct Ordering {
    std::vector<int> perm;

    static Ordering identity(int p);
    int p() const { return static_cast<int>(perm.size()); }
    bool valid() const;
};

/// Tracks which edge additions are still admissible during greedy search.
/// allowed(k, j) == false once k -> j would duplicate an edge, reverse an
/// existing one, or close a directed cycle.
class EdgeCandidateMask {
public:
    EdgeCandidateMask(int p, bool initially_allowed);

    int p() const { return p_; }
    bool allowed(int k, int j) const { return allowed_[idx(k, j)] != 0; }
    void disallow(int k, int j) { allowed_[idx(k, j)] = 0; }
    void allow(int k, int j);

    /// Call after inserting k -> j into dag (dag already contains the edge):
    /// disables the pair itself and every (d, a) with a ~> k and j ~> d.
    void apply_edge_added(const Dag& dag, int k, int j);

    bool any_allowed() const;
    int count_allowed() const;

private:
    std::size_t idx(int k, int j) const {
        return static_cast<std::size_t>(k) * static_cast<std::size_t>(p_) +
               static_cast<std::size_t>(j);
    }
    int p_;
    std::vector<char> allowed_;
};

/// True iff every edge (k, j) of dag places k before j in ord, i.e. the fully
/// connected DAG of ord is a super-DAG of dag.
bool topological_orders_contains(const Dag& dag, const Ordering& ord);

/// Fully connected DAG with perm[k] -> perm[j] for all k < j.
Dag full_dag_of_order(const Ordering& ord);

/// Nodes reachable from `node` by a directed path of length >= 1.
std::vector<int> descendants(const Dag& dag, int node);

/// Ancestors of `node` (directed path of length >= 1 into it).
std::vector<int> ancestors(const Dag& dag, int node);

/// Structural Hamming distance: unordered node pairs whose status in
/// {none, k->j, j->k} differs; a reversal counts once.
int shd(const Dag& g, const Dag& h);

/// d-separation of x and y given z, by reachability over active trails.
bool d_separated(const Dag& dag, int x, int y, const std::vector<int>& z);

/// Structural intervention distance: ordered pairs (i, j) for which the
/// parent set of i in est_h fails to identify the causal effect of i on j in
/// true_g via covariate adjustment.
int sid(const Dag& true_g, const Dag& est_h);

// Edge-list text format ("k j" per line, 0-based) and the JSON alternative
// {"p": int, "edges": [[k, j], ...]}.
void write_edge_list(const Dag& dag, const std::string& path);
Dag read_edge_list(const std::string& path, int p = -1);
std::string dag_to_json(const Dag& dag);
Dag dag_from_json(const std::string& text);
void write_dag_json(const Dag& dag, const std::string& path);
Dag read_dag_json(const std::string& path);

/// Reads .json files as DAG JSON, anything else as an edge list.
Dag read_dag_auto(const std::string& path);

}  // namespace cam
