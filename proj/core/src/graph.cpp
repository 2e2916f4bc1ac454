#include "cam/graph.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <sstream>

#include "cam/errors.hpp"
#include "json.hpp"

namespace cam {

Dag::Dag(int p, std::vector<std::string> labels)
    : p_(p), parents_(p), children_(p), labels_(std::move(labels)) {
    if (p < 0) throw InvalidData("negative node count");
    if (!labels_.empty() && static_cast<int>(labels_.size()) != p) {
        throw InvalidData("label count does not match node count");
    }
}

Dag Dag::from_edges(int p, const std::vector<std::pair<int, int>>& edges,
                    std::vector<std::string> labels) {
    Dag dag(p, std::move(labels));
    for (const auto& [k, j] : edges) dag.add_edge(k, j);
    if (!dag.is_acyclic()) throw InvalidData("edge set contains a directed cycle");
    return dag;
}

void Dag::check_node(int v) const {
    if (v < 0 || v >= p_) {
        throw InvalidData("node index " + std::to_string(v) + " out of range [0, " +
                          std::to_string(p_) + ")");
    }
}

bool Dag::has_edge(int k, int j) const {
    check_node(k);
    check_node(j);
    const auto& ch = children_[k];
    return std::binary_search(ch.begin(), ch.end(), j);
}

void Dag::add_edge(int k, int j) {
    check_node(k);
    check_node(j);
    if (k == j) throw InvalidData("self-loop at node " + std::to_string(k));
    auto& ch = children_[k];
    auto it = std::lower_bound(ch.begin(), ch.end(), j);
    if (it != ch.end() && *it == j) throw InvalidData("duplicate edge");
    ch.insert(it, j);
    auto& pa = parents_[j];
    pa.insert(std::lower_bound(pa.begin(), pa.end(), k), k);
    ++edge_count_;
}

void Dag::remove_edge(int k, int j) {
    check_node(k);
    check_node(j);
    auto& ch = children_[k];
    auto it = std::lower_bound(ch.begin(), ch.end(), j);
    if (it == ch.end() || *it != j) throw InvalidData("edge not present");
    ch.erase(it);
    auto& pa = parents_[j];
    pa.erase(std::lower_bound(pa.begin(), pa.end(), k));
    --edge_count_;
}

std::vector<std::pair<int, int>> Dag::edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(edge_count_);
    for (int k = 0; k < p_; ++k) {
        for (int j : children_[k]) out.emplace_back(k, j);
    }
    return out;
}

std::optional<std::vector<int>> Dag::topological_sort() const {
    std::vector<int> indeg(p_);
    for (int j = 0; j < p_; ++j) indeg[j] = static_cast<int>(parents_[j].size());
    std::priority_queue<int, std::vector<int>, std::greater<>> ready;
    for (int v = 0; v < p_; ++v) {
        if (indeg[v] == 0) ready.push(v);
    }
    std::vector<int> order;
    order.reserve(p_);
    while (!ready.empty()) {
        const int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int c : children_[v]) {
            if (--indeg[c] == 0) ready.push(c);
        }
    }
    if (static_cast<int>(order.size()) != p_) return std::nullopt;
    return order;
}

bool Dag::is_acyclic() const { return topological_sort().has_value(); }

bool Dag::operator==(const Dag& other) const {
    return p_ == other.p_ && children_ == other.children_;
}

Ordering Ordering::identity(int p) {
    Ordering ord;
    ord.perm.resize(p);
    for (int i = 0; i < p; ++i) ord.perm[i] = i;
    return ord;
}

bool Ordering::valid() const {
    std::vector<char> seen(perm.size(), 0);
    for (int v : perm) {
        if (v < 0 || v >= p() || seen[v]) return false;
        seen[v] = 1;
    }
    return true;
}

EdgeCandidateMask::EdgeCandidateMask(int p, bool initially_allowed)
    : p_(p), allowed_(static_cast<std::size_t>(p) * p, initially_allowed ? 1 : 0) {
    for (int v = 0; v < p; ++v) allowed_[idx(v, v)] = 0;
}

void EdgeCandidateMask::allow(int k, int j) {
    if (k == j) throw InvalidData("cannot allow a self-loop");
    allowed_[idx(k, j)] = 1;
}

void EdgeCandidateMask::apply_edge_added(const Dag& dag, int k, int j) {
    disallow(k, j);
    disallow(j, k);
    // Any a ~> k combined with j ~> d means d -> a would close a cycle.
    std::vector<int> up = ancestors(dag, k);
    up.push_back(k);
    std::vector<int> down = descendants(dag, j);
    down.push_back(j);
    for (int d : down) {
        for (int a : up) disallow(d, a);
    }
}

bool EdgeCandidateMask::any_allowed() const {
    return std::any_of(allowed_.begin(), allowed_.end(), [](char c) { return c != 0; });
}

int EdgeCandidateMask::count_allowed() const {
    return static_cast<int>(std::count(allowed_.begin(), allowed_.end(), char{1}));
}

bool topological_orders_contains(const Dag& dag, const Ordering& ord) {
    if (dag.p() != ord.p()) throw InvalidData("ordering length does not match node count");
    if (!ord.valid()) throw InvalidData("not a permutation");
    std::vector<int> position(dag.p());
    for (int i = 0; i < ord.p(); ++i) position[ord.perm[i]] = i;
    for (int k = 0; k < dag.p(); ++k) {
        for (int j : dag.children(k)) {
            if (position[k] > position[j]) return false;
        }
    }
    return true;
}

Dag full_dag_of_order(const Ordering& ord) {
    if (!ord.valid()) throw InvalidData("not a permutation");
    Dag dag(ord.p());
    for (int k = 0; k < ord.p(); ++k) {
        for (int j = k + 1; j < ord.p(); ++j) dag.add_edge(ord.perm[k], ord.perm[j]);
    }
    return dag;
}

namespace {

std::vector<int> reach(const std::vector<std::vector<int>>& adj, int start) {
    std::vector<char> seen(adj.size(), 0);
    std::vector<int> stack{start};
    std::vector<int> out;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : adj[v]) {
            if (!seen[w]) {
                seen[w] = 1;
                out.push_back(w);
                stack.push_back(w);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::vector<int> descendants(const Dag& dag, int node) {
    if (node < 0 || node >= dag.p()) throw InvalidData("node out of range");
    std::vector<std::vector<int>> adj(dag.p());
    for (int v = 0; v < dag.p(); ++v) adj[v] = dag.children(v);
    return reach(adj, node);
}

std::vector<int> ancestors(const Dag& dag, int node) {
    if (node < 0 || node >= dag.p()) throw InvalidData("node out of range");
    std::vector<std::vector<int>> adj(dag.p());
    for (int v = 0; v < dag.p(); ++v) adj[v] = dag.parents(v);
    return reach(adj, node);
}

int shd(const Dag& g, const Dag& h) {
    if (g.p() != h.p()) throw InvalidData("SHD requires equal node counts");
    int dist = 0;
    for (int k = 0; k < g.p(); ++k) {
        for (int j = k + 1; j < g.p(); ++j) {
            // Status in {none, k->j, j->k}; any mismatch costs 1.
            const int sg = g.has_edge(k, j) ? 1 : (g.has_edge(j, k) ? 2 : 0);
            const int sh = h.has_edge(k, j) ? 1 : (h.has_edge(j, k) ? 2 : 0);
            if (sg != sh) ++dist;
        }
    }
    return dist;
}

namespace {

// Reachability over active trails. Returns the nodes d-connected to x given z.
std::vector<char> active_reachable(const Dag& dag, int x, const std::vector<char>& in_z) {
    const int p = dag.p();
    // Ancestors of z (including z) activate colliders.
    std::vector<char> anc_z(p, 0);
    {
        std::vector<int> stack;
        for (int v = 0; v < p; ++v) {
            if (in_z[v]) {
                anc_z[v] = 1;
                stack.push_back(v);
            }
        }
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (int pa : dag.parents(v)) {
                if (!anc_z[pa]) {
                    anc_z[pa] = 1;
                    stack.push_back(pa);
                }
            }
        }
    }
    // State (v, dir): dir 0 = trail arrived from a child of v, 1 = from a parent.
    std::vector<char> visited(static_cast<std::size_t>(p) * 2, 0);
    std::vector<char> reachable(p, 0);
    std::vector<std::pair<int, int>> stack{{x, 0}};
    while (!stack.empty()) {
        const auto [v, dir] = stack.back();
        stack.pop_back();
        auto& seen = visited[static_cast<std::size_t>(v) * 2 + dir];
        if (seen) continue;
        seen = 1;
        if (!in_z[v]) reachable[v] = 1;
        if (dir == 0) {
            if (!in_z[v]) {
                for (int pa : dag.parents(v)) stack.emplace_back(pa, 0);
                for (int ch : dag.children(v)) stack.emplace_back(ch, 1);
            }
        } else {
            if (!in_z[v]) {
                for (int ch : dag.children(v)) stack.emplace_back(ch, 1);
            }
            if (anc_z[v]) {
                for (int pa : dag.parents(v)) stack.emplace_back(pa, 0);
            }
        }
    }
    return reachable;
}

}  // namespace

bool d_separated(const Dag& dag, int x, int y, const std::vector<int>& z) {
    if (x < 0 || x >= dag.p() || y < 0 || y >= dag.p()) throw InvalidData("node out of range");
    std::vector<char> in_z(dag.p(), 0);
    for (int v : z) {
        if (v < 0 || v >= dag.p()) throw InvalidData("conditioning node out of range");
        in_z[v] = 1;
    }
    if (in_z[x] || in_z[y]) throw InvalidData("endpoint inside conditioning set");
    return !active_reachable(dag, x, in_z)[y];
}

int sid(const Dag& true_g, const Dag& est_h) {
    if (true_g.p() != est_h.p()) throw InvalidData("SID requires equal node counts");
    if (!true_g.is_acyclic() || !est_h.is_acyclic()) throw InvalidData("SID requires acyclic inputs");
    const int p = true_g.p();

    // desc[i][v] = 1 iff v is reachable from i (length >= 1) in true_g.
    std::vector<std::vector<char>> desc(p, std::vector<char>(p, 0));
    for (int i = 0; i < p; ++i) {
        for (int v : descendants(true_g, i)) desc[i][v] = 1;
    }

    int wrong = 0;
    for (int i = 0; i < p; ++i) {
        const std::vector<int>& adj = est_h.parents(i);
        std::vector<char> in_adj(p, 0);
        for (int v : adj) in_adj[v] = 1;

        for (int j = 0; j < p; ++j) {
            if (j == i) continue;

            if (in_adj[j]) {
                // The estimate claims i does not cause j; wrong iff it does.
                if (desc[i][j]) ++wrong;
                continue;
            }

            // Nodes on proper causal paths i -> ... -> j, excluding i:
            // descendants of i that are j or ancestors of j.
            std::vector<char> anc_j(p, 0);
            anc_j[j] = 1;
            for (int v : ancestors(true_g, j)) anc_j[v] = 1;
            std::vector<int> path_nodes;
            for (int v = 0; v < p; ++v) {
                if (desc[i][v] && anc_j[v]) path_nodes.push_back(v);
            }

            // Forbidden: descendants (inclusive) of any causal-path node.
            std::vector<char> forbidden(p, 0);
            for (int w : path_nodes) {
                forbidden[w] = 1;
                for (int v = 0; v < p; ++v) {
                    if (desc[w][v]) forbidden[v] = 1;
                }
            }
            bool hits_forbidden = false;
            for (int v : adj) {
                if (forbidden[v]) {
                    hits_forbidden = true;
                    break;
                }
            }
            if (hits_forbidden) {
                ++wrong;
                continue;
            }

            // Proper back-door graph: drop i -> w for causal-path children w,
            // then require d-separation of i and j given the adjustment set.
            Dag pbd = true_g;
            for (int w : true_g.children(i)) {
                if (anc_j[w]) pbd.remove_edge(i, w);
            }
            if (!d_separated(pbd, i, j, adj)) ++wrong;
        }
    }
    return wrong;
}

void write_edge_list(const Dag& dag, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidData("cannot write " + path);
    for (const auto& [k, j] : dag.edges()) out << k << ' ' << j << '\n';
}

Dag read_edge_list(const std::string& path, int p) {
    std::ifstream in(path);
    if (!in) throw InvalidData("cannot open " + path);
    std::vector<std::pair<int, int>> edges;
    int max_node = -1;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        int k, j;
        if (!(ss >> k >> j)) throw InvalidData("bad edge line in " + path + ": " + line);
        std::string rest;
        if (ss >> rest) throw InvalidData("trailing tokens in " + path + ": " + line);
        edges.emplace_back(k, j);
        max_node = std::max({max_node, k, j});
    }
    const int nodes = p >= 0 ? p : max_node + 1;
    return Dag::from_edges(nodes, edges);
}

std::string dag_to_json(const Dag& dag) {
    nlohmann::json j;
    j["p"] = dag.p();
    j["edges"] = nlohmann::json::array();
    for (const auto& [k, c] : dag.edges()) j["edges"].push_back({k, c});
    return j.dump(2) + "\n";
}

Dag dag_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad DAG JSON: ") + e.what());
    }
    if (!j.contains("p") || !j.contains("edges")) {
        throw InvalidData("DAG JSON needs \"p\" and \"edges\"");
    }
    std::vector<std::pair<int, int>> edges;
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2) throw InvalidData("DAG JSON edge must be [k, j]");
        edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    return Dag::from_edges(j["p"].get<int>(), edges);
}

void write_dag_json(const Dag& dag, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidData("cannot write " + path);
    out << dag_to_json(dag);
}

Dag read_dag_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidData("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return dag_from_json(ss.str());
}

Dag read_dag_auto(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        return read_dag_json(path);
    }
    return read_edge_list(path);
}

}  // namespace cam
