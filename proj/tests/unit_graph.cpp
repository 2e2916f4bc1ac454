#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <set>
#include <vector>

#include "cam/errors.hpp"
#include "cam/graph.hpp"
#include "cam/rng.hpp"
#include "cam/simulate.hpp"
#include "doctest.h"
#include "oracles.hpp"

using cam::Dag;
using cam::Ordering;
using cam::Rng;

namespace {

Dag chain3() { return Dag::from_edges(3, {{0, 1}, {1, 2}}); }

std::vector<Ordering> all_orderings(int p) {
    std::vector<int> perm(static_cast<std::size_t>(p));
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<Ordering> out;
    do {
        out.push_back(Ordering{perm});
    } while (std::next_permutation(perm.begin(), perm.end()));
    return out;
}

}  // namespace

TEST_CASE("dag construction validates input") {
    CHECK_THROWS_AS(Dag::from_edges(2, {{0, 2}}), cam::InvalidData);
    CHECK_THROWS_AS(Dag::from_edges(2, {{-1, 0}}), cam::InvalidData);
    CHECK_THROWS_AS(Dag::from_edges(2, {{1, 1}}), cam::InvalidData);
    CHECK_THROWS_AS(Dag::from_edges(2, {{0, 1}, {0, 1}}), cam::InvalidData);
    CHECK_THROWS_AS(Dag::from_edges(3, {{0, 1}, {1, 2}, {2, 0}}), cam::InvalidData);

    const Dag g = chain3();
    CHECK(g.p() == 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.has_edge(0, 1));
    CHECK_FALSE(g.has_edge(1, 0));
    CHECK(g.parents(2) == std::vector<int>{1});
    CHECK(g.children(0) == std::vector<int>{1});
}

TEST_CASE("edge mutation keeps adjacency sorted") {
    Dag g(4);
    g.add_edge(2, 3);
    g.add_edge(0, 3);
    g.add_edge(1, 3);
    CHECK(g.parents(3) == std::vector<int>{0, 1, 2});
    CHECK_THROWS_AS(g.add_edge(0, 3), cam::InvalidData);
    g.remove_edge(1, 3);
    CHECK(g.parents(3) == std::vector<int>{0, 2});
    CHECK_THROWS_AS(g.remove_edge(1, 3), cam::InvalidData);
    CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 3}, {2, 3}});
}

TEST_CASE("topological sort is lowest index first and detects cycles") {
    const Dag g = Dag::from_edges(4, {{2, 0}, {3, 1}});
    const auto order = g.topological_sort();
    REQUIRE(order.has_value());
    CHECK(*order == std::vector<int>{2, 0, 3, 1});
    CHECK(g.is_acyclic());

    Dag cyc(2);
    cyc.add_edge(0, 1);
    cyc.add_edge(1, 0);  // acyclicity is the caller's contract on add_edge
    CHECK_FALSE(cyc.is_acyclic());
    CHECK_FALSE(cyc.topological_sort().has_value());
}

TEST_CASE("ordering membership in the true-order set") {
    const Dag empty(3);
    for (const auto& ord : all_orderings(3)) {
        CHECK(cam::topological_orders_contains(empty, ord));
    }

    const Dag g = chain3();
    CHECK(cam::topological_orders_contains(g, Ordering{{0, 1, 2}}));
    CHECK_FALSE(cam::topological_orders_contains(g, Ordering{{2, 1, 0}}));

    // brute-force enumeration fixes the full membership set
    const Dag collider = Dag::from_edges(3, {{0, 2}, {1, 2}});
    std::set<std::vector<int>> members;
    for (const auto& ord : all_orderings(3)) {
        if (cam::topological_orders_contains(collider, ord)) members.insert(ord.perm);
    }
    CHECK(members == std::set<std::vector<int>>{{0, 1, 2}, {1, 0, 2}});
    CHECK(cam::topological_orders_contains(collider, Ordering{{1, 0, 2}}));

    CHECK_THROWS_AS(cam::topological_orders_contains(g, Ordering{{0, 1}}), cam::InvalidData);
}

TEST_CASE("full dag of an ordering") {
    const Dag two = cam::full_dag_of_order(Ordering{{0, 1}});
    CHECK(two.edges() == std::vector<std::pair<int, int>>{{0, 1}});

    const Dag g = cam::full_dag_of_order(Ordering{{2, 0, 1}});
    CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 1}, {2, 0}, {2, 1}});

    const Dag five = cam::full_dag_of_order(Ordering::identity(5));
    CHECK(five.edge_count() == 10);
    CHECK(five.is_acyclic());

    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<int> perm(6);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        const Ordering ord{perm};
        const Dag full = cam::full_dag_of_order(ord);
        CHECK(full.is_acyclic());
        CHECK(cam::topological_orders_contains(full, ord));
    }
}

TEST_CASE("descendants and ancestors match the closure oracle") {
    const Dag g = chain3();
    CHECK(cam::descendants(g, 0) == std::vector<int>{1, 2});
    CHECK(cam::ancestors(g, 2) == std::vector<int>{0, 1});
    CHECK(cam::descendants(Dag(3), 1).empty());

    Rng rng(202);
    for (int rep = 0; rep < 50; ++rep) {
        const Dag d = cam::random_dag(8, 0.3, rng);
        const auto reach = oracle::transitive_closure(d);
        for (int v = 0; v < d.p(); ++v) {
            std::vector<int> expect_desc, expect_anc;
            for (int w = 0; w < d.p(); ++w) {
                if (reach[v][w]) expect_desc.push_back(w);
                if (reach[w][v]) expect_anc.push_back(w);
            }
            CHECK(cam::descendants(d, v) == expect_desc);
            CHECK(cam::ancestors(d, v) == expect_anc);
        }
    }
}

TEST_CASE("candidate mask tracks exactly the acyclicity-preserving additions") {
    Rng rng(77);
    for (int rep = 0; rep < 30; ++rep) {
        const int p = 6;
        Dag dag(p);
        cam::EdgeCandidateMask mask(p, true);
        for (int step = 0; step < 8; ++step) {
            // oracle: an addition is admissible iff it is new and keeps the
            // graph acyclic
            for (int k = 0; k < p; ++k) {
                for (int j = 0; j < p; ++j) {
                    bool expect = k != j && !dag.has_edge(k, j);
                    if (expect) {
                        Dag probe = dag;
                        probe.add_edge(k, j);
                        expect = probe.is_acyclic();
                    }
                    CHECK(mask.allowed(k, j) == expect);
                }
            }
            if (!mask.any_allowed()) break;
            std::vector<std::pair<int, int>> open;
            for (int k = 0; k < p; ++k) {
                for (int j = 0; j < p; ++j) {
                    if (mask.allowed(k, j)) open.emplace_back(k, j);
                }
            }
            const auto [k, j] = open[static_cast<std::size_t>(
                rng.uniform_below(static_cast<std::uint64_t>(open.size())))];
            dag.add_edge(k, j);
            mask.apply_edge_added(dag, k, j);
            CHECK(dag.is_acyclic());
        }
    }
}

TEST_CASE("structural hamming distance") {
    const Dag g = chain3();
    CHECK(cam::shd(g, g) == 0);
    CHECK(cam::shd(Dag::from_edges(2, {{0, 1}}), Dag::from_edges(2, {{1, 0}})) == 1);
    CHECK(cam::shd(Dag::from_edges(2, {{0, 1}}), Dag(2)) == 1);
    CHECK(cam::shd(g, Dag(3)) == 2);
    CHECK_THROWS_AS(cam::shd(g, Dag(4)), cam::InvalidData);

    Rng rng(303);
    for (int rep = 0; rep < 100; ++rep) {
        const Dag a = cam::random_dag(6, 0.4, rng);
        const Dag b = cam::random_dag(6, 0.4, rng);
        const int d = cam::shd(a, b);
        CHECK(d == oracle::shd_pairs(a, b));
        CHECK(d == cam::shd(b, a));
        CHECK(d <= 15);
        CHECK((d == 0) == (a == b));
    }
}

TEST_CASE("d-separation matches the moralization oracle") {
    // classic shapes first
    const Dag chain = chain3();
    CHECK_FALSE(cam::d_separated(chain, 0, 2, {}));
    CHECK(cam::d_separated(chain, 0, 2, {1}));

    const Dag fork = Dag::from_edges(3, {{1, 0}, {1, 2}});
    CHECK_FALSE(cam::d_separated(fork, 0, 2, {}));
    CHECK(cam::d_separated(fork, 0, 2, {1}));

    const Dag collider = Dag::from_edges(3, {{0, 2}, {1, 2}});
    CHECK(cam::d_separated(collider, 0, 1, {}));
    CHECK_FALSE(cam::d_separated(collider, 0, 1, {2}));

    const Dag desc = Dag::from_edges(4, {{0, 2}, {1, 2}, {2, 3}});
    CHECK_FALSE(cam::d_separated(desc, 0, 1, {3}));  // collider descendant opens

    CHECK_THROWS_AS(cam::d_separated(chain, 0, 1, {0}), cam::InvalidData);

    Rng rng(404);
    int checked = 0;
    while (checked < 300) {
        const Dag g = cam::random_dag(7, 0.3, rng);
        const int x = static_cast<int>(rng.uniform_below(7));
        const int y = static_cast<int>(rng.uniform_below(7));
        if (x == y) continue;
        std::vector<int> z;
        for (int v = 0; v < 7; ++v) {
            if (v != x && v != y && rng.uniform01() < 0.3) z.push_back(v);
        }
        CHECK(cam::d_separated(g, x, y, z) == oracle::moral_separated(g, x, y, z));
        ++checked;
    }
}

TEST_CASE("intervention distance on fixed shapes") {
    const Dag g = chain3();
    CHECK(cam::sid(g, g) == 0);
    // estimating no structure leaves every downstream-of-cause regression
    // confounded through the missing parent
    CHECK(cam::sid(g, Dag(3)) == 3);
    // the full DAG of the true order adjusts every effect correctly
    CHECK(cam::sid(g, cam::full_dag_of_order(Ordering{{0, 1, 2}})) == 0);
    CHECK_THROWS_AS(cam::sid(g, Dag(4)), cam::InvalidData);
}

TEST_CASE("intervention distance is zero for self and true-order estimates") {
    Rng rng(505);
    for (int rep = 0; rep < 100; ++rep) {
        const int p = 3 + static_cast<int>(rng.uniform_below(6));
        const Dag g = cam::random_dag(p, 0.4, rng);
        CHECK(cam::sid(g, g) == 0);
    }
    for (int rep = 0; rep < 100; ++rep) {
        const int p = 3 + static_cast<int>(rng.uniform_below(6));
        const Dag g = cam::random_dag(p, 0.4, rng);
        const Ordering ord = oracle::random_true_order(g, rng);
        REQUIRE(cam::topological_orders_contains(g, ord));
        CHECK(cam::sid(g, cam::full_dag_of_order(ord)) == 0);
    }
}

TEST_CASE("intervention distance equals the linear adjustment oracle") {
    Rng rng(606);
    for (int rep = 0; rep < 100; ++rep) {
        const int p = 3 + static_cast<int>(rng.uniform_below(4));
        const Dag truth = cam::random_dag(p, 0.45, rng);
        const Dag est = cam::random_dag(p, 0.45, rng);
        CHECK(cam::sid(truth, est) == oracle::sid_linear(truth, est, rng));
    }
}

TEST_CASE("edge list and JSON round trips") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "cam_graph_io_test";
    fs::create_directories(dir);

    const Dag g = Dag::from_edges(4, {{0, 1}, {0, 3}, {2, 3}});
    const std::string edge_path = (dir / "g.edges").string();
    cam::write_edge_list(g, edge_path);
    CHECK(cam::read_edge_list(edge_path) == g);
    CHECK(cam::read_edge_list(edge_path, 6).p() == 6);

    const std::string json_path = (dir / "g.json").string();
    cam::write_dag_json(g, json_path);
    CHECK(cam::read_dag_json(json_path) == g);
    CHECK(cam::read_dag_auto(json_path) == g);
    CHECK(cam::read_dag_auto(edge_path) == g);

    CHECK(cam::dag_from_json(cam::dag_to_json(Dag(5))) == Dag(5));

    const std::string bad = (dir / "bad.edges").string();
    {
        std::FILE* f = std::fopen(bad.c_str(), "w");
        std::fputs("0 1 junk\n", f);
        std::fclose(f);
    }
    CHECK_THROWS_AS(cam::read_edge_list(bad), cam::InvalidData);
    CHECK_THROWS_AS(cam::read_dag_json(edge_path), cam::InvalidData);
    fs::remove_all(dir);
}
