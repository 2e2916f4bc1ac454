#pragma once

// Independent reference implementations used only to cross-check the
// library: naive B-spline recursion, boolean-matrix transitive closure,
// moralized-graph separation, a linear-SEM adjustment oracle for the
// intervention distance, and a Kolmogorov-Smirnov normality check.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "cam/graph.hpp"
#include "cam/rng.hpp"

namespace oracle {

// Cox-de Boor recursion with half-open intervals; valid for x strictly below
// the last knot.
inline double bspline_recursive(const std::vector<double>& t, int i, int k, double x) {
    if (k == 0) return (x >= t[i] && x < t[i + 1]) ? 1.0 : 0.0;
    double v = 0.0;
    const double dl = t[i + k] - t[i];
    if (dl > 0.0) v += (x - t[i]) / dl * bspline_recursive(t, i, k - 1, x);
    const double dr = t[i + k + 1] - t[i + 1];
    if (dr > 0.0) v += (t[i + k + 1] - x) / dr * bspline_recursive(t, i + 1, k - 1, x);
    return v;
}

using BoolMatrix = std::vector<std::vector<char>>;

inline BoolMatrix bool_multiply(const BoolMatrix& a, const BoolMatrix& b) {
    const int p = static_cast<int>(a.size());
    BoolMatrix c(a.size(), std::vector<char>(a.size(), 0));
    for (int i = 0; i < p; ++i) {
        for (int k = 0; k < p; ++k) {
            if (!a[i][k]) continue;
            for (int j = 0; j < p; ++j) {
                if (b[k][j]) c[i][j] = 1;
            }
        }
    }
    return c;
}

// Transitive closure by repeated squaring of the adjacency matrix.
inline BoolMatrix transitive_closure(const cam::Dag& g) {
    const int p = g.p();
    BoolMatrix reach(static_cast<std::size_t>(p), std::vector<char>(static_cast<std::size_t>(p), 0));
    for (const auto& [k, j] : g.edges()) reach[k][j] = 1;
    for (int step = 1; step < p; step *= 2) {
        const BoolMatrix sq = bool_multiply(reach, reach);
        for (int i = 0; i < p; ++i) {
            for (int j = 0; j < p; ++j) {
                if (sq[i][j]) reach[i][j] = 1;
            }
        }
    }
    return reach;
}

// Pairwise status comparison, one count per unordered pair.
inline int shd_pairs(const cam::Dag& g, const cam::Dag& h) {
    auto status = [](const cam::Dag& d, int i, int j) {
        if (d.has_edge(i, j)) return 1;
        if (d.has_edge(j, i)) return 2;
        return 0;
    };
    int count = 0;
    for (int i = 0; i < g.p(); ++i) {
        for (int j = i + 1; j < g.p(); ++j) {
            if (status(g, i, j) != status(h, i, j)) ++count;
        }
    }
    return count;
}

// d-separation via the moralized ancestral graph: restrict to ancestors of
// {x, y} and z, marry co-parents, drop directions, delete z, test
// connectivity.
inline bool moral_separated(const cam::Dag& g, int x, int y, const std::vector<int>& z) {
    const int p = g.p();
    const BoolMatrix reach = transitive_closure(g);

    std::vector<char> keep(static_cast<std::size_t>(p), 0);
    std::vector<int> seeds = z;
    seeds.push_back(x);
    seeds.push_back(y);
    for (int v : seeds) {
        keep[static_cast<std::size_t>(v)] = 1;
        for (int a = 0; a < p; ++a) {
            if (reach[a][v]) keep[static_cast<std::size_t>(a)] = 1;
        }
    }

    BoolMatrix und(static_cast<std::size_t>(p), std::vector<char>(static_cast<std::size_t>(p), 0));
    auto connect = [&](int a, int b) { und[a][b] = und[b][a] = 1; };
    for (int v = 0; v < p; ++v) {
        if (!keep[v]) continue;
        const auto& pa = g.parents(v);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            if (!keep[pa[i]]) continue;
            connect(pa[i], v);
            for (std::size_t j = i + 1; j < pa.size(); ++j) {
                if (keep[pa[j]]) connect(pa[i], pa[j]);
            }
        }
    }

    std::vector<char> blocked(static_cast<std::size_t>(p), 0);
    for (int v : z) blocked[static_cast<std::size_t>(v)] = 1;

    std::vector<char> visited(static_cast<std::size_t>(p), 0);
    std::vector<int> stack{x};
    visited[static_cast<std::size_t>(x)] = 1;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        if (v == y) return false;
        for (int w = 0; w < p; ++w) {
            if (und[v][w] && keep[w] && !blocked[w] && !visited[w]) {
                visited[w] = 1;
                stack.push_back(w);
            }
        }
    }
    return true;
}

// Linear SEM on the true graph: all path coefficients in [0.5, 1.5], noise
// variances in [0.5, 1.5]. Total effects and adjustment-based effects are
// exact population quantities from the implied covariance.
struct LinearSem {
    Eigen::MatrixXd total;  // total(j, i) = causal effect of i on j
    Eigen::MatrixXd sigma;  // implied covariance
};

inline LinearSem random_linear_sem(const cam::Dag& g, cam::Rng& rng) {
    const int p = g.p();
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(p, p);
    for (const auto& [k, j] : g.edges()) b(j, k) = rng.uniform(0.5, 1.5);
    Eigen::VectorXd noise(p);
    for (int j = 0; j < p; ++j) noise(j) = rng.uniform(0.5, 1.5);

    const Eigen::MatrixXd total =
        (Eigen::MatrixXd::Identity(p, p) - b).inverse();
    LinearSem sem;
    sem.total = total;
    sem.sigma = total * noise.asDiagonal() * total.transpose();
    return sem;
}

// Population regression coefficient of x_i when regressing x_j on
// (x_i, x_S); conditioning on the response itself estimates no effect.
inline double adjustment_effect(const LinearSem& sem, int i, int j, const std::vector<int>& s) {
    if (std::find(s.begin(), s.end(), j) != s.end()) return 0.0;
    const int m = static_cast<int>(s.size()) + 1;
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd rhs(m);
    std::vector<int> vars{i};
    vars.insert(vars.end(), s.begin(), s.end());
    for (int r = 0; r < m; ++r) {
        rhs(r) = sem.sigma(vars[static_cast<std::size_t>(r)], j);
        for (int c = 0; c < m; ++c) {
            a(r, c) = sem.sigma(vars[static_cast<std::size_t>(r)], vars[static_cast<std::size_t>(c)]);
        }
    }
    return a.fullPivLu().solve(rhs)(0);
}

// Ordered pairs whose estimated parent set fails to recover the true total
// effect of i on j in the linear SEM.
inline int sid_linear(const cam::Dag& true_g, const cam::Dag& est_h, cam::Rng& rng) {
    const LinearSem sem = random_linear_sem(true_g, rng);
    int wrong = 0;
    for (int i = 0; i < true_g.p(); ++i) {
        for (int j = 0; j < true_g.p(); ++j) {
            if (i == j) continue;
            const double est = adjustment_effect(sem, i, j, est_h.parents(i));
            if (std::abs(est - sem.total(j, i)) > 1e-9) ++wrong;
        }
    }
    return wrong;
}

// One-sample KS p-value against N(0, sd^2), asymptotic tail formula.
inline double ks_pvalue_normal(std::vector<double> x, double sd) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double cdf = 0.5 * (1.0 + std::erf(x[i] / (sd * std::sqrt(2.0))));
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(i + 1) / n;
        d = std::max({d, std::abs(cdf - lo), std::abs(cdf - hi)});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
        p += (k % 2 == 1) ? term : -term;
    }
    return std::clamp(p, 0.0, 1.0);
}

// Uniformly random topological order of g (random source picked each step).
inline cam::Ordering random_true_order(const cam::Dag& g, cam::Rng& rng) {
    const int p = g.p();
    std::vector<int> indeg(static_cast<std::size_t>(p), 0);
    for (int j = 0; j < p; ++j) indeg[static_cast<std::size_t>(j)] = static_cast<int>(g.parents(j).size());
    std::vector<char> placed(static_cast<std::size_t>(p), 0);
    cam::Ordering ord;
    for (int step = 0; step < p; ++step) {
        std::vector<int> sources;
        for (int v = 0; v < p; ++v) {
            if (!placed[static_cast<std::size_t>(v)] && indeg[static_cast<std::size_t>(v)] == 0) {
                sources.push_back(v);
            }
        }
        const int pick = sources[static_cast<std::size_t>(rng.uniform_below(static_cast<std::uint64_t>(sources.size())))];
        placed[static_cast<std::size_t>(pick)] = 1;
        ord.perm.push_back(pick);
        for (int c : g.children(pick)) --indeg[static_cast<std::size_t>(c)];
    }
    return ord;
}

}  // namespace oracle
