#include "cam/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cam/boosting.hpp"
#include "cam/errors.hpp"
#include "cam/parallel.hpp"
#include "json.hpp"

namespace cam {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Node score contribution; the floor keeps a perfectly interpolated column
// from collapsing the sum to -inf.
double half_log_sigma2(double rss, int n) {
    return 0.5 * std::log(std::max(rss / n, 1e-300));
}

// Rethrows stage errors with the stage name attached, preserving the type.
template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const DegenerateColumn& e) {
        throw DegenerateColumn(std::string(name) + ": " + e.what());
    } catch (const SingularFit& e) {
        throw SingularFit(std::string(name) + ": " + e.what());
    } catch (const SimulationError& e) {
        throw SimulationError(std::string(name) + ": " + e.what());
    } catch (const ExplicitRefusal& e) {
        throw ExplicitRefusal(std::string(name) + ": " + e.what());
    } catch (const InvalidData& e) {
        throw InvalidData(std::string(name) + ": " + e.what());
    }
}

Neighborhoods pns_impl(const DesignCache& cache, const CamConfig& cfg, int threads) {
    const int p = cache.p();
    if (p < 2) throw InvalidData("neighborhood selection needs at least two variables");
    Neighborhoods nb;
    nb.max_size = cfg.pns_top;
    nb.sets.resize(static_cast<std::size_t>(p));
    std::vector<std::vector<std::string>> warn(static_cast<std::size_t>(p));

    parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        if (!cache.column_ok(j)) {
            warn[jj].push_back("node " + std::to_string(j) +
                               " gets an empty neighborhood: " + cache.column_error(j));
            return;
        }
        std::vector<int> cand;
        cand.reserve(static_cast<std::size_t>(p) - 1);
        for (int k = 0; k < p; ++k) {
            if (k != j) cand.push_back(k);
        }
        const BoostTrace trace =
            boost_select(cache.data().column(j), cache, cand, cfg.pns_iterations, 0.1, 1);
        for (const auto& w : trace.warnings) {
            warn[jj].push_back("node " + std::to_string(j) + ": " + w);
        }
        std::vector<std::size_t> idx(trace.candidates.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return trace.selection_counts[a] > trace.selection_counts[b];
        });
        auto& set = nb.sets[jj];
        for (std::size_t i : idx) {
            if (static_cast<int>(set.size()) >= cfg.pns_top) break;
            if (trace.selection_counts[i] < cfg.pns_min_picks) break;
            set.push_back(trace.candidates[i]);
        }
        std::sort(set.begin(), set.end());
    });

    for (const auto& w : warn) nb.warnings.insert(nb.warnings.end(), w.begin(), w.end());
    return nb;
}

struct GainEval {
    double gain = kNegInf;
    double next = 0.0;
    bool failed = false;
    std::string error;
};

IncEdgeResult inc_edge_impl(const DesignCache& cache, const Neighborhoods* nbhd,
                            const CamConfig& cfg, int threads) {
    const int p = cache.p();
    const int n = cache.n();
    if (!nbhd && p > max_p_without_pns) {
        throw ExplicitRefusal("greedy search without neighborhoods handles at most " +
                              std::to_string(max_p_without_pns) + " nodes, got " +
                              std::to_string(p));
    }
    if (nbhd && static_cast<int>(nbhd->sets.size()) != p) {
        throw InvalidData("neighborhood count does not match variable count");
    }

    IncEdgeResult res;
    res.dag = Dag(p, cache.data().names());

    EdgeCandidateMask mask(p, false);
    for (int j = 0; j < p; ++j) {
        if (nbhd) {
            for (int k : nbhd->sets[static_cast<std::size_t>(j)]) {
                if (k != j) mask.allow(k, j);
            }
        } else {
            for (int k = 0; k < p; ++k) {
                if (k != j) mask.allow(k, j);
            }
        }
    }
    for (int v = 0; v < p; ++v) {
        if (!cache.column_ok(v)) {
            res.warnings.push_back("column " + std::to_string(v) +
                                   " excluded from the search: " + cache.column_error(v));
            for (int u = 0; u < p; ++u) {
                if (u != v) {
                    mask.disallow(u, v);
                    mask.disallow(v, u);
                }
            }
        }
    }

    std::vector<Eigen::VectorXd> y(static_cast<std::size_t>(p));
    std::vector<double> node_score(static_cast<std::size_t>(p), 0.0);
    for (int j = 0; j < p; ++j) {
        y[j] = cache.data().column(j);
        if (y[j].allFinite()) {
            node_score[j] = half_log_sigma2((y[j].array() - y[j].mean()).matrix().squaredNorm(), n);
        }
    }

    // Marginal smoothing per (predictor, response) pair; fixed up front so
    // nested fits share their lambdas exactly.
    Eigen::MatrixXd lambda_tab = Eigen::MatrixXd::Constant(p, p, -1.0);
    {
        std::vector<std::pair<int, int>> pairs;
        for (int k = 0; k < p; ++k) {
            for (int j = 0; j < p; ++j) {
                if (mask.allowed(k, j)) pairs.emplace_back(k, j);
            }
        }
        parallel_for(pairs.size(), threads, [&](std::size_t i) {
            const auto [k, j] = pairs[i];
            lambda_tab(k, j) = marginal_gcv_lambda(y[j], cache.column(k));
        });
    }

    Eigen::MatrixXd gain = Eigen::MatrixXd::Constant(p, p, kNegInf);
    Eigen::MatrixXd next_score = Eigen::MatrixXd::Zero(p, p);
    std::vector<std::vector<int>> pa(static_cast<std::size_t>(p));

    auto rescore_column = [&](int j) {
        std::vector<int> ks;
        for (int k = 0; k < p; ++k) {
            if (mask.allowed(k, j)) ks.push_back(k);
        }
        if (ks.empty()) return;
        std::vector<GainEval> evals(ks.size());
        parallel_for(ks.size(), threads, [&](std::size_t i) {
            const int k = ks[i];
            GainEval ev;
            std::vector<int> pred = pa[j];
            pred.insert(std::lower_bound(pred.begin(), pred.end(), k), k);
            std::vector<double> lam(pred.size());
            for (std::size_t t = 0; t < pred.size(); ++t) lam[t] = lambda_tab(pred[t], j);
            try {
                const double rss = penalized_rss(y[j], cache, pred, lam);
                ev.next = half_log_sigma2(rss, n);
                ev.gain = node_score[j] - ev.next;
            } catch (const SingularFit& e) {
                ev.failed = true;
                ev.error = e.what();
            } catch (const DegenerateColumn& e) {
                ev.failed = true;
                ev.error = e.what();
            }
            evals[i] = std::move(ev);
        });
        for (std::size_t i = 0; i < ks.size(); ++i) {
            const int k = ks[i];
            if (evals[i].failed) {
                mask.disallow(k, j);
                gain(k, j) = kNegInf;
                res.warnings.push_back("edge " + std::to_string(k) + "->" + std::to_string(j) +
                                       " disabled: " + evals[i].error);
            } else {
                gain(k, j) = evals[i].gain;
                next_score(k, j) = evals[i].next;
            }
        }
    };

    for (int j = 0; j < p; ++j) rescore_column(j);
    res.initial_gains.gain = gain;

    double total = std::accumulate(node_score.begin(), node_score.end(), 0.0);
    res.trajectory.push_back(total);

    while (true) {
        int bk = -1, bj = -1;
        double bg = kNegInf;
        for (int k = 0; k < p; ++k) {
            for (int j = 0; j < p; ++j) {
                if (mask.allowed(k, j) && gain(k, j) > bg) {
                    bg = gain(k, j);
                    bk = k;
                    bj = j;
                }
            }
        }
        if (bk < 0) break;

        res.dag.add_edge(bk, bj);
        pa[bj].insert(std::lower_bound(pa[bj].begin(), pa[bj].end(), bk), bk);
        node_score[bj] = next_score(bk, bj);

        EdgeRecord rec;
        rec.k = bk;
        rec.j = bj;
        rec.gain = bg;
        res.edges.push_back(rec);

        const double prev = total;
        total = std::accumulate(node_score.begin(), node_score.end(), 0.0);
        res.trajectory.push_back(total);
        if (total > prev + 1e-10) {
            res.warnings.push_back("score increased by " + std::to_string(total - prev) +
                                   " when adding edge " + std::to_string(bk) + "->" +
                                   std::to_string(bj));
        }

        mask.apply_edge_added(res.dag, bk, bj);
        rescore_column(bj);
    }
    return res;
}

PruneResult prune_impl(const DesignCache& cache, const Dag& dag, const CamConfig& cfg,
                       int threads) {
    const int p = cache.p();
    if (dag.p() != p) throw InvalidData("graph size does not match variable count");
    PruneResult res;
    res.dag = Dag(p, cache.data().names());

    struct NodeOut {
        std::vector<PruneRecord> recs;
        std::vector<std::string> warns;
    };
    std::vector<NodeOut> outs(static_cast<std::size_t>(p));

    parallel_for(static_cast<std::size_t>(p), threads, [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        const auto& parents = dag.parents(j);
        if (parents.empty()) return;
        NodeOut out;
        const Eigen::VectorXd yj = cache.data().column(j);
        AdditiveFit fit;
        bool fit_ok = true;
        try {
            fit = fit_additive(yj, cache, parents);
        } catch (const SingularFit& e) {
            fit_ok = false;
            out.warns.push_back("node " + std::to_string(j) +
                                " fit failed, keeping its parents: " + e.what());
        } catch (const DegenerateColumn& e) {
            fit_ok = false;
            out.warns.push_back("node " + std::to_string(j) +
                                " fit failed, keeping its parents: " + e.what());
        }
        for (int k : parents) {
            PruneRecord rec;
            rec.k = k;
            rec.j = j;
            if (!fit_ok) {
                rec.p_value = std::numeric_limits<double>::quiet_NaN();
                rec.kept = true;
            } else {
                try {
                    rec.p_value = term_significance(fit, cache, yj, k);
                    rec.kept = rec.p_value <= cfg.prune_alpha;
                } catch (const SingularFit& e) {
                    rec.p_value = std::numeric_limits<double>::quiet_NaN();
                    rec.kept = true;
                    out.warns.push_back("test for edge " + std::to_string(k) + "->" +
                                        std::to_string(j) + " failed, keeping it: " + e.what());
                }
            }
            out.recs.push_back(rec);
        }
        outs[jj] = std::move(out);
    });

    for (const auto& out : outs) {
        for (const auto& rec : out.recs) {
            res.records.push_back(rec);
            if (rec.kept) res.dag.add_edge(rec.k, rec.j);
        }
        res.warnings.insert(res.warnings.end(), out.warns.begin(), out.warns.end());
    }
    std::sort(res.records.begin(), res.records.end(), [](const PruneRecord& a, const PruneRecord& b) {
        return a.k != b.k ? a.k < b.k : a.j < b.j;
    });
    return res;
}

}  // namespace

void validate_config(const CamConfig& cfg) {
    if (cfg.num_basis < 4) throw InvalidData("num_basis must be at least 4");
    if (!(cfg.prune_alpha > 0.0 && cfg.prune_alpha < 1.0)) {
        throw InvalidData("prune_alpha must lie strictly between 0 and 1");
    }
    if (cfg.pns_iterations < 1) throw InvalidData("pns_iterations must be at least 1");
    if (cfg.pns_top < 1) throw InvalidData("pns_top must be at least 1");
    if (cfg.pns_min_picks < 1) throw InvalidData("pns_min_picks must be at least 1");
}

std::string cam_config_to_json(const CamConfig& cfg) {
    nlohmann::json j;
    j["num_basis"] = cfg.num_basis;
    j["prune_alpha"] = cfg.prune_alpha;
    j["pns_iterations"] = cfg.pns_iterations;
    j["pns_top"] = cfg.pns_top;
    j["pns_min_picks"] = cfg.pns_min_picks;
    j["use_pns"] = cfg.use_pns;
    j["seed"] = cfg.seed;
    return j.dump(2) + "\n";
}

CamConfig cam_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad config JSON: ") + e.what());
    }
    CamConfig cfg;
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "num_basis") {
                cfg.num_basis = val.get<int>();
            } else if (key == "prune_alpha") {
                cfg.prune_alpha = val.get<double>();
            } else if (key == "pns_iterations") {
                cfg.pns_iterations = val.get<int>();
            } else if (key == "pns_top") {
                cfg.pns_top = val.get<int>();
            } else if (key == "pns_min_picks") {
                cfg.pns_min_picks = val.get<int>();
            } else if (key == "use_pns") {
                cfg.use_pns = val.get<bool>();
            } else if (key == "seed") {
                cfg.seed = val.get<std::uint64_t>();
            } else {
                throw InvalidData("unknown config field: " + key);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad config JSON: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

double neg_log_lik_score(const DesignCache& cache, const Dag& dag) {
    if (dag.p() != cache.p()) throw InvalidData("graph size does not match variable count");
    if (!dag.is_acyclic()) throw InvalidData("score requires an acyclic graph");
    double total = 0.0;
    for (int j = 0; j < cache.p(); ++j) {
        const Eigen::VectorXd yj = cache.data().column(j);
        if (!yj.allFinite()) throw InvalidData("column " + std::to_string(j) + " is not finite");
        const auto& parents = dag.parents(j);
        try {
            if (parents.empty()) {
                total += half_log_sigma2((yj.array() - yj.mean()).matrix().squaredNorm(),
                                         cache.n());
            } else {
                std::vector<double> lam(parents.size());
                for (std::size_t i = 0; i < parents.size(); ++i) {
                    lam[i] = marginal_gcv_lambda(yj, cache.column(parents[i]));
                }
                total += half_log_sigma2(penalized_rss(yj, cache, parents, lam), cache.n());
            }
        } catch (const SingularFit& e) {
            throw SingularFit("node " + std::to_string(j) + ": " + e.what());
        }
    }
    return total;
}

double neg_log_lik_score(const Dataset& data, const Dag& dag, int num_basis) {
    const DesignCache cache(data, num_basis);
    return neg_log_lik_score(cache, dag);
}

Neighborhoods pns(const Dataset& data, const CamConfig& cfg, int threads) {
    validate_config(cfg);
    const DesignCache cache(data, cfg.num_basis, threads);
    return pns_impl(cache, cfg, threads);
}

Dag inc_edge(const Dataset& data, const CamConfig& cfg, int threads) {
    validate_config(cfg);
    const DesignCache cache(data, cfg.num_basis, threads);
    return inc_edge_impl(cache, nullptr, cfg, threads).dag;
}

Dag inc_edge(const Dataset& data, const Neighborhoods& nbhd, const CamConfig& cfg, int threads) {
    validate_config(cfg);
    const DesignCache cache(data, cfg.num_basis, threads);
    return inc_edge_impl(cache, &nbhd, cfg, threads).dag;
}

Dag prune(const Dataset& data, const Dag& dag, const CamConfig& cfg, int threads) {
    validate_config(cfg);
    const DesignCache cache(data, cfg.num_basis, threads);
    return prune_impl(cache, dag, cfg, threads).dag;
}

IncEdgeResult run_inc_edge(const Dataset& data, const std::optional<Neighborhoods>& nbhd,
                           const CamConfig& cfg, int threads) {
    validate_config(cfg);
    const DesignCache cache(data, cfg.num_basis, threads);
    return inc_edge_impl(cache, nbhd ? &*nbhd : nullptr, cfg, threads);
}

PruneResult run_prune(const Dataset& data, const Dag& dag, const CamConfig& cfg, int threads) {
    validate_config(cfg);
    const DesignCache cache(data, cfg.num_basis, threads);
    return prune_impl(cache, dag, cfg, threads);
}

CamResult run_cam(const Dataset& data, const CamConfig& cfg, int threads) {
    validate_config(cfg);
    if (data.p() < 1 || data.n() < 1) throw InvalidData("empty dataset");

    CamResult res;
    const DesignCache cache =
        stage("setup", [&] { return DesignCache(data, cfg.num_basis, threads); });

    const Neighborhoods* nb = nullptr;
    if (cfg.use_pns && data.p() >= 2) {
        res.nbhd = stage("pns", [&] { return pns_impl(cache, cfg, threads); });
        for (const auto& w : res.nbhd->warnings) res.warnings.push_back("pns: " + w);
        nb = &*res.nbhd;
    }

    IncEdgeResult inc =
        stage("incedge", [&] { return inc_edge_impl(cache, nb, cfg, threads); });
    for (const auto& w : inc.warnings) res.warnings.push_back("incedge: " + w);

    PruneResult pr = stage("prune", [&] { return prune_impl(cache, inc.dag, cfg, threads); });
    for (const auto& w : pr.warnings) res.warnings.push_back("prune: " + w);

    for (auto& rec : inc.edges) {
        for (const auto& prec : pr.records) {
            if (prec.k == rec.k && prec.j == rec.j) {
                rec.p_value = prec.p_value;
                rec.kept = prec.kept;
                break;
            }
        }
    }

    res.dag = std::move(pr.dag);
    res.incedge_dag = std::move(inc.dag);
    res.trajectory = std::move(inc.trajectory);
    res.edges = std::move(inc.edges);
    return res;
}

Dag cam_pipeline(const Dataset& data, const CamConfig& cfg, int threads) {
    return run_cam(data, cfg, threads).dag;
}

Ordering brute_force_order(const Dataset& data, int num_basis) {
    const int p = data.p();
    if (p < 1) throw InvalidData("empty dataset");
    if (p > 6) {
        throw ExplicitRefusal("exhaustive order search enumerates p! permutations and is capped "
                              "at 6 nodes, got " + std::to_string(p));
    }
    const DesignCache cache(data, num_basis);
    std::vector<Eigen::VectorXd> y(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) y[j] = data.column(j);

    const std::size_t width = std::size_t{1} << p;
    std::vector<double> memo(static_cast<std::size_t>(p) * width,
                             std::numeric_limits<double>::quiet_NaN());
    auto node_score = [&](int j, unsigned mask) {
        double& slot = memo[static_cast<std::size_t>(j) * width + mask];
        if (!std::isnan(slot)) return slot;
        std::vector<int> parents;
        for (int k = 0; k < p; ++k) {
            if (mask & (1u << k)) parents.push_back(k);
        }
        if (parents.empty()) {
            slot = half_log_sigma2((y[j].array() - y[j].mean()).matrix().squaredNorm(),
                                   cache.n());
            return slot;
        }
        std::vector<double> lam(parents.size());
        for (std::size_t i = 0; i < parents.size(); ++i) {
            lam[i] = marginal_gcv_lambda(y[j], cache.column(parents[i]));
        }
        slot = half_log_sigma2(penalized_rss(y[j], cache, parents, lam), cache.n());
        return slot;
    };

    Ordering best = Ordering::identity(p);
    double best_score = std::numeric_limits<double>::infinity();
    std::vector<int> perm = best.perm;
    do {
        double score = 0.0;
        unsigned mask = 0;
        for (int pos = 0; pos < p; ++pos) {
            score += node_score(perm[pos], mask);
            mask |= 1u << static_cast<unsigned>(perm[pos]);
        }
        if (score < best_score) {
            best_score = score;
            best.perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

}  // namespace cam
