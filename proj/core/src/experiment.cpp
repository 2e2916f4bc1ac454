#include "cam/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>

#include "cam/additive.hpp"
#include "cam/errors.hpp"
#include "cam/parallel.hpp"
#include "cam/simulate.hpp"
#include "json.hpp"

namespace cam {

namespace {

FunctionSpec::Kind kind_of(const std::string& name) {
    if (name == "gp") return FunctionSpec::Kind::gaussian_process;
    if (name == "sigmoid") return FunctionSpec::Kind::sigmoid;
    throw InvalidData("function_kind must be gp or sigmoid, got " + name);
}

double default_p_conn(const ExperimentConfig& cfg) {
    if (cfg.p_conn > 0.0) return std::min(cfg.p_conn, 1.0);
    return cfg.p > 1 ? std::min(1.0, 2.0 / (cfg.p - 1)) : 0.0;
}

std::vector<ResultRow> run_replicate(const ExperimentConfig& cfg, int r) {
    const std::uint64_t child = derive_seed(cfg.cam.seed, static_cast<std::uint64_t>(r));
    Rng rng(child);

    SemSpec spec;
    Dataset data;
    bool sim_ok = true;
    try {
        std::tie(spec, data) = draw_instance(cfg, rng);
    } catch (const std::exception&) {
        sim_ok = false;
    }

    std::vector<ResultRow> rows;
    std::optional<CamResult> cam_run;
    for (const std::string& m : cfg.methods) {
        ResultRow row;
        row.replicate = r;
        row.method = m;
        row.seed = child;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            if (!sim_ok) throw SimulationError("simulation failed");
            Dag est(cfg.p);
            if (m == "cam") {
                CamConfig cc = cfg.cam;
                cc.seed = child;
                cam_run = run_cam(data, cc, 1);
                est = cam_run->dag;
            } else if (m == "empty_baseline") {
                est = Dag(cfg.p);
            } else if (m == "full_order_baseline") {
                if (!cam_run) {
                    CamConfig cc = cfg.cam;
                    cc.seed = child;
                    cam_run = run_cam(data, cc, 1);
                }
                est = cam_run->incedge_dag;
            } else {
                throw InvalidData("unknown method: " + m);
            }
            row.shd = shd(spec.dag, est);
            row.sid = sid(spec.dag, est);
        } catch (const std::exception&) {
            row.shd = -1;
            row.sid = -1;
        }
        row.wall_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.p < 2) throw InvalidData("experiment needs p >= 2");
    if (cfg.n < 1) throw InvalidData("experiment needs n >= 1");
    if (cfg.replicates < 1) throw InvalidData("experiment needs at least one replicate");
    if (cfg.p_conn > 1.0) throw InvalidData("p_conn must lie in [0, 1]");
    kind_of(cfg.function_kind);
    if (!(cfg.gamma > 0.0)) throw InvalidData("gamma must be positive");
    if (!(cfg.omega >= 0.0 && cfg.omega <= 1.0)) throw InvalidData("omega must lie in [0, 1]");
    if (cfg.methods.empty()) throw InvalidData("at least one method required");
    for (const auto& m : cfg.methods) {
        if (m != "cam" && m != "empty_baseline" && m != "full_order_baseline") {
            throw InvalidData("unknown method: " + m);
        }
    }
    validate_config(cfg.cam);
}

std::pair<SemSpec, Dataset> draw_instance(const ExperimentConfig& cfg, Rng& rng) {
    SemSpec spec = random_sem_spec(cfg.p, default_p_conn(cfg), kind_of(cfg.function_kind),
                                   cfg.gamma, cfg.omega, rng);
    Dataset data = simulate_data(spec, cfg.n, rng);
    return {std::move(spec), std::move(data)};
}

std::string experiment_config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["p"] = cfg.p;
    j["n"] = cfg.n;
    j["replicates"] = cfg.replicates;
    j["p_conn"] = cfg.p_conn;
    j["function_kind"] = cfg.function_kind;
    j["gamma"] = cfg.gamma;
    j["omega"] = cfg.omega;
    j["cam"] = nlohmann::json::parse(cam_config_to_json(cfg.cam));
    j["methods"] = cfg.methods;
    if (!cfg.gamma_grid.empty()) j["gamma_grid"] = cfg.gamma_grid;
    if (!cfg.omega_grid.empty()) j["omega_grid"] = cfg.omega_grid;
    return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad experiment JSON: ") + e.what());
    }
    ExperimentConfig cfg;
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "p") {
                cfg.p = val.get<int>();
            } else if (key == "n") {
                cfg.n = val.get<int>();
            } else if (key == "replicates") {
                cfg.replicates = val.get<int>();
            } else if (key == "p_conn") {
                cfg.p_conn = val.get<double>();
            } else if (key == "function_kind") {
                cfg.function_kind = val.get<std::string>();
            } else if (key == "gamma") {
                cfg.gamma = val.get<double>();
            } else if (key == "omega") {
                cfg.omega = val.get<double>();
            } else if (key == "cam") {
                cfg.cam = cam_config_from_json(val.dump());
            } else if (key == "methods") {
                cfg.methods = val.get<std::vector<std::string>>();
            } else if (key == "gamma_grid") {
                cfg.gamma_grid = val.get<std::vector<double>>();
            } else if (key == "omega_grid") {
                cfg.omega_grid = val.get<std::vector<double>>();
            } else {
                throw InvalidData("unknown experiment field: " + key);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad experiment JSON: ") + e.what());
    }
    validate_config(cfg);
    return cfg;
}

void write_result_csv(const std::vector<ResultRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidData("cannot write " + path);
    out << result_csv_header << "\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%s,%d,%d,%.6f,%llu\n", r.replicate, r.method.c_str(),
                      r.shd, r.sid, r.wall_seconds,
                      static_cast<unsigned long long>(r.seed));
        out << buf;
    }
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg, int threads) {
    validate_config(cfg);
    std::vector<std::vector<ResultRow>> outs(static_cast<std::size_t>(cfg.replicates));
    parallel_for(static_cast<std::size_t>(cfg.replicates), threads,
                 [&](std::size_t r) { outs[r] = run_replicate(cfg, static_cast<int>(r)); });
    std::vector<ResultRow> rows;
    for (auto& o : outs) {
        for (auto& row : o) rows.push_back(std::move(row));
    }
    return rows;
}

void validate_config(const StabilityConfig& cfg, int n) {
    if (cfg.subsamples < 1) throw InvalidData("need at least one subsample");
    if (cfg.subsample_size < 1 || cfg.subsample_size > n) {
        throw InvalidData("subsample_size must lie in [1, n]");
    }
    if (cfg.top_k < 0) throw InvalidData("top_k must be nonnegative");
    if (cfg.threshold < 1) throw InvalidData("threshold must be at least 1");
}

std::string stability_config_to_json(const StabilityConfig& cfg) {
    nlohmann::json j;
    j["subsamples"] = cfg.subsamples;
    j["subsample_size"] = cfg.subsample_size;
    j["top_k"] = cfg.top_k;
    j["threshold"] = cfg.threshold;
    return j.dump(2) + "\n";
}

StabilityConfig stability_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad stability JSON: ") + e.what());
    }
    StabilityConfig cfg;
    try {
        for (const auto& [key, val] : j.items()) {
            if (key == "subsamples") {
                cfg.subsamples = val.get<int>();
            } else if (key == "subsample_size") {
                cfg.subsample_size = val.get<int>();
            } else if (key == "top_k") {
                cfg.top_k = val.get<int>();
            } else if (key == "threshold") {
                cfg.threshold = val.get<int>();
            } else {
                throw InvalidData("unknown stability field: " + key);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad stability JSON: ") + e.what());
    }
    return cfg;
}

std::vector<std::pair<int, int>> stability_selection(const Dataset& data, const CamConfig& cfg,
                                                     const StabilityConfig& scfg, Rng& rng,
                                                     int threads) {
    validate_config(cfg);
    validate_config(scfg, data.n());

    // Index draws come from the caller's generator up front so the subsample
    // runs can proceed in parallel deterministically.
    std::vector<std::vector<int>> subs(static_cast<std::size_t>(scfg.subsamples));
    std::vector<int> base(static_cast<std::size_t>(data.n()));
    std::iota(base.begin(), base.end(), 0);
    for (auto& s : subs) {
        std::vector<int> rows = base;
        rng.shuffle(rows);
        rows.resize(static_cast<std::size_t>(scfg.subsample_size));
        std::sort(rows.begin(), rows.end());
        s = std::move(rows);
    }

    std::vector<std::vector<std::pair<int, int>>> lists(subs.size());
    parallel_for(subs.size(), threads, [&](std::size_t s) {
        try {
            const Dataset sub = data.subsample_rows(subs[s]);
            CamConfig cc = cfg;
            cc.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(s));
            const CamResult run = run_cam(sub, cc, 1);
            std::vector<const EdgeRecord*> kept;
            for (const auto& rec : run.edges) {
                if (rec.kept) kept.push_back(&rec);
            }
            std::sort(kept.begin(), kept.end(), [](const EdgeRecord* a, const EdgeRecord* b) {
                const double pa = std::isnan(a->p_value)
                                      ? std::numeric_limits<double>::infinity()
                                      : a->p_value;
                const double pb = std::isnan(b->p_value)
                                      ? std::numeric_limits<double>::infinity()
                                      : b->p_value;
                if (pa != pb) return pa < pb;
                if (a->gain != b->gain) return a->gain > b->gain;
                if (a->k != b->k) return a->k < b->k;
                return a->j < b->j;
            });
            const std::size_t take = std::min<std::size_t>(kept.size(),
                                                           static_cast<std::size_t>(scfg.top_k));
            for (std::size_t i = 0; i < take; ++i) {
                lists[s].emplace_back(kept[i]->k, kept[i]->j);
            }
        } catch (const std::exception&) {
            lists[s].clear();
        }
    });

    std::map<std::pair<int, int>, int> counts;
    for (const auto& list : lists) {
        for (const auto& e : list) ++counts[e];
    }
    std::vector<std::pair<int, int>> out;
    for (const auto& [edge, count] : counts) {
        if (count >= scfg.threshold) out.push_back(edge);
    }
    return out;
}

std::vector<ScoredEdge> top_scoring_edges(const Dataset& data, const Dag& dag, int k,
                                          int num_basis, int threads) {
    if (dag.p() != data.p()) throw InvalidData("graph size does not match variable count");
    if (!dag.is_acyclic()) throw InvalidData("scoring requires an acyclic graph");
    if (k < 0) throw InvalidData("k must be nonnegative");
    if (k == 0 || dag.edge_count() == 0) return {};

    const DesignCache cache(data, num_basis, threads);
    std::vector<std::vector<ScoredEdge>> per_node(static_cast<std::size_t>(data.p()));
    parallel_for(static_cast<std::size_t>(data.p()), threads, [&](std::size_t jj) {
        const int j = static_cast<int>(jj);
        const auto& parents = dag.parents(j);
        if (parents.empty()) return;
        const Eigen::VectorXd yj = cache.data().column(j);
        AdditiveFit fit;
        bool ok = true;
        try {
            fit = fit_additive(yj, cache, parents);
        } catch (const std::exception&) {
            ok = false;
        }
        for (int pk : parents) {
            ScoredEdge e;
            e.k = pk;
            e.j = j;
            e.p_value = std::numeric_limits<double>::quiet_NaN();
            if (ok) {
                try {
                    e.p_value = term_significance(fit, cache, yj, pk);
                } catch (const std::exception&) {
                }
            }
            per_node[jj].push_back(e);
        }
    });

    std::vector<ScoredEdge> all;
    for (const auto& v : per_node) all.insert(all.end(), v.begin(), v.end());
    std::sort(all.begin(), all.end(), [](const ScoredEdge& a, const ScoredEdge& b) {
        const double pa = std::isnan(a.p_value) ? std::numeric_limits<double>::infinity()
                                                : a.p_value;
        const double pb = std::isnan(b.p_value) ? std::numeric_limits<double>::infinity()
                                                : b.p_value;
        if (pa != pb) return pa < pb;
        if (a.k != b.k) return a.k < b.k;
        return a.j < b.j;
    });
    if (static_cast<int>(all.size()) > k) all.resize(static_cast<std::size_t>(k));
    return all;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw InvalidData("cannot write " + path);
    out << sweep_csv_header << "\n";
    char buf[512];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%d\n", r.gamma,
                      r.omega, r.replicates, r.mean_shd_cam, r.mean_shd_empty, r.mean_sid_cam,
                      r.mean_sid_empty, r.errors);
        out << buf;
    }
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& base, const std::vector<double>& gamma_grid,
                                const std::vector<double>& omega_grid, int threads) {
    if (gamma_grid.empty() || omega_grid.empty()) throw InvalidData("sweep grids must be non-empty");
    std::vector<SweepRow> rows;
    std::uint64_t idx = 0;
    for (double g : gamma_grid) {
        for (double o : omega_grid) {
            ExperimentConfig cfg = base;
            cfg.gamma = g;
            cfg.omega = o;
            cfg.gamma_grid.clear();
            cfg.omega_grid.clear();
            cfg.methods = {"cam", "empty_baseline"};
            cfg.cam.seed = derive_seed(base.cam.seed, idx);
            const auto results = run_experiment(cfg, threads);

            SweepRow row;
            row.gamma = g;
            row.omega = o;
            row.replicates = cfg.replicates;
            double shd_cam = 0, shd_empty = 0, sid_cam = 0, sid_empty = 0;
            int n_cam = 0, n_empty = 0;
            for (const auto& r : results) {
                if (r.shd < 0) {
                    ++row.errors;
                    continue;
                }
                if (r.method == "cam") {
                    shd_cam += r.shd;
                    sid_cam += r.sid;
                    ++n_cam;
                } else if (r.method == "empty_baseline") {
                    shd_empty += r.shd;
                    sid_empty += r.sid;
                    ++n_empty;
                }
            }
            row.mean_shd_cam = n_cam ? shd_cam / n_cam : std::numeric_limits<double>::quiet_NaN();
            row.mean_sid_cam = n_cam ? sid_cam / n_cam : std::numeric_limits<double>::quiet_NaN();
            row.mean_shd_empty =
                n_empty ? shd_empty / n_empty : std::numeric_limits<double>::quiet_NaN();
            row.mean_sid_empty =
                n_empty ? sid_empty / n_empty : std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
            ++idx;
        }
    }
    return rows;
}

}  // namespace cam
