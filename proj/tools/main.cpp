// Command-line front end: simulate data, run the learning stages, score
// estimates and drive experiments. Exit codes: 0 success, 2 malformed
// input, 3 numerical failure.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cam/dataset.hpp"
#include "cam/errors.hpp"
#include "cam/experiment.hpp"
#include "cam/graph.hpp"
#include "cam/pipeline.hpp"
#include "cam/rng.hpp"
#include "cam/simulate.hpp"
#include "cam/version.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw cam::InvalidData("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw cam::InvalidData("cannot write " + path);
    out << text;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Option values shared by the subcommands; presence is checked through the
// CLI11 option handles so config-file values survive unless overridden.
struct Opts {
    std::string input;
    std::string output;
    std::string config;
    std::string dag;
    std::string true_path;
    std::string est_path;
    std::uint64_t seed = 0;
    int threads = 1;
    bool no_pns = false;
    double alpha = 0.001;
    int basis = 10;

    bool seed_given = false;
    bool alpha_given = false;
    bool basis_given = false;
    bool no_pns_given = false;
};

bool option_given(const CLI::App* sub, const std::string& name) {
    const CLI::Option* opt = sub->get_option_no_throw(name);
    return opt != nullptr && opt->count() > 0;
}

cam::CamConfig resolve_cam_config(const Opts& o) {
    cam::CamConfig cfg;
    if (!o.config.empty()) cfg = cam::cam_config_from_json(slurp(o.config));
    if (o.seed_given) cfg.seed = o.seed;
    if (o.alpha_given) cfg.prune_alpha = o.alpha;
    if (o.basis_given) cfg.num_basis = o.basis;
    if (o.no_pns_given && o.no_pns) cfg.use_pns = false;
    cam::validate_config(cfg);
    return cfg;
}

cam::ExperimentConfig resolve_experiment_config(const Opts& o) {
    cam::ExperimentConfig cfg;
    if (!o.config.empty()) cfg = cam::experiment_config_from_json(slurp(o.config));
    if (o.seed_given) cfg.cam.seed = o.seed;
    cam::validate_config(cfg);
    return cfg;
}

json manifest_base(const cam::CamConfig& cfg) {
    json m;
    m["version"] = cam::version;
    m["seed"] = cfg.seed;
    m["config"] = json::parse(cam::cam_config_to_json(cfg));
    return m;
}

void write_dag_outputs(const cam::Dag& dag, const std::string& prefix, const json& manifest) {
    cam::write_edge_list(dag, prefix + ".edges");
    cam::write_dag_json(dag, prefix + ".json");
    write_text(prefix + "_manifest.json", manifest.dump(2) + "\n");
}

int cmd_simulate(const Opts& o) {
    const cam::ExperimentConfig cfg = resolve_experiment_config(o);
    cam::Rng rng(cfg.cam.seed);
    const auto [spec, data] = cam::draw_instance(cfg, rng);

    data.write_csv(o.output + "_data.csv");
    cam::write_edge_list(spec.dag, o.output + "_dag.edges");
    cam::write_dag_json(spec.dag, o.output + "_dag.json");
    write_text(o.output + "_sem.json", cam::sem_spec_to_json(spec));
    std::cerr << "simulated n=" << data.n() << " p=" << data.p() << " edges="
              << spec.dag.edge_count() << " -> " << o.output << "_data.csv\n";
    return 0;
}

int cmd_pns(const Opts& o) {
    const cam::Dataset data = cam::Dataset::read_csv(o.input);
    const cam::CamConfig cfg = resolve_cam_config(o);
    const cam::Neighborhoods nb = cam::pns(data, cfg, o.threads);

    json out = manifest_base(cfg);
    out["sets"] = nb.sets;
    out["max_size"] = nb.max_size;
    out["warnings"] = nb.warnings;
    write_text(o.output, out.dump(2) + "\n");
    std::cerr << "neighborhoods written to " << o.output << " (max size " << nb.max_size << ")\n";
    return 0;
}

int cmd_incedge(const Opts& o) {
    const cam::Dataset data = cam::Dataset::read_csv(o.input);
    const cam::CamConfig cfg = resolve_cam_config(o);

    std::optional<cam::Neighborhoods> nb;
    if (cfg.use_pns && data.p() >= 2) nb = cam::pns(data, cfg, o.threads);
    const cam::IncEdgeResult res = cam::run_inc_edge(data, nb, cfg, o.threads);

    json manifest = manifest_base(cfg);
    manifest["trajectory"] = res.trajectory;
    json edges = json::array();
    for (const auto& e : res.edges) {
        edges.push_back({{"k", e.k}, {"j", e.j}, {"gain", e.gain}});
    }
    manifest["edges"] = edges;
    json warnings = json::array();
    if (nb) {
        manifest["pns_sets"] = nb->sets;
        for (const auto& w : nb->warnings) warnings.push_back("pns: " + w);
    }
    for (const auto& w : res.warnings) warnings.push_back("incedge: " + w);
    manifest["warnings"] = warnings;

    write_dag_outputs(res.dag, o.output, manifest);
    std::cerr << "incedge kept " << res.dag.edge_count() << " edges -> " << o.output << ".edges\n";
    return 0;
}

int cmd_prune(const Opts& o) {
    const cam::Dataset data = cam::Dataset::read_csv(o.input);
    cam::Dag dag = cam::read_dag_auto(o.dag);
    if (dag.p() != data.p()) {
        throw cam::InvalidData("graph has " + std::to_string(dag.p()) + " nodes but data has " +
                               std::to_string(data.p()) + " columns");
    }
    const cam::CamConfig cfg = resolve_cam_config(o);
    const cam::PruneResult res = cam::run_prune(data, dag, cfg, o.threads);

    json manifest = manifest_base(cfg);
    json records = json::array();
    for (const auto& r : res.records) {
        records.push_back({{"k", r.k}, {"j", r.j}, {"p_value", r.p_value}, {"kept", r.kept}});
    }
    manifest["records"] = records;
    manifest["warnings"] = res.warnings;

    write_dag_outputs(res.dag, o.output, manifest);
    std::cerr << "prune kept " << res.dag.edge_count() << " of " << dag.edge_count()
              << " edges -> " << o.output << ".edges\n";
    return 0;
}

int cmd_fit(const Opts& o) {
    const cam::Dataset data = cam::Dataset::read_csv(o.input);
    const cam::CamConfig cfg = resolve_cam_config(o);
    const cam::CamResult res = cam::run_cam(data, cfg, o.threads);

    json manifest = manifest_base(cfg);
    manifest["trajectory"] = res.trajectory;
    json edges = json::array();
    for (const auto& e : res.edges) {
        edges.push_back({{"k", e.k},
                         {"j", e.j},
                         {"gain", e.gain},
                         {"p_value", e.p_value},
                         {"kept", e.kept}});
    }
    manifest["edges"] = edges;
    if (res.nbhd) manifest["pns_sets"] = res.nbhd->sets;
    manifest["warnings"] = res.warnings;

    write_dag_outputs(res.dag, o.output, manifest);
    std::cerr << "fit kept " << res.dag.edge_count() << " edges -> " << o.output << ".edges\n";
    return 0;
}

int cmd_eval(const Opts& o) {
    const bool true_json = ends_with(o.true_path, ".json");
    const bool est_json = ends_with(o.est_path, ".json");
    cam::Dag truth = cam::read_dag_auto(o.true_path);
    cam::Dag est = cam::read_dag_auto(o.est_path);

    // Edge lists carry no node count of their own; pad them to the partner.
    if (truth.p() != est.p()) {
        const int p = std::max(truth.p(), est.p());
        if (!true_json && truth.p() < p) truth = cam::read_edge_list(o.true_path, p);
        if (!est_json && est.p() < p) est = cam::read_edge_list(o.est_path, p);
    }
    if (truth.p() != est.p()) {
        throw cam::InvalidData("node count mismatch: " + std::to_string(truth.p()) + " vs " +
                               std::to_string(est.p()));
    }
    std::cout << "shd=" << cam::shd(truth, est) << " sid=" << cam::sid(truth, est) << "\n";
    return 0;
}

int cmd_bench(const Opts& o) {
    cam::ExperimentConfig cfg = resolve_experiment_config(o);
    if (!cfg.gamma_grid.empty() || !cfg.omega_grid.empty()) {
        std::vector<double> gg = cfg.gamma_grid.empty() ? std::vector<double>{cfg.gamma}
                                                        : cfg.gamma_grid;
        std::vector<double> og = cfg.omega_grid.empty() ? std::vector<double>{cfg.omega}
                                                        : cfg.omega_grid;
        const auto rows = cam::run_sweep(cfg, gg, og, o.threads);
        cam::write_sweep_csv(rows, o.output);
        std::cerr << "sweep wrote " << rows.size() << " grid rows -> " << o.output << "\n";
    } else {
        const auto rows = cam::run_experiment(cfg, o.threads);
        cam::write_result_csv(rows, o.output);
        std::cerr << "bench wrote " << rows.size() << " rows -> " << o.output << "\n";
    }
    return 0;
}

int cmd_stability(const Opts& o) {
    const cam::Dataset data = cam::Dataset::read_csv(o.input);

    cam::CamConfig cc;
    cam::StabilityConfig sc;
    if (!o.config.empty()) {
        json j;
        try {
            j = json::parse(slurp(o.config));
        } catch (const json::exception& e) {
            throw cam::InvalidData(std::string("bad stability JSON: ") + e.what());
        }
        for (const auto& [key, val] : j.items()) {
            if (key == "cam") {
                cc = cam::cam_config_from_json(val.dump());
            } else if (key == "stability") {
                sc = cam::stability_config_from_json(val.dump());
            } else {
                throw cam::InvalidData("unknown stability field: " + key);
            }
        }
    }
    if (o.seed_given) cc.seed = o.seed;
    cam::validate_config(cc);
    cam::validate_config(sc, data.n());

    cam::Rng rng(cc.seed);
    const auto edges = cam::stability_selection(data, cc, sc, rng, o.threads);

    json out;
    out["version"] = cam::version;
    out["config"]["cam"] = json::parse(cam::cam_config_to_json(cc));
    out["config"]["stability"] = json::parse(cam::stability_config_to_json(sc));
    json list = json::array();
    for (const auto& [k, j] : edges) list.push_back({k, j});
    out["edges"] = list;
    out["caveat"] = cam::score_caveat;
    write_text(o.output, out.dump(2) + "\n");
    std::cerr << "stability selected " << edges.size() << " edges -> " << o.output << "\n";
    return 0;
}

void add_threads(CLI::App* sub, Opts& o) {
    sub->add_option("--threads", o.threads, "Worker thread bound (default 1)")
        ->check(CLI::PositiveNumber);
}

void bind(CLI::App* sub, Opts& o, std::function<int()>& action, int (*fn)(const Opts&)) {
    sub->callback([sub, &o, &action, fn] {
        o.seed_given = option_given(sub, "--seed");
        o.alpha_given = option_given(sub, "--alpha");
        o.basis_given = option_given(sub, "--basis");
        o.no_pns_given = option_given(sub, "--no-pns");
        action = [&o, fn] { return fn(o); };
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Additive-model causal structure learning"};
    app.require_subcommand(1);
    Opts o;
    std::function<int()> action;

    auto* sim = app.add_subcommand("simulate", "Draw a random SEM and sample data from it");
    sim->add_option("--config", o.config, "Experiment config JSON");
    sim->add_option("--seed", o.seed, "Random seed");
    sim->add_option("--output", o.output, "Output prefix")->required();
    bind(sim, o, action, cmd_simulate);

    auto* pns_cmd = app.add_subcommand("pns", "Preliminary neighborhood selection");
    pns_cmd->add_option("--input", o.input, "Data CSV")->required();
    pns_cmd->add_option("--config", o.config, "Learner config JSON");
    pns_cmd->add_option("--seed", o.seed, "Random seed");
    pns_cmd->add_option("--basis", o.basis, "Spline basis size");
    add_threads(pns_cmd, o);
    pns_cmd->add_option("--output", o.output, "Neighborhoods JSON path")->required();
    bind(pns_cmd, o, action, cmd_pns);

    auto* inc = app.add_subcommand("incedge", "Greedy edge-insertion order search");
    inc->add_option("--input", o.input, "Data CSV")->required();
    inc->add_option("--config", o.config, "Learner config JSON");
    inc->add_option("--seed", o.seed, "Random seed");
    inc->add_option("--basis", o.basis, "Spline basis size");
    inc->add_flag("--no-pns", o.no_pns, "Skip neighborhood preselection");
    add_threads(inc, o);
    inc->add_option("--output", o.output, "Output prefix")->required();
    bind(inc, o, action, cmd_incedge);

    auto* pr = app.add_subcommand("prune", "Significance-prune an estimated graph");
    pr->add_option("--input", o.input, "Data CSV")->required();
    pr->add_option("--dag", o.dag, "Graph to prune (.json or edge list)")->required();
    pr->add_option("--config", o.config, "Learner config JSON");
    pr->add_option("--alpha", o.alpha, "Significance level");
    pr->add_option("--basis", o.basis, "Spline basis size");
    add_threads(pr, o);
    pr->add_option("--output", o.output, "Output prefix")->required();
    bind(pr, o, action, cmd_prune);

    auto* fit = app.add_subcommand("fit", "Full pipeline: neighborhoods, order search, prune");
    fit->add_option("--input", o.input, "Data CSV")->required();
    fit->add_option("--config", o.config, "Learner config JSON");
    fit->add_option("--seed", o.seed, "Random seed");
    fit->add_option("--alpha", o.alpha, "Significance level");
    fit->add_option("--basis", o.basis, "Spline basis size");
    fit->add_flag("--no-pns", o.no_pns, "Skip neighborhood preselection");
    add_threads(fit, o);
    fit->add_option("--output", o.output, "Output prefix")->required();
    bind(fit, o, action, cmd_fit);

    auto* ev = app.add_subcommand("eval", "Score an estimate against the true graph");
    ev->add_option("true_dag", o.true_path, "True graph path")->required();
    ev->add_option("est_dag", o.est_path, "Estimated graph path")->required();
    bind(ev, o, action, cmd_eval);

    auto* be = app.add_subcommand("bench", "Replicated experiments or misspecification sweeps");
    be->add_option("--config", o.config, "Experiment config JSON");
    be->add_option("--seed", o.seed, "Random seed");
    add_threads(be, o);
    be->add_option("--output", o.output, "Results CSV path")->required();
    bind(be, o, action, cmd_bench);

    auto* st = app.add_subcommand("stability", "Stability selection over subsamples");
    st->add_option("--input", o.input, "Data CSV")->required();
    st->add_option("--config", o.config, "JSON with optional cam/stability sections");
    st->add_option("--seed", o.seed, "Random seed");
    add_threads(st, o);
    st->add_option("--output", o.output, "Selected edges JSON path")->required();
    bind(st, o, action, cmd_stability);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        return action();
    } catch (const cam::InvalidData& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const cam::ExplicitRefusal& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const cam::SingularFit& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const cam::DegenerateColumn& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const cam::SimulationError& e) {
        std::cerr << "simulation failure: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
