#include "cam/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cam/errors.hpp"
#include "json.hpp"

namespace cam {

// One GP path at the given points, via exact multivariate-normal draw on the
// distinct points (duplicates share a latent value, so the draw is a
// function), centered to sample mean zero over all n positions.
Eigen::VectorXd gp_realize(const Eigen::MatrixXd& pts, double bandwidth, Rng& rng) {
    const auto n = pts.rows();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index c = 0; c < pts.cols(); ++c) {
            if (pts(a, c) != pts(b, c)) return pts(a, c) < pts(b, c);
        }
        return false;
    });

    std::vector<Eigen::Index> rep(static_cast<std::size_t>(n));  // row -> distinct id
    std::vector<Eigen::Index> distinct;
    for (std::size_t i = 0; i < order.size(); ++i) {
        const Eigen::Index row = order[i];
        if (i == 0 || pts.row(row) != pts.row(order[i - 1])) {
            distinct.push_back(row);
        }
        rep[static_cast<std::size_t>(row)] = static_cast<Eigen::Index>(distinct.size()) - 1;
    }

    const auto m = static_cast<Eigen::Index>(distinct.size());
    Eigen::MatrixXd kern(m, m);
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    for (Eigen::Index i = 0; i < m; ++i) {
        kern(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < m; ++j) {
            const double d2 = (pts.row(distinct[i]) - pts.row(distinct[j])).squaredNorm();
            kern(i, j) = kern(j, i) = std::exp(-d2 * inv);
        }
    }

    Eigen::LLT<Eigen::MatrixXd> llt;
    double jitter = 1e-8;
    bool ok = false;
    for (int attempt = 0; attempt < 4; ++attempt) {
        Eigen::MatrixXd kj = kern;
        kj.diagonal().array() += jitter;
        llt.compute(kj);
        if (llt.info() == Eigen::Success) {
            ok = true;
            break;
        }
        jitter *= 10.0;
    }
    if (!ok) throw SimulationError("kernel matrix not factorizable after jitter escalation");

    Eigen::VectorXd z(m);
    for (Eigen::Index i = 0; i < m; ++i) z(i) = rng.normal();
    const Eigen::VectorXd latent = llt.matrixL() * z;

    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) out(i) = latent(rep[static_cast<std::size_t>(i)]);
    out.array() -= out.mean();
    return out;
}

namespace {

std::string kind_name(FunctionSpec::Kind k) {
    switch (k) {
        case FunctionSpec::Kind::gaussian_process:
            return "gaussian_process";
        case FunctionSpec::Kind::sigmoid:
            return "sigmoid";
        case FunctionSpec::Kind::linear:
            return "linear";
    }
    throw InvalidData("unknown function kind");
}

FunctionSpec::Kind kind_of_name(const std::string& s) {
    if (s == "gaussian_process") return FunctionSpec::Kind::gaussian_process;
    if (s == "sigmoid") return FunctionSpec::Kind::sigmoid;
    if (s == "linear") return FunctionSpec::Kind::linear;
    throw InvalidData("unknown function kind: " + s);
}

nlohmann::json function_to_json(const FunctionSpec& f) {
    nlohmann::json j;
    j["kind"] = kind_name(f.kind);
    switch (f.kind) {
        case FunctionSpec::Kind::gaussian_process:
            j["bandwidth"] = f.bandwidth;
            break;
        case FunctionSpec::Kind::sigmoid:
            j["a"] = f.a;
            j["b"] = f.b;
            j["c"] = f.c;
            break;
        case FunctionSpec::Kind::linear:
            j["slope"] = f.slope;
            break;
    }
    return j;
}

FunctionSpec function_from_json(const nlohmann::json& j) {
    FunctionSpec f;
    f.kind = kind_of_name(j.at("kind").get<std::string>());
    switch (f.kind) {
        case FunctionSpec::Kind::gaussian_process:
            f.bandwidth = j.value("bandwidth", 1.0);
            if (!(f.bandwidth > 0.0)) throw InvalidData("GP bandwidth must be positive");
            break;
        case FunctionSpec::Kind::sigmoid:
            f.a = j.at("a").get<double>();
            f.b = j.at("b").get<double>();
            f.c = j.at("c").get<double>();
            if (f.b == 0.0) throw InvalidData("sigmoid b must be nonzero");
            break;
        case FunctionSpec::Kind::linear:
            f.slope = j.at("slope").get<double>();
            break;
    }
    return f;
}

void validate_function(const FunctionSpec& f) {
    switch (f.kind) {
        case FunctionSpec::Kind::gaussian_process:
            if (!(f.bandwidth > 0.0) || !std::isfinite(f.bandwidth)) {
                throw InvalidData("GP bandwidth must be positive");
            }
            break;
        case FunctionSpec::Kind::sigmoid:
            if (!std::isfinite(f.a) || !std::isfinite(f.b) || !std::isfinite(f.c)) {
                throw InvalidData("sigmoid parameters must be finite");
            }
            if (f.b == 0.0) throw InvalidData("sigmoid b must be nonzero");
            break;
        case FunctionSpec::Kind::linear:
            if (!std::isfinite(f.slope)) throw InvalidData("linear slope must be finite");
            break;
    }
}

void validate_spec(const SemSpec& spec) {
    const int p = spec.dag.p();
    if (static_cast<int>(spec.noise_sd.size()) != p) {
        throw InvalidData("noise_sd must have one entry per node");
    }
    for (double sd : spec.noise_sd) {
        if (!(sd > 0.0) || !std::isfinite(sd)) throw InvalidData("noise_sd entries must be positive");
    }
    if (!(spec.mixture_omega >= 0.0 && spec.mixture_omega <= 1.0)) {
        throw InvalidData("mixture_omega must lie in [0, 1]");
    }
    if (!(spec.noise_gamma > 0.0)) throw InvalidData("noise_gamma must be positive");
    for (const auto& [k, j] : spec.dag.edges()) {
        if (spec.edge_functions.find({k, j}) == spec.edge_functions.end()) {
            throw InvalidData("edge " + std::to_string(k) + "->" + std::to_string(j) +
                              " has no function");
        }
    }
    for (const auto& [key, f] : spec.edge_functions) validate_function(f);
    for (const auto& [node, f] : spec.joint_functions) validate_function(f);
}

}  // namespace

Dag random_dag(int p, double p_conn, Rng& rng) {
    if (p < 1) throw InvalidData("need at least one node");
    if (!(p_conn >= 0.0 && p_conn <= 1.0)) throw InvalidData("p_conn must lie in [0, 1]");
    std::vector<int> order(static_cast<std::size_t>(p));
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    Dag dag(p);
    for (int i = 0; i < p; ++i) {
        for (int j = i + 1; j < p; ++j) {
            if (rng.uniform01() < p_conn) dag.add_edge(order[i], order[j]);
        }
    }
    return dag;
}

FunctionSpec sample_sigmoid(Rng& rng) {
    FunctionSpec f;
    f.kind = FunctionSpec::Kind::sigmoid;
    f.a = 1.0 + rng.exponential(4.0);
    const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    f.b = sign * rng.uniform(0.5, 2.0);
    f.c = rng.uniform(-2.0, 2.0);
    return f;
}

double eval_function(const FunctionSpec& f, double x) {
    switch (f.kind) {
        case FunctionSpec::Kind::sigmoid: {
            const double t = f.b * (x + f.c);
            return f.a * t / (1.0 + std::abs(t));
        }
        case FunctionSpec::Kind::linear:
            return f.slope * x;
        case FunctionSpec::Kind::gaussian_process:
            throw InvalidData("GP functions have no closed form; realized at sampling time");
    }
    throw InvalidData("unknown function kind");
}

SemSpec random_sem_spec(int p, double p_conn, FunctionSpec::Kind kind, double gamma,
                        double omega, Rng& rng) {
    SemSpec spec;
    spec.dag = random_dag(p, p_conn, rng);
    spec.noise_gamma = gamma;
    spec.mixture_omega = omega;
    spec.noise_sd.resize(static_cast<std::size_t>(p));
    for (int j = 0; j < p; ++j) {
        if (spec.dag.parents(j).empty()) {
            const double sd = rng.uniform(1.0, std::sqrt(2.0));
            spec.noise_sd[static_cast<std::size_t>(j)] = sd;
            spec.source_sd[j] = sd;
        } else {
            spec.noise_sd[static_cast<std::size_t>(j)] = rng.uniform(0.2, std::sqrt(2.0) / 5.0);
        }
    }
    for (const auto& [k, j] : spec.dag.edges()) {
        FunctionSpec f;
        switch (kind) {
            case FunctionSpec::Kind::gaussian_process:
                f.kind = kind;
                f.bandwidth = 1.0;
                break;
            case FunctionSpec::Kind::sigmoid:
                f = sample_sigmoid(rng);
                break;
            case FunctionSpec::Kind::linear: {
                f.kind = kind;
                const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
                f.slope = sign * rng.uniform(0.5, 2.0);
                break;
            }
        }
        spec.edge_functions[{k, j}] = f;
    }
    if (omega < 1.0) {
        for (int j = 0; j < p; ++j) {
            if (!spec.dag.parents(j).empty()) {
                FunctionSpec f;
                f.kind = FunctionSpec::Kind::gaussian_process;
                f.bandwidth = 1.0;
                spec.joint_functions[j] = f;
            }
        }
    }
    validate_spec(spec);
    return spec;
}

Dataset simulate_data(const SemSpec& spec, int n, Rng& rng) {
    if (n < 1) throw InvalidData("need at least one observation");
    validate_spec(spec);
    const int p = spec.dag.p();
    const auto topo = spec.dag.topological_sort();
    if (!topo) throw InvalidData("SEM graph has a cycle");

    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, p);
    for (int j : *topo) {
        const auto& parents = spec.dag.parents(j);
        Eigen::VectorXd signal = Eigen::VectorXd::Zero(n);
        if (!parents.empty()) {
            Eigen::VectorXd additive = Eigen::VectorXd::Zero(n);
            for (int k : parents) {
                const FunctionSpec& f = spec.edge_functions.at({k, j});
                if (f.kind == FunctionSpec::Kind::gaussian_process) {
                    additive += gp_realize(x.col(k), f.bandwidth, rng);
                } else {
                    for (int i = 0; i < n; ++i) additive(i) += eval_function(f, x(i, k));
                }
            }
            if (spec.mixture_omega < 1.0) {
                Eigen::MatrixXd pa_pts(n, static_cast<Eigen::Index>(parents.size()));
                for (std::size_t c = 0; c < parents.size(); ++c) {
                    pa_pts.col(static_cast<Eigen::Index>(c)) = x.col(parents[c]);
                }
                double bw = 1.0;
                const auto it = spec.joint_functions.find(j);
                if (it != spec.joint_functions.end()) bw = it->second.bandwidth;
                const Eigen::VectorXd joint = gp_realize(pa_pts, bw, rng);
                signal = spec.mixture_omega * additive + (1.0 - spec.mixture_omega) * joint;
            } else {
                signal = additive;
            }
        }
        const double sd = spec.noise_sd[static_cast<std::size_t>(j)];
        for (int i = 0; i < n; ++i) {
            const double nj = rng.normal(0.0, sd);
            const double eps = spec.noise_gamma == 1.0
                                   ? nj
                                   : std::copysign(std::pow(std::abs(nj), spec.noise_gamma), nj);
            x(i, j) = signal(i) + eps;
        }
    }
    return Dataset(std::move(x));
}

std::string sem_spec_to_json(const SemSpec& spec) {
    nlohmann::json j;
    j["dag"] = nlohmann::json::parse(dag_to_json(spec.dag));
    j["edge_functions"] = nlohmann::json::array();
    for (const auto& [key, f] : spec.edge_functions) {
        nlohmann::json e = function_to_json(f);
        e["k"] = key.first;
        e["j"] = key.second;
        j["edge_functions"].push_back(e);
    }
    j["noise_sd"] = spec.noise_sd;
    j["source_sd"] = nlohmann::json::object();
    for (const auto& [node, sd] : spec.source_sd) j["source_sd"][std::to_string(node)] = sd;
    j["noise_gamma"] = spec.noise_gamma;
    j["mixture_omega"] = spec.mixture_omega;
    j["joint_functions"] = nlohmann::json::array();
    for (const auto& [node, f] : spec.joint_functions) {
        nlohmann::json e = function_to_json(f);
        e["j"] = node;
        j["joint_functions"].push_back(e);
    }
    return j.dump(2) + "\n";
}

SemSpec sem_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad SEM JSON: ") + e.what());
    }
    SemSpec spec;
    try {
        spec.dag = dag_from_json(j.at("dag").dump());
        for (const auto& e : j.value("edge_functions", nlohmann::json::array())) {
            spec.edge_functions[{e.at("k").get<int>(), e.at("j").get<int>()}] =
                function_from_json(e);
        }
        spec.noise_sd = j.at("noise_sd").get<std::vector<double>>();
        // items() holds a reference, so the object must outlive the loop.
        const nlohmann::json sources = j.value("source_sd", nlohmann::json::object());
        for (const auto& [key, val] : sources.items()) {
            spec.source_sd[std::stoi(key)] = val.get<double>();
        }
        spec.noise_gamma = j.value("noise_gamma", 1.0);
        spec.mixture_omega = j.value("mixture_omega", 1.0);
        for (const auto& e : j.value("joint_functions", nlohmann::json::array())) {
            spec.joint_functions[e.at("j").get<int>()] = function_from_json(e);
        }
    } catch (const nlohmann::json::exception& e) {
        throw InvalidData(std::string("bad SEM JSON: ") + e.what());
    }
    validate_spec(spec);
    return spec;
}

}  // namespace cam
