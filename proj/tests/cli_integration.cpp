#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "cam/rng.hpp"
#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string cli = CAM_CLI_PATH;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("cam_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args, const std::string& out_file = "/dev/null",
        const std::string& err_file = "/dev/null") {
    const std::string cmd = cli + " " + args + " >" + out_file + " 2>" + err_file;
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    REQUIRE(WIFEXITED(rc));
    return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

void write_csv(const std::string& path, const Eigen::MatrixXd& x,
               const std::vector<std::string>& names) {
    std::ofstream out(path);
    out << std::setprecision(17);
    for (std::size_t j = 0; j < names.size(); ++j) {
        out << (j ? "," : "") << names[j];
    }
    out << "\n";
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            out << (j ? "," : "") << x(i, j);
        }
        out << "\n";
    }
}

Eigen::MatrixXd pair_data(int n, std::uint64_t seed) {
    cam::Rng rng(seed);
    Eigen::MatrixXd x(n, 2);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        x(i, 1) = std::sin(2.0 * x(i, 0)) + rng.normal(0.0, 0.3);
    }
    return x;
}

Eigen::MatrixXd chain_data(int p, int n, std::uint64_t seed) {
    cam::Rng rng(seed);
    Eigen::MatrixXd x(n, p);
    for (int i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        for (int j = 1; j < p; ++j) {
            x(i, j) = std::sin(2.0 * x(i, j - 1)) + rng.normal(0.0, 0.3);
        }
    }
    return x;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    TempDir dir;
    CHECK(run("--help", dir.file("out.txt")) == 0);
    CHECK(run("") == 2);                       // a subcommand is required
    CHECK(run("frobnicate") == 2);             // unknown subcommand
    CHECK(run("fit --no-such-flag") == 2);     // unknown option
    CHECK(run("fit --output x") == 2);         // missing required --input
}

TEST_CASE("simulate writes a reproducible bundle") {
    TempDir dir;
    write_text(dir.file("exp.json"),
               "{\"p\": 3, \"n\": 60, \"cam\": {\"seed\": 5}}");
    const std::string prefix_a = dir.file("a");
    const std::string prefix_b = dir.file("b");

    CHECK(run("simulate --config " + dir.file("exp.json") + " --output " + prefix_a) == 0);
    CHECK(fs::exists(prefix_a + "_data.csv"));
    CHECK(fs::exists(prefix_a + "_dag.edges"));
    CHECK(fs::exists(prefix_a + "_dag.json"));
    CHECK(fs::exists(prefix_a + "_sem.json"));

    CHECK(run("simulate --config " + dir.file("exp.json") + " --output " + prefix_b) == 0);
    CHECK(slurp(prefix_a + "_data.csv") == slurp(prefix_b + "_data.csv"));
    CHECK(slurp(prefix_a + "_sem.json") == slurp(prefix_b + "_sem.json"));

    const std::string prefix_c = dir.file("c");
    CHECK(run("simulate --config " + dir.file("exp.json") + " --seed 6 --output " +
              prefix_c) == 0);
    CHECK(slurp(prefix_a + "_data.csv") != slurp(prefix_c + "_data.csv"));

    const json dag = json::parse(slurp(prefix_a + "_dag.json"));
    CHECK(dag.at("p").get<int>() == 3);
}

TEST_CASE("fit recovers a planted nonlinear edge and is byte-stable") {
    TempDir dir;
    write_csv(dir.file("pair.csv"), pair_data(200, 31), {"a", "b"});

    const std::string est = dir.file("est");
    CHECK(run("fit --input " + dir.file("pair.csv") + " --seed 7 --output " + est) == 0);
    CHECK(slurp(est + ".edges") == "0 1\n");

    const json dag = json::parse(slurp(est + ".json"));
    CHECK(dag.at("p").get<int>() == 2);
    CHECK(dag.at("edges").size() == 1);

    const json man = json::parse(slurp(est + "_manifest.json"));
    CHECK(man.contains("version"));
    CHECK(man.at("seed").get<std::uint64_t>() == 7);
    CHECK(man.at("config").contains("num_basis"));
    CHECK(man.at("config").contains("prune_alpha"));
    CHECK(man.at("trajectory").is_array());
    CHECK(man.at("trajectory").size() >= 2);
    CHECK(man.at("edges").is_array());
    const std::string raw = slurp(est + "_manifest.json");
    CHECK(raw.find("wall") == std::string::npos);
    CHECK(raw.find("thread") == std::string::npos);

    // same seed again, and a different thread count: identical bytes
    const std::string re = dir.file("re");
    CHECK(run("fit --input " + dir.file("pair.csv") + " --seed 7 --output " + re) == 0);
    CHECK(slurp(re + ".edges") == slurp(est + ".edges"));
    CHECK(slurp(re + ".json") == slurp(est + ".json"));
    CHECK(slurp(re + "_manifest.json") == slurp(est + "_manifest.json"));

    const std::string wide = dir.file("wide");
    CHECK(run("fit --input " + dir.file("pair.csv") + " --seed 7 --threads 4 --output " +
              wide) == 0);
    CHECK(slurp(wide + ".edges") == slurp(est + ".edges"));
    CHECK(slurp(wide + ".json") == slurp(est + ".json"));
    CHECK(slurp(wide + "_manifest.json") == slurp(est + "_manifest.json"));
}

TEST_CASE("eval reports structural and interventional distances") {
    TempDir dir;
    write_text(dir.file("chain.json"), "{\"p\": 3, \"edges\": [[0, 1], [1, 2]]}");
    write_text(dir.file("empty.edges"), "");

    const std::string out = dir.file("out.txt");
    CHECK(run("eval " + dir.file("chain.json") + " " + dir.file("chain.json"), out) == 0);
    CHECK(slurp(out) == "shd=0 sid=0\n");

    CHECK(run("eval " + dir.file("chain.json") + " " + dir.file("empty.edges"), out) == 0);
    CHECK(slurp(out) == "shd=2 sid=3\n");

    write_text(dir.file("p4.json"), "{\"p\": 4, \"edges\": []}");
    CHECK(run("eval " + dir.file("chain.json") + " " + dir.file("p4.json")) == 2);

    CHECK(run("eval " + dir.file("chain.json") + " " + dir.file("missing.json")) == 2);
}

TEST_CASE("malformed data is a usage error naming the file") {
    TempDir dir;
    write_text(dir.file("empty.csv"), "");
    const std::string err = dir.file("err.txt");
    CHECK(run("fit --input " + dir.file("empty.csv") + " --output " + dir.file("x"),
              "/dev/null", err) == 2);
    CHECK(slurp(err).find("empty.csv") != std::string::npos);
}

TEST_CASE("the unrestricted search refuses oversized problems with code 3") {
    TempDir dir;
    cam::Rng rng(77);
    Eigen::MatrixXd x(40, 31);
    for (int i = 0; i < 40; ++i) {
        for (int j = 0; j < 31; ++j) x(i, j) = rng.normal();
    }
    std::vector<std::string> names;
    for (int j = 0; j < 31; ++j) names.push_back("v" + std::to_string(j));
    write_csv(dir.file("wide.csv"), x, names);
    CHECK(run("incedge --input " + dir.file("wide.csv") + " --no-pns --output " +
              dir.file("w")) == 3);
}

TEST_CASE("stage subcommands compose into the full pipeline") {
    TempDir dir;
    write_csv(dir.file("chain.csv"), chain_data(3, 150, 41), {"x0", "x1", "x2"});

    CHECK(run("pns --input " + dir.file("chain.csv") + " --seed 3 --output " +
              dir.file("nbhd.json")) == 0);
    const json nb = json::parse(slurp(dir.file("nbhd.json")));
    CHECK(nb.at("sets").size() == 3);
    CHECK(nb.contains("version"));
    CHECK(nb.at("config").at("seed").get<std::uint64_t>() == 3);

    CHECK(run("incedge --input " + dir.file("chain.csv") + " --seed 3 --output " +
              dir.file("inc")) == 0);
    const json man = json::parse(slurp(dir.file("inc") + "_manifest.json"));
    CHECK(man.at("trajectory").is_array());
    CHECK(man.at("edges").is_array());
    CHECK(man.contains("pns_sets"));

    CHECK(run("prune --input " + dir.file("chain.csv") + " --dag " + dir.file("inc") +
              ".json --output " + dir.file("pruned")) == 0);
    const json pruned = json::parse(slurp(dir.file("pruned") + ".json"));
    const json full = json::parse(slurp(dir.file("inc") + ".json"));
    CHECK(pruned.at("edges").size() <= full.at("edges").size());

    // pruning a graph sized for different data is a usage error
    write_text(dir.file("wrong.json"), "{\"p\": 5, \"edges\": []}");
    CHECK(run("prune --input " + dir.file("chain.csv") + " --dag " + dir.file("wrong.json") +
              " --output " + dir.file("z")) == 2);
}

TEST_CASE("bench writes replicate rows") {
    TempDir dir;
    write_text(dir.file("exp.json"),
               "{\"p\": 4, \"n\": 80, \"replicates\": 2, "
               "\"methods\": [\"cam\", \"empty_baseline\"], \"cam\": {\"seed\": 9}}");
    const std::string csv = dir.file("rows.csv");
    CHECK(run("bench --config " + dir.file("exp.json") + " --output " + csv) == 0);

    std::istringstream in(slurp(csv));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 5);
    CHECK(lines[0] == "replicate,method,shd,sid,wall_seconds,seed");
    CHECK(lines[1].rfind("0,cam,", 0) == 0);
    CHECK(lines[2].rfind("0,empty_baseline,", 0) == 0);
    CHECK(lines[3].rfind("1,cam,", 0) == 0);

    // rerun matches field-for-field except the timing column
    const std::string csv2 = dir.file("rows2.csv");
    CHECK(run("bench --config " + dir.file("exp.json") + " --output " + csv2) == 0);
    std::istringstream in2(slurp(csv2));
    std::vector<std::string> lines2;
    while (std::getline(in2, line)) lines2.push_back(line);
    REQUIRE(lines2.size() == lines.size());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        std::vector<std::string> a, b;
        std::istringstream sa(lines[i]), sb(lines2[i]);
        std::string tok;
        while (std::getline(sa, tok, ',')) a.push_back(tok);
        while (std::getline(sb, tok, ',')) b.push_back(tok);
        REQUIRE(a.size() == 6);
        REQUIRE(b.size() == 6);
        for (std::size_t f = 0; f < 6; ++f) {
            if (f == 4) continue;
            CHECK(a[f] == b[f]);
        }
    }
}

TEST_CASE("bench sweep mode emits one row per grid point") {
    TempDir dir;
    write_text(dir.file("sweep.json"),
               "{\"p\": 4, \"n\": 80, \"replicates\": 1, \"cam\": {\"seed\": 13}, "
               "\"gamma_grid\": [1.0, 2.0], \"omega_grid\": [1.0]}");
    const std::string csv = dir.file("sweep.csv");
    CHECK(run("bench --config " + dir.file("sweep.json") + " --output " + csv) == 0);

    std::istringstream in(slurp(csv));
    std::string line;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] ==
          "gamma,omega,replicates,mean_shd_cam,mean_shd_empty,mean_sid_cam,mean_sid_empty,"
          "errors");
    CHECK(lines[1].rfind("1,1,", 0) == 0);
    CHECK(lines[2].rfind("2,1,", 0) == 0);
}

TEST_CASE("stability subcommand reports stable edges with the ranking caveat") {
    TempDir dir;
    write_csv(dir.file("chain.csv"), chain_data(3, 120, 43), {"x0", "x1", "x2"});
    write_text(dir.file("stab.json"),
               "{\"cam\": {\"seed\": 3, \"use_pns\": false}, "
               "\"stability\": {\"subsamples\": 8, \"subsample_size\": 90, "
               "\"top_k\": 2, \"threshold\": 5}}");
    const std::string out = dir.file("stable.json");
    CHECK(run("stability --input " + dir.file("chain.csv") + " --config " +
              dir.file("stab.json") + " --output " + out) == 0);
    const json doc = json::parse(slurp(out));
    CHECK(doc.at("caveat").get<std::string>().find("not be interpreted as p-values") !=
          std::string::npos);
    CHECK(doc.at("edges").is_array());
    bool has01 = false;
    for (const auto& e : doc.at("edges")) {
        if (e.at(0).get<int>() == 0 && e.at(1).get<int>() == 1) has01 = true;
    }
    CHECK(has01);
}
