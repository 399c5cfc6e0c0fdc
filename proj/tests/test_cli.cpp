#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "trackgnn/io.hpp"

using namespace trackgnn;
namespace fs = std::filesystem;

namespace {

const std::string cli = TRACKGNN_CLI_PATH;

fs::path work_dir() {
    const fs::path dir = fs::temp_directory_path() / "trackgnn_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) {
    const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> lines;
    std::string text = read_text_file(p);
    std::size_t start = 0;
    while (start < text.size()) {
        const auto nl = text.find('\n', start);
        lines.push_back(text.substr(start, nl - start));
        if (nl == std::string::npos) break;
        start = nl + 1;
    }
    return lines;
}

double csv_field(const std::string& line, int index) {
    std::size_t start = 0;
    for (int i = 0; i < index; ++i) start = line.find(',', start) + 1;
    return std::stod(line.substr(start, line.find(',', start) - start));
}

}  // namespace

TEST_CASE("generate then validate round trip exits cleanly") {
    const auto dir = work_dir() / "gen";
    fs::remove_all(dir);
    CHECK(run("generate --seed 5 --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "graph.csv"));
    CHECK(run("validate " + (dir / "graph.csv").string()) == 0);
    CHECK(run("partition " + (dir / "graph.csv").string() + " --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "partition.csv"));
}

TEST_CASE("exit codes distinguish parse, validation and requirement failures") {
    const auto dir = work_dir() / "codes";
    fs::remove_all(dir);
    fs::create_directories(dir);

    // Unparseable file -> 2.
    write_text_file(dir / "broken.csv", "not,a,graph\n");
    CHECK(run("validate " + (dir / "broken.csv").string()) == 2);

    // Illegal layer pair -> 3.
    write_text_file(dir / "illegal.csv",
                    "nodes,2,1\n0,B1,0\n1,B3,0\nedges,1,1\n0,0,1,0\n");
    CHECK(run("validate " + (dir / "illegal.csv").string()) == 3);

    // Below-threshold throughput with --check -> 4.
    CHECK(run("simulate --variant mpa --pes 1 --nodes 100 --edges 200 --check --out " +
              dir.string()) == 4);

    // Unknown flag -> 2.
    CHECK(run("simulate --no-such-flag") == 2);

    // Missing file -> 1.
    CHECK(run("validate " + (dir / "missing.csv").string()) == 1);
}

TEST_CASE("infer writes scores and a deviation summary, deterministically") {
    const auto dir = work_dir() / "infer";
    fs::remove_all(dir);
    REQUIRE(run("generate --seed 11 --nodes 97 --edges 160 --out " + dir.string()) == 0);
    const std::string graph = (dir / "graph.csv").string();

    REQUIRE(run("infer " + graph + " --seed 2 --mode both --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "scores.csv"));
    CHECK(fs::exists(dir / "deviation.json"));
    const std::string first = read_text_file(dir / "scores.csv");
    const auto header = lines_of(dir / "scores.csv")[0];
    CHECK(header == "edge_id,score_fixed,score_real,abs_diff");

    REQUIRE(run("infer " + graph + " --seed 2 --mode both --out " + dir.string()) == 0);
    CHECK(read_text_file(dir / "scores.csv") == first);

    // Saved weights reproduce the seeded-weight run bit for bit.
    REQUIRE(run("generate --seed 11 --nodes 97 --edges 160 --out " + dir.string() +
                " --weights-out " + (dir / "w.json").string()) == 0);
    REQUIRE(run("infer " + graph + " --weights " + (dir / "w.json").string() +
                " --seed 11 --mode both --out " + dir.string()) == 0);
    REQUIRE(run("infer " + graph + " --seed 11 --mode both --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "scores.csv"));
}

TEST_CASE("allocate emits the published counts by default") {
    const auto dir = work_dir() / "alloc";
    fs::remove_all(dir);
    REQUIRE(run("allocate --out " + dir.string()) == 0);
    const std::string csv = read_text_file(dir / "allocation.csv");
    CHECK(csv.find("node,B1,A,138,2,,") != std::string::npos);
    CHECK(csv.find("node,E1,B,62,1,,") != std::string::npos);
    CHECK(csv.find("edge,B1-B2,A-A,277,,4,4") != std::string::npos);
    CHECK(csv.find("edge,B1-E1,A-B,77,,1,1") != std::string::npos);
}

TEST_CASE("compare-variants reports ascending throughput across the three designs") {
    const auto dir = work_dir() / "compare";
    fs::remove_all(dir);
    REQUIRE(run("compare-variants --out " + dir.string()) == 0);
    const auto lines = lines_of(dir / "compare.csv");
    REQUIRE(lines.size() >= 4);
    CHECK(lines[1].rfind("mpa,", 0) == 0);
    CHECK(lines[2].rfind("mpa_geo,", 0) == 0);
    CHECK(lines[3].rfind("mpa_geo_rsrc,", 0) == 0);
    const double mpa = csv_field(lines[1], 7);
    const double geo = csv_field(lines[2], 7);
    const double rsrc = csv_field(lines[3], 7);
    CHECK(mpa < geo);
    CHECK(geo < rsrc);
}

TEST_CASE("sweep writes one row per PE count") {
    const auto dir = work_dir() / "sweep";
    fs::remove_all(dir);
    REQUIRE(run("sweep --variant mpa --pe-min 1 --pe-max 4 --nodes 100 --edges 170 --out " +
                dir.string()) == 0);
    const auto lines = lines_of(dir / "sweep.csv");
    REQUIRE(lines.size() >= 5);
    CHECK(lines[1].rfind("1,", 0) == 0);
    CHECK(lines[4].rfind("4,", 0) == 0);
}

TEST_CASE("simulate --fifo-auto writes the found depths") {
    const auto dir = work_dir() / "fifo";
    fs::remove_all(dir);
    REQUIRE(run("simulate --variant geo --nodes 80 --edges 140 --fifo-auto --out " +
                dir.string()) == 0);
    CHECK(fs::exists(dir / "fifo_depths.json"));
    CHECK(fs::exists(dir / "mpa_geo_report.json"));
}

TEST_CASE("calibrate records the fit and held-out residuals") {
    const auto dir = work_dir() / "cal";
    fs::remove_all(dir);
    REQUIRE(run("calibrate --free ii_edge,depth_aggregate --out " + dir.string()) == 0);
    const std::string j = read_text_file(dir / "calibration.json");
    CHECK(j.find("\"holdout\"") != std::string::npos);
    CHECK(j.find("\"mpa_geo_rsrc\"") != std::string::npos);
    CHECK(j.find("\"residuals\"") != std::string::npos);
    CHECK(j.find("\"fit_max_rel_err\"") != std::string::npos);
}

TEST_CASE("simulate can take its workload from a graph file") {
    const auto dir = work_dir() / "simgraph";
    fs::remove_all(dir);
    REQUIRE(run("generate --seed 4 --nodes 120 --edges 210 --out " + dir.string()) == 0);
    REQUIRE(run("simulate --variant geo-rsrc --graph " + (dir / "graph.csv").string() +
                " --out " + dir.string()) == 0);
    CHECK(fs::exists(dir / "report.csv"));
    CHECK(fs::exists(dir / "mpa_geo_rsrc_report.json"));
}
