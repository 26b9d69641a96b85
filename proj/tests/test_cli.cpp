#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "epcore/cli.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kTmp = fs::temp_directory_path() / "epcore_cli_tests";

struct Run {
    int exit_code = -1;
    std::string output_path;
};

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(EPCORE_BIN) + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string payload_of(const fs::path& p) {
    // everything except '#'-comment metadata lines
    std::ifstream in(p);
    std::ostringstream out;
    std::string line;
    while (std::getline(in, line))
        if (line.empty() || line[0] != '#') out << line << "\n";
    return out.str();
}

const char* kCensusConfig = R"({
  "family": {"type": "twolevel", "omega1": 1.0, "omega2": 0.0,
             "delta1": 0.5, "delta2": 0.5},
  "region": {"lo": [-2, -2], "hi": [2, 2], "step": 0.05}
})";

} // namespace

TEST_CASE("census subcommand writes the two coalescence points") {
    fs::create_directories(kTmp);
    const fs::path cfg = kTmp / "census.json";
    const fs::path out = kTmp / "census.csv";
    write_file(cfg, kCensusConfig);
    const int code =
        run_cli("census --config " + cfg.string() + " --out " + out.string());
    CHECK(code == 0);
    const std::string body = payload_of(out);
    CHECK(body.find("lambda_re,lambda_im") != std::string::npos);
    // two records after the header
    CHECK(std::count(body.begin(), body.end(), '\n') == 3);
    CHECK(body.find("0,-1,") != std::string::npos);
    CHECK(body.find("0,1,") != std::string::npos);
}

TEST_CASE("payload bytes are identical across runs and worker counts") {
    fs::create_directories(kTmp);
    const fs::path cfg = kTmp / "det.json";
    write_file(cfg, kCensusConfig);
    std::string payloads[3];
    int i = 0;
    for (const std::string workers : {"1", "2", "1"}) {
        const fs::path out = kTmp / ("det" + workers + std::to_string(i) + ".csv");
        const int code = run_cli("census --config " + cfg.string() + " --out " +
                                 out.string() + " --workers " + workers);
        REQUIRE(code == 0);
        payloads[i++] = payload_of(out);
    }
    CHECK(payloads[0] == payloads[1]);
    CHECK(payloads[0] == payloads[2]);
}

TEST_CASE("json format carries the same records") {
    fs::create_directories(kTmp);
    const fs::path cfg = kTmp / "fmt.json";
    const fs::path out = kTmp / "fmt_out.json";
    write_file(cfg, kCensusConfig);
    const int code = run_cli("census --config " + cfg.string() + " --out " +
                             out.string() + " --format json");
    CHECK(code == 0);
    std::ifstream in(out);
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string body = buf.str();
    CHECK(body.find("\"records\"") != std::string::npos);
    CHECK(body.find("\"header\"") != std::string::npos);
}

TEST_CASE("malformed config exits 2 and writes nothing") {
    fs::create_directories(kTmp);
    const fs::path cfg = kTmp / "bad.json";
    const fs::path out = kTmp / "bad_out.csv";
    fs::remove(out);

    // negative radius
    write_file(cfg, R"({"family": {"type": "twolevel", "omega1": 1.0, "omega2": 0.0,
      "delta1": 0.5, "delta2": 0.5},
      "region": {"lo": [-2,-2], "hi": [2,2], "step": -0.05}})");
    CHECK(run_cli("census --config " + cfg.string() + " --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));

    // not JSON at all
    write_file(cfg, "not json {{{");
    CHECK(run_cli("census --config " + cfg.string() + " --out " + out.string()) == 2);
    CHECK_FALSE(fs::exists(out));

    // missing file
    CHECK(run_cli("census --config " + (kTmp / "nope.json").string()) == 2);

    // unknown subcommand
    write_file(cfg, kCensusConfig);
    CHECK(run_cli("frobnicate --config " + cfg.string()) == 2);
}

TEST_CASE("domain failures exit 1") {
    fs::create_directories(kTmp);
    const fs::path cfg = kTmp / "domain.json";
    // exponents seed far from any coalescence of a constant family
    write_file(cfg, R"({"family": {"type": "inline",
      "H0": [[1, 0], [0, 2]],
      "generators": [[[0, 0], [0, 0]]]},
      "seed": [0.1, 0.1]})");
    CHECK(run_cli("exponents --config " + cfg.string()) == 1);
}

TEST_CASE("every module operation is reachable from some subcommand") {
    const auto map = epcore::cli::subcommand_operations();
    const auto ops = epcore::cli::all_operations();
    for (const auto& op : ops) {
        bool covered = false;
        for (const auto& [cmd, reached] : map)
            if (std::find(reached.begin(), reached.end(), op) != reached.end()) {
                covered = true;
                break;
            }
        INFO("operation ", op);
        CHECK(covered);
    }
    // and the mapping only names real subcommands
    for (const auto& [cmd, reached] : map) {
        CHECK(!reached.empty());
        CHECK((cmd == "twolevel" || cmd == "census" || cmd == "encircle" ||
               cmd == "exponents" || cmd == "response" || cmd == "lipkin" ||
               cmd == "metric" || cmd == "ep3"));
    }
}
