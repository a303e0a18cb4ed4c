// End-to-end runs of the command-line tool on small workloads.

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "molcomm/config.hpp"
#include "molcomm/experiments.hpp"

namespace fs = std::filesystem;

namespace {

const std::string cli = MOLCOMM_CLI_PATH;
const std::string source_dir = MOLCOMM_SOURCE_DIR;

int run(const std::string& args) {
    const std::string cmd = "\"" + cli + "\" " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("molcomm_e2e_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string config(const std::string& name) { return source_dir + "/configs/" + name; }

}  // namespace

TEST(Cli, ValidatePrintsResolvedConfig) {
    EXPECT_EQ(run("validate " + config("base_case.json")), 0);
    const auto dir = scratch("validate");
    const auto empty = dir / "empty.json";
    std::ofstream(empty).close();
    EXPECT_EQ(run("validate " + empty.string()), 2);
}

TEST(Cli, BadConfigExitsWithTwo) {
    const auto dir = scratch("bad");
    const auto bad = dir / "bad.json";
    std::ofstream(bad) << R"({"receiver": {"distance": 3e-7, "radius": 4.5e-8, "colour": "blue"},
                            "transmission": {"molecules_per_one": 5000, "bit_interval": 2e-4}})";
    EXPECT_EQ(run("impulse -q -c " + bad.string() + " -o " + dir.string()), 2);
    EXPECT_EQ(run("ber -q -c " + config("base_case.json") + " --set transmission.sample_offsets=[1.25e-7] -o " +
                  dir.string()),
              2);
    // config declares a different experiment
    EXPECT_EQ(run("mi -q -c " + config("impulse.json") + " -o " + dir.string()), 2);
}

TEST(Cli, ImpulseIsDeterministic) {
    const auto a = scratch("impulse_a");
    const auto b = scratch("impulse_b");
    const std::string args = " -q -c " + config("impulse.json") + " --scale 0.01 --seed 7 --set experiment.duration=5e-5";
    ASSERT_EQ(run("impulse" + args + " -o " + a.string()), 0);
    ASSERT_EQ(run("impulse" + args + " -o " + b.string()), 0);
    const auto csv = slurp(a / "impulse.csv");
    EXPECT_EQ(csv, slurp(b / "impulse.csv"));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t_s,analytic_count,simulated_mean_count,simulated_stderr");

    const auto c = scratch("impulse_c");
    ASSERT_EQ(run("impulse -q -c " + config("impulse.json") + " --scale 0.01 --seed 8 --set experiment.duration=5e-5 -o " +
                  c.string()),
              0);
    EXPECT_NE(csv, slurp(c / "impulse.csv"));
}

TEST(Cli, ManifestRecordsTheRun) {
    const auto dir = scratch("manifest");
    ASSERT_EQ(run("impulse -q -c " + config("impulse.json") + " --scale 0.01 --set experiment.duration=5e-5 -o " +
                  dir.string()),
              0);
    const auto m = molcomm::Json::parse(slurp(dir / "impulse.manifest.json"));
    for (const char* key : {"experiment", "version", "config_path", "seed", "scale", "overrides", "resolved_config",
                            "started_utc", "wall_time_s", "outputs", "notes"})
        EXPECT_TRUE(m.contains(key)) << key;
    EXPECT_EQ(m["experiment"], "impulse");
    EXPECT_EQ(m["seed"], 101);
    EXPECT_NEAR(m["peak"]["time_s"].get<double>(), 34.36e-6, 0.5e-6);
    // the resolved configuration reproduces the run on its own
    const auto replay = molcomm::resolve_config(m["resolved_config"]);
    EXPECT_DOUBLE_EQ(replay.env.receiver_distance, 300e-9);
}

TEST(Cli, MiSweepWritesTable) {
    const auto dir = scratch("mi");
    ASSERT_EQ(run("mi -q -c " + config("mi-sweep.json") + " --scale 0.01 --set experiment.t1=[1e-5] -o " + dir.string()),
              0);
    std::istringstream csv(slurp(dir / "mi-sweep.csv"));
    std::string line;
    std::getline(csv, line);
    EXPECT_EQ(line, "t1_s,t_o_s,p_stay,mi_analytic_bits,mi_empirical_bits,trials");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 15);
}

TEST(Cli, BerRunWritesAllTables) {
    const auto a = scratch("ber_a");
    const auto b = scratch("ber_b");
    const std::string args = " -q -c " + config("ber-isi.json") +
                             " --samples 1,5 --detector matched,ml --scale 0.05"
                             " --set transmission.sequence_length=10 --set experiment.ensemble_size=50 -o ";
    ASSERT_EQ(run("ber" + args + a.string()), 0);
    ASSERT_EQ(run("ber" + args + b.string()), 0);
    for (const char* f : {"ber-isi.csv", "ber-isi.per_interval.csv", "ber-isi.summary.json", "ber-isi.manifest.json"})
        EXPECT_TRUE(fs::exists(a / f)) << f;
    EXPECT_EQ(slurp(a / "ber-isi.csv"), slurp(b / "ber-isi.csv"));
    EXPECT_EQ(slurp(a / "ber-isi.per_interval.csv"), slurp(b / "ber-isi.per_interval.csv"));

    std::istringstream csv(slurp(a / "ber-isi.csv"));
    std::string line;
    int rows = -1;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 2 * 2 * 2);  // cases x samples x detectors
}

TEST(Cli, CustomWeightsFile) {
    const auto dir = scratch("weights");
    const auto w = dir / "w.csv";
    std::ofstream(w) << "weight\n1\n2\n";
    EXPECT_EQ(run("ber -q -c " + config("ber-isifree.json") + " --detector custom --weights " + w.string() +
                  " --samples 2 --scale 0.01 -o " + dir.string()),
              0);
    // a weight count that does not match M is skipped and noted
    const auto other = scratch("weights_other");
    ASSERT_EQ(run("ber -q -c " + config("ber-isifree.json") + " --detector custom --weights " + w.string() +
                  " --samples 5 --scale 0.01 -o " + other.string()),
              0);
    const auto m = molcomm::Json::parse(slurp(other / "ber-isifree.manifest.json"));
    ASSERT_EQ(m["notes"].size(), 1u);
    EXPECT_NE(m["notes"][0].get<std::string>().find("custom weights skipped"), std::string::npos);
}
