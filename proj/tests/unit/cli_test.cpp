#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "fogsim/application.hpp"
#include "fogsim/errors.hpp"
#include "fogsim/topology.hpp"

namespace fs = std::filesystem;

namespace fogsim {
namespace {

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("fogsim-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    int run(std::vector<std::string> args) {
        out_.str("");
        err_.str("");
        return cli::run(args, out_, err_);
    }
    static fs::path data(const std::string& name) { return fs::path(FOGSIM_TEST_DATA_DIR) / name; }

    fs::path dir_;
    std::ostringstream out_, err_;
};

TEST_F(Cli, RunScenarioWritesReports) {
    const auto out = dir_ / "r";
    EXPECT_EQ(run({"run", "--scenario", "eeg", "--config", "1", "--headset", "A", "--placement", "edgeward", "--seed",
                   "42", "--duration-ms", "2000", "--out", out.string()}),
              cli::kOk)
        << err_.str();
    EXPECT_TRUE(fs::exists(out / "report.json"));
    EXPECT_TRUE(fs::exists(out / "report.csv"));
    EXPECT_TRUE(fs::exists(out / "timing.json"));
    EXPECT_NE(out_.str().find("loop_delay_ms="), std::string::npos);
}

TEST_F(Cli, RunTwiceIsByteIdentical) {
    const std::vector<std::string> base{"run", "--scenario", "surveillance", "--config", "1", "--duration-ms", "2000"};
    auto a = base, b = base;
    a.insert(a.end(), {"--out", (dir_ / "a").string()});
    b.insert(b.end(), {"--out", (dir_ / "b").string()});
    ASSERT_EQ(run(a), cli::kOk);
    ASSERT_EQ(run(b), cli::kOk);
    EXPECT_EQ(read_text(dir_ / "a" / "report.json"), read_text(dir_ / "b" / "report.json"));
    EXPECT_EQ(read_text(dir_ / "a" / "report.csv"), read_text(dir_ / "b" / "report.csv"));
}

TEST_F(Cli, RunCustomFiles) {
    EXPECT_EQ(run({"run", "--topology", data("eeg_config1_topology.json").string(), "--app",
                   data("eeg_app.json").string(), "--placement", "cloud", "--duration-ms", "2000"}),
              cli::kOk)
        << err_.str();
}

TEST_F(Cli, MissingInputIsUsageError) {
    EXPECT_EQ(run({"run"}), cli::kBadFlags);
    EXPECT_NE(err_.str().find("--scenario"), std::string::npos);
    EXPECT_EQ(run({}), cli::kBadFlags);
    EXPECT_EQ(run({"run", "--scenario", "eeg", "--config", "9"}), cli::kBadFlags);
    EXPECT_EQ(run({"run", "--scenario", "eeg", "--placement", "random", "--duration-ms", "10"}), cli::kBadFlags);
}

TEST_F(Cli, PlacementFailureExitCode) {
    PhysicalTopology topo(
        {FogDevice{"root", std::nullopt, 1, 1000, 1000, 0, 100, 2, 1, 0, "cloud"}},
        {Sensor{"s", "S", "root", 1, {TransmitKind::deterministic, 1}, 0, 0}}, {});
    ApplicationDocument doc;
    doc.spec.name = "heavy";
    doc.spec.sensor_types = {"S"};
    doc.spec.modules = {AppModule{"Heavy", 10, {}}};
    doc.spec.edges = {AppEdge{"S", "Heavy", "S", 1e6, 10}};
    write_text(dir_ / "t.json", serialize_topology_json(topo));
    write_text(dir_ / "a.json", serialize_application_json(doc));
    EXPECT_EQ(run({"run", "--topology", (dir_ / "t.json").string(), "--app", (dir_ / "a.json").string(),
                   "--placement", "edgeward", "--duration-ms", "10"}),
              cli::kPlacementFailed);
    EXPECT_NE(err_.str().find("Heavy"), std::string::npos);
}

TEST_F(Cli, ValidateOk) {
    EXPECT_EQ(run({"validate", "--topology", data("eeg_config1_topology.json").string(), "--app",
                   data("eeg_app.json").string()}),
              cli::kOk);
    EXPECT_NE(out_.str().find("OK"), std::string::npos);
}

TEST_F(Cli, ValidateCycle) {
    std::string text = read_text(data("one_device_topology.json"));
    const std::string from = "\"parent\": null";
    text.replace(text.find(from), from.size(), "\"parent\": \"cloud\"");
    write_text(dir_ / "cyclic.json", text);
    EXPECT_EQ(run({"validate", "--topology", (dir_ / "cyclic.json").string()}), cli::kInvalidInput);
    EXPECT_NE((out_.str() + err_.str()).find("cycle"), std::string::npos);
}

TEST_F(Cli, ValidateDanglingEdge) {
    auto doc = parse_application_json(read_text(data("eeg_app.json")));
    doc.spec.edges.push_back(AppEdge{"Coordinator", "Scoreboard", "SCORE", 1, 1});
    write_text(dir_ / "app.json", serialize_application_json(doc));
    EXPECT_EQ(run({"validate", "--app", (dir_ / "app.json").string()}), cli::kInvalidInput);
    EXPECT_NE((out_.str() + err_.str()).find("Scoreboard"), std::string::npos);
}

TEST_F(Cli, SweepGrid) {
    const auto out = dir_ / "sweep";
    ASSERT_EQ(run({"sweep", "--scenario", "eeg", "--configs", "1..2", "--placements", "cloud,edgeward", "--headsets",
                   "A,B", "--duration-ms", "500", "--out", out.string()}),
              cli::kOk)
        << err_.str();
    const auto csv = read_text(out / "sweep.csv");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 2 * 2 * 2);
    EXPECT_TRUE(fs::exists(out / "eeg-c2-B-edgeward" / "report.json"));
}

TEST_F(Cli, ListScenarios) {
    EXPECT_EQ(run({"list-scenarios"}), cli::kOk);
    EXPECT_NE(out_.str().find("surveillance"), std::string::npos);
}

TEST(CliRange, Parse) {
    EXPECT_EQ(cli::parse_range("1..5"), (std::vector<int>{1, 2, 3, 4, 5}));
    EXPECT_EQ(cli::parse_range("3"), std::vector<int>{3});
    EXPECT_THROW(cli::parse_range("5..1"), ArgumentError);
    EXPECT_THROW(cli::parse_range("x"), ArgumentError);
}

}  // namespace
}  // namespace fogsim
