#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>

#include "dtwin/cli.hpp"
#include "support.hpp"

namespace dtwin {
namespace {

namespace fs = std::filesystem;
using test::fixture_path;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("dtwin_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string out(const std::string& name) const { return (dir_ / name).string(); }
  fs::path dir_;
};

TEST_F(CliTest, ValidateExitCodes) {
  EXPECT_EQ(cli({"validate", fixture_path("cranfield.aml")}).code, 0);
  const CliRun broken = cli({"validate", fixture_path("cranfield_broken_link.aml")});
  EXPECT_EQ(broken.code, 1);
  EXPECT_EQ(std::count(broken.out.begin(), broken.out.end(), '\n'), 1);
  EXPECT_NE(broken.out.find("dangling-link"), std::string::npos);
  EXPECT_NE(broken.out.find("cranfield_broken_link.aml:"), std::string::npos);
  EXPECT_EQ(cli({"validate", out("missing.aml")}).code, 2);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(cli({}).code, 2);
  EXPECT_EQ(cli({"frobnicate"}).code, 2);
  EXPECT_EQ(cli({"simulate", fixture_path("tower3.aml"), "--geometry", fixture_path("tower.json"), "--mode", "dream",
                 "--trace", out("t.jsonl")})
                .code,
            2);
  EXPECT_EQ(cli({"plan", fixture_path("tower3.aml"), "--geometry", fixture_path("tower.json"), "-o", out("p.json"),
                 "--set", "sweep_step"})
                .code,
            2);
  EXPECT_EQ(cli({"--help"}).code, 0);
}

TEST_F(CliTest, ExportItems) {
  ASSERT_EQ(cli({"export-items", fixture_path("cranfield.aml"), "-o", out("c.items")}).code, 0);
  const std::string text = slurp(out("c.items"));
  EXPECT_NE(text.find("parameter FaceplateBack square_right 0.664 0 1.151\n"), std::string::npos);
  const auto doc = caex::parse_caex(test::read_fixture("cranfield.aml"));
  EXPECT_EQ(items::read_items(text), items::extract_items(doc));

  ASSERT_EQ(cli({"export-items", fixture_path("empty.aml"), "-o", out("e.items")}).code, 0);
  for (const auto& it : items::read_items(slurp(out("e.items"))).items) EXPECT_EQ(it.kind, items::Kind::kParameter);

  EXPECT_EQ(cli({"export-items", fixture_path("cranfield_broken_link.aml"), "-o", out("b.items")}).code, 1);
  EXPECT_EQ(cli({"export-items", fixture_path("cranfield.aml"), "-o", out("nodir/x.items")}).code, 2);
}

TEST_F(CliTest, PlanDocument) {
  ASSERT_EQ(cli({"plan", fixture_path("cranfield.aml"), "--geometry", fixture_path("cranfield.json"), "-o",
                 out("plan.json")})
                .code,
            0);
  const auto doc = nlohmann::json::parse(slurp(out("plan.json")));
  const auto seq = doc["sequence"].get<std::vector<std::string>>();
  ASSERT_EQ(seq.size(), 8u);
  const auto pos = [&](const std::string& n) { return std::find(seq.begin(), seq.end(), n) - seq.begin(); };
  EXPECT_LT(pos("shaft"), pos("pendulum"));
  for (double r : doc["residuals"]) EXPECT_LE(r, 1e-6);
  const auto& first = doc["parts"][0];
  EXPECT_EQ(first["name"], "back");
  EXPECT_EQ(first["target"]["x"], 0.0);
  EXPECT_FALSE(first["segments"].empty());
}

TEST_F(CliTest, PlanTowerResidualsFromEmittedPoses) {
  ASSERT_EQ(cli({"plan", fixture_path("tower20.aml"), "--geometry", fixture_path("tower.json"), "-o", out("p.json")})
                .code,
            0);
  const auto doc = nlohmann::json::parse(slurp(out("p.json")));
  // Blocks stack on top/bottom points one unit apart.
  for (std::size_t i = 1; i < doc["parts"].size(); ++i) {
    const auto& lo = doc["parts"][i - 1]["target"];
    const auto& hi = doc["parts"][i]["target"];
    const Point3 gap(hi["x"].get<double>() - lo["x"].get<double>(), hi["y"].get<double>() - lo["y"].get<double>() - 1.0,
                     hi["z"].get<double>() - lo["z"].get<double>());
    EXPECT_LE(gap.norm(), 1e-6);
  }
}

TEST_F(CliTest, PlanSinglePartGoesDown) {
  const std::string aml = out("one.aml");
  std::ofstream(aml) << R"(<CAEXFile>
  <SystemUnitClassLib Name="L"><SystemUnitClass Name="Block">
    <Attribute Name="top"><DefaultValue>0,0.5,0</DefaultValue></Attribute>
    <ExternalInterface Name="top" RefBaseClassPath="I/P" ID="i"/>
  </SystemUnitClass></SystemUnitClassLib>
  <InstanceHierarchy Name="H">
    <InternalElement Name="solo" ID="00000000-0000-0000-0000-000000000001" RefBaseSystemUnitPath="L/Block"/>
  </InstanceHierarchy></CAEXFile>)";
  ASSERT_EQ(cli({"plan", aml, "--geometry", fixture_path("tower.json"), "-o", out("p.json"), "--set",
                 "safe_clearance=1"})
                .code,
            0);
  const auto doc = nlohmann::json::parse(slurp(out("p.json")));
  ASSERT_EQ(doc["sequence"].size(), 1u);
  EXPECT_EQ(doc["parts"][0]["strategy"], "down");
}

TEST_F(CliTest, PlanFailureReportsCollisions) {
  // A station surface above the target blocks every approach.
  ASSERT_EQ(cli({"plan", fixture_path("tower3.aml"), "--geometry", fixture_path("tower.json"), "-o", out("p.json"),
                 "--set", "tick_budget=10"})
                .code,
            0);
  std::string geo = test::read_fixture("tower.json");
  geo.replace(geo.find("\"surface_height\": -1.5"), 22, "\"surface_height\": 0.5");
  std::ofstream(out("bad.json")) << geo;
  const CliRun r = cli({"plan", fixture_path("tower3.aml"), "--geometry", out("bad.json"), "-o", out("p2.json")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("planning failed for part 'b01'"), std::string::npos);
  EXPECT_NE(r.err.find("station"), std::string::npos);
}

TEST_F(CliTest, SimulateLegoVirtualTrace) {
  ASSERT_EQ(cli({"simulate", fixture_path("lego_overhang.aml"), "--geometry", fixture_path("lego_overhang.json"),
                 "--mode", "virtual", "--trace", out("t.jsonl")})
                .code,
            0);
  std::istringstream lines(slurp(out("t.jsonl")));
  std::vector<std::string> seq;
  for (std::string line; std::getline(lines, line);) {
    const auto j = nlohmann::json::parse(line);
    const std::string ev = j["event"];
    if (ev == "collision" || ev == "replan" || (ev == "connect" && j["part"] == "tB")) seq.push_back(ev);
  }
  EXPECT_EQ(seq, (std::vector<std::string>{"collision", "replan", "connect"}));
}

TEST_F(CliTest, SimulateSnapshotsAndDeterminism) {
  const std::vector<std::string> args{"simulate", fixture_path("tower3.aml"), "--geometry", fixture_path("tower.json"),
                                      "--mode", "both", "--trace", out("a.jsonl"), "--snapshots", out("snaps"),
                                      "--every", "500"};
  ASSERT_EQ(cli(args).code, 0);
  auto again = args;
  again[7] = out("b.jsonl");
  again[9] = out("snaps2");
  ASSERT_EQ(cli(again).code, 0);
  EXPECT_EQ(slurp(out("a.jsonl")), slurp(out("b.jsonl")));

  std::size_t count = 0;
  for (const auto& entry : fs::directory_iterator(out("snaps"))) {
    ++count;
    const auto snap = nlohmann::json::parse(slurp(entry.path()));
    EXPECT_EQ(snap["parts"].size(), 3u);
    EXPECT_TRUE(snap.contains("arm"));
    EXPECT_EQ(slurp(entry.path()), slurp(fs::path(out("snaps2")) / entry.path().filename()));
  }
  // Six connects plus the periodic ones.
  EXPECT_GT(count, 6u);
}

TEST_F(CliTest, SimulateFailureStillWritesTrace) {
  const CliRun r = cli({"simulate", fixture_path("tower3.aml"), "--geometry", fixture_path("tower.json"), "--mode",
                     "virtual", "--trace", out("t.jsonl"), "--set", "tick_budget=100"});
  EXPECT_EQ(r.code, 1);
  const std::string trace = slurp(out("t.jsonl"));
  EXPECT_NE(trace.find("\"event\":\"fail\""), std::string::npos);
}

}  // namespace
}  // namespace dtwin
