#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "idealgames/cli.hpp"

using namespace idealgames;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
  nlohmann::json json() const { return nlohmann::json::parse(out); }
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "idealgames");
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("idealgames_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }
  static std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
  void put(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, Classify) {
  const Result a = run({"classify", "--ideal", "density0", "--set", "ap(2,2)"});
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(a.json()["verdict"]["value"], "NotInIdeal");
  const Result b = run({"classify", "--ideal", "fin", "--set", "pts(square)", "-N", "2400"});
  EXPECT_EQ(b.code, 2);
  EXPECT_EQ(b.json()["verdict"]["value"], "Undecided");
  const Result c = run({"classify", "--ideal", "density0", "--set", "ap(2,2)", "--theta-low", "0.5", "--theta-high", "0.1"});
  EXPECT_EQ(c.code, 1);
  EXPECT_NE(c.err.find("error: "), std::string::npos);
}

TEST_F(Cli, ParseErrorsReportPosition) {
  const Result r = run({"classify", "--ideal", "fin", "--set", "union(odds,bogus)"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("at 1:12"), std::string::npos) << r.err;
  EXPECT_EQ(run({"nosuch"}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"classify", "--set", "odds"}).code, 1);  // --ideal missing
}

TEST_F(Cli, ClusterAndLimit) {
  const Result c = run({"cluster", "--seq", "alt(0,1)", "--ideal", "density0", "-N", "10000", "--eps", "0.05"});
  EXPECT_EQ(c.code, 0);
  EXPECT_EQ(c.json()["gamma"]["points"], nlohmann::json::parse("[0.0,1.0]"));
  const Result l = run({"limit", "--seq", "inv", "--ideal", "fin", "-N", "1000"});
  EXPECT_EQ(l.json()["lambda"]["points"], nlohmann::json::parse("[0.0]"));
  const Result u = run({"cluster", "--seq", "ratenum", "--ideal", "summable", "-N", "2000"});
  EXPECT_EQ(u.code, 2);
}

TEST_F(Cli, GameVerifyRoundTrip) {
  const std::string t = path("game.jsonl");
  const Result g = run({"game", "--ideal", "summable", "--strat-i", "random-jump:3", "--rounds", "50", "--out", t});
  EXPECT_EQ(g.code, 0);
  EXPECT_EQ(g.json()["verdict"]["value"], "NotInIdeal");
  const Result v = run({"verify", t});
  EXPECT_EQ(v.code, 0);
  EXPECT_TRUE(v.json()["ok"].get<bool>());
  // tamper with one round
  std::string text = slurp(t);
  const auto pos = text.find("\"k\":2");
  ASSERT_NE(pos, std::string::npos);
  text.replace(pos, 5, "\"k\":7");
  put("bad.jsonl", text);
  const Result bad = run({"verify", path("bad.jsonl")});
  EXPECT_EQ(bad.code, 1);
  EXPECT_FALSE(bad.json()["ok"].get<bool>());
  EXPECT_EQ(run({"game", "--ideal", "fin", "--strat-ii", "greedy"}).code, 1);
}

TEST_F(Cli, GenericWitnessThenPreserveAndSeries) {
  const std::string t = path("sigma.jsonl");
  const Result g = run({"generic", "--space", "sigma", "--mode", "witness", "--seq", "alt(0,1)", "--ideal", "density0",
                     "--rounds", "12", "--eta", "0", "--eta", "1", "--m-max", "3", "--out", t});
  EXPECT_EQ(g.code, 0) << g.err;
  EXPECT_EQ(g.json()["stem_length"], 8191);
  const Result p = run({"preserve", "--seq", "alt(0,1)", "--ideal", "density0", "--sigma", "stem@" + t, "-N", "10000"});
  EXPECT_EQ(p.code, 0) << p.err;
  EXPECT_EQ(p.json()["outcome"], "Preserved");
  EXPECT_EQ(run({"verify", t}).code, 0);

  const std::string s = path("series.jsonl");
  const Result st = run({"generic", "--mode", "series", "--seq", "ratenum-signed", "--ideal", "density0", "--strat-i",
                      "linear:20", "--oracle", "force", "--rounds", "10", "--out", s});
  // a 202-term stem is too short to settle density of the union of the F_k
  EXPECT_EQ(st.code, 2) << st.err;
  EXPECT_EQ(st.json()["stem_length"], 202);
  const Result se = run({"series", "--seq", "ratenum-signed", "--ideal", "density0", "--sigma", "stem@" + s});
  EXPECT_EQ(se.code, 0) << se.err;
  EXPECT_EQ(se.json()["bounded"]["verdict"]["value"], "InIdeal");
  EXPECT_EQ(run({"generic", "--space", "pi", "--mode", "series", "--seq", "inv", "--ideal", "fin"}).code, 1);
}

TEST_F(Cli, StemFileOfIntegers) {
  put("stem.txt", "2, 4 6\n8");
  const Result se = run({"series", "--seq", "1", "--ideal", "fin", "--sigma", "stem@" + path("stem.txt")});
  EXPECT_EQ(se.json()["horizon"], 4);
  put("junk.txt", "2 x");
  EXPECT_EQ(run({"series", "--seq", "1", "--ideal", "fin", "--sigma", "stem@" + path("junk.txt")}).code, 1);
  EXPECT_EQ(run({"series", "--seq", "1", "--ideal", "fin", "--sigma", "stem@" + path("missing.txt")}).code, 1);
}

TEST_F(Cli, PreserveNeedsExactlyOneMap) {
  EXPECT_EQ(run({"preserve", "--seq", "alt(0,1)", "--ideal", "fin"}).code, 1);
  EXPECT_EQ(run({"preserve", "--seq", "alt(0,1)", "--ideal", "fin", "--sigma", "identity", "--perm", "identity"}).code,
            1);
  const Result p = run({"preserve", "--seq", "alt(0,1)", "--ideal", "density0", "--perm", "swap-pairs", "-N", "1000"});
  EXPECT_EQ(p.json()["outcome"], "Preserved");
}

TEST_F(Cli, McReportsAndCsvAreReproducible) {
  const std::vector<std::string> args = {"mc",      "--seq", "alt(0,1)", "--ideal",   "fin", "--samples", "100",
                                         "-N",      "2000",  "--seed",   "42",        "--batch", "25"};
  auto with_out = [&](const std::string& tag) {
    auto a = args;
    a.insert(a.end(), {"--out", path(tag + ".json"), "--csv", path(tag + ".csv")});
    return run(a);
  };
  const Result a = with_out("a"), b = with_out("b");
  EXPECT_EQ(a.code, 0);
  EXPECT_EQ(slurp(path("a.json")), slurp(path("b.json")));
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(a.json()["fraction"], 1.0);
  EXPECT_EQ(slurp(path("a.csv")), "first,samples,hits,undecided\n0,25,25,0\n25,25,25,0\n50,25,25,0\n75,25,25,0\n");
  EXPECT_EQ(run({"mc", "--seq", "alt(0,1)", "--ideal", "fin"}).code, 1);  // --seed missing
  const Result cyl = run({"mc", "--cylinder", "1,3", "--samples", "2000", "--seed", "1"});
  EXPECT_EQ(cyl.code, 0);
  EXPECT_EQ(cyl.json()["expected"], 0.125);
}

TEST_F(Cli, RunConfig) {
  put("cfg.json", R"j({"command": "classify", "ideal": "fubini-odd", "set": "odds", "N": 500})j");
  const Result r = run({"run", "--config", path("cfg.json")});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.json()["verdict"]["value"], "NotInIdeal");
  put("gen.json", R"j({"command": "generic", "seq": "alt(0,1)", "ideal": "density0", "eta": [0, 1], "rounds": 4})j");
  EXPECT_EQ(run({"run", "--config", path("gen.json")}).code, 0);
  put("loop.json", R"j({"command": "run", "config": "loop.json"})j");
  EXPECT_EQ(run({"run", "--config", path("loop.json")}).code, 1);
  put("broken.json", "{");
  EXPECT_EQ(run({"run", "--config", path("broken.json")}).code, 1);
  EXPECT_EQ(cli::config_to_args({{"command", "mc"}, {"seed", 3}, {"cylinder", {1, 2}}, {"v", true}, {"w", false}}),
            (std::vector<std::string>{"idealgames", "mc", "--cylinder", "1", "--cylinder", "2", "--seed", "3", "-v"}));
}

TEST_F(Cli, HelpExitsCleanly) {
  const Result h = run({"--help"});
  EXPECT_EQ(h.code, 0);
  EXPECT_NE(h.out.find("classify"), std::string::npos);
}
