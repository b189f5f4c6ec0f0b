#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/algorithm/string.hpp>

#include "hierctl/artifacts.hpp"
#include "hierctl/config.hpp"
#include "hierctl/error.hpp"
#include "hierctl/experiments.hpp"

using namespace hierctl;
namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("hierctl_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(HIERCTL_BINARY) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kSmall =
    "[grid]\nn = 30\nm = 30\n\n[leader]\nladder = 1e-1, 1e-2, 1e-3, 1e-4\n\n"
    "[probe]\ntrials = 3\nhardy_trials = 5\nhardy_n = 50\nconvexity_samples = 3\n";

}  // namespace

TEST(ParseConfig, EmptyTextGivesDefaults) {
  const RunConfig cfg = parse_config_text("");
  const RunConfig def;
  EXPECT_EQ(canonical_text(cfg), canonical_text(def));
  EXPECT_EQ(cfg.n, 100u);
  EXPECT_EQ(cfg.m, 200u);
  EXPECT_DOUBLE_EQ(cfg.mu[0], 100.0);
  EXPECT_TRUE(validate(cfg).empty());
}

TEST(ParseConfig, ReadsSectionsAndIntervals) {
  const RunConfig cfg = parse_config_text(
      "[grid]\nn = 40\nalpha = 0.25\n[domains]\nomega = 0.15, 0.45\n[cost]\nmu2 = 250\n"
      "[carleman]\ns = 0.5\n[run]\nseed = 7\n");
  EXPECT_EQ(cfg.n, 40u);
  EXPECT_DOUBLE_EQ(cfg.alpha, 0.25);
  EXPECT_DOUBLE_EQ(cfg.omega.lo, 0.15);
  EXPECT_DOUBLE_EQ(cfg.omega.hi, 0.45);
  EXPECT_DOUBLE_EQ(cfg.mu[1], 250.0);
  EXPECT_DOUBLE_EQ(cfg.s, 0.5);
  EXPECT_EQ(cfg.seed, 7u);
}

TEST(ParseConfig, UnknownKeyAndBadValueCarryLineNumbers) {
  try {
    parse_config_text("[grid]\nn = 40\nwidth = 3\nm = many\n", "run.ini");
    FAIL();
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("run.ini:3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("width"), std::string::npos) << msg;
    EXPECT_NE(msg.find("run.ini:4"), std::string::npos) << msg;
  }
  EXPECT_THROW(parse_config_text("[grid\nn = 4\n"), ConfigError);
}

TEST(ParseConfig, FollowerOverlappingLeaderNamesBothFields) {
  try {
    parse_config_text("[domains]\nomega1 = 0.4, 0.7\n");
    FAIL();
  } catch (const ConfigError& e) {
    bool found = false;
    for (const auto& v : e.violations())
      found = found || (v.find("omega1") != std::string::npos && v.find("omega") != std::string::npos &&
                        v.find("overlap") != std::string::npos);
    EXPECT_TRUE(found) << e.what();
  }
}

TEST(ParseConfig, ObservationDisjointFromLeaderIsRejected) {
  try {
    parse_config_text("[domains]\nomega_d = 0.5, 0.58\n");
    FAIL();
  } catch (const ConfigError& e) {
    bool found = false;
    for (const auto& v : e.violations())
      found = found || (boost::starts_with(v, "omega_d, omega") && v.find("intersect") != std::string::npos);
    EXPECT_TRUE(found) << e.what();
  }
}

TEST(ParseConfig, RejectsNonPositiveQuantities) {
  EXPECT_THROW(parse_config_text("[cost]\nmu1 = 0\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[leader]\nepsilon = -1\n"), ConfigError);
  EXPECT_THROW(parse_config_text("[leader]\nladder = 1e-2, 1e-3, 1e-2, 1e-4\n"), ConfigError);
  EXPECT_THROW(parse_config("/nonexistent/run.ini"), IoError);
}

TEST(ConfigHash, IgnoresSeedAndOutputButNotPhysics) {
  RunConfig a, b;
  b.seed = 99;
  b.out_dir = "elsewhere";
  EXPECT_EQ(config_hash(a), config_hash(b));
  EXPECT_EQ(config_hash(a).size(), 64u);
  b.mu[0] = 101.0;
  EXPECT_NE(config_hash(a), config_hash(b));
}

TEST(Artifacts, CsvCarriesHashAndExactNumbers) {
  CsvTable t({"a", "b"}, "abc123", 5);
  t.add_row({0.1, std::int64_t{3}});
  t.add_row({std::string("max"), 0.0});
  const std::string text = t.render();
  EXPECT_TRUE(boost::starts_with(text, "# config_hash=abc123 seed=5\na,b\n"));
  EXPECT_NE(text.find("0.10000000000000001,3"), std::string::npos);
  EXPECT_NE(text.find("max,0"), std::string::npos);
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Artifacts, SvgEmbedsHash) {
  LogLogPlot p;
  p.x = {1e-2, 1e-3, 1e-4};
  p.y = {1.0, 0.3, 0.1};
  p.highlighted = {true, true, false};
  p.show_fit = true;
  p.slope = 0.5;
  p.config_hash = "feedbeef";
  const std::string svg = render_svg(p);
  EXPECT_TRUE(boost::starts_with(svg, "<?xml") || boost::starts_with(svg, "<svg"));
  EXPECT_NE(svg.find("feedbeef"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Artifacts, OutputDirectoryPrecedence) {
  ::unsetenv("HIERCTL_OUT_DIR");
  EXPECT_EQ(resolve_output_dir("", "fallback"), fs::path("fallback"));
  ::setenv("HIERCTL_OUT_DIR", "/tmp/from_env", 1);
  EXPECT_EQ(resolve_output_dir("", "fallback"), fs::path("/tmp/from_env"));
  EXPECT_EQ(resolve_output_dir("explicit", "fallback"), fs::path("explicit"));
  ::unsetenv("HIERCTL_OUT_DIR");
}

TEST(Artifacts, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = scratch("atomic");
  write_atomic(dir / "sub" / "x.csv", "1,2\n");
  EXPECT_EQ(read_file(dir / "sub" / "x.csv"), "1,2\n");
  std::size_t files = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "sub")) ++files;
  EXPECT_EQ(files, 1u);
}

TEST(Experiments, ForwardWithZeroDataWritesZeroTrajectory) {
  RunConfig cfg = parse_config_text(kSmall);
  cfg.y0_amplitude = 0.0;
  const fs::path dir = scratch("forward_zero");
  const ExperimentOutcome out = run_experiment("forward", cfg, dir);
  EXPECT_FALSE(out.artifacts.empty());
  for (const char* name : {"forward_y1.csv", "forward_y2.csv"}) {
    std::istringstream in(read_file(dir / name));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# config_hash=" + config_hash(cfg) + " seed=" + std::to_string(cfg.seed));
    std::getline(in, line);
    EXPECT_TRUE(boost::starts_with(line, "t,x="));
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      std::vector<std::string> cells;
      boost::split(cells, line, boost::is_any_of(","));
      ASSERT_EQ(cells.size(), cfg.n + 1);
      for (std::size_t c = 1; c < cells.size(); ++c) EXPECT_EQ(cells[c], "0");
      ++rows;
    }
    EXPECT_EQ(rows, cfg.m + 1);
  }
}

TEST(Experiments, LeaderSweepHasSlopeColumn) {
  const RunConfig cfg = parse_config_text(kSmall);
  const fs::path dir = scratch("sweep");
  run_experiment("leader-sweep", cfg, dir);
  const std::string csv = read_file(dir / "leader_sweep.csv");
  std::istringstream in(csv);
  std::string hash_line, header;
  std::getline(in, hash_line);
  std::getline(in, header);
  std::vector<std::string> cols;
  boost::split(cols, header, boost::is_any_of(","));
  EXPECT_NE(std::find(cols.begin(), cols.end(), "slope"), cols.end()) << header;
  EXPECT_NE(std::find(cols.begin(), cols.end(), "epsilon"), cols.end()) << header;
  EXPECT_NE(hash_line.find(config_hash(cfg)), std::string::npos);
  EXPECT_NE(read_file(dir / "leader_sweep.svg").find(config_hash(cfg)), std::string::npos);
  EXPECT_NE(read_file(dir / "leader-sweep_summary.json").find(config_hash(cfg)), std::string::npos);
}

TEST(Experiments, UnknownNameIsUsageError) {
  try {
    run_experiment("bogus", RunConfig{}, scratch("bogus"));
    FAIL();
  } catch (const UsageError& e) {
    EXPECT_EQ(exit_code_for(e), 2);
  }
}

TEST(Cli, UnknownExperimentExitsWithUsageClass) {
  const fs::path dir = scratch("cli_usage");
  EXPECT_EQ(run_cli("bogus --out " + dir.string(), dir / "err.txt"), 2);
  EXPECT_NE(read_file(dir / "err.txt").find("class=usage"), std::string::npos);
  EXPECT_EQ(run_cli("", dir / "err2.txt"), 2);
}

TEST(Cli, InvalidConfigReportsFieldsAndClass) {
  const fs::path dir = scratch("cli_config");
  {
    std::ofstream f(dir / "bad.ini");
    f << "[domains]\nomega1 = 0.4, 0.7\n";
  }
  const int rc = run_cli("forward --config " + (dir / "bad.ini").string() + " --out " + dir.string(),
                         dir / "err.txt");
  EXPECT_EQ(rc, exit_code_for(ConfigError("x")));
  EXPECT_NE(rc, 0);
  EXPECT_NE(rc, 2);
  const std::string err = read_file(dir / "err.txt");
  EXPECT_NE(err.find("class=config"), std::string::npos) << err;
  EXPECT_NE(err.find("omega1"), std::string::npos) << err;
}

TEST(Cli, EnvironmentSetsOutputDirectoryAndSeedOverrides) {
  const fs::path dir = scratch("cli_env");
  {
    std::ofstream f(dir / "run.ini");
    f << kSmall;
  }
  const fs::path out = dir / "env_out";
  ::setenv("HIERCTL_OUT_DIR", out.c_str(), 1);
  const int rc = run_cli("forward -q --seed 17 --config " + (dir / "run.ini").string(), dir / "err.txt");
  ::unsetenv("HIERCTL_OUT_DIR");
  ASSERT_EQ(rc, 0) << read_file(dir / "err.txt");
  const std::string csv = read_file(out / "forward_y1.csv");
  EXPECT_NE(csv.find("seed=17"), std::string::npos);
}
