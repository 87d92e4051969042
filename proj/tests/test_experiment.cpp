#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "hmac/experiment.hpp"

using namespace hmac;

namespace {

ExperimentPlan parse(std::vector<std::string> args) {
  args.insert(args.begin(), "hmac_sim");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return parse_args(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("hmac_experiment_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("no arguments gives the full default sweep") {
  const ExperimentPlan p = parse({});
  CHECK(p.run_count() == 100);
  CHECK(p.node_counts == std::vector<int>{5, 10, 25, 50, 100});
  CHECK(p.seeds.size() == 5);
  CHECK(p.format == OutputFormat::csv);
  CHECK_FALSE(p.trace);
  CHECK(p.configs().size() == 100);
}

TEST_CASE("direct flag mapping") {
  const ExperimentPlan p = parse({"--protocol", "hmac", "--scenario", "2", "--nodes", "50", "--seeds", "5"});
  CHECK(p.run_count() == 5);
  CHECK(p.protocols == std::vector<Protocol>{Protocol::hmac});
  for (const auto& c : p.configs()) {
    CHECK(c.protocol == Protocol::hmac);
    CHECK(c.scenario == 2);
    CHECK(c.node_count == 50);
  }
  CHECK(p.configs().back().seed == 5);

  const ExperimentPlan q = parse({"--protocol", "both", "--nodes", "5,10", "--seed-list", "7,9", "--format", "json",
                                  "--trace", "--out", "x", "--jobs", "3", "--duration", "1000"});
  CHECK(q.protocols.size() == 2);
  CHECK(q.node_counts == std::vector<int>{5, 10});
  CHECK(q.seeds == std::vector<std::uint64_t>{7, 9});
  CHECK(q.format == OutputFormat::json);
  CHECK(q.trace);
  CHECK(q.out_dir == "x");
  CHECK(q.jobs == 3);
  CHECK(q.configs().front().duration == 1000);
}

TEST_CASE("invalid values are usage errors") {
  CHECK_THROWS_AS(parse({"--nodes", "0"}), UsageError);
  CHECK_THROWS_AS(parse({"--nodes", "ten"}), UsageError);
  CHECK_THROWS_AS(parse({"--scenario", "3"}), UsageError);
  CHECK_THROWS_AS(parse({"--protocol", "dcf"}), UsageError);
  CHECK_THROWS_AS(parse({"--seeds", "0"}), UsageError);
  CHECK_THROWS_AS(parse({"--seeds", "3", "--seed-list", "1,2"}), UsageError);
  CHECK_THROWS_AS(parse({"--format", "xml"}), UsageError);
  CHECK_THROWS_AS(parse({"--duration", "-4"}), UsageError);
  CHECK_THROWS_AS(parse({"--bogus"}), UsageError);
  CHECK_THROWS_AS(parse({"--config", "/nonexistent/hmac.cfg"}), UsageError);
  CHECK_THROWS_AS(parse({"--help"}), HelpRequested);
}

TEST_CASE("config file precedence and unknown keys") {
  const auto dir = scratch("config");
  const auto cfg = dir / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "# sweep\nprotocol = edca\nnode_count = 5,25\nseed = 3\nduration = 5000\nalpha = 0.2\n";
  }
  const ExperimentPlan p = parse({"--config", cfg.string()});
  CHECK(p.protocols == std::vector<Protocol>{Protocol::edca});
  CHECK(p.node_counts == std::vector<int>{5, 25});
  CHECK(p.seeds == std::vector<std::uint64_t>{3});
  CHECK(p.configs().front().duration == 5000);
  CHECK(p.configs().front().alpha == 0.2);

  const ExperimentPlan q = parse({"--config", cfg.string(), "--nodes", "10", "--duration", "7000"});
  CHECK(q.node_counts == std::vector<int>{10});
  CHECK(q.configs().front().duration == 7000);
  CHECK(q.configs().front().alpha == 0.2);

  {
    std::ofstream out(cfg);
    out << "alpha = 0.2\nbanana = 4\n";
  }
  try {
    parse({"--config", cfg.string()});
    FAIL("expected a usage error");
  } catch (const UsageError& e) {
    CHECK(std::string(e.what()).find("banana") != std::string::npos);
  }
  {
    std::ofstream out(cfg);
    out << "alpha = 1.5\n";
  }
  CHECK_THROWS_AS(parse({"--config", cfg.string()}), UsageError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("mean and sample standard deviation") {
  const Stat s = mean_sd({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  CHECK(s.mean == 5.0);
  CHECK(s.sd == doctest::Approx(std::sqrt(32.0 / 7.0)));
  CHECK(s.n == 8);
  CHECK(mean_sd({3.0}).sd == 0.0);
  CHECK(mean_sd({}).n == 0);
}

namespace {

RunMetrics synthetic(Protocol p, int scenario, int nodes, std::uint64_t seed, std::int64_t base) {
  RunMetrics r;
  r.protocol = p;
  r.scenario = scenario;
  r.node_count = nodes;
  r.seed = seed;
  r.wall_duration = 1'000'000;
  for (int c = 0; c < kNumClasses; ++c) {
    r.classes[c].generated = 100;
    r.classes[c].delivered = base / 1000 + c;
    r.classes[c].bits_delivered = base * (kNumClasses - c);
  }
  if (p == Protocol::edca) r.classes[3].bits_delivered = 0;
  r.measured_a_col = 0.1 * static_cast<double>(seed);
  r.scenario_target_met = !(scenario == 2 && seed == 2);
  return r;
}

}  // namespace

TEST_CASE("summary and comparison rows") {
  std::vector<RunMetrics> runs;
  for (Protocol p : {Protocol::edca, Protocol::hmac}) {
    for (int s : {1, 2}) {
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        runs.push_back(synthetic(p, s, 10, seed, 10'000 * static_cast<std::int64_t>(seed)));
      }
    }
  }
  const auto summary = summarize(runs);
  REQUIRE(summary.size() == 4 * 4);
  const SummaryRow& up = summary[0];
  CHECK(up.protocol == Protocol::edca);
  CHECK(up.scenario == 1);
  CHECK(up.cls == 0);
  CHECK(up.throughput.n == 3);
  CHECK(up.throughput.mean == doctest::Approx(80'000.0));
  CHECK(up.throughput.sd == doctest::Approx(40'000.0));
  CHECK(up.a_col.mean == doctest::Approx(0.2));
  CHECK_FALSE(up.target_unmet);
  CHECK(summary[4].scenario == 2);
  CHECK(summary[4].target_unmet);

  const auto cmp = compare_protocols(summary);
  REQUIRE(cmp.size() == 2);
  CHECK(cmp[0].scenario == 1);
  CHECK(cmp[0].edca_aggregate == doctest::Approx(180'000.0));
  CHECK(cmp[0].hmac_aggregate == doctest::Approx(200'000.0));
  CHECK(cmp[0].improvement_pct == doctest::Approx(100.0 / 9.0));
  CHECK(cmp[0].edca_starved[3]);
  CHECK_FALSE(cmp[0].hmac_starved[3]);

  const std::string text = summary_csv(summary);
  CHECK(text.find("scenario target unmet") != std::string::npos);
  CHECK(std::count(text.begin(), text.end(), '\n') == 17);
  const std::string ctext = comparison_csv(cmp);
  CHECK(std::count(ctext.begin(), ctext.end(), '\n') == 3);
  CHECK(ctext.find(",LP\n") != std::string::npos);
}

TEST_CASE("summary means are recomputable from the run rows") {
  std::vector<RunMetrics> runs;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    runs.push_back(synthetic(Protocol::hmac, 1, 5, seed, 7'919 * static_cast<std::int64_t>(seed * seed)));
  }
  const auto rows = parse_run_csv(to_csv(runs));
  const auto summary = summarize(runs);
  for (int c = 0; c < kNumClasses; ++c) {
    double sum = 0.0, ratio = 0.0;
    for (const auto& r : rows) {
      if (r.cls != class_name(c)) continue;
      sum += r.throughput_bps;
      ratio += *r.pdr;
    }
    CHECK(summary[c].throughput.mean == doctest::Approx(sum / 4.0).epsilon(1e-12));
    CHECK(summary[c].pdr.mean == doctest::Approx(ratio / 4.0).epsilon(1e-12));
  }
}

TEST_CASE("run ids") {
  RunMetrics r;
  r.protocol = Protocol::hmac;
  r.scenario = 2;
  r.node_count = 25;
  r.seed = 4;
  CHECK(run_id(r) == "hmac-s2-n25-seed4");
}

TEST_CASE("execute writes complete, deterministic outputs") {
  const auto dir = scratch("execute");
  ExperimentPlan plan = parse({"--nodes", "5,10", "--seeds", "3", "--duration", "2000000", "--trace"});
  std::ostringstream log;

  plan.out_dir = dir / "a";
  plan.jobs = 2;
  const ExecuteResult first = execute(plan, log);
  CHECK(first.exit_code == 0);
  CHECK(first.failures.empty());
  CHECK(first.runs.size() == 24);
  CHECK(first.summary.size() == 8 * 4);
  CHECK(first.comparison.size() == 4);

  const auto rows = parse_run_csv(slurp(plan.out_dir / "runs.csv"));
  CHECK(rows.size() == 2 * 2 * 2 * 3 * 4);
  CHECK(std::filesystem::exists(plan.out_dir / "summary.csv"));
  CHECK(std::filesystem::exists(plan.out_dir / "comparison.csv"));
  CHECK(std::filesystem::exists(plan.out_dir / "trace" / "hmac-s2-n10-seed3.log"));
  CHECK(std::filesystem::file_size(plan.out_dir / "trace" / "edca-s1-n5-seed1.log") > 0);

  plan.out_dir = dir / "b";
  plan.jobs = 1;
  execute(plan, log);
  for (const char* f : {"runs.csv", "summary.csv", "comparison.csv", "trace/hmac-s1-n5-seed2.log"}) {
    CHECK(slurp(dir / "a" / f) == slurp(dir / "b" / f));
  }

  plan.out_dir = dir / "c";
  plan.format = OutputFormat::json;
  plan.trace = false;
  execute(plan, log);
  CHECK(std::filesystem::exists(plan.out_dir / "runs.json"));
  CHECK_FALSE(std::filesystem::exists(plan.out_dir / "trace"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("a failing run is reported after the others complete") {
  const auto dir = scratch("failure");
  ExperimentPlan plan;
  plan.protocols = {Protocol::hmac};
  plan.scenarios = {1};
  plan.node_counts = {5};
  plan.seeds = {1, 2};
  plan.overrides = {{"duration", "100000"}, {"channel_mode", "interference_graph"}};
  plan.out_dir = dir;
  std::ostringstream log;
  const ExecuteResult r = execute(plan, log);
  CHECK(r.exit_code != 0);
  CHECK(r.failures.size() == 2);
  CHECK(log.str().find("run failed") != std::string::npos);
  std::filesystem::remove_all(dir);
}
