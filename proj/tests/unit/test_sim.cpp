#include <doctest.h>

#include <fstream>
#include <numeric>
#include <sstream>

#include "helpers.hpp"
#include "leosim/sim.hpp"

using namespace leosim;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig short_config(std::size_t slots = 30) {
  auto cfg = testutil::fixture_config();
  cfg.grid.num_slots = slots;
  return cfg;
}

}  // namespace

TEST_CASE("episode: zero traffic keeps every queue empty") {
  auto cfg = short_config();
  cfg.traffic_calibration = 0.0;
  const Scenario sc(cfg);
  for (const char* name : {"bp", "lg-bp", "maxweight", "equalize", "no-isl", "random", "rl-untrained"}) {
    auto pol = build_policy(sc, cfg, name);
    const auto m = run_episode(sc, *pol, 1);
    CHECK(m.num_slots() == cfg.grid.num_slots);
    for (const auto& row : m.queue_trace)
      for (auto v : row) CHECK(v == 0);
  }
}

TEST_CASE("episode: no gateways and no ISL accumulates every arrival") {
  auto cfg = short_config();
  const auto dir = testutil::temp_dir("nogw");
  std::ofstream(dir / "gw.csv") << "# none\n";
  cfg.gateway_file = dir / "gw.csv";
  const Scenario sc(cfg);
  auto pol = build_policy(sc, cfg, "no-isl");
  const auto m = run_episode(sc, *pol, 2);
  const double cumulative = static_cast<double>(m.total_arrivals()) / static_cast<double>(sc.num_satellites());
  CHECK(m.mean_q.back() == cumulative);
  CHECK(m.total_offloaded() == 0);
}

TEST_CASE("episode: same seed, same series; ledger closes") {
  const auto cfg = short_config(60);
  const Scenario sc(cfg);
  for (const char* name : {"lg-bp", "random"}) {
    auto pol = build_policy(sc, cfg, name);
    const auto a = run_episode(sc, *pol, 9);
    const auto b = run_episode(sc, *pol, 9);
    CHECK(a.mean_q == b.mean_q);
    CHECK(a.queue_trace == b.queue_trace);
    CHECK(a.arrivals == b.arrivals);
    const auto& last = a.queue_trace.back();
    CHECK(a.total_arrivals() == a.total_offloaded() + std::accumulate(last.begin(), last.end(), std::int64_t{0}));
    for (std::size_t t = 0; t < a.num_slots(); ++t) {
      CHECK(a.mean_q[t] >= 0);
      CHECK(a.max_q[t] >= 0);
    }
  }
}

TEST_CASE("episode: policies share environment draws for a seed") {
  const auto cfg = short_config();
  const Scenario sc(cfg);
  auto a = build_policy(sc, cfg, "bp");
  auto b = build_policy(sc, cfg, "no-isl");
  CHECK(run_episode(sc, *a, 5).arrivals == run_episode(sc, *b, 5).arrivals);
}

TEST_CASE("experiment: seeds, aggregation, single-seed identity") {
  auto cfg = short_config();
  const Scenario sc(cfg);
  auto pol = build_policy(sc, cfg, "lg-bp");
  const auto r5 = run_experiment(sc, *pol, {1, 2, 3, 4, 5});
  CHECK(r5.runs.size() == 5);
  CHECK(r5.aggregate.mean_q_mean.size() == cfg.grid.num_slots);
  double avg = 0;
  for (const auto& run : r5.runs) avg += run.time_average_mean();
  CHECK(r5.aggregate.mean_queue.mean == doctest::Approx(avg / 5));

  const auto r1 = run_experiment(sc, *pol, {3});
  CHECK(r1.aggregate.mean_q_mean == r1.runs[0].mean_q);
  for (double s : r1.aggregate.mean_q_std) CHECK(s == 0.0);
  CHECK(r1.aggregate.mean_queue.mean == doctest::Approx(r1.runs[0].time_average_mean()));
  CHECK_THROWS_AS(run_experiment(sc, *pol, {}), ConfigError);
}

TEST_CASE("sweep over M yields one row per value") {
  auto cfg = short_config(10);
  cfg.seeds = {1, 2};
  const auto pts = run_sweep(cfg, SweepKind::NeighborCount, default_sweep_values(SweepKind::NeighborCount));
  REQUIRE(pts.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(pts[i].value == std::to_string(i + 1));
    CHECK(pts[i].report.runs.size() == 2);
  }
  CHECK_THROWS_AS(parse_sweep_kind("Z"), ConfigError);
  const auto gw = run_sweep(cfg, SweepKind::GatewayPreset, {"hybrid", "europe"});
  CHECK(gw.size() == 2);
  const auto k = run_sweep(cfg, SweepKind::SatelliteCount, {"5", "20"});
  CHECK(k[1].report.runs[0].queue_trace[0].size() == 20);
  const auto c = run_sweep(cfg, SweepKind::Constellation, {testutil::data_path("iridium_like.tle").string()});
  CHECK(c.size() == 1);
}

TEST_CASE("outputs: file contract and byte determinism") {
  auto cfg = short_config(12);
  cfg.seeds = {4, 6};
  const auto dir = testutil::temp_dir("emit");
  const auto reports = compare_policies(cfg, {"bp", "no-isl"});
  emit_outputs(cfg, reports, dir);
  for (const char* f : {"config.json", "summary.json", "bp_seed4.csv", "bp_seed6.csv", "bp_ecdf.csv",
                        "no-isl_seed4.csv", "no-isl_seed6_queues.csv", "no-isl_ecdf.csv"})
    CHECK(std::filesystem::exists(dir / f));
  const auto first = slurp(dir / "bp_seed4.csv");
  CHECK(first.rfind("slot,mean_q,max_q,arrivals,offloaded\n", 0) == 0);
  std::size_t lines = std::count(first.begin(), first.end(), '\n');
  CHECK(lines == 13);
  const auto summary = slurp(dir / "summary.json");

  emit_outputs(cfg, reports, dir);
  CHECK(slurp(dir / "bp_seed4.csv") == first);
  CHECK(slurp(dir / "summary.json") == summary);

  // the ECDF ends at 1
  const auto ecdf = slurp(dir / "bp_ecdf.csv");
  CHECK(ecdf.substr(ecdf.size() - 3) == ",1\n");

  // config snapshot loads back to the same configuration
  const auto back = load_config(dir / "config.json");
  CHECK(config_to_json(back) == config_to_json(cfg));

  const auto empty_dir = testutil::temp_dir("emit_empty");
  ExperimentReport empty;
  empty.policy = "bp";
  emit_outputs(cfg, {empty}, empty_dir);
  CHECK(slurp(empty_dir / "bp_ecdf.csv") == "value,cumulative_fraction\n");
}

TEST_CASE("training log output") {
  const auto dir = testutil::temp_dir("tlog");
  std::vector<EpisodeLog> log{{0, 11, -3.5, 1.0, 0.25, 0.5, 7}, {1, 12, 2.0, 0.5, 0.0, 0.0, 0}};
  emit_training_log(log, dir / "t.csv");
  CHECK(slurp(dir / "t.csv") ==
        "episode,env_seed,reward,epsilon,loss_mean,loss_max,train_steps\n0,11,-3.5,1,0.25,0.5,7\n1,12,2,0.5,0,0,0\n");
}
