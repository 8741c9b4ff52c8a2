#include "leosim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace leosim {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

SummaryStat summarize(const std::vector<double>& xs) {
  SummaryStat s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void close_out(std::ofstream& out, const std::filesystem::path& path) {
  out.close();
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::vector<std::int64_t> MetricsSeries::ecdf_samples() const {
  std::vector<std::int64_t> all;
  for (const auto& row : queue_trace) all.insert(all.end(), row.begin(), row.end());
  std::sort(all.begin(), all.end());
  return all;
}

double MetricsSeries::time_average_mean() const {
  if (mean_q.empty()) return 0.0;
  return std::accumulate(mean_q.begin(), mean_q.end(), 0.0) / static_cast<double>(mean_q.size());
}

double MetricsSeries::time_average_max() const {
  if (max_q.empty()) return 0.0;
  double s = 0.0;
  for (auto v : max_q) s += static_cast<double>(v);
  return s / static_cast<double>(max_q.size());
}

std::int64_t MetricsSeries::total_arrivals() const {
  return std::accumulate(arrivals.begin(), arrivals.end(), std::int64_t{0});
}

std::int64_t MetricsSeries::total_offloaded() const {
  return std::accumulate(offloaded.begin(), offloaded.end(), std::int64_t{0});
}

double MetricsSeries::total_lg_capacity() const {
  return std::accumulate(lg_capacity.begin(), lg_capacity.end(), 0.0);
}

MetricsSeries run_episode(const Scenario& sc, SchedulingPolicy& policy, std::uint64_t seed) {
  const std::size_t n = sc.num_satellites();
  Rng env_rng(derive_seed(seed, kEnvironmentStream));
  Rng pol_rng(derive_seed(seed, kPolicyStream));
  policy.begin_episode(n);

  MetricsSeries m;
  m.seed = seed;
  QueueState q{std::vector<std::int64_t>(n, 0), 0};
  for (std::size_t t = 0; t < sc.num_slots(); ++t) {
    try {
      const SlotDraws draws = draw_slot(sc, t, env_rng);
      const PolicyInput in = make_policy_input(sc, t, q, draws);
      const LinkSchedule sched = realize_schedule(in, policy.demand(in, pol_rng));
      check_schedule(in.links, sched, q, in.isl_caps);
      const SlotFlows flows = compute_flows(in.links, sched, draws.arrivals);
      q = step_queues(q, flows);
      q.slot = t + 1;
      policy.observe(flows);

      m.mean_q.push_back(q.mean());
      m.max_q.push_back(q.max());
      m.arrivals.push_back(std::accumulate(flows.arrivals.begin(), flows.arrivals.end(), std::int64_t{0}));
      m.offloaded.push_back(std::accumulate(flows.sent_gw.begin(), flows.sent_gw.end(), std::int64_t{0}));
      m.lg_capacity.push_back(std::accumulate(draws.lg_caps.begin(), draws.lg_caps.end(), 0.0));
      m.queue_trace.push_back(q.q);
    } catch (const std::exception& e) {
      throw SimulationError("policy " + policy.name() + ", seed " + std::to_string(seed) + ", slot " +
                            std::to_string(t) + ": " + e.what());
    }
  }
  return m;
}

std::unique_ptr<SchedulingPolicy> make_residual_policy(const Scenario& sc, const RunConfig& cfg, TrainedAgent agent) {
  const FeatureContext ctx{sc.isl_packet_scale(), sc.lg_packet_scale(), LgBpWeight{cfg.policy_params.lg_bp_weight},
                           1.0};
  return std::make_unique<ResidualPolicy>(std::move(agent.qnet), agent.queue_scale, ctx);
}

std::unique_ptr<SchedulingPolicy> build_policy(const Scenario& sc, const RunConfig& cfg, const std::string& name,
                                               const LogSink& log) {
  if (is_baseline_policy(name)) return make_policy(name, cfg.policy_params);
  if (name == "rl-untrained") {
    std::vector<std::size_t> sizes{kLinkFeatureDim};
    for (std::size_t i = 0; i < cfg.rl.hidden_layers; ++i) sizes.push_back(cfg.rl.hidden_units);
    sizes.push_back(2);
    Rng rng(derive_seed(cfg.rl.train_seed, kTrainingStream));
    return make_residual_policy(sc, cfg, TrainedAgent{Mlp(sizes, rng, true), 1.0, {}});
  }
  if (name == "rl-residual") {
    if (!cfg.rl.checkpoint.empty()) {
      auto agent = load_checkpoint(cfg.rl.checkpoint);
      if (log) log("loaded checkpoint " + cfg.rl.checkpoint.string());
      return make_residual_policy(sc, cfg, std::move(agent));
    }
    if (log) log("no checkpoint configured; training for " + std::to_string(cfg.rl.episodes) + " episodes");
    return make_residual_policy(sc, cfg, train(sc, cfg));
  }
  throw ConfigError("unknown policy '" + name + "'");
}

Aggregate aggregate_runs(const std::vector<MetricsSeries>& runs) {
  Aggregate a;
  if (runs.empty()) return a;
  const std::size_t slots = runs.front().num_slots();
  for (const auto& r : runs)
    if (r.num_slots() != slots) throw std::invalid_argument("aggregate_runs: runs differ in length");
  for (std::size_t t = 0; t < slots; ++t) {
    std::vector<double> mq, xq;
    for (const auto& r : runs) {
      mq.push_back(r.mean_q[t]);
      xq.push_back(static_cast<double>(r.max_q[t]));
    }
    const auto sm = summarize(mq), sx = summarize(xq);
    a.mean_q_mean.push_back(sm.mean);
    a.mean_q_std.push_back(sm.std);
    a.max_q_mean.push_back(sx.mean);
    a.max_q_std.push_back(sx.std);
  }
  std::vector<double> mean_q, max_q, arr, off;
  double arr_total = 0.0, cap_total = 0.0;
  for (const auto& r : runs) {
    mean_q.push_back(r.time_average_mean());
    max_q.push_back(r.time_average_max());
    arr.push_back(static_cast<double>(r.total_arrivals()));
    off.push_back(static_cast<double>(r.total_offloaded()));
    arr_total += arr.back();
    cap_total += r.total_lg_capacity();
  }
  a.mean_queue = summarize(mean_q);
  a.max_queue = summarize(max_q);
  a.arrivals = summarize(arr);
  a.offloaded = summarize(off);
  a.load_ratio = cap_total > 0.0 ? arr_total / cap_total : 0.0;
  return a;
}

ExperimentReport run_experiment(const Scenario& sc, SchedulingPolicy& policy, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  ExperimentReport r;
  r.policy = policy.name();
  for (auto s : seeds) r.runs.push_back(run_episode(sc, policy, s));
  r.aggregate = aggregate_runs(r.runs);
  return r;
}

std::vector<ExperimentReport> compare_policies(const RunConfig& cfg, const std::vector<std::string>& policies,
                                               const LogSink& log) {
  if (policies.empty()) throw ConfigError("no policies to compare");
  const Scenario sc(cfg);
  std::vector<ExperimentReport> out;
  for (const auto& name : policies) {
    auto policy = build_policy(sc, cfg, name, log);
    out.push_back(run_experiment(sc, *policy, cfg.seeds));
    out.back().policy = name;
  }
  return out;
}

SweepKind parse_sweep_kind(const std::string& name) {
  if (name == "M" || name == "neighbors") return SweepKind::NeighborCount;
  if (name == "K" || name == "satellites") return SweepKind::SatelliteCount;
  if (name == "constellation") return SweepKind::Constellation;
  if (name == "gateways" || name == "gateway") return SweepKind::GatewayPreset;
  throw ConfigError("unknown sweep '" + name + "' (use M, K, constellation, gateways)");
}

std::string sweep_kind_name(SweepKind kind) {
  switch (kind) {
    case SweepKind::NeighborCount: return "M";
    case SweepKind::SatelliteCount: return "K";
    case SweepKind::Constellation: return "constellation";
    case SweepKind::GatewayPreset: return "gateways";
  }
  return "?";
}

std::vector<std::string> default_sweep_values(SweepKind kind) {
  switch (kind) {
    case SweepKind::NeighborCount: return {"1", "2", "3", "4", "5"};
    case SweepKind::SatelliteCount: return {"5", "10", "15", "20"};
    case SweepKind::Constellation: return {};
    case SweepKind::GatewayPreset: return {"hybrid", "north-america", "europe", "asia"};
  }
  return {};
}

namespace {

std::size_t parse_count(const std::string& s, const char* what) {
  std::size_t pos = 0;
  unsigned long v = 0;
  try {
    v = std::stoul(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v == 0) throw ConfigError(std::string("bad ") + what + " value '" + s + "'");
  return v;
}

RunConfig apply_sweep(RunConfig cfg, SweepKind kind, const std::string& value) {
  switch (kind) {
    case SweepKind::NeighborCount: cfg.neighbors.max_neighbors = parse_count(value, "M"); break;
    case SweepKind::SatelliteCount: cfg.num_satellites = parse_count(value, "K"); break;
    case SweepKind::Constellation: cfg.tle_file = value; break;
    case SweepKind::GatewayPreset: cfg.gateway_preset = value; break;
  }
  cfg.validate();
  return cfg;
}

}  // namespace

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, SweepKind kind, const std::vector<std::string>& values,
                                  const LogSink& log) {
  if (values.empty()) throw ConfigError("sweep " + sweep_kind_name(kind) + " needs at least one value");
  std::vector<SweepPoint> out;
  for (const auto& v : values) {
    if (log) log(sweep_kind_name(kind) + " = " + v);
    const RunConfig point = apply_sweep(cfg, kind, v);
    auto reports = compare_policies(point, {point.policy}, log);
    out.push_back({v, std::move(reports.front())});
  }
  return out;
}

nlohmann::json summary_json(const ExperimentReport& r) {
  const Aggregate& a = r.aggregate;
  auto stat = [](const SummaryStat& s) { return nlohmann::json{{"mean", s.mean}, {"std", s.std}}; };
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& run : r.runs) {
    seeds.push_back({{"seed", run.seed},
                     {"mean_queue", run.time_average_mean()},
                     {"max_queue", run.time_average_max()},
                     {"arrivals", run.total_arrivals()},
                     {"offloaded", run.total_offloaded()},
                     {"final_total_queue",
                      run.queue_trace.empty()
                          ? std::int64_t{0}
                          : std::accumulate(run.queue_trace.back().begin(), run.queue_trace.back().end(),
                                            std::int64_t{0})}});
  }
  return {{"policy", r.policy},
          {"num_seeds", r.runs.size()},
          {"mean_queue", stat(a.mean_queue)},
          {"max_queue", stat(a.max_queue)},
          {"arrivals", stat(a.arrivals)},
          {"offloaded", stat(a.offloaded)},
          {"load_ratio", a.load_ratio},
          {"per_slot", {{"mean_q_mean", a.mean_q_mean},
                        {"mean_q_std", a.mean_q_std},
                        {"max_q_mean", a.max_q_mean},
                        {"max_q_std", a.max_q_std}}},
          {"seeds", seeds}};
}

void emit_outputs(const RunConfig& cfg, const std::vector<ExperimentReport>& reports,
                  const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  {
    const auto path = dir / "config.json";
    auto out = open_out(path);
    out << config_to_json(cfg).dump(2) << '\n';
    close_out(out, path);
  }

  nlohmann::json summary = nlohmann::json::array();
  for (const auto& r : reports) {
    for (const auto& run : r.runs) {
      const auto stem = r.policy + "_seed" + std::to_string(run.seed);
      const auto path = dir / (stem + ".csv");
      auto out = open_out(path);
      out << "slot,mean_q,max_q,arrivals,offloaded\n";
      for (std::size_t t = 0; t < run.num_slots(); ++t)
        out << t << ',' << fmt(run.mean_q[t]) << ',' << run.max_q[t] << ',' << run.arrivals[t] << ','
            << run.offloaded[t] << '\n';
      close_out(out, path);

      const auto qpath = dir / (stem + "_queues.csv");
      auto qout = open_out(qpath);
      qout << "slot";
      const std::size_t n = run.queue_trace.empty() ? 0 : run.queue_trace.front().size();
      for (std::size_t k = 0; k < n; ++k) qout << ",sat" << k;
      qout << '\n';
      for (std::size_t t = 0; t < run.queue_trace.size(); ++t) {
        qout << t;
        for (auto v : run.queue_trace[t]) qout << ',' << v;
        qout << '\n';
      }
      close_out(qout, qpath);
    }

    std::vector<std::int64_t> pooled;
    for (const auto& run : r.runs) {
      auto s = run.ecdf_samples();
      pooled.insert(pooled.end(), s.begin(), s.end());
    }
    std::sort(pooled.begin(), pooled.end());
    const auto epath = dir / (r.policy + "_ecdf.csv");
    auto eout = open_out(epath);
    eout << "value,cumulative_fraction\n";
    for (std::size_t i = 0; i < pooled.size(); ++i) {
      if (i + 1 < pooled.size() && pooled[i + 1] == pooled[i]) continue;
      eout << pooled[i] << ',' << fmt(static_cast<double>(i + 1) / static_cast<double>(pooled.size())) << '\n';
    }
    close_out(eout, epath);
    summary.push_back(summary_json(r));
  }

  const auto spath = dir / "summary.json";
  auto sout = open_out(spath);
  sout << summary.dump(2) << '\n';
  close_out(sout, spath);
}

void emit_sweep(const RunConfig& cfg, SweepKind kind, const std::vector<SweepPoint>& points,
                const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  const auto name = sweep_kind_name(kind);
  const auto path = dir / ("sweep_" + name + ".csv");
  auto out = open_out(path);
  out << name << ",policy,mean_queue,mean_queue_std,max_queue,max_queue_std,arrivals,offloaded,load_ratio\n";
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const auto& a = p.report.aggregate;
    out << p.value << ',' << p.report.policy << ',' << fmt(a.mean_queue.mean) << ',' << fmt(a.mean_queue.std) << ','
        << fmt(a.max_queue.mean) << ',' << fmt(a.max_queue.std) << ',' << fmt(a.arrivals.mean) << ','
        << fmt(a.offloaded.mean) << ',' << fmt(a.load_ratio) << '\n';
    std::string sub = std::filesystem::path(p.value).stem().string();
    if (sub.empty()) sub = std::to_string(i);
    emit_outputs(apply_sweep(cfg, kind, p.value), {p.report}, dir / (name + "_" + sub));
  }
  close_out(out, path);
}

void emit_training_log(const std::vector<EpisodeLog>& log, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "episode,env_seed,reward,epsilon,loss_mean,loss_max,train_steps\n";
  for (const auto& e : log)
    out << e.episode << ',' << e.env_seed << ',' << fmt(e.reward) << ',' << fmt(e.epsilon) << ','
        << fmt(e.loss_mean) << ',' << fmt(e.loss_max) << ',' << e.train_steps << '\n';
  close_out(out, path);
}

}  // namespace leosim
