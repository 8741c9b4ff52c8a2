#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leosim/config.hpp"
#include "leosim/environment.hpp"
#include "leosim/orbits.hpp"
#include "leosim/rl.hpp"
#include "leosim/sim.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Overrides {
  std::string config;
  std::vector<std::uint64_t> seeds;
  std::string out;
  std::string policy;
};

leosim::RunConfig load(const Overrides& o) {
  auto cfg = leosim::load_config(o.config);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.out.empty()) cfg.output_dir = o.out;
  if (!o.policy.empty()) cfg.policy = o.policy;
  cfg.validate();
  return cfg;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

void print_table(const std::vector<leosim::ExperimentReport>& reports) {
  std::printf("%-14s %12s %10s %12s %10s %10s\n", "policy", "mean_queue", "std", "max_queue", "std", "load");
  for (const auto& r : reports) {
    const auto& a = r.aggregate;
    std::printf("%-14s %12.3f %10.3f %12.3f %10.3f %10.3f\n", r.policy.c_str(), a.mean_queue.mean,
                a.mean_queue.std, a.max_queue.mean, a.max_queue.std, a.load_ratio);
  }
}

void add_common(CLI::App* cmd, Overrides& o, bool with_policy) {
  cmd->add_option("-c,--config", o.config, "JSON run configuration")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seeds, "seed(s), replaces the configured list");
  cmd->add_option("--out", o.out, "output directory");
  if (with_policy) cmd->add_option("--policy", o.policy, "policy name");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"LEO constellation queue simulator"};
  app.require_subcommand(1);

  Overrides o;
  auto* run = app.add_subcommand("run", "evaluate the configured policy over the configured seeds");
  add_common(run, o, true);

  auto* train = app.add_subcommand("train", "train the residual agent and write a checkpoint");
  add_common(train, o, false);
  std::size_t episodes = 0;
  train->add_option("--episodes", episodes, "override rl.episodes");

  auto* eval = app.add_subcommand("eval", "evaluate a trained checkpoint");
  add_common(eval, o, false);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "checkpoint file (default: rl.checkpoint)");

  auto* sweep = app.add_subcommand("sweep", "sweep M, K, constellation file or gateway preset");
  add_common(sweep, o, true);
  std::string kind = "M";
  std::string values;
  sweep->add_option("--kind", kind, "M | K | constellation | gateways");
  sweep->add_option("--values", values, "comma separated values (default depends on kind)");

  auto* compare = app.add_subcommand("compare", "several policies on shared seeds");
  add_common(compare, o, false);
  std::string policies = "no-isl,bp,lg-bp,maxweight,equalize,random";
  compare->add_option("--policies", policies, "comma separated policy names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*run) {
      auto cfg = load(o);
      const leosim::Scenario sc(cfg);
      auto policy = leosim::build_policy(sc, cfg, cfg.policy, log_line);
      auto report = leosim::run_experiment(sc, *policy, cfg.seeds);
      report.policy = cfg.policy;
      leosim::emit_outputs(cfg, {report}, cfg.output_dir);
      print_table({report});
    } else if (*train) {
      auto cfg = load(o);
      if (episodes > 0) cfg.rl.episodes = episodes;
      if (!o.seeds.empty()) cfg.rl.train_seed = o.seeds.front();
      const leosim::Scenario sc(cfg);
      auto agent = leosim::train(sc, cfg, [](const leosim::EpisodeLog& e) {
        std::fprintf(stderr, "episode %4zu  reward %12.3f  epsilon %.3f  loss %.4g  steps %zu\n", e.episode,
                     e.reward, e.epsilon, e.loss_mean, e.train_steps);
      });
      std::filesystem::create_directories(cfg.output_dir);
      const auto ckpt = cfg.output_dir / "qnet.txt";
      leosim::save_checkpoint(ckpt, agent.qnet, agent.queue_scale);
      leosim::emit_training_log(agent.log, cfg.output_dir / "training_log.csv");
      std::printf("checkpoint written to %s\n", ckpt.string().c_str());
    } else if (*eval) {
      auto cfg = load(o);
      cfg.policy = "rl-residual";
      if (!checkpoint.empty()) cfg.rl.checkpoint = checkpoint;
      if (cfg.rl.checkpoint.empty()) throw leosim::ConfigError("eval needs --checkpoint or rl.checkpoint");
      if (!std::filesystem::exists(cfg.rl.checkpoint))
        throw leosim::ConfigError("checkpoint not found: " + cfg.rl.checkpoint.string());
      const leosim::Scenario sc(cfg);
      auto policy = leosim::build_policy(sc, cfg, cfg.policy, log_line);
      auto report = leosim::run_experiment(sc, *policy, cfg.seeds);
      report.policy = cfg.policy;
      leosim::emit_outputs(cfg, {report}, cfg.output_dir);
      print_table({report});
    } else if (*sweep) {
      auto cfg = load(o);
      const auto k = leosim::parse_sweep_kind(kind);
      auto vals = values.empty() ? leosim::default_sweep_values(k) : split_list(values);
      auto points = leosim::run_sweep(cfg, k, vals, log_line);
      leosim::emit_sweep(cfg, k, points, cfg.output_dir);
      std::printf("%-16s", leosim::sweep_kind_name(k).c_str());
      std::printf(" %12s %12s\n", "mean_queue", "max_queue");
      for (const auto& p : points)
        std::printf("%-16s %12.3f %12.3f\n", p.value.c_str(), p.report.aggregate.mean_queue.mean,
                    p.report.aggregate.max_queue.mean);
    } else if (*compare) {
      auto cfg = load(o);
      auto reports = leosim::compare_policies(cfg, split_list(policies), log_line);
      leosim::emit_outputs(cfg, reports, cfg.output_dir);
      print_table(reports);
    }
  } catch (const leosim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
