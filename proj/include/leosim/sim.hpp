#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "leosim/config.hpp"
#include "leosim/environment.hpp"
#include "leosim/policies.hpp"
#include "leosim/rl.hpp"

namespace leosim {

/// Raised when an episode aborts; the message carries seed and slot.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Per-slot record of one episode. Entry t describes Q(t+1), i.e. the queues
/// after slot t has been applied.
struct MetricsSeries {
  std::uint64_t seed = 0;
  std::vector<double> mean_q;
  std::vector<std::int64_t> max_q;
  std::vector<std::int64_t> arrivals;
  std::vector<std::int64_t> offloaded;
  std::vector<double> lg_capacity;                     // sum of C^LG over satellites
  std::vector<std::vector<std::int64_t>> queue_trace;  // [slot][satellite]

  std::size_t num_slots() const { return mean_q.size(); }
  /// Every observed queue length, sorted ascending.
  std::vector<std::int64_t> ecdf_samples() const;
  double time_average_mean() const;
  double time_average_max() const;
  std::int64_t total_arrivals() const;
  std::int64_t total_offloaded() const;
  double total_lg_capacity() const;
};

/// Runs one episode from empty queues. The environment stream and the policy
/// stream are both derived from seed, so every policy sees identical
/// arrivals and fading for the same seed.
MetricsSeries run_episode(const Scenario& sc, SchedulingPolicy& policy, std::uint64_t seed);

using LogSink = std::function<void(const std::string&)>;

/// Builds the configured policy. rl-residual loads cfg.rl.checkpoint when set
/// and trains on the scenario otherwise; rl-untrained is the residual agent
/// with a zero output head.
std::unique_ptr<SchedulingPolicy> build_policy(const Scenario& sc, const RunConfig& cfg,
                                               const std::string& name, const LogSink& log = {});

/// Greedy residual policy around a trained (or loaded) network.
std::unique_ptr<SchedulingPolicy> make_residual_policy(const Scenario& sc, const RunConfig& cfg, TrainedAgent agent);

struct SummaryStat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation over seeds
};

struct Aggregate {
  std::vector<double> mean_q_mean, mean_q_std;  // per slot, across seeds
  std::vector<double> max_q_mean, max_q_std;
  SummaryStat mean_queue;   // time-averaged mean queue
  SummaryStat max_queue;    // time-averaged max queue
  SummaryStat arrivals;     // total per episode
  SummaryStat offloaded;
  double load_ratio = 0.0;  // total arrivals / total LG capacity
};

struct ExperimentReport {
  std::string policy;
  std::vector<MetricsSeries> runs;
  Aggregate aggregate;
};

Aggregate aggregate_runs(const std::vector<MetricsSeries>& runs);

ExperimentReport run_experiment(const Scenario& sc, SchedulingPolicy& policy,
                                const std::vector<std::uint64_t>& seeds);

/// Several policies on one scenario and one seed list.
std::vector<ExperimentReport> compare_policies(const RunConfig& cfg, const std::vector<std::string>& policies,
                                               const LogSink& log = {});

enum class SweepKind { NeighborCount, SatelliteCount, Constellation, GatewayPreset };

SweepKind parse_sweep_kind(const std::string& name);
std::string sweep_kind_name(SweepKind kind);

struct SweepPoint {
  std::string value;
  ExperimentReport report;
};

/// Default values: M in 1..5; K in {5, 10, 15, 20}; gateway presets hybrid,
/// north-america, europe, asia. Constellation sweeps need explicit files.
std::vector<std::string> default_sweep_values(SweepKind kind);

std::vector<SweepPoint> run_sweep(const RunConfig& cfg, SweepKind kind, const std::vector<std::string>& values,
                                  const LogSink& log = {});

/// Files per report: <policy>_seed<s>.csv, <policy>_seed<s>_queues.csv,
/// <policy>_ecdf.csv. Plus config.json and summary.json for the whole call.
void emit_outputs(const RunConfig& cfg, const std::vector<ExperimentReport>& reports,
                  const std::filesystem::path& dir);
void emit_sweep(const RunConfig& cfg, SweepKind kind, const std::vector<SweepPoint>& points,
                const std::filesystem::path& dir);
void emit_training_log(const std::vector<EpisodeLog>& log, const std::filesystem::path& path);

nlohmann::json summary_json(const ExperimentReport& r);

}  // namespace leosim
