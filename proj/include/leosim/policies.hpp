#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "leosim/geometry.hpp"
#include "leosim/queueing.hpp"
#include "leosim/rng.hpp"

namespace leosim {

/// Observable state for one slot. Spans are aligned with links (ISL caps) and
/// satellites (LG caps, zero when no gateway is visible).
struct PolicyInput {
  const QueueState& q;
  const TopologySnapshot& topo;
  std::span<const DirectedLink> links;
  std::span<const double> isl_caps;
  std::span<const double> lg_caps;
};

struct LinkScore {
  DirectedLink link;
  double value = 0.0;
};

struct LgBpWeight {
  double value = 1.0;
};

/// Desired per-link packets plus the priority used when clamping cuts sends.
struct LinkDemand {
  std::vector<std::int64_t> packets;
  std::vector<double> priority;

  static LinkDemand zeros(std::size_t n_links);
};

/// (Q_k - Q_m) * C^ISL_km on every link.
std::vector<LinkScore> backpressure_scores(const PolicyInput& in);
/// Backpressure score plus lambda * C^LG_m.
std::vector<LinkScore> lg_bp_scores(const PolicyInput& in, LgBpWeight w);

/// Full floored capacity on every link whose score is strictly positive.
LinkDemand activate_positive(const PolicyInput& in, const std::vector<LinkScore>& scores);

LinkDemand backpressure_schedule(const PolicyInput& in);
LinkDemand lg_bp_schedule(const PolicyInput& in, LgBpWeight w);
/// Each satellite serves its single argmax Q_k * C link, only downhill.
LinkDemand maxweight_schedule(const PolicyInput& in);
/// The most loaded satellite ships min(cap, floor((Q_k - Q_m) / 2)) to its
/// least loaded neighbor.
LinkDemand equalize_schedule(const PolicyInput& in);
LinkDemand no_isl_schedule(const PolicyInput& in);
LinkDemand random_schedule(const PolicyInput& in, Rng& rng, double p_activate);

/// Gateway offload for every satellite, then clamp_schedule.
LinkSchedule realize_schedule(const PolicyInput& in, const LinkDemand& demand);

class SchedulingPolicy {
 public:
  virtual ~SchedulingPolicy() = default;
  virtual std::string name() const = 0;
  virtual LinkDemand demand(const PolicyInput& in, Rng& rng) = 0;
  virtual void begin_episode(std::size_t /*num_satellites*/) {}
  /// Flows realized in the slot just decided.
  virtual void observe(const SlotFlows& /*flows*/) {}
};

struct PolicyParams {
  double lg_bp_weight = 1.0;
  double p_activate = 0.5;
};

/// Names: bp, lg-bp, maxweight, equalize, no-isl, random. The learned
/// rl-residual policy is built by the rl module.
std::unique_ptr<SchedulingPolicy> make_policy(const std::string& name, const PolicyParams& params);
bool is_baseline_policy(const std::string& name);

}  // namespace leosim
