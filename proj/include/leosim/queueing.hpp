#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "leosim/geometry.hpp"

namespace leosim {

struct QueueState {
  std::vector<std::int64_t> q;
  std::size_t slot = 0;

  std::size_t size() const { return q.size(); }
  std::int64_t total() const;
  double mean() const;
  std::int64_t max() const;
};

/// Packets moved in one slot. isl_packets is aligned with the snapshot's
/// links(); gateway_packets is per satellite.
struct LinkSchedule {
  std::vector<std::int64_t> isl_packets;
  std::vector<std::int64_t> gateway_packets;
};

struct SlotFlows {
  std::vector<std::int64_t> sent_isl;  // d_k
  std::vector<std::int64_t> recv_isl;  // r_k
  std::vector<std::int64_t> sent_gw;   // v_k
  std::vector<std::int64_t> arrivals;  // u_k

  static SlotFlows zeros(std::size_t n);
};

class QueueInvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// visible ? min(q, floor(capacity)) : 0
std::int64_t gateway_offload(std::int64_t q, bool visible, double capacity_packets);

/// Clips every link demand to floor(cap), then enforces v_k + sum_m w_km <= Q_k
/// per satellite. Gateway offload keeps priority; ISL sends are cut starting
/// from the lowest priority (ties: the higher destination id is cut first).
LinkSchedule clamp_schedule(std::span<const DirectedLink> links, std::span<const std::int64_t> demand,
                            std::span<const double> priority, const QueueState& q,
                            std::span<const double> isl_caps, std::span<const std::int64_t> gateway);

/// Throws QueueInvariantError if the schedule breaks the per-link capacity
/// bound or per-satellite queue feasibility.
void check_schedule(std::span<const DirectedLink> links, const LinkSchedule& s, const QueueState& q,
                    std::span<const double> isl_caps);

SlotFlows compute_flows(std::span<const DirectedLink> links, const LinkSchedule& s,
                        std::span<const std::int64_t> arrivals);

/// Q(t+1) = (Q + u + r - v - d)^+ per satellite. Throws QueueInvariantError on
/// negative flows, size mismatch, v + d > Q, or sum d != sum r.
QueueState step_queues(const QueueState& q, const SlotFlows& flows);

}  // namespace leosim
