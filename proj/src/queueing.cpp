#include "leosim/queueing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace leosim {

std::int64_t QueueState::total() const { return std::accumulate(q.begin(), q.end(), std::int64_t{0}); }

double QueueState::mean() const {
  return q.empty() ? 0.0 : static_cast<double>(total()) / static_cast<double>(q.size());
}

std::int64_t QueueState::max() const { return q.empty() ? 0 : *std::max_element(q.begin(), q.end()); }

SlotFlows SlotFlows::zeros(std::size_t n) {
  return {std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0),
          std::vector<std::int64_t>(n, 0), std::vector<std::int64_t>(n, 0)};
}

namespace {

std::int64_t floor_packets(double cap) {
  return cap > 0.0 ? static_cast<std::int64_t>(std::floor(cap)) : 0;
}

}  // namespace

std::int64_t gateway_offload(std::int64_t q, bool visible, double capacity_packets) {
  if (!visible) return 0;
  return std::min(q, floor_packets(capacity_packets));
}

LinkSchedule clamp_schedule(std::span<const DirectedLink> links, std::span<const std::int64_t> demand,
                            std::span<const double> priority, const QueueState& q,
                            std::span<const double> isl_caps, std::span<const std::int64_t> gateway) {
  const std::size_t n = q.size();
  if (demand.size() != links.size() || priority.size() != links.size() ||
      isl_caps.size() != links.size() || gateway.size() != n)
    throw std::invalid_argument("clamp_schedule: size mismatch");

  LinkSchedule s;
  s.gateway_packets.assign(gateway.begin(), gateway.end());
  s.isl_packets.resize(links.size());
  std::vector<std::vector<std::size_t>> out_links(n);
  for (std::size_t i = 0; i < links.size(); ++i) {
    s.isl_packets[i] = std::clamp<std::int64_t>(demand[i], 0, floor_packets(isl_caps[i]));
    out_links[links[i].from].push_back(i);
  }

  for (std::size_t k = 0; k < n; ++k) {
    s.gateway_packets[k] = std::clamp<std::int64_t>(s.gateway_packets[k], 0, q.q[k]);
    std::int64_t budget = q.q[k] - s.gateway_packets[k];
    auto& idx = out_links[k];
    std::int64_t want = 0;
    for (std::size_t i : idx) want += s.isl_packets[i];
    if (want <= budget) continue;
    // Keep order: highest priority first, then ascending destination id.
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (priority[a] != priority[b]) return priority[a] > priority[b];
      return links[a].to < links[b].to;
    });
    for (std::size_t i : idx) {
      const std::int64_t keep = std::min(s.isl_packets[i], budget);
      s.isl_packets[i] = keep;
      budget -= keep;
    }
  }
  return s;
}

void check_schedule(std::span<const DirectedLink> links, const LinkSchedule& s, const QueueState& q,
                    std::span<const double> isl_caps) {
  if (s.isl_packets.size() != links.size() || s.gateway_packets.size() != q.size() ||
      isl_caps.size() != links.size())
    throw QueueInvariantError("schedule size mismatch");
  std::vector<std::int64_t> sent(q.size(), 0);
  for (std::size_t i = 0; i < links.size(); ++i) {
    const std::int64_t w = s.isl_packets[i];
    if (w < 0 || w > floor_packets(isl_caps[i]))
      throw QueueInvariantError("link " + std::to_string(links[i].from) + "->" +
                                std::to_string(links[i].to) + " exceeds its capacity bound");
    sent[links[i].from] += w;
  }
  for (std::size_t k = 0; k < q.size(); ++k) {
    if (s.gateway_packets[k] < 0 || s.gateway_packets[k] + sent[k] > q.q[k])
      throw QueueInvariantError("satellite " + std::to_string(k) + " sends more than its queue");
  }
}

SlotFlows compute_flows(std::span<const DirectedLink> links, const LinkSchedule& s,
                        std::span<const std::int64_t> arrivals) {
  const std::size_t n = s.gateway_packets.size();
  if (arrivals.size() != n || s.isl_packets.size() != links.size())
    throw std::invalid_argument("compute_flows: size mismatch");
  SlotFlows f = SlotFlows::zeros(n);
  f.sent_gw = s.gateway_packets;
  f.arrivals.assign(arrivals.begin(), arrivals.end());
  for (std::size_t i = 0; i < links.size(); ++i) {
    f.sent_isl[links[i].from] += s.isl_packets[i];
    f.recv_isl[links[i].to] += s.isl_packets[i];
  }
  return f;
}

QueueState step_queues(const QueueState& q, const SlotFlows& flows) {
  const std::size_t n = q.size();
  if (flows.sent_isl.size() != n || flows.recv_isl.size() != n || flows.sent_gw.size() != n ||
      flows.arrivals.size() != n)
    throw QueueInvariantError("flow vectors do not match queue count");
  std::int64_t sum_d = 0, sum_r = 0;
  QueueState next{std::vector<std::int64_t>(n), q.slot + 1};
  for (std::size_t k = 0; k < n; ++k) {
    const auto u = flows.arrivals[k], r = flows.recv_isl[k], v = flows.sent_gw[k], d = flows.sent_isl[k];
    if (u < 0 || r < 0 || v < 0 || d < 0)
      throw QueueInvariantError("negative flow at satellite " + std::to_string(k));
    if (v + d > q.q[k])
      throw QueueInvariantError("satellite " + std::to_string(k) + " violates queue feasibility");
    sum_d += d;
    sum_r += r;
    next.q[k] = std::max<std::int64_t>(0, q.q[k] + u + r - v - d);
  }
  if (sum_d != sum_r) throw QueueInvariantError("ISL sends and receptions do not balance");
  return next;
}

}  // namespace leosim
