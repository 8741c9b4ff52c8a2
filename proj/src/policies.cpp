#include "leosim/policies.hpp"

#include <cmath>
#include <stdexcept>

namespace leosim {

namespace {

std::int64_t floor_cap(double c) { return c > 0.0 ? static_cast<std::int64_t>(std::floor(c)) : 0; }

void check_input(const PolicyInput& in) {
  if (in.isl_caps.size() != in.links.size() || in.lg_caps.size() != in.q.size() ||
      in.topo.num_satellites() != in.q.size())
    throw std::invalid_argument("policy input: inconsistent sizes");
}

}  // namespace

LinkDemand LinkDemand::zeros(std::size_t n_links) {
  return {std::vector<std::int64_t>(n_links, 0), std::vector<double>(n_links, 0.0)};
}

std::vector<LinkScore> backpressure_scores(const PolicyInput& in) {
  check_input(in);
  std::vector<LinkScore> out;
  out.reserve(in.links.size());
  for (std::size_t i = 0; i < in.links.size(); ++i) {
    const auto [k, m] = in.links[i];
    const double diff = static_cast<double>(in.q.q[k] - in.q.q[m]);
    out.push_back({in.links[i], diff * in.isl_caps[i]});
  }
  return out;
}

std::vector<LinkScore> lg_bp_scores(const PolicyInput& in, LgBpWeight w) {
  auto scores = backpressure_scores(in);
  for (auto& s : scores) s.value += w.value * in.lg_caps[s.link.to];
  return scores;
}

LinkDemand activate_positive(const PolicyInput& in, const std::vector<LinkScore>& scores) {
  LinkDemand d = LinkDemand::zeros(in.links.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    d.priority[i] = scores[i].value;
    if (scores[i].value > 0.0) d.packets[i] = floor_cap(in.isl_caps[i]);
  }
  return d;
}

LinkDemand backpressure_schedule(const PolicyInput& in) {
  return activate_positive(in, backpressure_scores(in));
}

LinkDemand lg_bp_schedule(const PolicyInput& in, LgBpWeight w) {
  return activate_positive(in, lg_bp_scores(in, w));
}

LinkDemand maxweight_schedule(const PolicyInput& in) {
  check_input(in);
  LinkDemand d = LinkDemand::zeros(in.links.size());
  const std::size_t n = in.q.size();
  std::vector<std::ptrdiff_t> best(n, -1);
  for (std::size_t i = 0; i < in.links.size(); ++i) {
    const auto [k, m] = in.links[i];
    d.priority[i] = static_cast<double>(in.q.q[k]) * in.isl_caps[i];
    if (in.q.q[k] <= in.q.q[m]) continue;
    const std::ptrdiff_t b = best[k];
    if (b < 0 || d.priority[i] > d.priority[b] ||
        (d.priority[i] == d.priority[b] && m < in.links[b].to))
      best[k] = static_cast<std::ptrdiff_t>(i);
  }
  for (std::size_t k = 0; k < n; ++k)
    if (best[k] >= 0) d.packets[best[k]] = floor_cap(in.isl_caps[best[k]]);
  return d;
}

LinkDemand equalize_schedule(const PolicyInput& in) {
  check_input(in);
  LinkDemand d = LinkDemand::zeros(in.links.size());
  if (in.q.size() == 0) return d;
  std::size_t top = 0;
  for (std::size_t k = 1; k < in.q.size(); ++k)
    if (in.q.q[k] > in.q.q[top]) top = k;
  std::ptrdiff_t pick = -1;
  for (std::size_t i = 0; i < in.links.size(); ++i) {
    if (in.links[i].from != top) continue;
    if (pick < 0) {
      pick = static_cast<std::ptrdiff_t>(i);
      continue;
    }
    const std::size_t m = in.links[i].to, cur = in.links[pick].to;
    if (in.q.q[m] < in.q.q[cur] || (in.q.q[m] == in.q.q[cur] && m < cur))
      pick = static_cast<std::ptrdiff_t>(i);
  }
  if (pick < 0) return d;
  const std::int64_t gap = in.q.q[top] - in.q.q[in.links[pick].to];
  d.priority[pick] = static_cast<double>(gap);
  if (gap > 0) d.packets[pick] = std::min(floor_cap(in.isl_caps[pick]), gap / 2);
  return d;
}

LinkDemand no_isl_schedule(const PolicyInput& in) { return LinkDemand::zeros(in.links.size()); }

LinkDemand random_schedule(const PolicyInput& in, Rng& rng, double p_activate) {
  if (!(p_activate >= 0.0 && p_activate <= 1.0))
    throw std::invalid_argument("random policy: p_activate must lie in [0, 1]");
  LinkDemand d = LinkDemand::zeros(in.links.size());
  for (std::size_t i = 0; i < in.links.size(); ++i)
    if (rng.bernoulli(p_activate)) d.packets[i] = floor_cap(in.isl_caps[i]);
  return d;
}

LinkSchedule realize_schedule(const PolicyInput& in, const LinkDemand& demand) {
  check_input(in);
  std::vector<std::int64_t> v(in.q.size());
  for (std::size_t k = 0; k < in.q.size(); ++k)
    v[k] = gateway_offload(in.q.q[k], in.topo.visible[k], in.lg_caps[k]);
  return clamp_schedule(in.links, demand.packets, demand.priority, in.q, in.isl_caps, v);
}

namespace {

class BackpressurePolicy final : public SchedulingPolicy {
 public:
  std::string name() const override { return "bp"; }
  LinkDemand demand(const PolicyInput& in, Rng&) override { return backpressure_schedule(in); }
};

class LgBackpressurePolicy final : public SchedulingPolicy {
 public:
  explicit LgBackpressurePolicy(double w) : w_{w} {}
  std::string name() const override { return "lg-bp"; }
  LinkDemand demand(const PolicyInput& in, Rng&) override { return lg_bp_schedule(in, w_); }

 private:
  LgBpWeight w_;
};

class MaxWeightPolicy final : public SchedulingPolicy {
 public:
  std::string name() const override { return "maxweight"; }
  LinkDemand demand(const PolicyInput& in, Rng&) override { return maxweight_schedule(in); }
};

class EqualizePolicy final : public SchedulingPolicy {
 public:
  std::string name() const override { return "equalize"; }
  LinkDemand demand(const PolicyInput& in, Rng&) override { return equalize_schedule(in); }
};

class NoIslPolicy final : public SchedulingPolicy {
 public:
  std::string name() const override { return "no-isl"; }
  LinkDemand demand(const PolicyInput& in, Rng&) override { return no_isl_schedule(in); }
};

class RandomPolicy final : public SchedulingPolicy {
 public:
  explicit RandomPolicy(double p) : p_(p) {}
  std::string name() const override { return "random"; }
  LinkDemand demand(const PolicyInput& in, Rng& rng) override { return random_schedule(in, rng, p_); }

 private:
  double p_;
};

}  // namespace

bool is_baseline_policy(const std::string& name) {
  return name == "bp" || name == "lg-bp" || name == "maxweight" || name == "equalize" ||
         name == "no-isl" || name == "random";
}

std::unique_ptr<SchedulingPolicy> make_policy(const std::string& name, const PolicyParams& params) {
  if (name == "bp") return std::make_unique<BackpressurePolicy>();
  if (name == "lg-bp") {
    if (!std::isfinite(params.lg_bp_weight) || params.lg_bp_weight < 0.0)
      throw std::invalid_argument("lg-bp weight must be finite and >= 0");
    return std::make_unique<LgBackpressurePolicy>(params.lg_bp_weight);
  }
  if (name == "maxweight") return std::make_unique<MaxWeightPolicy>();
  if (name == "equalize") return std::make_unique<EqualizePolicy>();
  if (name == "no-isl") return std::make_unique<NoIslPolicy>();
  if (name == "random") {
    if (!(params.p_activate >= 0.0 && params.p_activate <= 1.0))
      throw std::invalid_argument("random policy: p_activate must lie in [0, 1]");
    return std::make_unique<RandomPolicy>(params.p_activate);
  }
  throw std::invalid_argument("unknown policy '" + name + "'");
}

}  // namespace leosim
