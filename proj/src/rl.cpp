#include "leosim/rl.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace leosim {

void QueueScale::observe(std::span<const std::int64_t> queues) {
  for (auto q : queues) {
    recent_.push_back(q);
    if (recent_.size() > window_) recent_.pop_front();
  }
  if (recent_.empty()) return;
  std::vector<std::int64_t> v(recent_.begin(), recent_.end());
  const std::size_t idx = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size()))) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  set_value(static_cast<double>(v[idx]));
}

LinkFeature encode_pair(const PolicyInput& in, const SlotFlows& prev, const FeatureContext& ctx,
                        std::size_t k, std::size_t m, double isl_cap) {
  const double qs = ctx.queue_scale;
  const double qk = static_cast<double>(in.q.q[k]);
  const double qm = static_cast<double>(in.q.q[m]);
  const double score = (qk - qm) * isl_cap + ctx.weight.value * in.lg_caps[m];
  LinkFeature f{};
  f[kFeatQueueFrom] = qk / qs;
  f[kFeatQueueTo] = qm / qs;
  f[kFeatIslCap] = isl_cap / ctx.isl_packet_scale;
  f[kFeatLgCapTo] = in.lg_caps[m] / ctx.lg_packet_scale;
  f[kFeatLgCapFrom] = in.lg_caps[k] / ctx.lg_packet_scale;
  f[kFeatVisibleFrom] = in.topo.visible[k] ? 1.0 : 0.0;
  f[kFeatVisibleTo] = in.topo.visible[m] ? 1.0 : 0.0;
  f[kFeatLgScore] = std::clamp(score / (qs * ctx.isl_packet_scale), -50.0, 50.0);
  f[kFeatPrevGateway] = static_cast<double>(prev.sent_gw[k]) / qs;
  f[kFeatPrevSent] = static_cast<double>(prev.sent_isl[k]) / qs;
  f[kFeatPrevReceived] = static_cast<double>(prev.recv_isl[k]) / qs;
  f[kFeatBaselineOn] = score > 0.0 ? 1.0 : 0.0;
  for (double& x : f) x = std::clamp(x, -50.0, 50.0);
  return f;
}

std::vector<LinkFeature> encode_links(const PolicyInput& in, const SlotFlows& prev,
                                      const FeatureContext& ctx) {
  std::vector<LinkFeature> out;
  out.reserve(in.links.size());
  for (std::size_t i = 0; i < in.links.size(); ++i)
    out.push_back(encode_pair(in, prev, ctx, in.links[i].from, in.links[i].to, in.isl_caps[i]));
  return out;
}

// ---------------------------------------------------------------------------

Mlp::Mlp(std::vector<std::size_t> layer_sizes, Rng& rng, bool zero_head) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
  }
  theta_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    if (zero_head && l + 1 == layers) continue;
    auto w = weight(l);
    const double sd = std::sqrt(2.0 / static_cast<double>(sizes_[l]));
    // Column-major fill order keeps the draw order tied to the parameter layout.
    for (Eigen::Index c = 0; c < w.cols(); ++c)
      for (Eigen::Index r = 0; r < w.rows(); ++r) w(r, c) = rng.normal() * sd;
  }
}

Eigen::Map<Eigen::MatrixXd> Mlp::weight(std::size_t l) {
  return {theta_.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
          static_cast<Eigen::Index>(sizes_[l])};
}
Eigen::Map<const Eigen::MatrixXd> Mlp::weight(std::size_t l) const {
  return {theta_.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
          static_cast<Eigen::Index>(sizes_[l])};
}
Eigen::Map<Eigen::VectorXd> Mlp::bias(std::size_t l) {
  return {theta_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], static_cast<Eigen::Index>(sizes_[l + 1])};
}
Eigen::Map<const Eigen::VectorXd> Mlp::bias(std::size_t l) const {
  return {theta_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], static_cast<Eigen::Index>(sizes_[l + 1])};
}

Eigen::MatrixXd Mlp::forward(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) throw std::invalid_argument("Mlp: bad input rows");
  Eigen::MatrixXd h = x;
  const std::size_t layers = sizes_.size() - 1;
  for (std::size_t l = 0; l < layers; ++l) {
    Eigen::MatrixXd z = weight(l) * h;
    z.colwise() += bias(l);
    if (l + 1 < layers) h = z.cwiseMax(0.0);
    else h = std::move(z);
  }
  return h;
}

double Mlp::loss_and_gradient(const Eigen::MatrixXd& x, std::span<const int> actions,
                              std::span<const double> targets, Eigen::VectorXd& grad) const {
  const Eigen::Index batch = x.cols();
  if (static_cast<std::size_t>(batch) != actions.size() || actions.size() != targets.size())
    throw std::invalid_argument("Mlp::loss_and_gradient: batch size mismatch");
  const std::size_t layers = sizes_.size() - 1;
  std::vector<Eigen::MatrixXd> acts(layers + 1);  // acts[l] feeds layer l
  std::vector<Eigen::MatrixXd> pre(layers);
  acts[0] = x;
  for (std::size_t l = 0; l < layers; ++l) {
    pre[l] = weight(l) * acts[l];
    pre[l].colwise() += bias(l);
    acts[l + 1] = l + 1 < layers ? Eigen::MatrixXd(pre[l].cwiseMax(0.0)) : pre[l];
  }
  const Eigen::MatrixXd& out = acts[layers];
  Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(out.rows(), batch);
  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const int a = actions[static_cast<std::size_t>(b)];
    const double diff = out(a, b) - targets[static_cast<std::size_t>(b)];
    loss += diff * diff;
    dz(a, b) = 2.0 * diff * inv_b;
  }
  loss *= inv_b;

  grad.setZero(theta_.size());
  for (std::size_t l = layers; l-- > 0;) {
    Eigen::Map<Eigen::MatrixXd> gw(grad.data() + offsets_[l], static_cast<Eigen::Index>(sizes_[l + 1]),
                                   static_cast<Eigen::Index>(sizes_[l]));
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + offsets_[l] + sizes_[l + 1] * sizes_[l],
                                   static_cast<Eigen::Index>(sizes_[l + 1]));
    gw.noalias() = dz * acts[l].transpose();
    gb = dz.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd da = weight(l).transpose() * dz;
      dz = da.cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

Adam::Adam(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
      m_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))),
      v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

void Adam::step(Eigen::VectorXd& params, const Eigen::VectorXd& grad) {
  ++t_;
  m_ = beta1_ * m_ + (1.0 - beta1_) * grad;
  v_ = beta2_ * v_ + (1.0 - beta2_) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  params.array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps_);
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd features_to_matrix(std::span<const LinkFeature> features) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(kLinkFeatureDim), static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t j = 0; j < kLinkFeatureDim; ++j)
      x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = features[i][j];
  return x;
}

std::vector<int> act(std::span<const LinkFeature> features, const Mlp& qnet, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("act: epsilon must lie in [0, 1]");
  std::vector<int> out(features.size(), kFollow);
  if (features.empty()) return out;
  Eigen::MatrixXd q;
  if (epsilon < 1.0) q = qnet.forward(features_to_matrix(features));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (rng.uniform() < epsilon) {
      out[i] = rng.bernoulli(0.5) ? kFlip : kFollow;
    } else {
      const auto c = static_cast<Eigen::Index>(i);
      out[i] = q(kFlip, c) > q(kFollow, c) ? kFlip : kFollow;
    }
  }
  return out;
}

LinkDemand residual_demand(const PolicyInput& in, std::span<const int> actions, LgBpWeight w) {
  if (actions.size() != in.links.size()) throw std::invalid_argument("residual_demand: one action per link");
  const auto scores = lg_bp_scores(in, w);
  LinkDemand d = LinkDemand::zeros(in.links.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    d.priority[i] = scores[i].value;
    const bool on = (scores[i].value > 0.0) != (actions[i] == kFlip);
    if (on && in.isl_caps[i] > 0.0) d.packets[i] = static_cast<std::int64_t>(std::floor(in.isl_caps[i]));
  }
  return d;
}

double compute_reward(const QueueState& agent_next, const QueueState& bp_next, const RewardWeights& w) {
  return -(w.mean_weight * (agent_next.mean() - bp_next.mean()) +
           w.max_weight * static_cast<double>(agent_next.max() - bp_next.max()));
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay buffer capacity must be > 0");
  data_.reserve(std::min<std::size_t>(capacity_, 1 << 16));
}

void ReplayBuffer::push(const Transition& t) {
  if (data_.size() < capacity_) {
    data_.push_back(t);
    return;
  }
  data_[head_] = t;
  head_ = (head_ + 1) % capacity_;
}

const Transition& ReplayBuffer::at(std::size_t i) const {
  if (i >= data_.size()) throw std::out_of_range("replay buffer index");
  return data_[(head_ + i) % data_.size()];
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  if (data_.empty()) throw std::logic_error("sampling from an empty replay buffer");
  std::vector<const Transition*> out(batch);
  for (auto& p : out) p = &data_[rng.index(data_.size())];
  return out;
}

std::vector<double> double_q_targets(std::span<const Transition* const> batch, const Mlp& online,
                                     const Mlp& target, double discount) {
  std::vector<LinkFeature> next(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) next[i] = batch[i]->next_feature;
  const Eigen::MatrixXd xn = features_to_matrix(next);
  const Eigen::MatrixXd q_online = online.forward(xn);
  const Eigen::MatrixXd q_target = target.forward(xn);
  std::vector<double> y(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y[i] = batch[i]->reward;
    if (batch[i]->done) continue;
    const auto c = static_cast<Eigen::Index>(i);
    const int best = q_online(kFlip, c) > q_online(kFollow, c) ? kFlip : kFollow;
    y[i] += discount * q_target(best, c);
  }
  return y;
}

TrainStepResult train_step(const ReplayBuffer& buffer, Mlp& online, const Mlp& target, Adam& opt,
                           const RewardWeights& w, std::size_t batch_size, double grad_clip_norm,
                           Rng& rng) {
  if (buffer.size() < batch_size) throw std::logic_error("train_step: buffer smaller than batch");
  const auto batch = buffer.sample(batch_size, rng);
  const auto y = double_q_targets(batch, online, target, w.discount);
  std::vector<LinkFeature> feats(batch.size());
  std::vector<int> actions(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    feats[i] = batch[i]->feature;
    actions[i] = batch[i]->action;
  }
  Eigen::VectorXd grad;
  const double loss = online.loss_and_gradient(features_to_matrix(feats), actions, y, grad);
  const double norm = grad.norm();
  if (!std::isfinite(loss) || !std::isfinite(norm)) {
    const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
    std::ostringstream msg;
    msg << "training diverged at optimizer step " << opt.steps() + 1 << ": loss=" << loss
        << " grad_norm=" << norm << " param_norm=" << online.parameters().norm()
        << " target_range=[" << *lo << ", " << *hi << "] buffer=" << buffer.size();
    throw TrainingDiverged(msg.str());
  }
  if (norm > grad_clip_norm) grad *= grad_clip_norm / norm;
  opt.step(online.parameters(), grad);
  return {loss, norm};
}

// ---------------------------------------------------------------------------

double epsilon_for_episode(const RlParams& p, std::size_t episode) {
  const double horizon = p.epsilon_decay_fraction * static_cast<double>(p.episodes);
  const double frac = horizon > 0.0 ? std::min(1.0, static_cast<double>(episode) / horizon) : 1.0;
  return p.epsilon_start + (p.epsilon_end - p.epsilon_start) * frac;
}

std::uint64_t training_env_seed(const RlParams& p, std::size_t episode) {
  if (p.episode_seeds == "fixed") return p.train_seed;
  return derive_seed(p.train_seed, 1000 + episode);
}

namespace {

std::vector<std::size_t> network_shape(const RlParams& p) {
  std::vector<std::size_t> sizes{kLinkFeatureDim};
  for (std::size_t i = 0; i < p.hidden_layers; ++i) sizes.push_back(p.hidden_units);
  sizes.push_back(2);
  return sizes;
}

struct PendingLink {
  std::size_t from, to;
  LinkFeature feature;
  int action;
};

}  // namespace

TrainedAgent train(const Scenario& sc, const RunConfig& cfg, const EpisodeCallback& on_episode) {
  const RlParams& p = cfg.rl;
  p.validate();
  const std::size_t n = sc.num_satellites();
  Rng init_rng(derive_seed(p.train_seed, kTrainingStream));
  Rng sample_rng(derive_seed(p.train_seed, kTrainingStream + 1));

  TrainedAgent agent;
  agent.qnet = Mlp(network_shape(p), init_rng, p.zero_init_head);
  Mlp target = agent.qnet;
  Adam opt(agent.qnet.num_parameters(), p.learning_rate);
  ReplayBuffer buffer(p.buffer_capacity);
  QueueScale scale(p.queue_scale_window);
  const LgBpWeight weight{cfg.policy_params.lg_bp_weight};
  const std::size_t ready = std::max(p.batch_size, p.warmup_transitions);
  std::size_t grad_steps = 0;
  std::size_t slot_counter = 0;

  for (std::size_t e = 0; e < p.episodes; ++e) {
    EpisodeLog log;
    log.episode = e;
    log.epsilon = epsilon_for_episode(p, e);
    log.env_seed = training_env_seed(p, e);
    Rng env_rng(derive_seed(log.env_seed, kEnvironmentStream));
    // exploration draws differ per episode even when the environment seed is fixed
    Rng pol_rng(derive_seed(derive_seed(p.train_seed, kPolicyStream), e));

    QueueState qa{std::vector<std::int64_t>(n, 0), 0};
    QueueState qb = qa;
    SlotFlows prev = SlotFlows::zeros(n);
    std::vector<PendingLink> pending;
    double pending_reward = 0.0;
    double loss_sum = 0.0;

    for (std::size_t t = 0; t < sc.num_slots(); ++t, ++slot_counter) {
      const SlotDraws draws = draw_slot(sc, t, env_rng);
      const PolicyInput in = make_policy_input(sc, t, qa, draws);
      const FeatureContext ctx{sc.isl_packet_scale(), sc.lg_packet_scale(), weight, scale.value()};

      if (!pending.empty()) {
        std::unordered_map<std::size_t, double> cap_of;
        for (std::size_t i = 0; i < in.links.size(); ++i)
          cap_of[in.links[i].from * n + in.links[i].to] = in.isl_caps[i];
        for (const auto& pl : pending) {
          const auto it = cap_of.find(pl.from * n + pl.to);
          const double cap = it == cap_of.end() ? 0.0 : it->second;
          buffer.push({pl.feature, pl.action, pending_reward / p.reward_scale,
                       encode_pair(in, prev, ctx, pl.from, pl.to, cap), false});
        }
      }

      const auto feats = encode_links(in, prev, ctx);
      const auto actions = act(feats, agent.qnet, log.epsilon, pol_rng);
      const LinkSchedule sched = realize_schedule(in, residual_demand(in, actions, weight));
      check_schedule(in.links, sched, qa, in.isl_caps);
      const SlotFlows flows = compute_flows(in.links, sched, draws.arrivals);
      QueueState qa_next = step_queues(qa, flows);

      const PolicyInput in_bp = make_policy_input(sc, t, qb, draws);
      const LinkSchedule sched_bp = realize_schedule(in_bp, backpressure_schedule(in_bp));
      QueueState qb_next = step_queues(qb, compute_flows(in_bp.links, sched_bp, draws.arrivals));

      const double reward = compute_reward(qa_next, qb_next, p.reward);
      log.reward += reward;

      pending.clear();
      for (std::size_t i = 0; i < feats.size(); ++i)
        pending.push_back({in.links[i].from, in.links[i].to, feats[i], actions[i]});
      pending_reward = reward;

      prev = flows;
      qa = std::move(qa_next);
      qb = std::move(qb_next);
      scale.observe(qa.q);

      if (buffer.size() >= ready && slot_counter % p.train_every_slots == 0) {
        const auto res = train_step(buffer, agent.qnet, target, opt, p.reward, p.batch_size,
                                    p.grad_clip_norm, sample_rng);
        ++grad_steps;
        ++log.train_steps;
        loss_sum += res.loss;
        log.loss_max = std::max(log.loss_max, res.loss);
        if (grad_steps % p.target_sync_steps == 0) target = agent.qnet;
      }
    }
    for (const auto& pl : pending)
      buffer.push({pl.feature, pl.action, pending_reward / p.reward_scale, pl.feature, true});

    log.loss_mean = log.train_steps ? loss_sum / static_cast<double>(log.train_steps) : 0.0;
    agent.log.push_back(log);
    if (on_episode) on_episode(log);
  }
  agent.queue_scale = scale.value();
  return agent;
}

// ---------------------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const Mlp& qnet, double queue_scale) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << "leosim-qnet 1\n";
  out << "layers " << qnet.layer_sizes().size();
  for (auto s : qnet.layer_sizes()) out << ' ' << s;
  out << '\n';
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", queue_scale);
  out << "queue_scale " << buf << '\n';
  for (std::size_t l = 0; l + 1 < qnet.layer_sizes().size(); ++l) {
    const auto w = qnet.weight(l);
    const auto b = qnet.bias(l);
    out << "weight " << l << ' ' << w.rows() << ' ' << w.cols() << '\n';
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", w(r, c));
        out << (c ? " " : "") << buf;
      }
      out << '\n';
    }
    out << "bias " << l << ' ' << b.size() << '\n';
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      std::snprintf(buf, sizeof buf, "%.17g", b(r));
      out << (r ? " " : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

TrainedAgent load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  auto fail = [&](const std::string& what) {
    return std::runtime_error("checkpoint " + path.string() + ": " + what);
  };
  std::string tag, word;
  int version = 0;
  if (!(in >> tag >> version) || tag != "leosim-qnet") throw fail("not a leosim checkpoint");
  if (version != 1) throw fail("unsupported version " + std::to_string(version));
  std::size_t count = 0;
  if (!(in >> word >> count) || word != "layers" || count < 2) throw fail("bad layer header");
  std::vector<std::size_t> sizes(count);
  for (auto& s : sizes)
    if (!(in >> s) || s == 0) throw fail("bad layer size");
  if (sizes.front() != kLinkFeatureDim || sizes.back() != 2) throw fail("network shape does not match features");
  TrainedAgent agent;
  if (!(in >> word >> agent.queue_scale) || word != "queue_scale") throw fail("missing queue_scale");
  Rng unused(0);
  agent.qnet = Mlp(sizes, unused, true);
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    std::size_t idx = 0, rows = 0, cols = 0;
    if (!(in >> word >> idx >> rows >> cols) || word != "weight" || idx != l || rows != sizes[l + 1] ||
        cols != sizes[l])
      throw fail("bad weight header for layer " + std::to_string(l));
    auto w = agent.qnet.weight(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c)
        if (!(in >> w(r, c))) throw fail("truncated weights in layer " + std::to_string(l));
    if (!(in >> word >> idx >> rows) || word != "bias" || idx != l || rows != sizes[l + 1])
      throw fail("bad bias header for layer " + std::to_string(l));
    auto b = agent.qnet.bias(l);
    for (Eigen::Index r = 0; r < b.size(); ++r)
      if (!(in >> b(r))) throw fail("truncated bias in layer " + std::to_string(l));
  }
  return agent;
}

// ---------------------------------------------------------------------------

ResidualPolicy::ResidualPolicy(Mlp qnet, double queue_scale, FeatureContext ctx, double epsilon)
    : qnet_(std::move(qnet)), ctx_(ctx), epsilon_(epsilon) {
  ctx_.queue_scale = queue_scale < 1.0 ? 1.0 : queue_scale;
}

void ResidualPolicy::begin_episode(std::size_t num_satellites) { prev_ = SlotFlows::zeros(num_satellites); }

LinkDemand ResidualPolicy::demand(const PolicyInput& in, Rng& rng) {
  if (prev_.sent_gw.size() != in.q.size()) prev_ = SlotFlows::zeros(in.q.size());
  const auto feats = encode_links(in, prev_, ctx_);
  const auto actions = act(feats, qnet_, epsilon_, rng);
  return residual_demand(in, actions, ctx_.weight);
}

}  // namespace leosim
