#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "leosim/config.hpp"
#include "leosim/environment.hpp"
#include "leosim/policies.hpp"
#include "leosim/queueing.hpp"
#include "leosim/rng.hpp"

namespace leosim {

// Link feature layout.
enum LinkFeatureIndex : std::size_t {
  kFeatQueueFrom = 0,   // Q_k / scale
  kFeatQueueTo,         // Q_m / scale
  kFeatIslCap,          // C^ISL_km / D^ISL
  kFeatLgCapTo,         // C^LG_m / D^LG
  kFeatLgCapFrom,       // C^LG_k / D^LG
  kFeatVisibleFrom,
  kFeatVisibleTo,
  kFeatLgScore,         // s^LG_km / (scale * D^ISL)
  kFeatPrevGateway,     // v_k(t-1) / scale
  kFeatPrevSent,        // d_k(t-1) / scale
  kFeatPrevReceived,    // r_k(t-1) / scale
  kFeatBaselineOn,      // 1 if the LG-BP prior activates the link
  kLinkFeatureDim
};

using LinkFeature = std::array<double, kLinkFeatureDim>;

/// Residual action per link: keep the LG-BP activation or invert it.
enum ResidualChoice : int { kFollow = 0, kFlip = 1 };

/// Running 95th percentile of recently observed queue lengths, floored at 1.
class QueueScale {
 public:
  explicit QueueScale(std::size_t window = 2000) : window_(window) {}
  void observe(std::span<const std::int64_t> queues);
  double value() const { return value_; }
  void set_value(double v) { value_ = v < 1.0 ? 1.0 : v; }

 private:
  std::size_t window_;
  std::deque<std::int64_t> recent_;
  double value_ = 1.0;
};

struct FeatureContext {
  double isl_packet_scale = 1.0;  // D^ISL
  double lg_packet_scale = 1.0;   // D^LG
  LgBpWeight weight;
  double queue_scale = 1.0;
};

LinkFeature encode_pair(const PolicyInput& in, const SlotFlows& prev, const FeatureContext& ctx,
                        std::size_t k, std::size_t m, double isl_cap);
/// One feature per link of in.links, same order.
std::vector<LinkFeature> encode_links(const PolicyInput& in, const SlotFlows& prev,
                                      const FeatureContext& ctx);

/// Fully connected ReLU network. All weights and biases live in one flat
/// parameter vector (layer by layer: W column-major, then b) so optimizers and
/// gradient checks see a single vector.
class Mlp {
 public:
  Mlp() = default;
  /// He-normal hidden weights, zero biases; output layer zero when zero_head.
  Mlp(std::vector<std::size_t> layer_sizes, Rng& rng, bool zero_head);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  std::size_t num_parameters() const { return static_cast<std::size_t>(theta_.size()); }
  const Eigen::VectorXd& parameters() const { return theta_; }
  Eigen::VectorXd& parameters() { return theta_; }

  Eigen::Map<Eigen::MatrixXd> weight(std::size_t layer);
  Eigen::Map<const Eigen::MatrixXd> weight(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

  /// x: input_dim x batch -> output_dim x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;

  /// Loss mean_b (Q(x_b)[a_b] - y_b)^2 and its gradient w.r.t. parameters().
  double loss_and_gradient(const Eigen::MatrixXd& x, std::span<const int> actions,
                           std::span<const double> targets, Eigen::VectorXd& grad) const;

 private:
  std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd theta_;
};

/// Adaptive moment estimation with bias correction.
class Adam {
 public:
  Adam() = default;
  Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad);
  std::size_t steps() const { return t_; }
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 1e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  std::size_t t_ = 0;
  Eigen::VectorXd m_, v_;
};

Eigen::MatrixXd features_to_matrix(std::span<const LinkFeature> features);

/// Per link: uniform random choice with probability epsilon, otherwise the
/// argmax Q-value with ties resolved toward kFollow.
std::vector<int> act(std::span<const LinkFeature> features, const Mlp& qnet, double epsilon, Rng& rng);

/// Applies residual choices on top of the LG-BP activation set. Active links
/// demand full floored capacity; clamp priority is the LG-BP score.
LinkDemand residual_demand(const PolicyInput& in, std::span<const int> actions, LgBpWeight w);

/// -[alpha (mean_a - mean_bp) + beta (max_a - max_bp)]
double compute_reward(const QueueState& agent_next, const QueueState& bp_next, const RewardWeights& w);

struct Transition {
  LinkFeature feature{};
  int action = kFollow;
  double reward = 0.0;
  LinkFeature next_feature{};
  bool done = false;
};

/// Bounded FIFO ring of transitions.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);
  void push(const Transition& t);
  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  const Transition& at(std::size_t i) const;
  std::vector<const Transition*> sample(std::size_t batch, Rng& rng) const;

 private:
  std::size_t capacity_;
  std::size_t head_ = 0;  // index of the oldest element once full
  std::vector<Transition> data_;
};

/// y = r + gamma * Q_target(s', argmax_a Q_online(s', a)), or y = r when done.
std::vector<double> double_q_targets(std::span<const Transition* const> batch, const Mlp& online,
                                     const Mlp& target, double discount);

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainStepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
};

TrainStepResult train_step(const ReplayBuffer& buffer, Mlp& online, const Mlp& target, Adam& opt,
                           const RewardWeights& w, std::size_t batch_size, double grad_clip_norm,
                           Rng& rng);

struct EpisodeLog {
  std::size_t episode = 0;
  std::uint64_t env_seed = 0;
  double reward = 0.0;  // undiscounted sum of R(t)
  double epsilon = 0.0;
  double loss_mean = 0.0;
  double loss_max = 0.0;
  std::size_t train_steps = 0;
};

struct TrainedAgent {
  Mlp qnet;
  double queue_scale = 1.0;
  std::vector<EpisodeLog> log;
};

/// Epsilon for an episode under linear annealing.
double epsilon_for_episode(const RlParams& p, std::size_t episode);

/// Episode environment seed for training.
std::uint64_t training_env_seed(const RlParams& p, std::size_t episode);

using EpisodeCallback = std::function<void(const EpisodeLog&)>;

/// Residual DDQN training on the scenario. Each slot, the agent's step and a
/// lockstep backpressure trajectory consume the same arrivals and fading.
TrainedAgent train(const Scenario& sc, const RunConfig& cfg, const EpisodeCallback& on_episode = {});

void save_checkpoint(const std::filesystem::path& path, const Mlp& qnet, double queue_scale);
TrainedAgent load_checkpoint(const std::filesystem::path& path);

/// Greedy (or epsilon-greedy) residual policy over LG-BP for evaluation.
class ResidualPolicy final : public SchedulingPolicy {
 public:
  ResidualPolicy(Mlp qnet, double queue_scale, FeatureContext ctx, double epsilon = 0.0);
  std::string name() const override { return "rl-residual"; }
  LinkDemand demand(const PolicyInput& in, Rng& rng) override;
  void begin_episode(std::size_t num_satellites) override;
  void observe(const SlotFlows& flows) override { prev_ = flows; }

 private:
  Mlp qnet_;
  FeatureContext ctx_;
  double epsilon_;
  SlotFlows prev_;
};

}  // namespace leosim
