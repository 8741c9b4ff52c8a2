#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numeric>

#include "helpers.hpp"
#include "leosim/environment.hpp"
#include "leosim/rl.hpp"
#include "leosim/sim.hpp"

using namespace leosim;

namespace {

LinkFeature random_feature(Rng& rng) {
  LinkFeature f{};
  for (auto& x : f) x = rng.normal();
  return f;
}

RunConfig small_config(std::size_t slots) {
  auto cfg = testutil::fixture_config();
  cfg.grid.num_slots = slots;
  return cfg;
}

}  // namespace

TEST_CASE("mlp: backprop matches central differences") {
  Rng rng(1);
  Mlp net({kLinkFeatureDim, 7, 5, 2}, rng, false);
  for (int l = 0; l < 3; ++l) net.bias(l).setRandom();
  std::vector<LinkFeature> feats;
  std::vector<int> actions;
  std::vector<double> targets;
  for (int b = 0; b < 9; ++b) {
    feats.push_back(random_feature(rng));
    actions.push_back(static_cast<int>(rng.index(2)));
    targets.push_back(rng.normal());
  }
  const auto x = features_to_matrix(feats);
  Eigen::VectorXd grad;
  net.loss_and_gradient(x, actions, targets, grad);
  Eigen::VectorXd scratch;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < net.parameters().size(); ++i) {
    const double keep = net.parameters()[i];
    const double h = 1e-5;
    net.parameters()[i] = keep + h;
    const double up = net.loss_and_gradient(x, actions, targets, scratch);
    net.parameters()[i] = keep - h;
    const double dn = net.loss_and_gradient(x, actions, targets, scratch);
    net.parameters()[i] = keep;
    const double fd = (up - dn) / (2 * h);
    const double rel = std::abs(fd - grad[i]) / std::max(1e-6, std::abs(fd) + std::abs(grad[i]));
    worst = std::max(worst, rel);
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("mlp: zero head gives tied Q-values and forward shape") {
  Rng rng(2);
  Mlp net({kLinkFeatureDim, 16, 16, 2}, rng, true);
  std::vector<LinkFeature> feats{random_feature(rng), random_feature(rng), random_feature(rng)};
  const auto q = net.forward(features_to_matrix(feats));
  CHECK(q.rows() == 2);
  CHECK(q.cols() == 3);
  CHECK(q.cwiseAbs().maxCoeff() == 0.0);
  Rng r(3);
  for (int a : act(feats, net, 0.0, r)) CHECK(a == kFollow);
}

TEST_CASE("adam: first step equals lr times gradient sign") {
  Adam opt(3, 0.1);
  Eigen::VectorXd p(3), g(3);
  p << 1, 2, 3;
  g << 0.5, -2.0, 0.0;
  opt.step(p, g);
  CHECK(p[0] == doctest::Approx(0.9));
  CHECK(p[1] == doctest::Approx(2.1));
  CHECK(p[2] == doctest::Approx(3.0));
  // second step by hand
  Eigen::VectorXd g2(3);
  g2 << 1.0, 1.0, 1.0;
  const double m = 0.9 * (0.1 * 0.5) + 0.1 * 1.0, v = 0.999 * (0.001 * 0.25) + 0.001 * 1.0;
  const double mh = m / (1 - 0.81), vh = v / (1 - 0.999 * 0.999);
  opt.step(p, g2);
  CHECK(p[0] == doctest::Approx(0.9 - 0.1 * mh / (std::sqrt(vh) + 1e-8)));
}

TEST_CASE("act: epsilon one flips half the links") {
  Rng rng(4);
  Mlp net({kLinkFeatureDim, 4, 2}, rng, true);
  std::vector<LinkFeature> feats(100000);
  const auto a = act(feats, net, 1.0, rng);
  const double flips = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
  CHECK(std::abs(flips - 0.5) < 0.01);
  CHECK(act({}, net, 0.3, rng).empty());
  CHECK_THROWS(act(feats, net, 1.2, rng));
}

TEST_CASE("reward: direct substitution") {
  const QueueState agent{{0, 0, 6, 10}, 0};  // mean 4, max 10
  const QueueState bp{{20, 2, 1, 1}, 0};     // mean 6, max 20
  const RewardWeights w{1.0, 0.5, 0.9};
  CHECK(compute_reward(agent, bp, w) == doctest::Approx(7.0));
  CHECK(compute_reward(agent, agent, w) == 0.0);
  CHECK(compute_reward(bp, agent, w) == doctest::Approx(-7.0));
}

TEST_CASE("double-Q targets on a two-state tabular instance") {
  // one-hot state in features 0 and 1; hidden layer copies them, output is a table
  Rng rng(0);
  Mlp online({kLinkFeatureDim, 2, 2}, rng, true), target({kLinkFeatureDim, 2, 2}, rng, true);
  for (Mlp* m : {&online, &target}) {
    m->weight(0).setZero();
    m->weight(0)(0, 0) = 1;
    m->weight(0)(1, 1) = 1;
    m->bias(0).setZero();
    m->bias(1).setZero();
  }
  // Q_online(s0) = (1, 2), Q_online(s1) = (5, 3); Q_target(s0) = (10, 20), Q_target(s1) = (30, 40)
  online.weight(1) << 1, 5, 2, 3;
  target.weight(1) << 10, 30, 20, 40;
  LinkFeature s0{}, s1{};
  s0[0] = 1;
  s1[1] = 1;
  std::vector<Transition> ts{{s0, 0, 1.0, s0, false}, {s0, 1, -1.0, s1, false}, {s1, 0, 2.0, s1, true},
                             {s1, 1, 0.5, s0, false}};
  std::vector<const Transition*> batch;
  for (auto& t : ts) batch.push_back(&t);
  const auto y = double_q_targets(batch, online, target, 0.9);
  // argmax online at s0 is action 1 -> target 20; at s1 action 0 -> target 30
  CHECK(std::abs(y[0] - (1.0 + 0.9 * 20)) < 1e-9);
  CHECK(std::abs(y[1] - (-1.0 + 0.9 * 30)) < 1e-9);
  CHECK(std::abs(y[2] - 2.0) < 1e-9);
  CHECK(std::abs(y[3] - (0.5 + 0.9 * 20)) < 1e-9);
}

TEST_CASE("train step: myopic targets and gradient agreement") {
  Rng rng(5);
  Mlp online({kLinkFeatureDim, 6, 2}, rng, false);
  Mlp target = online;
  ReplayBuffer buf(16);
  LinkFeature f = random_feature(rng), g = random_feature(rng);
  buf.push({f, 1, 0.7, g, false});
  RewardWeights w{1, 1, 0.0};
  std::vector<const Transition*> batch{&buf.at(0)};
  CHECK(double_q_targets(batch, online, target, 0.0)[0] == 0.7);

  // with one transition the update is -lr * Adam-normalized gradient; compare loss to hand value
  const double q = online.forward(features_to_matrix(std::vector<LinkFeature>{f}))(1, 0);
  Adam opt(online.num_parameters(), 0.0);
  Rng srng(6);
  const auto res = train_step(buf, online, target, opt, w, 1, 10.0, srng);
  CHECK(res.loss == doctest::Approx((q - 0.7) * (q - 0.7)));

  // the gradient used matches a finite difference of that loss
  Eigen::VectorXd grad, tmp;
  const auto x = features_to_matrix(std::vector<LinkFeature>{f});
  const std::vector<int> a{1};
  const std::vector<double> y{0.7};
  online.loss_and_gradient(x, a, y, grad);
  const Eigen::Index i = 3;
  const double keep = online.parameters()[i];
  online.parameters()[i] = keep + 1e-5;
  const double up = online.loss_and_gradient(x, a, y, tmp);
  online.parameters()[i] = keep - 1e-5;
  const double dn = online.loss_and_gradient(x, a, y, tmp);
  online.parameters()[i] = keep;
  CHECK((up - dn) / 2e-5 == doctest::Approx(grad[i]).epsilon(1e-4));
}

TEST_CASE("train step: terminal transitions skip the bootstrap, divergence aborts") {
  Rng rng(7);
  Mlp online({kLinkFeatureDim, 4, 2}, rng, false);
  Mlp target = online;
  Transition t{random_feature(rng), 0, 3.0, random_feature(rng), true};
  std::vector<const Transition*> batch{&t};
  CHECK(double_q_targets(batch, online, target, 0.99)[0] == 3.0);

  ReplayBuffer buf(4);
  buf.push({random_feature(rng), 0, std::nan(""), random_feature(rng), true});
  Adam opt(online.num_parameters(), 1e-3);
  CHECK_THROWS_AS(train_step(buf, online, target, opt, RewardWeights{}, 1, 10.0, rng), TrainingDiverged);
  CHECK_THROWS(train_step(buf, online, target, opt, RewardWeights{}, 2, 10.0, rng));
}

TEST_CASE("replay buffer: bounded FIFO") {
  ReplayBuffer buf(3);
  for (int i = 0; i < 7; ++i) {
    Transition t;
    t.reward = i;
    buf.push(t);
    CHECK(buf.size() == std::min(i + 1, 3));
  }
  CHECK(buf.at(0).reward == 4);
  CHECK(buf.at(1).reward == 5);
  CHECK(buf.at(2).reward == 6);
  CHECK_THROWS(buf.at(3));
  CHECK_THROWS(ReplayBuffer(0));
}

TEST_CASE("queue scale: running 95th percentile with floor") {
  QueueScale s(100);
  CHECK(s.value() == 1.0);
  std::vector<std::int64_t> zeros(50, 0);
  s.observe(zeros);
  CHECK(s.value() == 1.0);
  std::vector<std::int64_t> ramp(100);
  std::iota(ramp.begin(), ramp.end(), 1);
  s.observe(ramp);
  CHECK(s.value() == 95.0);
}

TEST_CASE("features: shape, determinism, finiteness on the shipped scenario") {
  const auto cfg = small_config(20);
  const Scenario sc(cfg);
  Rng env(derive_seed(1, kEnvironmentStream));
  QueueState q{std::vector<std::int64_t>(sc.num_satellites(), 0), 0};
  const FeatureContext ctx{sc.isl_packet_scale(), sc.lg_packet_scale(), LgBpWeight{cfg.policy_params.lg_bp_weight}, 50.0};
  SlotFlows prev = SlotFlows::zeros(sc.num_satellites());
  for (std::size_t t = 0; t < sc.num_slots(); ++t) {
    const auto d = draw_slot(sc, t, env);
    const auto in = make_policy_input(sc, t, q, d);
    const auto f1 = encode_links(in, prev, ctx);
    const auto f2 = encode_links(in, prev, ctx);
    CHECK(f1.size() == in.links.size());
    CHECK(f1.size() <= 40);
    CHECK(f1 == f2);
    for (const auto& f : f1)
      for (double x : f) CHECK(std::isfinite(x));
    const auto s = realize_schedule(in, lg_bp_schedule(in, ctx.weight));
    prev = compute_flows(in.links, s, d.arrivals);
    q = step_queues(q, prev);
  }

  TopologySnapshot empty;
  empty.neighbors.assign(2, {});
  empty.visible.assign(2, false);
  empty.gateway_of.assign(2, std::nullopt);
  QueueState q2{{1, 2}, 0};
  std::vector<double> lg{0, 0};
  const PolicyInput in{q2, empty, {}, {}, lg};
  CHECK(encode_links(in, SlotFlows::zeros(2), ctx).empty());
}

TEST_CASE("reward identity: agent replaying backpressure earns zero") {
  const auto cfg = small_config(20);
  const Scenario sc(cfg);
  Rng env(derive_seed(3, kEnvironmentStream));
  QueueState qa{std::vector<std::int64_t>(sc.num_satellites(), 0), 0}, qb = qa;
  double total = 0;
  for (std::size_t t = 0; t < sc.num_slots(); ++t) {
    const auto d = draw_slot(sc, t, env);
    const auto ia = make_policy_input(sc, t, qa, d);
    const auto ib = make_policy_input(sc, t, qb, d);
    // flipping exactly the links where LG-BP and BP disagree reproduces BP
    const auto lg = lg_bp_scores(ia, LgBpWeight{cfg.policy_params.lg_bp_weight});
    const auto bp = backpressure_scores(ia);
    std::vector<int> actions(lg.size());
    for (std::size_t i = 0; i < lg.size(); ++i) actions[i] = (lg[i].value > 0) != (bp[i].value > 0) ? kFlip : kFollow;
    auto demand = residual_demand(ia, actions, LgBpWeight{cfg.policy_params.lg_bp_weight});
    for (std::size_t i = 0; i < bp.size(); ++i) demand.priority[i] = bp[i].value;
    const auto sa = realize_schedule(ia, demand);
    const auto sb = realize_schedule(ib, backpressure_schedule(ib));
    CHECK(sa.isl_packets == sb.isl_packets);
    const auto na = step_queues(qa, compute_flows(ia.links, sa, d.arrivals));
    const auto nb = step_queues(qb, compute_flows(ib.links, sb, d.arrivals));
    const double r = compute_reward(na, nb, cfg.rl.reward);
    CHECK(r == 0.0);
    total += r;
    qa = na;
    qb = nb;
  }
  CHECK(total == 0.0);
}

TEST_CASE("baseline containment: zero head and epsilon zero reproduce LG-BP") {
  const auto cfg = small_config(40);
  const Scenario sc(cfg);
  auto residual = build_policy(sc, cfg, "rl-untrained");
  auto lgbp = make_policy("lg-bp", cfg.policy_params);
  const auto a = run_episode(sc, *residual, 4);
  const auto b = run_episode(sc, *lgbp, 4);
  CHECK(a.queue_trace == b.queue_trace);
  CHECK(a.offloaded == b.offloaded);
}

TEST_CASE("training with learning disabled earns the LG-BP versus BP gap every episode") {
  auto cfg = small_config(25);
  cfg.rl.episodes = 3;
  cfg.rl.learning_rate = 0.0;
  cfg.rl.epsilon_start = cfg.rl.epsilon_end = 0.0;
  cfg.rl.zero_init_head = true;
  cfg.rl.episode_seeds = "fixed";
  cfg.rl.hidden_units = 16;
  cfg.rl.batch_size = 8;
  cfg.rl.warmup_transitions = 8;
  const Scenario sc(cfg);
  const auto agent = train(sc, cfg);
  REQUIRE(agent.log.size() == 3);

  auto lgbp = make_policy("lg-bp", cfg.policy_params);
  auto bp = make_policy("bp", cfg.policy_params);
  const auto seed = training_env_seed(cfg.rl, 0);
  const auto a = run_episode(sc, *lgbp, seed);
  const auto b = run_episode(sc, *bp, seed);
  double gap = 0;
  for (std::size_t t = 0; t < a.num_slots(); ++t)
    gap -= cfg.rl.reward.mean_weight * (a.mean_q[t] - b.mean_q[t]) +
           cfg.rl.reward.max_weight * static_cast<double>(a.max_q[t] - b.max_q[t]);
  for (const auto& e : agent.log) CHECK(e.reward == doctest::Approx(gap).epsilon(1e-12));
}

TEST_CASE("epsilon schedule and episode seeds") {
  RlParams p;
  p.episodes = 10;
  p.epsilon_start = 1.0;
  p.epsilon_end = 0.1;
  p.epsilon_decay_fraction = 0.5;
  CHECK(epsilon_for_episode(p, 0) == 1.0);
  CHECK(epsilon_for_episode(p, 5) == doctest::Approx(0.1));
  CHECK(epsilon_for_episode(p, 9) == doctest::Approx(0.1));
  CHECK(epsilon_for_episode(p, 2) == doctest::Approx(1.0 - 0.9 * 0.4));
  CHECK(training_env_seed(p, 1) != training_env_seed(p, 2));
  p.episode_seeds = "fixed";
  CHECK(training_env_seed(p, 1) == training_env_seed(p, 2));
}

TEST_CASE("checkpoint round trip is exact") {
  Rng rng(8);
  Mlp net({kLinkFeatureDim, 9, 4, 2}, rng, false);
  net.bias(1).setRandom();
  const auto dir = testutil::temp_dir("ckpt");
  save_checkpoint(dir / "q.txt", net, 123.25);
  const auto back = load_checkpoint(dir / "q.txt");
  CHECK(back.queue_scale == 123.25);
  CHECK(back.qnet.layer_sizes() == net.layer_sizes());
  CHECK((back.qnet.parameters() - net.parameters()).cwiseAbs().maxCoeff() == 0.0);
  std::ofstream(dir / "bad.txt") << "something else\n";
  CHECK_THROWS(load_checkpoint(dir / "bad.txt"));
}

TEST_CASE("toy 20-satellite scenario: late episodes beat early ones") {
  auto cfg = testutil::fixture_config();
  cfg.num_satellites = 20;
  cfg.rl.episodes = 40;
  cfg.rl.hidden_units = 64;
  cfg.rl.batch_size = 64;
  cfg.rl.warmup_transitions = 256;
  cfg.rl.target_sync_steps = 200;
  cfg.rl.learning_rate = 3e-4;
  cfg.rl.episode_seeds = "fixed";
  const Scenario sc(cfg);
  const auto agent = train(sc, cfg);
  double first = 0, last = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    first += agent.log[i].reward;
    last += agent.log[agent.log.size() - 1 - i].reward;
  }
  MESSAGE("first-10 mean " << first / 10 << ", last-10 mean " << last / 10);
  CHECK(last >= first);
}
