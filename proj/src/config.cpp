#include "leosim/config.hpp"

#include <fstream>
#include <set>

#include "leosim/constants.hpp"

namespace leosim {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : j_.items())
      if (!seen_.count(key)) throw ConfigError(path_ + ": unknown key '" + key + "'");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }
  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string where(const std::string& key) const { return path_ + "." + key; }

  template <class T>
  void get(const std::string& key, T& out) {
    if (!has(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }
  void get_deg(const std::string& key, double& out_rad) {
    if (!has(key)) return;
    double deg = 0.0;
    get(key, deg);
    out_rad = deg * kDegToRad;
  }
  void get_path(const std::string& key, std::filesystem::path& out, const std::filesystem::path& base) {
    if (!has(key)) return;
    std::string s;
    get(key, s);
    std::filesystem::path p(s);
    if (s.empty()) {
      out.clear();
      return;
    }
    out = p.is_absolute() ? p : (base / p).lexically_normal();
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

template <class Fn>
void with_section(Section& parent, const std::string& key, Fn fn) {
  if (!parent.has(key)) return;
  Section s(parent.raw(key), parent.where(key));
  fn(s);
}

}  // namespace

void RewardWeights::validate() const {
  if (!(mean_weight > 0.0) || !(max_weight > 0.0))
    throw ConfigError("rl.reward: mean_weight and max_weight must be > 0");
  if (!(discount > 0.0 && discount < 1.0)) throw ConfigError("rl.reward: discount must lie in (0, 1)");
}

void RlParams::validate() const {
  reward.validate();
  if (episodes < 1) throw ConfigError("rl: episodes must be >= 1");
  if (hidden_units < 1) throw ConfigError("rl: hidden_units must be >= 1");
  if (!(learning_rate >= 0.0)) throw ConfigError("rl: learning_rate must be >= 0");
  if (batch_size < 1 || buffer_capacity < batch_size)
    throw ConfigError("rl: need 1 <= batch_size <= buffer_capacity");
  if (train_every_slots < 1 || target_sync_steps < 1) throw ConfigError("rl: step intervals must be >= 1");
  if (!(grad_clip_norm > 0.0)) throw ConfigError("rl: grad_clip_norm must be > 0");
  for (double e : {epsilon_start, epsilon_end})
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("rl: epsilon values must lie in [0, 1]");
  if (!(epsilon_decay_fraction > 0.0 && epsilon_decay_fraction <= 1.0))
    throw ConfigError("rl: epsilon_decay_fraction must lie in (0, 1]");
  if (!(reward_scale > 0.0)) throw ConfigError("rl: reward_scale must be > 0");
  if (queue_scale_window < 1) throw ConfigError("rl: queue_scale_window must be >= 1");
  if (episode_seeds != "vary" && episode_seeds != "fixed")
    throw ConfigError("rl: episode_seeds must be 'vary' or 'fixed'");
}

void RunConfig::validate() const {
  try {
    grid.validate();
    neighbors.validate();
    footprint.validate();
    lg.validate();
    isl.validate();
    diurnal.validate();
    ShadowingTable table(shadowing);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  rl.validate();
  if (num_satellites < 1) throw ConfigError("constellation.num_satellites must be >= 1");
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (!(traffic_calibration >= 0.0)) throw ConfigError("traffic.calibration must be >= 0");
  if (!(policy_params.p_activate >= 0.0 && policy_params.p_activate <= 1.0))
    throw ConfigError("policy.p_activate must lie in [0, 1]");
  if (!(policy_params.lg_bp_weight >= 0.0) || !std::isfinite(policy_params.lg_bp_weight))
    throw ConfigError("policy.lg_bp_weight must be finite and >= 0");
  if (!is_baseline_policy(policy) && policy != "rl-residual" && policy != "rl-untrained")
    throw ConfigError("policy.name: unknown policy '" + policy + "'");
  for (const auto& [what, p] : {std::pair{"constellation.tle_file", tle_file},
                                std::pair{"traffic.grid_file", traffic_grid}}) {
    if (p.empty() || !std::filesystem::exists(p))
      throw ConfigError(std::string(what) + ": file not found '" + p.string() + "'");
  }
  if (!gateway_file.empty() && !std::filesystem::exists(gateway_file))
    throw ConfigError("gateways.file: file not found '" + gateway_file.string() + "'");
  if (!rl.checkpoint.empty() && !std::filesystem::exists(rl.checkpoint))
    throw ConfigError("rl.checkpoint: file not found '" + rl.checkpoint.string() + "'");
}

RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base) {
  RunConfig cfg;
  try {
    Section root(j, "config");
    with_section(root, "time", [&](Section& s) {
      if (s.has("t0")) {
        std::string t0;
        s.get("t0", t0);
        try {
          cfg.grid.t0 = parse_iso8601(t0);
        } catch (const std::invalid_argument& e) {
          throw ConfigError(s.where("t0") + ": " + e.what());
        }
      }
      s.get("slot_seconds", cfg.grid.slot_seconds);
      s.get("num_slots", cfg.grid.num_slots);
    });
    with_section(root, "constellation", [&](Section& s) {
      s.get_path("tle_file", cfg.tle_file, base);
      s.get("num_satellites", cfg.num_satellites);
      s.get("j2", cfg.j2_secular);
    });
    with_section(root, "neighbors", [&](Section& s) {
      s.get("max_neighbors", cfg.neighbors.max_neighbors);
      s.get("max_range_km", cfg.neighbors.max_range_km);
      s.get_deg("max_plane_angle_deg", cfg.neighbors.max_plane_angle);
    });
    with_section(root, "footprint", [&](Section& s) {
      s.get_deg("min_elevation_deg", cfg.footprint.min_elevation);
      s.get("earth_radius_km", cfg.footprint.earth_radius_km);
    });
    with_section(root, "channel", [&](Section& ch) {
      with_section(ch, "lg", [&](Section& s) {
        s.get("tx_power_w", cfg.lg.tx_power_w);
        s.get("path_loss_exp", cfg.lg.path_loss_exp);
        s.get("noise_var_w", cfg.lg.noise_var_w);
        s.get("bandwidth_hz", cfg.lg.bandwidth_hz);
        s.get("packet_bits", cfg.lg.packet_bits);
      });
      with_section(ch, "isl", [&](Section& s) {
        s.get("tx_power_w", cfg.isl.tx_power_w);
        s.get("tx_gain", cfg.isl.tx_gain);
        s.get("rx_gain", cfg.isl.rx_gain);
        s.get("carrier_wavelength_m", cfg.isl.carrier_wavelength_m);
        s.get("boltzmann", cfg.isl.boltzmann);
        s.get("sys_noise_temp_k", cfg.isl.sys_noise_temp_k);
        s.get("bandwidth_hz", cfg.isl.bandwidth_hz);
      });
      if (ch.has("shadowing")) {
        const json& arr = ch.raw("shadowing");
        if (!arr.is_array()) throw ConfigError("config.channel.shadowing: expected an array");
        cfg.shadowing.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
          Section s(arr[i], "config.channel.shadowing[" + std::to_string(i) + "]");
          ShadowingTable::Band band{0.0, {}};
          s.get("min_elevation_deg", band.lower_deg);
          s.get("b0", band.params.b0);
          s.get("m", band.params.m);
          s.get("omega", band.params.omega);
          cfg.shadowing.push_back(band);
        }
      }
    });
    with_section(root, "traffic", [&](Section& s) {
      s.get_path("grid_file", cfg.traffic_grid, base);
      s.get("calibration", cfg.traffic_calibration);
      with_section(s, "diurnal", [&](Section& d) {
        d.get("amplitude", cfg.diurnal.amplitude);
        d.get("baseline", cfg.diurnal.baseline);
        d.get("peak_phase_hours", cfg.diurnal.peak_phase_hours);
      });
    });
    with_section(root, "gateways", [&](Section& s) {
      s.get_path("file", cfg.gateway_file, base);
      s.get("preset", cfg.gateway_preset);
    });
    with_section(root, "policy", [&](Section& s) {
      s.get("name", cfg.policy);
      s.get("lg_bp_weight", cfg.policy_params.lg_bp_weight);
      s.get("p_activate", cfg.policy_params.p_activate);
    });
    with_section(root, "rl", [&](Section& s) {
      auto& r = cfg.rl;
      s.get("episodes", r.episodes);
      s.get("hidden_layers", r.hidden_layers);
      s.get("hidden_units", r.hidden_units);
      s.get("learning_rate", r.learning_rate);
      s.get("batch_size", r.batch_size);
      s.get("buffer_capacity", r.buffer_capacity);
      s.get("warmup_transitions", r.warmup_transitions);
      s.get("train_every_slots", r.train_every_slots);
      s.get("target_sync_steps", r.target_sync_steps);
      s.get("grad_clip_norm", r.grad_clip_norm);
      s.get("epsilon_start", r.epsilon_start);
      s.get("epsilon_end", r.epsilon_end);
      s.get("epsilon_decay_fraction", r.epsilon_decay_fraction);
      s.get("reward_scale", r.reward_scale);
      s.get("queue_scale_window", r.queue_scale_window);
      s.get("zero_init_head", r.zero_init_head);
      s.get("episode_seeds", r.episode_seeds);
      s.get("train_seed", r.train_seed);
      s.get_path("checkpoint", r.checkpoint, base);
      with_section(s, "reward", [&](Section& w) {
        w.get("mean_weight", r.reward.mean_weight);
        w.get("max_weight", r.reward.max_weight);
        w.get("discount", r.reward.discount);
      });
    });
    root.get("seeds", cfg.seeds);
    root.get_path("output_dir", cfg.output_dir, base);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

nlohmann::json config_to_json(const RunConfig& c) {
  using nlohmann::json;
  json shadow = json::array();
  for (const auto& b : c.shadowing)
    shadow.push_back({{"min_elevation_deg", b.lower_deg},
                      {"b0", b.params.b0},
                      {"m", b.params.m},
                      {"omega", b.params.omega}});
  const auto& r = c.rl;
  return json{
      {"time",
       {{"t0", format_iso8601(c.grid.t0)},
        {"slot_seconds", c.grid.slot_seconds},
        {"num_slots", c.grid.num_slots}}},
      {"constellation",
       {{"tle_file", c.tle_file.string()}, {"num_satellites", c.num_satellites}, {"j2", c.j2_secular}}},
      {"neighbors",
       {{"max_neighbors", c.neighbors.max_neighbors},
        {"max_range_km", c.neighbors.max_range_km},
        {"max_plane_angle_deg", c.neighbors.max_plane_angle * kRadToDeg}}},
      {"footprint",
       {{"min_elevation_deg", c.footprint.min_elevation * kRadToDeg},
        {"earth_radius_km", c.footprint.earth_radius_km}}},
      {"channel",
       {{"lg",
         {{"tx_power_w", c.lg.tx_power_w},
          {"path_loss_exp", c.lg.path_loss_exp},
          {"noise_var_w", c.lg.noise_var_w},
          {"bandwidth_hz", c.lg.bandwidth_hz},
          {"packet_bits", c.lg.packet_bits}}},
        {"isl",
         {{"tx_power_w", c.isl.tx_power_w},
          {"tx_gain", c.isl.tx_gain},
          {"rx_gain", c.isl.rx_gain},
          {"carrier_wavelength_m", c.isl.carrier_wavelength_m},
          {"boltzmann", c.isl.boltzmann},
          {"sys_noise_temp_k", c.isl.sys_noise_temp_k},
          {"bandwidth_hz", c.isl.bandwidth_hz}}},
        {"shadowing", shadow}}},
      {"traffic",
       {{"grid_file", c.traffic_grid.string()},
        {"calibration", c.traffic_calibration},
        {"diurnal",
         {{"amplitude", c.diurnal.amplitude},
          {"baseline", c.diurnal.baseline},
          {"peak_phase_hours", c.diurnal.peak_phase_hours}}}}},
      {"gateways", {{"file", c.gateway_file.string()}, {"preset", c.gateway_preset}}},
      {"policy",
       {{"name", c.policy},
        {"lg_bp_weight", c.policy_params.lg_bp_weight},
        {"p_activate", c.policy_params.p_activate}}},
      {"rl",
       {{"episodes", r.episodes},
        {"hidden_layers", r.hidden_layers},
        {"hidden_units", r.hidden_units},
        {"learning_rate", r.learning_rate},
        {"batch_size", r.batch_size},
        {"buffer_capacity", r.buffer_capacity},
        {"warmup_transitions", r.warmup_transitions},
        {"train_every_slots", r.train_every_slots},
        {"target_sync_steps", r.target_sync_steps},
        {"grad_clip_norm", r.grad_clip_norm},
        {"epsilon_start", r.epsilon_start},
        {"epsilon_end", r.epsilon_end},
        {"epsilon_decay_fraction", r.epsilon_decay_fraction},
        {"reward_scale", r.reward_scale},
        {"queue_scale_window", r.queue_scale_window},
        {"zero_init_head", r.zero_init_head},
        {"episode_seeds", r.episode_seeds},
        {"train_seed", r.train_seed},
        {"checkpoint", r.checkpoint.string()},
        {"reward",
         {{"mean_weight", r.reward.mean_weight},
          {"max_weight", r.reward.max_weight},
          {"discount", r.reward.discount}}}}},
      {"seeds", c.seeds},
      {"output_dir", c.output_dir.string()},
  };
}

}  // namespace leosim
