#include <doctest.h>

#include <fstream>

#include "helpers.hpp"
#include "leosim/config.hpp"

using namespace leosim;

namespace {

nlohmann::json fixture_json() {
  std::ifstream in(testutil::source_dir() / "configs" / "fixture.json");
  return nlohmann::json::parse(in, nullptr, true, true);
}

}  // namespace

TEST_CASE("config: fixture loads with resolved paths") {
  const auto cfg = testutil::fixture_config();
  CHECK(cfg.num_satellites == 10);
  CHECK(cfg.neighbors.max_neighbors == 4);
  CHECK(cfg.grid.slot_seconds == 60.0);
  CHECK(cfg.grid.num_slots == 95);
  CHECK(cfg.seeds.size() == 5);
  CHECK(cfg.gateway_preset == "hybrid");
  CHECK(std::filesystem::exists(cfg.tle_file));
  CHECK(std::filesystem::exists(cfg.traffic_grid));
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config: unknown keys and bad values are rejected") {
  auto j = fixture_json();
  j["neighbors"]["max_neighbours"] = 3;
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs"), ConfigError);

  j = fixture_json();
  j["surprise"] = 1;
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs"), ConfigError);

  j = fixture_json();
  j["constellation"]["num_satellites"] = 0;
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs").validate(), ConfigError);

  j = fixture_json();
  j["seeds"] = nlohmann::json::array();
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs").validate(), ConfigError);

  j = fixture_json();
  j["constellation"]["tle_file"] = "missing.tle";
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs").validate(), ConfigError);

  j = fixture_json();
  j["time"]["num_slots"] = "many";
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs"), ConfigError);

  j = fixture_json();
  j["policy"]["name"] = "oracle";
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs").validate(), ConfigError);

  j = fixture_json();
  j["rl"]["reward"] = {{"discount", 1.0}};
  CHECK_THROWS_AS(config_from_json(j, testutil::source_dir() / "configs").validate(), ConfigError);

  CHECK_THROWS_AS(load_config(testutil::source_dir() / "nope.json"), ConfigError);
}

TEST_CASE("config: json round trip") {
  const auto cfg = testutil::fixture_config();
  const auto j = config_to_json(cfg);
  const auto back = config_from_json(j, "/");
  CHECK(config_to_json(back) == j);
}
