#include <doctest.h>

#include <set>

#include "bigset/simnet.hpp"
#include "testgen.hpp"

using namespace bigset;
using sim::ScenarioConfig;
using sim::SessionPolicy;

namespace {

ScenarioConfig faulty(uint64_t seed, int ops = 80) {
  ScenarioConfig cfg;
  cfg.seed = seed;
  cfg.op_count = ops;
  cfg.n_replicas = 3;
  cfg.element_universe = 12;
  cfg.duplicate_rate = 0.2;
  cfg.reorder_rate = 0.3;
  cfg.redeliver_rate = 0.15;
  cfg.read_quorum = 2;
  return cfg;
}

}  // namespace

TEST_CASE("single replica, no faults: k distinct adds yield k elements") {
  ScenarioConfig cfg;
  cfg.seed = 5;
  cfg.n_replicas = 1;
  cfg.read_quorum = 1;
  cfg.op_count = 60;
  cfg.element_universe = 100000;  // wide universe: collisions unlikely
  cfg.session = SessionPolicy::BlindAdds;
  auto result = sim::run_scenario(cfg);
  CHECK(result.converged);

  size_t adds = 0;
  for (const auto& line : result.trace) {
    if (line.find("kind=add") != std::string::npos) ++adds;
  }
  // Distinct elements by construction of the wide universe (checked, not assumed).
  std::set<std::string> elems;
  for (const auto& line : result.trace) {
    auto pos = line.find("elem=");
    if (pos != std::string::npos && line.find("kind=add") != std::string::npos) {
      elems.insert(line.substr(pos + 5, line.find(' ', pos) - pos - 5));
    }
  }
  if (elems.size() == adds) {
    CHECK(result.oracle_state.value().size() == adds);
  }
}

TEST_CASE("config validation") {
  ScenarioConfig cfg;
  cfg.n_replicas = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ScenarioConfig{};
  cfg.duplicate_rate = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = ScenarioConfig{};
  cfg.read_quorum = 4;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config file parsing") {
  auto cfg = sim::parse_scenario_config(
      "# a scenario\n"
      "seed = 42\n"
      "replicas=5\n"
      "ops = 17\n"
      "duplicate = 0.25\n"
      "session = blind\n"
      "quorum = 3\n");
  CHECK(cfg.seed == 42);
  CHECK(cfg.n_replicas == 5);
  CHECK(cfg.op_count == 17);
  CHECK(cfg.duplicate_rate == doctest::Approx(0.25));
  CHECK(cfg.session == SessionPolicy::BlindAdds);
  CHECK(cfg.read_quorum == 3);
  CHECK_THROWS_AS(sim::parse_scenario_config("nonsense\n"), std::invalid_argument);
  CHECK_THROWS_AS(sim::parse_scenario_config("bogus=1\n"), std::invalid_argument);
}

TEST_CASE("seeded faulty scenarios converge to the oracle") {
  for (uint64_t seed = 1; seed <= 40; ++seed) {
    auto result = sim::run_scenario(faulty(seed));
    CHECK(result.converged);
    if (!result.converged) {
      MESSAGE("seed ", seed, ": ", result.divergence->detail);
      break;
    }
    for (const auto& state : result.replica_states) {
      CHECK(state == result.oracle_state);
    }
  }
}

TEST_CASE("determinism: same seed, byte-identical states and metrics") {
  auto a = sim::run_scenario(faulty(77, 120));
  auto b = sim::run_scenario(faulty(77, 120));
  CHECK(a.state_digest == b.state_digest);
  CHECK(a.trace == b.trace);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (size_t i = 0; i < a.metrics.size(); ++i) CHECK(a.metrics[i] == b.metrics[i]);

  auto c = sim::run_scenario(faulty(78, 120));
  CHECK(c.state_digest != a.state_digest);
}

TEST_CASE("session policies converge, including read-A/write-B splits") {
  for (SessionPolicy policy :
       {SessionPolicy::ReadWriteSplit, SessionPolicy::SameReplica, SessionPolicy::BlindAdds}) {
    for (uint64_t seed = 200; seed < 215; ++seed) {
      ScenarioConfig cfg = faulty(seed, 60);
      cfg.session = policy;
      auto result = sim::run_scenario(cfg);
      CHECK(result.converged);
    }
  }
}

TEST_CASE("compaction at random points never changes outcomes") {
  for (uint64_t seed = 300; seed < 330; ++seed) {
    ScenarioConfig plain = faulty(seed, 70);
    ScenarioConfig compacting = plain;
    compacting.compact_rate = 0.3;
    auto a = sim::run_scenario(plain);
    auto b = sim::run_scenario(compacting);
    CHECK(a.converged);
    CHECK(b.converged);
    // Same client history, so the same final value with or without
    // compaction pauses.
    CHECK(a.oracle_state == b.oracle_state);
    CHECK(b.replica_states[0] == b.oracle_state);
  }
}

TEST_CASE("concurrent add wins over a remove with an older context") {
  auto store_a = std::make_shared<MemStore>();
  auto store_b = std::make_shared<MemStore>();
  Replica a("a", store_a);
  Replica b("b", store_b);

  // Both replicas hold x under (a,1).
  Delta d0 = a.coordinate_insert("s", "x", {});
  b.apply_delta("s", d0);
  Context observed = b.is_member("s", "x").second;

  // Concurrently: A re-adds x (superseding its own observation), B removes x
  // with the context it read earlier.
  Delta d1 = a.coordinate_insert("s", "x", a.is_member("s", "x").second);
  b.remove("s", "x", observed);

  // Exchange the concurrent ops.
  b.apply_delta("s", d1);
  a.remove("s", "x", observed);

  // The fresh dot was unseen by the remove context, so the add wins.
  Orswot at_a = a.read_all("s");
  Orswot at_b = b.read_all("s");
  CHECK(at_a == at_b);
  CHECK(at_a.value() == std::vector<Bytes>{"x"});
  CHECK(*at_a.find("x") == Dots{d1.dot()});

  auto report = sim::check_convergence({&a, &b}, "s");
  CHECK(report.ok);
}

TEST_CASE("check_convergence flags a disagreeing replica") {
  auto store_a = std::make_shared<MemStore>();
  auto store_b = std::make_shared<MemStore>();
  Replica a("a", store_a);
  Replica b("b", store_b);
  Delta d = a.coordinate_insert("s", "x", {});
  b.apply_delta("s", d);
  auto ok = sim::check_convergence({&a, &b}, "s");
  CHECK(ok.ok);

  b.coordinate_insert("s", "z", {});  // b drifts
  auto bad = sim::check_convergence({&a, &b}, "s");
  CHECK_FALSE(bad.ok);
  CHECK(bad.first_differing_element == "z");
}

TEST_CASE("mutation: dropping the context fold is caught and shrunk") {
  // Deliver deltas with their context stripped, which is exactly what
  // skipping the downstream context loop would do. Superseded dots then
  // survive at remote replicas and the oracle disagrees.
  sim::SimHooks hooks;
  hooks.delta_transform = [](const Delta& d, int) {
    Delta broken = d;
    broken.ctx.clear();
    return broken;
  };
  bool caught = false;
  for (uint64_t seed = 400; seed < 440 && !caught; ++seed) {
    ScenarioConfig cfg = faulty(seed, 120);
    cfg.element_universe = 6;  // force re-adds with observed contexts
    auto result = sim::run_scenario(cfg, hooks);
    if (!result.converged) {
      caught = true;
      REQUIRE(result.divergence.has_value());
      CHECK(result.divergence->minimized_op_count <= cfg.op_count);
      CHECK(result.divergence->minimized_op_count >= 1);
      CHECK_FALSE(result.divergence->minimized_trace.empty());
    }
  }
  CHECK(caught);
}

TEST_CASE("trace records every op with its delivery schedule") {
  auto result = sim::run_scenario(faulty(55, 20));
  size_t op_lines = 0;
  for (const auto& line : result.trace) {
    if (line.rfind("op=", 0) == 0) {
      ++op_lines;
      CHECK(line.find("coord=") != std::string::npos);
      CHECK(line.find("ctx_src=") != std::string::npos);
      CHECK(line.find("elem=") != std::string::npos);
    }
  }
  CHECK(op_lines == 20);
}
