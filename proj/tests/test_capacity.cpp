#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "lmrsp/capacity.hpp"
#include "oracles.hpp"

using namespace lmrsp;

namespace {

ChannelModel markov(std::vector<double> rates, double r) {
  ChannelModel m;
  m.kind = ChannelKind::two_state_markov;
  m.r = r;
  m.good_rates = std::move(rates);
  return m;
}

ChannelModel frozen(std::vector<double> rates, ChannelState state = {}) {
  ChannelModel m;
  m.kind = ChannelKind::frozen;
  m.frozen_state =
      state.empty() ? ChannelState(rates.size(), 1) : std::move(state);
  m.good_rates = std::move(rates);
  return m;
}

const NetworkGraph kTwoAdjacent{3, {{0, 1}, {1, 2}}};

}  // namespace

TEST_CASE("membership on the two-link frozen hull", "[capacity]") {
  const auto set = enumerate_schedules(kTwoAdjacent, InterferenceModel{1});
  const auto model = frozen({1.0, 1.0});

  SECTION("origin is inside any scaled region") {
    const auto res = capacity_membership({0.0, 0.0}, model, set, 0.3);
    REQUIRE(res.inside);
    CHECK(res.min_max_beta == Catch::Approx(0.0).margin(1e-9));
    CHECK(res.certificate->epsilon == Catch::Approx(0.3));
    CHECK(res.certificate->beta.empty());
  }
  SECTION("(0.4, 0.4) sits strictly inside") {
    const auto res = capacity_membership({0.4, 0.4}, model, set, 1.0);
    REQUIRE(res.inside);
    CHECK(res.min_max_beta == Catch::Approx(0.8).margin(1e-8));
    CHECK(res.certificate->epsilon == Catch::Approx(0.2).margin(1e-8));
  }
  SECTION("(0.6, 0.6) is outside") {
    const auto res = capacity_membership({0.6, 0.6}, model, set, 1.0);
    REQUIRE_FALSE(res.inside);
    REQUIRE(res.feasible);
    CHECK(res.min_max_beta == Catch::Approx(1.2).margin(1e-8));
  }
  SECTION("rates beyond the cone are infeasible") {
    const auto res = capacity_membership({2.0, -0.5}, model, set, 1.0);
    CHECK_FALSE(res.inside);
    CHECK_FALSE(res.feasible);
  }
  SECTION("theta range is validated") {
    CHECK_THROWS_AS(capacity_membership({0.1, 0.1}, model, set, 0.0),
                    ConfigError);
    CHECK_THROWS_AS(capacity_membership({0.1, 0.1}, model, set, 1.5),
                    ConfigError);
  }
}

TEST_CASE("membership guard trips on too many channel states", "[capacity]") {
  NetworkGraph star;
  star.node_count = 14;
  for (int i = 1; i < 14; ++i) star.edges.emplace_back(0, i);
  const auto set = enumerate_schedules(star, InterferenceModel{1});
  const auto model = markov(std::vector<double>(13, 1.0), 0.3);
  CHECK_THROWS_AS(
      capacity_membership(std::vector<double>(13, 0.01), model, set, 1.0),
      SizeLimitError);
}

TEST_CASE("membership on a two-state single link", "[capacity]") {
  NetworkGraph g{2, {{0, 1}}};
  const auto set = enumerate_schedules(g, InterferenceModel{1});
  const auto model = markov({1.0}, 0.3);
  const auto res = capacity_membership({0.4}, model, set, 1.0);
  REQUIRE(res.inside);
  // Only the good state can serve; beta there must be 0.8.
  CHECK(res.min_max_beta == Catch::Approx(0.8).margin(1e-8));
}

TEST_CASE("membership verdicts match basis enumeration on frozen channels",
          "[capacity]") {
  // Every 2- and 3-link shape, plus mixed frozen states and non-unit rates.
  const std::vector<NetworkGraph> graphs = {
      {3, {{0, 1}, {1, 2}}},                  // path, shared node
      {4, {{0, 1}, {2, 3}}},                  // two disjoint links
      {3, {{0, 1}, {1, 2}, {0, 2}}},          // triangle
      {4, {{0, 1}, {1, 2}, {2, 3}}},          // 3-link path
      {4, {{0, 1}, {0, 2}, {0, 3}}},          // star
      {5, {{0, 1}, {1, 2}, {3, 4}}},          // path + detached link
      {6, {{0, 1}, {2, 3}, {4, 5}}},          // perfect matching
  };
  std::mt19937 gen(555);
  std::uniform_real_distribution<double> rate_dist(0.25, 2.0);
  std::uniform_real_distribution<double> point(0.0, 1.5);
  for (const auto& g : graphs) {
    const int n = g.link_count();
    const auto set = enumerate_schedules(g, InterferenceModel{1});
    for (int variant = 0; variant < 3; ++variant) {
      std::vector<double> rates(n);
      for (auto& v : rates) v = variant == 0 ? 1.0 : rate_dist(gen);
      ChannelState state(n, 1);
      if (variant == 2) state[gen() % n] = 0;  // one frozen-bad link
      const auto model = frozen(rates, state);

      std::vector<std::vector<double>> columns;
      for (std::size_t k = 0; k < set.size(); ++k)
        columns.push_back(rate_vector(model, state, set, k));

      for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> a(n);
        for (int l = 0; l < n; ++l)
          a[l] = state[l] ? point(gen) * rates[l] * 0.5 : 0.0;
        const double theta = trial % 2 == 0 ? 1.0 : 0.8;

        const auto mine = capacity_membership(a, model, set, theta);
        const auto brute = oracles::min_sum_beta_bruteforce(a, columns);
        if (!brute.has_value()) {
          REQUIRE_FALSE(mine.feasible);
          continue;
        }
        REQUIRE(mine.feasible);
        REQUIRE(mine.min_max_beta == Catch::Approx(*brute).margin(1e-7));
        REQUIRE(mine.inside == (theta - *brute > 1e-8));
      }
    }
  }
}

TEST_CASE("certificates reconstruct their rate vector", "[capacity]") {
  std::mt19937 gen(556);
  std::uniform_real_distribution<double> point(0.0, 0.4);
  const auto set = enumerate_schedules(
      NetworkGraph{4, {{0, 1}, {1, 2}, {2, 3}}}, InterferenceModel{1});
  for (double r : {0.2, 0.5}) {
    const auto model = markov({1.0, 2.0, 1.0}, r);
    for (int trial = 0; trial < 10; ++trial) {
      std::vector<double> a{point(gen), point(gen), point(gen)};
      const auto res = capacity_membership(a, model, set, 1.0);
      if (!res.inside) continue;
      const auto rebuilt = reconstruct_rate(*res.certificate, model, set);
      for (int l = 0; l < 3; ++l)
        REQUIRE(rebuilt[l] == Catch::Approx(a[l]).margin(1e-8));
      REQUIRE(res.certificate->epsilon > 0.0);
    }
  }
}

TEST_CASE("membership scales linearly", "[capacity]") {
  const auto set = enumerate_schedules(kTwoAdjacent, InterferenceModel{1});
  const auto model = markov({1.0, 1.0}, 0.25);
  const std::vector<double> a{0.2, 0.15};
  const auto base = capacity_membership(a, model, set, 1.0);
  REQUIRE(base.feasible);
  for (double scale : {0.25, 0.5, 0.75}) {
    std::vector<double> scaled{a[0] * scale, a[1] * scale};
    const auto res = capacity_membership(scaled, model, set, 1.0);
    REQUIRE(res.feasible);
    CHECK(res.min_max_beta ==
          Catch::Approx(base.min_max_beta * scale).margin(1e-8));
  }
}

TEST_CASE("theta_min closed form", "[capacity]") {
  SECTION("delta = 1 removes the failure penalty") {
    for (double zeta : {0.0, 0.3}) {
      for (double rho : {0.01, 0.2}) {
        CHECK(theta_min(zeta, rho, 1.0, 0.4) ==
              Catch::Approx(1.0 - zeta_prime(zeta, rho)));
      }
    }
  }
  SECTION("zeta = 0, rho = 0, delta = r collapses to 1/(2-r)") {
    for (double r : {0.1, 0.5, 0.9})
      CHECK(theta_min(0.0, 0.0, r, r) == Catch::Approx(1.0 / (2.0 - r)));
  }
  SECTION("throughput-optimal limit") {
    CHECK(theta_min(0.0, 1e-12, 0.37, 1e-12) == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("monotonicity") {
    const double base = theta_min(0.1, 0.1, 0.5, 0.3);
    CHECK(theta_min(0.1, 0.1, 0.5, 0.4) <= base);   // r up
    CHECK(theta_min(0.1, 0.2, 0.5, 0.3) <= base);   // rho up
    CHECK(theta_min(0.2, 0.1, 0.5, 0.3) <= base);   // zeta up
    CHECK(theta_min(0.1, 0.1, 0.7, 0.3) >= base);   // delta up
    for (double r = 0.0; r <= 1.0; r += 0.1)
      for (double rho : {0.05, 0.1})
        CHECK(theta_min(0.0, rho, 0.5, r) <= theta_min(0.0, rho, 0.5, r - 0.1 < 0 ? 0.0 : r - 0.1) + 1e-12);
  }
}

TEST_CASE("upsilon estimates", "[capacity]") {
  NetworkGraph g{2, {{0, 1}}};
  const auto set = enumerate_schedules(g, InterferenceModel{1});
  Rng rng(60);
  SECTION("zero queue") {
    const auto e = estimate_upsilon({0}, frozen({1.0}), set, 1, rng);
    CHECK(e.value == 0.0);
  }
  SECTION("frozen good single link") {
    const auto e = estimate_upsilon({7}, frozen({1.0}), set, 1, rng);
    CHECK(e.value == 7.0);
  }
  SECTION("two-state single link averages over the law") {
    const auto e = estimate_upsilon({7}, markov({1.0}, 0.3), set, 1, rng);
    CHECK(e.value == Catch::Approx(3.5));
  }
  SECTION("monte carlo path agrees with the exact path") {
    const auto model = markov({1.0}, 0.3);
    const auto exact = estimate_upsilon({7}, model, set, 1, rng);
    const auto mc = estimate_upsilon({7}, model, set, 20000, rng, 1);
    CHECK(std::fabs(mc.value - exact.value) <= 4 * mc.std_error);
  }
}

TEST_CASE("upsilon dominates the nu-based lower bound", "[capacity]") {
  std::mt19937 gen(61);
  std::uniform_int_distribution<int> qd(0, 60);
  const auto set = enumerate_schedules(
      NetworkGraph{4, {{0, 1}, {1, 2}, {2, 3}}}, InterferenceModel{1});
  const auto model = markov({1.0, 0.5, 2.0}, 0.35);
  const double nu_val = nu(model, set);
  Rng rng(62);
  for (int trial = 0; trial < 300; ++trial) {
    QueueVector x{qd(gen), qd(gen), qd(gen)};
    const auto e = estimate_upsilon(x, model, set, 1, rng);
    REQUIRE(e.value >=
            nu_val / std::sqrt(3.0) * euclidean_norm(x) - 1e-9);
  }
}

TEST_CASE("psi and phi under a frozen channel", "[capacity]") {
  const auto set = enumerate_schedules(kTwoAdjacent, InterferenceModel{1});
  const auto model = frozen({1.0, 1.0});
  PolicyParams params;
  params.oracle = OracleKind::exact;
  params.rho = 0.01;
  params.alpha = 0.01;
  Rng rng(63);
  const QueueVector x{40, 25};
  const int horizon = 400;
  const auto est = estimate_psi_phi(x, 0, model.frozen_state, horizon, params,
                                    model, set, 50, rng);
  // With an unchanging channel the carried rate equals the realized rate,
  // so psi = rho * (phi minus the final summand's share).
  CHECK(std::fabs(est.psi.value - params.rho * est.phi.value) <=
        params.rho / horizon + 1e-12);
  CHECK(est.phi.value >= 0.99);
  CHECK(est.phi.value >= 0.0);
  CHECK(est.phi.value <= 1.0 + 3 * est.phi.std_error + 1e-12);
}

TEST_CASE("psi phi preconditions", "[capacity]") {
  const auto set = enumerate_schedules(kTwoAdjacent, InterferenceModel{1});
  const auto model = frozen({1.0, 1.0});
  PolicyParams params;
  Rng rng(64);
  CHECK_THROWS_AS(estimate_psi_phi({0, 0}, 0, model.frozen_state, 100, params,
                                   model, set, 10, rng),
                  ZeroQueueError);
  CHECK_THROWS_AS(estimate_psi_phi({1, 0}, 0, model.frozen_state, 1, params,
                                   model, set, 10, rng),
                  ConfigError);
}

TEST_CASE("psi is bounded by the matching argument", "[capacity]") {
  // Node-exclusive, two-state channel: psi <= (r + (1-r) rho) phi.
  const auto set = enumerate_schedules(
      NetworkGraph{5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}}, InterferenceModel{1});
  for (double r : {0.2, 0.5}) {
    const auto model = markov({1.0, 1.0, 1.0, 1.0}, r);
    PolicyParams params;
    params.oracle = OracleKind::noisy_oracle;
    params.delta = 0.5;
    params.rho = 0.02;
    params.alpha = 0.01;
    Rng rng(65);
    const QueueVector x{1000000, 400000, 700000, 100000};
    const int k0 = mixing_horizon(4, r);
    const int horizon = 100 * k0;
    const int reps = 60;
    double zsum = 0.0, zsq = 0.0;
    const double c = r + (1.0 - r) * params.rho;
    const double upsilon = estimate_upsilon(x, model, set, 1, rng).value;
    for (int i = 0; i < reps; ++i) {
      const auto [sched0, s0] =
          sample_stationary_initial(x, params, model, set, 10 * k0, rng);
      const auto sums =
          psi_phi_rollout(x, sched0, s0, horizon, params, model, set, rng);
      const double z = (sums.psi - c * sums.phi) / (horizon * upsilon);
      zsum += z;
      zsq += z * z;
    }
    const double mean = zsum / reps;
    const double var = std::max(0.0, (zsq - zsum * zsum / reps) / (reps - 1));
    const double se = std::sqrt(var / reps);
    CHECK(mean <= 3 * se);
  }
}

TEST_CASE("theta estimation", "[capacity]") {
  SECTION("frozen channel with an exact oracle is near optimal") {
    const auto set = enumerate_schedules(kTwoAdjacent, InterferenceModel{1});
    const auto model = frozen({1.0, 1.0});
    PolicyParams params;
    params.oracle = OracleKind::exact;
    params.rho = 0.01;
    params.alpha = 0.01;
    Rng grid_rng(66);
    const auto grid = default_direction_grid(2, 6, grid_rng);
    const auto est =
        estimate_theta(model, set, params, 300, grid, 40, 4242);
    CHECK(est.theta_hat >= 0.97);
    CHECK(est.grid_size == grid.size());
  }
  SECTION("uniform oracle on one link approaches 1 for small rho, alpha") {
    NetworkGraph g{2, {{0, 1}}};
    const auto set = enumerate_schedules(g, InterferenceModel{1});
    const auto model = frozen({1.0});
    PolicyParams params;
    params.oracle = OracleKind::uniform;  // delta = 1/2 here
    params.rho = 0.001;
    params.alpha = 0.001;
    const std::vector<std::vector<double>> grid{{1.0}};
    const auto est = estimate_theta(model, set, params, 4000, grid, 30, 77);
    CHECK(est.theta_hat >= 0.95);
  }
  SECTION("theta_hat respects the closed-form lower bound") {
    const auto set = enumerate_schedules(
        NetworkGraph{5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}},
        InterferenceModel{1});
    const double r = 0.3;
    const auto model = markov({1.0, 1.0, 1.0, 1.0}, r);
    PolicyParams params;
    params.oracle = OracleKind::noisy_oracle;
    params.delta = 0.5;
    params.rho = 0.02;
    params.alpha = 0.01;
    Rng grid_rng(67);
    const auto grid = default_direction_grid(4, 4, grid_rng);
    const int horizon = 150 * mixing_horizon(4, r);
    const auto est = estimate_theta(model, set, params, horizon, grid, 60, 91);
    const double bound = theta_min(0.0, params.rho, params.delta, r);
    double worst_se = 0.0;
    for (const auto& row : est.per_direction)
      worst_se = std::max(worst_se,
                          std::max(row.psi_std_error, row.phi_std_error));
    CHECK(est.theta_hat >= bound - 3 * worst_se - 0.02);
  }
  SECTION("worker count does not change the estimate") {
    const auto set = enumerate_schedules(kTwoAdjacent, InterferenceModel{1});
    const auto model = markov({1.0, 2.0}, 0.3);
    PolicyParams params;
    params.oracle = OracleKind::noisy_oracle;
    params.delta = 0.6;
    params.rho = 0.05;
    params.alpha = 0.02;
    Rng grid_rng(68);
    const auto grid = default_direction_grid(2, 5, grid_rng);
    const auto serial =
        estimate_theta(model, set, params, 200, grid, 20, 13, 1e6, -1, 1);
    const auto parallel =
        estimate_theta(model, set, params, 200, grid, 20, 13, 1e6, -1, 4);
    REQUIRE(serial.theta_hat == parallel.theta_hat);
    for (std::size_t g = 0; g < grid.size(); ++g) {
      REQUIRE(serial.per_direction[g].psi == parallel.per_direction[g].psi);
      REQUIRE(serial.per_direction[g].phi == parallel.per_direction[g].phi);
    }
  }
  SECTION("bad grids are rejected") {
    const auto set = enumerate_schedules(kTwoAdjacent, InterferenceModel{1});
    const auto model = frozen({1.0, 1.0});
    PolicyParams params;
    CHECK_THROWS_AS(
        estimate_theta(model, set, params, 100, {{0.5, 0.5}}, 5, 1),
        InvalidGridError);
    CHECK_THROWS_AS(estimate_theta(model, set, params, 100, {}, 5, 1),
                    InvalidGridError);
  }
}
