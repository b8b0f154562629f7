#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "v2g/user.hpp"
#include "v2g/verify.hpp"

using namespace v2g;

TEST_CASE("utility formula") {
  UserRealization u;
  u.desired_energy = 4.0;
  u.pref_deadline = 2.0;
  u.alpha = 0.07;
  u.arrival_slot = 0;

  SECTION("saturated energy with an immediate deadline approaches r^2") {
    // factor -> 1 as elapsed time -> 0
    double v = base_utility(u, 4.0, 1e-9);
    REQUIRE(v == Catch::Approx(16.0).epsilon(1e-6));
  }

  SECTION("past the preferred deadline only the degradation cost remains") {
    std::vector<Contract> cells = {{3.0, 2, 2.0}};  // elapsed 2 >= T_pref
    UtilityTable t = utility_table(u, cells);
    REQUIRE(t.entries[0].utility == Catch::Approx(-0.14).margin(1e-12));
  }

  SECTION("hand-evaluated interior point") {
    // r = 4, l = 2, T_pref = 2, elapsed 1, alpha = 0.07, BU = 3:
    // min(-4 + 16, 16) * (e^1 - 1)/(e^2 - 1) - 0.21 = 12 * 0.26894142... - 0.21
    std::vector<Contract> cells = {{2.0, 1, 3.0}};
    UtilityTable t = utility_table(u, cells);
    REQUIRE(t.entries[0].utility == Catch::Approx(3.0172970564399).margin(1e-10));
  }

  SECTION("energy term saturates via the min") {
    REQUIRE(base_utility(u, 4.0, 0.5) >= base_utility(u, 5.0, 0.5));
    REQUIRE(base_utility(u, 3.0, 0.5) <= base_utility(u, 4.0, 0.5));
  }

  SECTION("absolute deadline mode reproduces the printed denominator") {
    double rel = deadline_factor(2.0, 1.0, DeadlineFactorMode::Relative, 0);
    double abs0 = deadline_factor(2.0, 1.0, DeadlineFactorMode::Absolute, 0);
    REQUIRE(rel == Catch::Approx(abs0));  // identical when t_k = 0
    double abs5 = deadline_factor(2.0, 1.0, DeadlineFactorMode::Absolute, 5);
    REQUIRE(abs5 == 0.0);  // denominator non-positive -> clamped
  }
}

TEST_CASE("utility monotonicity in BU and deadline") {
  UserRealization u;
  u.desired_energy = 6.0;
  u.pref_deadline = 3.0;
  u.alpha = 0.07;
  std::vector<Contract> cells;
  for (int t = 1; t <= 4; ++t)
    for (double bu : {0.0, 1.0, 2.0}) cells.push_back({4.0, t, bu});
  UtilityTable tab = utility_table(u, cells);
  for (std::size_t i = 0; i < cells.size(); ++i)
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (cells[i].deadline == cells[j].deadline && cells[j].bu_cap > cells[i].bu_cap) {
        double drop = tab.entries[i].utility - tab.entries[j].utility;
        REQUIRE(drop == Catch::Approx(u.alpha * (cells[j].bu_cap - cells[i].bu_cap))
                            .margin(1e-12));
      }
      if (cells[i].bu_cap == cells[j].bu_cap && cells[j].deadline > cells[i].deadline)
        REQUIRE(tab.entries[j].utility <= tab.entries[i].utility + 1e-12);
    }
}

TEST_CASE("choice rule") {
  std::vector<ContractCost> costs(3);
  costs[0].contract = {2.0, 1, 0.0};
  costs[1].contract = {2.0, 2, 0.0};
  costs[2].contract = {2.0, 2, 2.0};
  for (auto& c : costs) c.cost = 1.0;
  double v_mk = 0.0;

  SECTION("rejects when every payoff is negative") {
    PriceMenu menu = price_fixed_beta(costs, v_mk, 0.5);
    UtilityTable t;
    for (auto& c : costs) t.entries.push_back({c.contract, 1.0});  // u - p = -0.5
    Choice ch = choose(t, menu);
    REQUIRE_FALSE(ch.accepted);
    REQUIRE(ch.surplus == 0.0);
  }

  SECTION("accepts at a zero-payoff tie with rejecting") {
    PriceMenu menu = price_cost_based(costs, v_mk);
    UtilityTable t;
    t.entries.push_back({costs[0].contract, 1.0});  // payoff exactly 0
    t.entries.push_back({costs[1].contract, 0.5});
    t.entries.push_back({costs[2].contract, 0.5});
    Choice ch = choose(t, menu);
    REQUIRE(ch.accepted);
    REQUIRE(ch.cell == 0);
    REQUIRE(ch.surplus == 0.0);
  }

  SECTION("payoff ties break toward lower BU, then earlier deadline") {
    PriceMenu menu = price_cost_based(costs, v_mk);
    UtilityTable t;
    t.entries.push_back({costs[0].contract, 2.2});
    t.entries.push_back({costs[1].contract, 2.2});
    t.entries.push_back({costs[2].contract, 2.2});
    Choice ch = choose(t, menu);
    REQUIRE(ch.accepted);
    REQUIRE(ch.cell == 0);  // same payoff 1.2 everywhere; BU 0, deadline 1 wins

    UtilityTable t2 = t;
    t2.entries[0].utility = 1.0;  // knock out the first cell
    Choice ch2 = choose(t2, menu);
    REQUIRE(ch2.cell == 1);  // BU 0 beats BU 2 at the same payoff
  }

  SECTION("infinite prices never win") {
    std::vector<ContractCost> with_inf = costs;
    with_inf[0].cost = kInf;
    PriceMenu menu = price_cost_based(with_inf, v_mk);
    UtilityTable t;
    t.entries.push_back({costs[0].contract, 100.0});
    t.entries.push_back({costs[1].contract, 1.5});
    t.entries.push_back({costs[2].contract, 1.4});
    Choice ch = choose(t, menu);
    REQUIRE(ch.cell == 1);
  }

  SECTION("grid mismatch is a structural error") {
    PriceMenu menu = price_cost_based(costs, v_mk);
    UtilityTable t;
    t.entries.push_back({costs[0].contract, 1.0});
    REQUIRE_THROWS_AS(choose(t, menu), std::invalid_argument);
  }

  SECTION("choice payoff equals the exhaustive scan") {
    Rng rng(99);
    for (int k = 0; k < 300; ++k) {
      PriceMenu menu = price_fixed_beta(costs, v_mk, rng.uniform(0, 2));
      UtilityTable t;
      for (auto& c : costs) t.entries.push_back({c.contract, rng.uniform(-1, 3)});
      Choice ch = choose(t, menu);
      double best = 0;
      for (std::size_t i = 0; i < costs.size(); ++i)
        best = std::max(best, t.entries[i].utility - menu.entries[i].price);
      if (ch.accepted) REQUIRE(ch.surplus == best);
      else REQUIRE(best <= 0);
    }
  }
}

TEST_CASE("population sampling") {
  PopulationParams pop;

  SECTION("supports are respected and the seed pins the sequence") {
    Rng a(123), b(123);
    for (int i = 0; i < 2000; ++i) {
      UserRealization u = sample_user(a, 3, pop);
      REQUIRE(u.desired_energy >= 2.0);
      REQUIRE(u.desired_energy <= 20.0);
      REQUIRE(u.initial_soc >= 2.0);
      REQUIRE(u.initial_soc + u.desired_energy <= 25.0 + 1e-12);
      REQUIRE(u.pref_deadline > 0.0);
      REQUIRE(u.alpha == 0.07);
      UserRealization v = sample_user(b, 3, pop);
      REQUIRE(u.desired_energy == v.desired_energy);
      REQUIRE(u.pref_deadline == v.pref_deadline);
      REQUIRE(u.initial_soc == v.initial_soc);
    }
  }

  SECTION("empirical energy mean matches the truncated-normal law") {
    // Oracle: E[X | a <= X <= b] for X ~ N(mu, sd), computed from the normal
    // pdf/cdf rather than from the sampler under test.
    double mu = pop.mean_energy, sd = pop.sd_energy;
    double za = (pop.energy_lo - mu) / sd, zb = (pop.energy_hi - mu) / sd;
    auto phi = [](double z) { return std::exp(-0.5 * z * z) / std::sqrt(2 * M_PI); };
    double Z = normal_cdf(zb) - normal_cdf(za);
    double mean = mu + sd * (phi(za) - phi(zb)) / Z;
    double var = sd * sd *
                 (1 + (za * phi(za) - zb * phi(zb)) / Z -
                  std::pow((phi(za) - phi(zb)) / Z, 2));

    const int n = 100000;
    Rng rng(2025);
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += sample_user(rng, 0, pop).desired_energy;
    double emp = acc / n;
    double se = std::sqrt(var / n);
    REQUIRE(std::abs(emp - mean) <= 3 * se);
  }

  SECTION("preferred deadline is exponential with mean 2.5") {
    const int n = 100000;
    Rng rng(77);
    double acc = 0;
    for (int i = 0; i < n; ++i) acc += sample_user(rng, 0, pop).pref_deadline;
    double emp = acc / n;
    double se = 2.5 / std::sqrt(double(n));
    REQUIRE(std::abs(emp - 2.5) <= 3 * se);
  }
}

TEST_CASE("participation condition suite") {
  auto rep = verify_participation(4000, 991);
  INFO(rep.name);
  REQUIRE(rep.failures == 0);
  REQUIRE(rep.cases == 4000);
}

TEST_CASE("cheaper V2G cells crowd out the BU=0 cell") {
  // With p = v - v_{-k} + beta and linear degradation, v^{BU} < v^0 - alpha*BU
  // for some BU >= 1 makes the BU = 0 cell at that (l, t) strictly dominated.
  Rng rng(4242);
  for (int k = 0; k < 300; ++k) {
    double alpha = 0.07;
    double v0 = rng.uniform(1, 3);
    double v1 = v0 - alpha * 1 - rng.uniform(0.01, 0.5);  // strict condition at BU=1
    double v2 = rng.uniform(0.2, 3.0);
    std::vector<ContractCost> costs(3);
    costs[0].contract = {2.0, 2, 0.0};
    costs[0].cost = v0;
    costs[1].contract = {2.0, 2, 1.0};
    costs[1].cost = v1;
    costs[2].contract = {2.0, 2, 2.0};
    costs[2].cost = v2;
    PriceMenu menu = price_fixed_beta(costs, rng.uniform(-1, 1), rng.uniform(0, 2));

    double u0 = rng.uniform(-2, 6);
    UtilityTable t;
    for (auto& c : costs) t.entries.push_back({c.contract, u0 - alpha * c.contract.bu_cap});
    Choice ch = choose(t, menu);
    if (ch.accepted) REQUIRE(menu.entries[ch.cell].contract.bu_cap > 0.0);
  }
}
