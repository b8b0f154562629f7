#pragma once
// Executable property suites. Each runner draws randomized desk-scale
// instances, checks one result family, and reports counts plus the worst
// slack it saw. The CLI exposes them behind --verify; the acceptance harness
// reuses them at its own instance counts.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "v2g/lp.hpp"
#include "v2g/pricing.hpp"
#include "v2g/rng.hpp"
#include "v2g/station.hpp"
#include "v2g/user.hpp"

namespace v2g {

struct VerifyReport {
  std::string name;
  long cases = 0;
  long failures = 0;
  double worst_slack = 0;
  std::string note;
  bool passed() const { return failures == 0; }
};

// ---------------------------------------------------------------------------
// Randomized desk-scale instances
// ---------------------------------------------------------------------------

struct RandomInstance {
  StationState state;
  EvRecord newcomer;
  Contract contract;
};

inline RandomInstance random_instance(Rng& rng, int max_horizon = 12, int max_evs = 4,
                                      bool allow_discharge_only = false) {
  RandomInstance inst;
  StationState& st = inst.state;
  st.horizon = rng.uniform_int(3, max_horizon);
  st.clock = 0;
  st.rate_max = rng.uniform(1.5, 4.0);
  st.rate_min = -st.rate_max;
  st.storage_capacity = rng.uniform01() < 0.25 ? 0.0 : rng.uniform(0.5, 10.0);
  st.storage_level = rng.uniform(0, st.storage_capacity);
  st.storage_initial = rng.uniform(0, st.storage_capacity);
  st.eta_charge_cs = rng.uniform(0.85, 1.0);
  st.eta_discharge_cs = rng.uniform(0.85, 1.0);

  double c_off = rng.uniform(0.1, 0.3);
  double c_on = c_off + rng.uniform(0.0, 0.4);
  double margin = rng.uniform(0.001, 0.05);
  int on_a = rng.uniform_int(0, st.horizon - 1);
  int on_b = rng.uniform_int(on_a, st.horizon - 1);
  st.renewable_forecast.resize(st.horizon);
  st.buy_price.resize(st.horizon);
  st.sell_price.resize(st.horizon);
  for (int t = 0; t < st.horizon; ++t) {
    st.renewable_forecast[t] = rng.uniform01() < 0.3 ? 0.0 : rng.uniform(0, 3);
    double c = (t >= on_a && t <= on_b) ? c_on : c_off;
    st.buy_price[t] = c;
    st.sell_price[t] = std::max(c - margin, 0.0);
  }

  int n_ev = rng.uniform_int(0, max_evs);
  for (int i = 0; i < n_ev; ++i) {
    EvRecord e;
    e.id = i + 1;
    e.arrival_time = 0;
    e.deadline = rng.uniform_int(1, st.horizon);
    e.soc_min = rng.uniform(0, 2);
    e.soc_max = e.soc_min + rng.uniform(3, 12);
    e.soc = rng.uniform(e.soc_min, e.soc_max);
    e.eta_charge = rng.uniform(0.85, 1.0);
    e.eta_discharge = rng.uniform(0.85, 1.0);
    int window = e.deadline - st.clock;
    double reach = std::min(st.rate_max * window, e.soc_max - e.soc);
    e.residual_energy = rng.uniform(0, 0.9 * reach);
    e.residual_bu = rng.uniform(0, 5);
    st.active_evs.push_back(e);
  }

  EvRecord& k = inst.newcomer;
  k.id = 1000;
  k.arrival_time = 0;
  k.soc_min = rng.uniform(0, 2);
  k.soc_max = k.soc_min + rng.uniform(3, 12);
  k.soc = rng.uniform(k.soc_min, k.soc_max);
  k.eta_charge = rng.uniform(0.85, 1.0);
  k.eta_discharge = rng.uniform(0.85, 1.0);

  Contract& c = inst.contract;
  c.deadline = rng.uniform_int(1, st.horizon);
  int window = c.deadline - st.clock;
  double reach = std::min(st.rate_max * window, k.soc_max - k.soc);
  if (allow_discharge_only && rng.uniform01() < 0.25) {
    c.energy = -rng.uniform(0, std::min(st.rate_max * window, k.soc - k.soc_min));
  } else if (rng.uniform01() < 0.1) {
    c.energy = reach + rng.uniform(0.5, 3.0);  // deliberately unfulfillable
  } else {
    c.energy = rng.uniform(0, 0.95 * reach);
  }
  c.bu_cap = rng.uniform(0, 6);
  return inst;
}

// ---------------------------------------------------------------------------
// Suite 1: optimal schedules never charge and discharge simultaneously, and
// the normalization that enforces this exactly never raises the cost.
// ---------------------------------------------------------------------------

inline VerifyReport verify_no_simultaneous_flow(long instances, std::uint64_t seed,
                                                const LpOptions& opt = {}) {
  VerifyReport rep;
  rep.name = "optimal schedules: r+ r- = 0 and e s = 0 after normalization";
  Rng rng = Rng::stream(seed, 0x7401);
  long solved = 0;
  while (solved < instances) {
    RandomInstance inst = random_instance(rng, 12, 4, true);
    ContractCost cc;
    try {
      cc = contract_cost(inst.state, inst.newcomer, inst.contract, opt);
    } catch (const LpNumericalError&) {
      ++rep.failures;
      ++solved;
      continue;
    }
    if (!std::isfinite(cc.cost)) continue;
    ++solved;
    ++rep.cases;
    ScheduleAudit a = audit_schedule(inst.state, &inst.newcomer, &inst.contract, cc.schedule);
    double renorm = schedule_objective(inst.state, cc.schedule);
    double slack = std::max({a.complementarity, renorm - cc.cost,
                             a.max_violation <= 1e-6 ? 0.0 : a.max_violation});
    rep.worst_slack = std::max(rep.worst_slack, slack);
    if (a.complementarity != 0.0 || renorm > cc.cost + 1e-9 || a.max_violation > 1e-6)
      ++rep.failures;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Suite 2: a looser battery-utilization cap never costs more.
// ---------------------------------------------------------------------------

inline VerifyReport verify_bu_monotonicity(long instances, std::uint64_t seed,
                                           const LpOptions& opt = {}) {
  VerifyReport rep;
  rep.name = "menu costs non-increasing in the battery-utilization cap";
  Rng rng = Rng::stream(seed, 0x7402);
  for (long n = 0; n < instances; ++n) {
    RandomInstance inst = random_instance(rng);
    std::vector<double> bu_values;
    for (int b = 0; b <= 4; ++b) bu_values.push_back(b * rng.uniform(0.5, 1.5));
    std::sort(bu_values.begin(), bu_values.end());
    std::vector<Contract> cells;
    for (double bu : bu_values) cells.push_back({inst.contract.energy, inst.contract.deadline, bu});
    MenuCosts mc = menu_costs(inst.state, inst.newcomer, cells, opt);
    for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
      ++rep.cases;
      double lo_bu = mc.cells[i].cost;      // smaller cap
      double hi_bu = mc.cells[i + 1].cost;  // larger cap
      if (!std::isfinite(lo_bu) && !std::isfinite(hi_bu)) continue;
      double slack = hi_bu - lo_bu;  // must be <= tolerance
      if (std::isfinite(slack)) rep.worst_slack = std::max(rep.worst_slack, slack);
      if (hi_bu > lo_bu + 1e-7) ++rep.failures;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Suite 3: welfare-optimal pricing. For any realized utility table the user's
// choice under cost-based (and worst-case) pricing attains the social-welfare
// optimum max{max_cells(u - v + v_{-k}), 0}.
// ---------------------------------------------------------------------------

inline VerifyReport verify_welfare_optimality(long instances, std::uint64_t seed) {
  VerifyReport rep;
  rep.name = "cost-based and worst-case pricing maximize ex-post welfare";
  Rng rng = Rng::stream(seed, 0x7403);
  // Dyadic inputs (multiples of 1/64) keep every sum exact in doubles, so the
  // welfare identity can be asserted with no tolerance at all.
  auto dyadic = [&rng](double lo, double hi) {
    return std::round(rng.uniform(lo, hi) * 64.0) / 64.0;
  };
  for (long n = 0; n < instances; ++n) {
    int cells = rng.uniform_int(1, 40);
    double v_minus_k = dyadic(-3, 3);
    std::vector<ContractCost> costs(cells);
    std::vector<double> lower(cells), utils(cells);
    for (int i = 0; i < cells; ++i) {
      costs[i].contract = {double(i + 1), i + 1, 0.0};
      costs[i].cost = rng.uniform01() < 0.15 ? kInf : v_minus_k + dyadic(-2, 6);
      lower[i] = dyadic(-4, 2);
      utils[i] = lower[i] + dyadic(0, 6);  // realized utility respects its endpoint
    }
    double best_gain = 0;  // welfare of "reject" is 0
    for (int i = 0; i < cells; ++i)
      if (std::isfinite(costs[i].cost))
        best_gain = std::max(best_gain, utils[i] - (costs[i].cost - v_minus_k));

    for (int variant = 0; variant < 2; ++variant) {
      PriceMenu menu = variant == 0 ? price_cost_based(costs, v_minus_k)
                                    : price_worst_case(costs, v_minus_k, lower);
      UtilityTable table;
      for (int i = 0; i < cells; ++i) table.entries.push_back({costs[i].contract, utils[i]});
      Choice ch = choose(table, menu);
      double welfare = 0;
      if (ch.accepted) {
        const MenuEntry& e = menu.entries[ch.cell];
        welfare = (utils[ch.cell] - e.price) + (e.price - (e.cost - menu.v_minus_k));
      }
      ++rep.cases;
      double slack = std::abs(welfare - best_gain);
      rep.worst_slack = std::max(rep.worst_slack, slack);
      if (slack != 0.0) ++rep.failures;  // exact: all inputs are dyadic
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Suite 4: fixed-offset profit law. Expected profit of the beta strategy is
// beta * max_cells P(U >= v - v_{-k} + beta), checked by Monte Carlo against
// the known noise distribution.
// ---------------------------------------------------------------------------

inline VerifyReport verify_profit_law(long users_per_beta, std::uint64_t seed,
                                      const std::vector<double>& betas = {0.25, 0.8, 1.6}) {
  VerifyReport rep;
  rep.name = "fixed-beta expected profit equals beta * best acceptance probability";
  Rng rng = Rng::stream(seed, 0x7404);

  int cells = 12;
  double v_minus_k = rng.uniform(-1, 1);
  std::vector<ContractCost> costs(cells);
  std::vector<double> y(cells);
  for (int i = 0; i < cells; ++i) {
    costs[i].contract = {double(i + 1), i + 1, 0.0};
    costs[i].cost = v_minus_k + rng.uniform(0, 3);
    y[i] = rng.uniform(0, 3);
  }
  NoiseDistribution noise = NoiseDistribution::uniform(-1.0, 2.0);

  double headroom = -kInf;
  for (int i = 0; i < cells; ++i)
    headroom = std::max(headroom, y[i] - (costs[i].cost - v_minus_k));

  for (double beta : betas) {
    PriceMenu menu = price_fixed_beta(costs, v_minus_k, beta);
    long accepted = 0;
    for (long u = 0; u < users_per_beta; ++u) {
      double x = noise.sample(rng);
      UtilityTable table;
      for (int i = 0; i < cells; ++i)
        table.entries.push_back({costs[i].contract, y[i] + x});
      Choice ch = choose(table, menu);
      if (ch.accepted) ++accepted;
    }
    double p_hat = double(accepted) / double(users_per_beta);
    double expected = beta * noise.prob_geq(beta - headroom);
    double empirical = beta * p_hat;
    double p_true = noise.prob_geq(beta - headroom);
    double se = beta * std::sqrt(std::max(p_true * (1 - p_true), 1e-12) /
                                 double(users_per_beta));
    ++rep.cases;
    double slack = std::abs(empirical - expected);
    rep.worst_slack = std::max(rep.worst_slack, se > 0 ? slack / se : slack);
    if (slack > 3 * se + 1e-12) ++rep.failures;
  }
  rep.note = "slack reported in standard errors";
  return rep;
}

// ---------------------------------------------------------------------------
// Suite 5: V2G participation condition. The user picks a cell with BU >= 1
// exactly when some BU >= 1 cell beats every BU = 0 cell and the reject
// option (strictly, per the BU-ascending tie break).
// ---------------------------------------------------------------------------

inline VerifyReport verify_participation(long instances, std::uint64_t seed) {
  VerifyReport rep;
  rep.name = "V2G participation condition matches the user's choice";
  Rng rng = Rng::stream(seed, 0x7405);
  for (long n = 0; n < instances; ++n) {
    int base = rng.uniform_int(1, 6);
    int n_bu = rng.uniform_int(2, 4);
    std::vector<ContractCost> costs;
    std::vector<double> utils;
    for (int i = 0; i < base; ++i) {
      double u0 = rng.uniform(-1, 4);
      double alpha = rng.uniform(0.02, 0.4);
      for (int b = 0; b < n_bu; ++b) {
        ContractCost cc;
        cc.contract = {double(i + 1), i + 1, double(b)};
        cc.cost = rng.uniform(-1, 3);
        costs.push_back(cc);
        utils.push_back(u0 - alpha * b);
      }
    }
    double v_minus_k = rng.uniform(-1, 1);
    double beta = rng.uniform(0, 1.5);
    // Quantize payoffs so exact ties actually occur now and then.
    PriceMenu menu = price_fixed_beta(costs, v_minus_k, beta);
    UtilityTable table;
    for (std::size_t i = 0; i < costs.size(); ++i)
      table.entries.push_back({costs[i].contract, std::round(utils[i] * 8) / 8});
    for (auto& e : menu.entries) e.price = std::round(e.price * 8) / 8;

    Choice ch = choose(table, menu);
    bool chose_v2g = ch.accepted && menu.entries[ch.cell].contract.bu_cap >= 1;

    double m0 = -kInf, m1 = -kInf;
    for (std::size_t i = 0; i < costs.size(); ++i) {
      double payoff = table.entries[i].utility - menu.entries[i].price;
      if (costs[i].contract.bu_cap >= 1) m1 = std::max(m1, payoff);
      else m0 = std::max(m0, payoff);
    }
    bool condition = m1 >= 0 && m1 > m0;

    ++rep.cases;
    if (chose_v2g != condition) ++rep.failures;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Suite 6: the zeta offset dominates every fixed beta under additive-noise
// utilities (paired Monte Carlo, common draws).
// ---------------------------------------------------------------------------

inline VerifyReport verify_zeta_dominance(long users, std::uint64_t seed,
                                          bool truncated_normal_noise = false) {
  VerifyReport rep;
  rep.name = truncated_normal_noise
                 ? "zeta offset maximizes expected profit (truncated-normal noise)"
                 : "zeta offset maximizes expected profit (uniform noise)";
  Rng rng = Rng::stream(seed, truncated_normal_noise ? 0x7407 : 0x7406);

  int cells = 10;
  double v_minus_k = rng.uniform(-1, 1);
  std::vector<ContractCost> costs(cells);
  std::vector<double> y(cells);
  for (int i = 0; i < cells; ++i) {
    costs[i].contract = {double(i + 1), i + 1, 0.0};
    costs[i].cost = v_minus_k + rng.uniform(0, 2.5);
    y[i] = rng.uniform(0, 2.5);
  }
  NoiseDistribution noise = truncated_normal_noise
                                ? NoiseDistribution::truncated_normal(0.5, 0.8, -1.5, 2.5)
                                : NoiseDistribution::uniform(-0.5, 1.5);

  double zeta = compute_zeta(costs, v_minus_k, y, noise);
  double headroom = -kInf;
  for (int i = 0; i < cells; ++i)
    headroom = std::max(headroom, y[i] - (costs[i].cost - v_minus_k));
  double beta_hi = std::max(headroom + noise.support_hi(), 0.0);

  // Common noise draws across every offset.
  std::vector<double> draws(users);
  for (long u = 0; u < users; ++u) draws[u] = noise.sample(rng);

  // Under an additive offset delta, the user accepts iff X >= delta - headroom,
  // and the station then earns exactly delta.
  auto profits = [&](double delta, std::vector<double>& out) {
    out.resize(draws.size());
    for (std::size_t u = 0; u < draws.size(); ++u)
      out[u] = draws[u] >= delta - headroom ? delta : 0.0;
  };

  std::vector<double> pz, pb;
  profits(zeta, pz);
  for (double beta = 0.0; beta <= beta_hi + 1e-9; beta += 0.05) {
    profits(beta, pb);
    double mean_d = 0;
    for (std::size_t u = 0; u < pb.size(); ++u) mean_d += pz[u] - pb[u];
    mean_d /= double(pb.size());
    double var = 0;
    for (std::size_t u = 0; u < pb.size(); ++u) {
      double d = pz[u] - pb[u] - mean_d;
      var += d * d;
    }
    var /= double(pb.size()) * std::max<double>(1.0, double(pb.size()) - 1);
    double se = std::sqrt(var);
    ++rep.cases;
    double slack = -mean_d;  // positive when beta beats zeta
    rep.worst_slack = std::max(rep.worst_slack, se > 0 ? slack / se : slack);
    if (mean_d < -2 * se - 1e-12) ++rep.failures;
  }
  rep.note = "slack reported in standard errors";
  return rep;
}

// ---------------------------------------------------------------------------
// Suite 7: full-information extraction. Accepted users keep zero surplus and
// the station pockets exactly the best cell gain, matching an exhaustive scan.
// ---------------------------------------------------------------------------

inline VerifyReport verify_clairvoyant_extraction(long instances, std::uint64_t seed) {
  VerifyReport rep;
  rep.name = "clairvoyant pricing extracts exactly the best cell gain";
  Rng rng = Rng::stream(seed, 0x7408);
  auto dyadic = [&rng](double lo, double hi) {
    return std::round(rng.uniform(lo, hi) * 64.0) / 64.0;
  };
  for (long n = 0; n < instances; ++n) {
    int cells = rng.uniform_int(1, 30);
    double v_minus_k = dyadic(-2, 2);
    std::vector<ContractCost> costs(cells);
    std::vector<double> utils(cells);
    for (int i = 0; i < cells; ++i) {
      costs[i].contract = {double(i % 6 + 1), i / 6 + 1, double(i % 3)};
      costs[i].cost = rng.uniform01() < 0.1 ? kInf : v_minus_k + dyadic(-1, 4);
      utils[i] = dyadic(-2, 6);
    }
    PriceMenu menu = price_clairvoyant(costs, v_minus_k, utils);
    double best = 0;
    for (int i = 0; i < cells; ++i)
      if (std::isfinite(costs[i].cost))
        best = std::max(best, utils[i] - costs[i].cost + v_minus_k);

    UtilityTable table;
    for (int i = 0; i < cells; ++i) table.entries.push_back({costs[i].contract, utils[i]});
    Choice ch = choose(table, menu);
    ++rep.cases;
    bool ok;
    if (ch.accepted) {
      double profit = menu.entries[ch.cell].price - (menu.entries[ch.cell].cost - v_minus_k);
      ok = ch.surplus == 0.0 && profit == best;
      rep.worst_slack = std::max(rep.worst_slack, std::abs(profit - best));
      rep.worst_slack = std::max(rep.worst_slack, std::abs(ch.surplus));
    } else {
      ok = best <= 0.0;
    }
    if (!ok) ++rep.failures;
  }
  return rep;
}

inline int print_reports(const std::vector<VerifyReport>& reports) {
  int bad = 0;
  for (const VerifyReport& r : reports) {
    std::printf("[%s] %s: %ld cases, %ld failures, worst slack %.3g%s%s\n",
                r.passed() ? "PASS" : "FAIL", r.name.c_str(), r.cases, r.failures,
                r.worst_slack, r.note.empty() ? "" : " — ", r.note.c_str());
    if (!r.passed()) ++bad;
  }
  return bad;
}

}  // namespace v2g
