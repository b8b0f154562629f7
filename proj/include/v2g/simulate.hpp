#pragma once
// Day-long discrete-event simulation: Poisson arrivals, per-arrival menu
// pricing and contract choice, residual re-dispatch at every slot boundary,
// and metric collection.
//
// Random streams are keyed by (seed, purpose, index) so a replicate sees the
// same arrivals, users, and harvest trace no matter which sweep point it runs
// under; only the pricing and the resulting state evolution differ.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>
#include <thread>

#include "v2g/pricing.hpp"
#include "v2g/rng.hpp"
#include "v2g/station.hpp"
#include "v2g/user.hpp"

namespace v2g {

struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct ArrivalProcess {
  double peak_rate = 15.0;     // vehicles/hour, 08:00-17:00
  double offpeak_rate = 5.0;
  int peak_start = 8;
  int peak_end = 17;

  double rate(double t) const {
    return (t >= peak_start && t < peak_end) ? peak_rate : offpeak_rate;
  }
  double max_rate() const { return std::max(peak_rate, offpeak_rate); }
};

struct StationParams {
  int horizon = 24;
  double storage_capacity = 20.0;
  double storage_initial = 0.0;
  double eta_charge_cs = 0.95;
  double eta_discharge_cs = 0.95;
  double rate_max = 3.3;
  double rate_min = -3.3;
  double peak_price = 0.40;
  double offpeak_price = 0.15;
  int peak_start = 8;
  int peak_end = 17;
  double sell_margin = 0.001;  // g_t = c_t - margin
  std::vector<double> buy_price_override;   // full schedules, optional
  std::vector<double> sell_price_override;
  double harvest_mean = 2.0;
  double harvest_sd = 1.0;

  std::vector<double> buy_schedule() const {
    if (!buy_price_override.empty()) return buy_price_override;
    std::vector<double> c(horizon);
    for (int t = 0; t < horizon; ++t)
      c[t] = (t >= peak_start && t < peak_end) ? peak_price : offpeak_price;
    return c;
  }
  std::vector<double> sell_schedule() const {
    if (!sell_price_override.empty()) return sell_price_override;
    std::vector<double> g = buy_schedule();
    for (double& x : g) x -= sell_margin;
    return g;
  }
};

struct GridParams {
  double max_energy = 20.0;
  double energy_step = 1.0;
  int max_deadline_hours = 12;
  double bu_max = 10.0;
  double bu_step = 1.0;

  ContractGrid to_contract_grid(bool v2g_enabled, bool discharge_only) const {
    ContractGrid g;
    g.energies.clear();
    for (double l = energy_step; l <= max_energy + 1e-9; l += energy_step)
      g.energies.push_back(l);
    if (discharge_only) {
      std::vector<double> neg;
      for (double l : g.energies) neg.push_back(-l);
      g.energies.insert(g.energies.begin(), neg.rbegin(), neg.rend());
    }
    g.max_deadline_hours = max_deadline_hours;
    g.bu_values.clear();
    if (v2g_enabled)
      for (double b = 0; b <= bu_max + 1e-9; b += bu_step) g.bu_values.push_back(b);
    else
      g.bu_values.push_back(0.0);
    return g;
  }
};

struct SimConfig {
  StationParams station;
  PopulationParams population;
  ArrivalProcess arrivals;
  GridParams grid;
  StrategyConfig strategy;
  int replicates = 30;
  std::uint64_t seed = 1;
  bool v2g_enabled = true;
  bool discharge_only_enabled = false;
  int threads = 0;  // sweep-level parallelism; 0 -> hardware
  std::vector<double> sweep_beta;  // optional sweep axes consumed by the CLI
  std::vector<double> sweep_bmax;
};

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

struct SimMetrics {
  long arrivals = 0;
  long admitted = 0;
  double admitted_fraction = 0;
  double total_user_surplus = 0;
  double total_station_profit = 0;
  double avg_dwell_time = 0;      // hours per admitted EV; NaN when none
  double avg_additional_bu = 0;   // contracted BU per admitted EV
  double avg_energy = 0;          // contracted kWh per admitted EV
  int max_active_users = 0;
  double onpeak_purchases = 0;    // grid energy bought during peak hours
  double offpeak_purchases = 0;
  double peak_purchase = 0;       // max over slots of q_t
  std::vector<double> grid_purchases;      // per slot
  std::vector<double> mean_offered_price;  // per slot; NaN when no menu offered
  std::vector<int> active_users;           // per slot
  std::vector<std::pair<double, double>> acceptances;  // (price, marginal cost)
};

// ---------------------------------------------------------------------------
// Arrival sampling (thinning against the peak rate)
// ---------------------------------------------------------------------------

inline std::vector<double> sample_arrivals(const ArrivalProcess& process, double horizon,
                                           Rng& rng) {
  std::vector<double> times;
  double lam = process.max_rate();
  if (lam <= 0) return times;
  double t = 0;
  for (;;) {
    t += rng.exponential(1.0 / lam);
    if (t >= horizon) break;
    if (rng.uniform01() * lam < process.rate(t)) times.push_back(t);
  }
  return times;
}

// ---------------------------------------------------------------------------
// One simulated day
// ---------------------------------------------------------------------------

namespace detail_sim {
constexpr std::uint64_t kArrivalStream = 0xA221;
constexpr std::uint64_t kHarvestStream = 0x4A57;
constexpr std::uint64_t kUserStream = 0x05E2;

inline void check_slot_conservation(const StationState& st, const SlotDispatch& d) {
  double charge_bus = 0, discharge_bus = 0;
  for (std::size_t i = 0; i < d.evs.size(); ++i) {
    charge_bus += d.evs[i].charge / st.active_evs[i].eta_charge;
    discharge_bus += d.evs[i].discharge * st.active_evs[i].eta_discharge;
  }
  double bus = d.grid_buy - charge_bus + discharge_bus - d.grid_sell -
               (d.storage_in - d.storage_out);
  if (std::abs(bus) > 1e-6)
    throw SimError("slot " + std::to_string(st.clock) +
                   " violates energy conservation by " + std::to_string(bus));
}
}  // namespace detail_sim

inline StationState initial_state(const SimConfig& cfg, const std::vector<double>& harvest) {
  StationState st;
  st.horizon = cfg.station.horizon;
  st.clock = 0;
  st.storage_capacity = cfg.station.storage_capacity;
  st.storage_level = cfg.station.storage_initial;
  st.storage_initial = cfg.station.storage_initial;
  st.eta_charge_cs = cfg.station.eta_charge_cs;
  st.eta_discharge_cs = cfg.station.eta_discharge_cs;
  st.rate_max = cfg.station.rate_max;
  st.rate_min = cfg.station.rate_min;
  st.renewable_forecast = harvest;
  st.buy_price = cfg.station.buy_schedule();
  st.sell_price = cfg.station.sell_schedule();
  return st;
}

// lp_threads controls the menu batch fan-out; sweeps run replicates in
// parallel instead and keep each day single-threaded.
inline SimMetrics run_day(const SimConfig& cfg, std::uint64_t day_seed, int lp_threads = 1) {
  const int T = cfg.station.horizon;

  Rng harvest_rng = Rng::stream(day_seed, detail_sim::kHarvestStream);
  std::vector<double> harvest(T);
  for (int t = 0; t < T; ++t)
    harvest[t] = harvest_rng.truncated_normal(cfg.station.harvest_mean,
                                              cfg.station.harvest_sd, 0.0, kInf);

  Rng arrival_rng = Rng::stream(day_seed, detail_sim::kArrivalStream);
  std::vector<double> arrival_times = sample_arrivals(cfg.arrivals, T, arrival_rng);

  StationState state = initial_state(cfg, harvest);
  ContractGrid grid = cfg.grid.to_contract_grid(cfg.v2g_enabled, cfg.discharge_only_enabled);

  LpOptions lp_opt;
  lp_opt.threads = std::max(lp_threads, 1);

  SimMetrics m;
  m.arrivals = static_cast<long>(arrival_times.size());
  m.grid_purchases.assign(T, 0.0);
  m.active_users.assign(T, 0);
  m.mean_offered_price.assign(T, std::numeric_limits<double>::quiet_NaN());
  std::vector<double> price_sum(T, 0.0);
  std::vector<int> price_count(T, 0);

  double dwell_sum = 0, bu_sum = 0, energy_sum = 0;
  int next_id = 1;
  std::size_t next_arrival = 0;

  for (int slot = 0; slot < T; ++slot) {
    // Arrivals priced on the slot grid: an arrival during slot j-1 can first
    // charge in slot j, so it is processed once the clock reaches ceil(time).
    while (next_arrival < arrival_times.size() &&
           static_cast<int>(std::ceil(arrival_times[next_arrival])) == slot) {
      std::size_t idx = next_arrival++;
      Rng user_rng = Rng::stream(day_seed, detail_sim::kUserStream, idx);
      UserRealization user = sample_user(user_rng, slot, cfg.population);
      EvRecord ev = make_ev(user, next_id, cfg.population);

      std::vector<Contract> cells = grid.cells(slot, T);
      if (cells.empty()) continue;  // nothing offerable this late in the day

      MenuCosts mc = menu_costs(state, ev, cells, lp_opt);
      UtilityTable table = utility_table(user, cells, cfg.population);
      std::vector<double> utils(table.entries.size());
      for (std::size_t i = 0; i < utils.size(); ++i) utils[i] = table.entries[i].utility;

      StrategyConfig strat = cfg.strategy;
      strat.alpha = cfg.population.alpha;
      if (strat.kind == StrategyKind::ZetaOptimal && strat.y_table.empty() &&
          cfg.population.model == UtilityModel::AdditiveNoise) {
        // Deterministic utility part of the additive-noise population.
        UserRealization ref;
        ref.desired_energy = cfg.population.reference_energy;
        ref.pref_deadline = cfg.population.reference_pref_deadline;
        ref.arrival_slot = slot;
        strat.y_table.resize(cells.size());
        for (std::size_t i = 0; i < cells.size(); ++i)
          strat.y_table[i] = base_utility(ref, cells[i].energy,
                                          double(cells[i].deadline - slot),
                                          cfg.population.deadline_mode) -
                             cfg.population.alpha * cells[i].bu_cap;
        strat.noise = cfg.population.noise;
      }
      PriceMenu menu = apply_strategy(mc.cells, mc.v_minus_k, strat, &utils);

      double fin_sum = 0;
      int fin_n = 0;
      for (const MenuEntry& e : menu.entries)
        if (std::isfinite(e.price)) {
          fin_sum += e.price;
          ++fin_n;
        }
      if (fin_n > 0) {
        price_sum[slot] += fin_sum / fin_n;
        ++price_count[slot];
      }

      Choice ch = choose(table, menu);
      if (!ch.accepted) continue;

      const MenuEntry& cell = menu.entries[ch.cell];
      state = commit_contract(state, ev, cell.contract, cell.price);
      ++next_id;
      ++m.admitted;
      m.total_user_surplus += ch.surplus;
      double marginal = cell.cost - mc.v_minus_k;
      m.total_station_profit += cell.price - marginal;
      m.acceptances.emplace_back(cell.price, marginal);
      dwell_sum += cell.contract.deadline - slot;
      bu_sum += cell.contract.bu_cap;
      energy_sum += cell.contract.energy;
    }

    m.active_users[slot] = static_cast<int>(state.active_evs.size());
    m.max_active_users = std::max(m.max_active_users, m.active_users[slot]);

    MenuCosts plan = plan_without_user(state, lp_opt);
    if (!std::isfinite(plan.v_minus_k))
      throw SimError("residual dispatch infeasible at slot " + std::to_string(slot));
    const SlotDispatch& d = plan.residual_plan.slots[0];
    detail_sim::check_slot_conservation(state, d);

    m.grid_purchases[slot] = d.grid_buy;
    m.peak_purchase = std::max(m.peak_purchase, d.grid_buy);
    if (slot >= cfg.station.peak_start && slot < cfg.station.peak_end)
      m.onpeak_purchases += d.grid_buy;
    else
      m.offpeak_purchases += d.grid_buy;

    state = advance_time(state, d);
  }

  // Arrivals in the final hour cannot get a deadline and are turned away.
  // They still count toward the arrival total.
  if (std::abs(state.storage_level - cfg.station.storage_initial) > 1e-6)
    throw SimError("storage did not return to its boundary level");

  for (int t = 0; t < T; ++t)
    if (price_count[t] > 0) m.mean_offered_price[t] = price_sum[t] / price_count[t];

  m.admitted_fraction = m.arrivals > 0 ? double(m.admitted) / double(m.arrivals) : 0.0;
  double nan = std::numeric_limits<double>::quiet_NaN();
  m.avg_dwell_time = m.admitted > 0 ? dwell_sum / m.admitted : nan;
  m.avg_additional_bu = m.admitted > 0 ? bu_sum / m.admitted : nan;
  m.avg_energy = m.admitted > 0 ? energy_sum / m.admitted : nan;
  return m;
}

// ---------------------------------------------------------------------------
// Sweeps with common random numbers
// ---------------------------------------------------------------------------

enum class SweepAxis { Beta, StorageCapacity };

struct SweepPointResult {
  double value = 0;
  std::vector<SimMetrics> replicates;

  double mean(double (*f)(const SimMetrics&)) const {
    double acc = 0;
    long n = 0;
    for (const SimMetrics& m : replicates) {
      double v = f(m);
      if (std::isnan(v)) continue;
      acc += v;
      ++n;
    }
    return n ? acc / n : std::numeric_limits<double>::quiet_NaN();
  }
};

struct SweepResult {
  SweepAxis axis = SweepAxis::Beta;
  std::vector<SweepPointResult> points;
};

inline std::uint64_t replicate_seed(std::uint64_t seed, int replicate) {
  return splitmix64(seed ^ splitmix64(0xD0C5ULL + static_cast<std::uint64_t>(replicate)));
}

inline SimConfig with_axis_value(const SimConfig& base, SweepAxis axis, double value) {
  SimConfig cfg = base;
  switch (axis) {
    case SweepAxis::Beta: cfg.strategy.beta = value; break;
    case SweepAxis::StorageCapacity: cfg.station.storage_capacity = value; break;
  }
  return cfg;
}

inline SweepResult sweep(const SimConfig& base, SweepAxis axis,
                         const std::vector<double>& values, int replicates) {
  if (replicates < 1) throw SimError("need at least one replicate");
  SweepResult result;
  result.axis = axis;
  result.points.resize(values.size());
  for (std::size_t p = 0; p < values.size(); ++p) {
    result.points[p].value = values[p];
    result.points[p].replicates.resize(replicates);
  }

  struct Task {
    std::size_t point;
    int replicate;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < values.size(); ++p)
    for (int r = 0; r < replicates; ++r) tasks.push_back({p, r});

  unsigned hw = base.threads > 0 ? static_cast<unsigned>(base.threads)
                                 : std::max(1u, std::thread::hardware_concurrency());
  unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(tasks.size()));

  std::vector<std::string> errors(tasks.size());
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < tasks.size(); i += workers) {
      const Task& t = tasks[i];
      try {
        SimConfig cfg = with_axis_value(base, axis, values[t.point]);
        result.points[t.point].replicates[t.replicate] =
            run_day(cfg, replicate_seed(base.seed, t.replicate));
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!errors[i].empty())
      throw SimError("replicate " + std::to_string(tasks[i].replicate) + " at point " +
                     std::to_string(values[tasks[i].point]) + " failed: " + errors[i]);
  return result;
}

// ---------------------------------------------------------------------------
// Paired one-sided trend test
// ---------------------------------------------------------------------------

// 95% one-sided Student t quantiles by degrees of freedom (1-based index).
inline double t95(int df) {
  static const double table[] = {0,     6.314, 2.920, 2.353, 2.132, 2.015, 1.943,
                                 1.895, 1.860, 1.833, 1.812, 1.796, 1.782, 1.771,
                                 1.761, 1.753, 1.746, 1.740, 1.734, 1.729, 1.725,
                                 1.721, 1.717, 1.714, 1.711, 1.708, 1.706, 1.703,
                                 1.701, 1.699, 1.697};
  if (df <= 0) return kInf;
  if (df <= 30) return table[df];
  return 1.645 + 2.35 / df;  // close enough beyond the table
}

struct TrendCheck {
  double mean_diff = 0;
  double t_stat = 0;
  int pairs = 0;
  bool holds = false;  // "A >= B" not rejected at 95%
};

// Tests the claim mean(a - b) >= 0 on paired replicates. The claim stands
// unless the one-sided t-test rejects it at the 95% level.
inline TrendCheck paired_trend_geq(const std::vector<double>& a, const std::vector<double>& b) {
  TrendCheck tc;
  std::vector<double> d;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
    if (!std::isnan(a[i]) && !std::isnan(b[i])) d.push_back(a[i] - b[i]);
  tc.pairs = static_cast<int>(d.size());
  if (tc.pairs == 0) return tc;
  double mean = 0;
  for (double x : d) mean += x;
  mean /= tc.pairs;
  tc.mean_diff = mean;
  if (tc.pairs == 1) {
    tc.t_stat = mean >= 0 ? kInf : -kInf;
    tc.holds = mean >= 0;
    return tc;
  }
  double var = 0;
  for (double x : d) var += (x - mean) * (x - mean);
  var /= (tc.pairs - 1);
  double se = std::sqrt(var / tc.pairs);
  if (se == 0) {
    tc.t_stat = mean > 0 ? kInf : (mean < 0 ? -kInf : 0);
    tc.holds = mean >= 0;
    return tc;
  }
  tc.t_stat = mean / se;
  tc.holds = tc.t_stat >= -t95(tc.pairs - 1);
  return tc;
}

}  // namespace v2g
