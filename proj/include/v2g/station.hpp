#pragma once
// Charging-station state and the cost oracle: translation of a contract
// request into a linear program, schedule normalization, and the state
// evolution used by the day simulator.
//
// Conventions. Time is slotted in hours; slot t covers [t, t+1). For an EV,
// r+ / r- are the battery-side charge and discharge amounts per slot; the bus
// supplies r+/eta_c when charging and receives eta_dc * r- when discharging.
// For the station storage, e is the bus-side energy taken out (draining the
// battery by e/eta_d) and s is the bus-side energy stored (raising it by
// s*eta_c). Harvested energy charges the storage directly.

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2g/lp.hpp"

namespace v2g {

struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

struct EvRecord {
  int id = 0;
  int arrival_time = 0;        // slot index t_k
  double residual_energy = 0;  // net energy still owed (negative in discharge mode)
  int deadline = 0;            // slot index; EV gone from this slot on
  double residual_bu = 0;      // additional battery-utilization budget left
  double soc = 0;              // current battery level
  double soc_min = 2.0;
  double soc_max = 25.0;
  double eta_charge = 0.95;
  double eta_discharge = 0.95;
};

struct StationState {
  int clock = 0;
  double storage_level = 0;
  double storage_capacity = 20.0;
  double storage_initial = 0;  // enforced again at the end of the horizon
  double eta_charge_cs = 0.95;
  double eta_discharge_cs = 0.95;
  std::vector<double> renewable_forecast;  // size horizon
  std::vector<double> buy_price;           // c_t, size horizon
  std::vector<double> sell_price;          // g_t, size horizon
  int horizon = 24;
  double rate_min = -3.3;
  double rate_max = 3.3;
  std::vector<EvRecord> active_evs;

  void validate() const {
    if (horizon <= 0) throw StateError("horizon must be positive");
    if (clock < 0 || clock >= horizon) throw StateError("clock outside horizon");
    if (static_cast<int>(renewable_forecast.size()) != horizon ||
        static_cast<int>(buy_price.size()) != horizon ||
        static_cast<int>(sell_price.size()) != horizon)
      throw StateError("tariff/forecast schedules must cover the horizon");
    if (storage_capacity < 0 || storage_level < -1e-9 ||
        storage_level > storage_capacity + 1e-9)
      throw StateError("storage level outside [0, capacity]");
    if (storage_initial < -1e-9 || storage_initial > storage_capacity + 1e-9)
      throw StateError("storage boundary level outside [0, capacity]");
    if (!(rate_min < 0 && rate_max > 0)) throw StateError("need rate_min < 0 < rate_max");
    for (int t = 0; t < horizon; ++t)
      if (buy_price[t] < sell_price[t])
        throw StateError("arbitrage opportunity: buy price below sell price at slot " +
                         std::to_string(t));
    for (const EvRecord& e : active_evs) {
      if (e.deadline <= clock || e.deadline > horizon)
        throw StateError("EV " + std::to_string(e.id) + " deadline outside residual horizon");
      if (e.soc < e.soc_min - 1e-9 || e.soc > e.soc_max + 1e-9)
        throw StateError("EV " + std::to_string(e.id) + " soc outside its bounds");
      if (e.residual_bu < -1e-9) throw StateError("negative battery-utilization budget");
      if (!(e.eta_charge > 0 && e.eta_charge <= 1 && e.eta_discharge > 0 && e.eta_discharge <= 1))
        throw StateError("EV efficiency outside (0,1]");
    }
  }
};

struct Contract {
  double energy = 0;   // l; > 0 charging, <= 0 discharge-only
  int deadline = 0;    // t_dead (slot index, exclusive)
  double bu_cap = 0;   // additional battery utilization BU >= 0
};

inline bool operator==(const Contract& a, const Contract& b) {
  return a.energy == b.energy && a.deadline == b.deadline && a.bu_cap == b.bu_cap;
}

struct ContractGrid {
  std::vector<double> energies = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10,
                                  11, 12, 13, 14, 15, 16, 17, 18, 19, 20};
  int max_deadline_hours = 12;
  std::vector<double> bu_values = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  // Deterministic cell order: energy outer, deadline, then BU.
  std::vector<Contract> cells(int arrival_slot, int horizon) const {
    std::vector<Contract> out;
    int max_dl = std::min(arrival_slot + max_deadline_hours, horizon);
    for (double l : energies)
      for (int t = arrival_slot + 1; t <= max_dl; ++t)
        for (double bu : bu_values) out.push_back({l, t, bu});
    return out;
  }
};

// Normalized dispatch of one slot.
struct EvDispatch {
  double charge = 0;     // r+
  double discharge = 0;  // r-
};

struct SlotDispatch {
  double grid_buy = 0;     // q
  double grid_sell = 0;    // x
  double storage_out = 0;  // e
  double storage_in = 0;   // s
  std::vector<EvDispatch> evs;  // roster order; newcomer last when present
};

struct Schedule {
  int start_slot = 0;
  bool has_newcomer = false;
  std::vector<SlotDispatch> slots;
};

struct ContractCost {
  Contract contract;
  double cost = kInf;  // v^{BU}_{l,t}; +inf when the cell is infeasible
  Schedule schedule;   // normalized; empty when infeasible
};

struct MenuCosts {
  double v_minus_k = 0;
  Schedule residual_plan;  // optimal dispatch without the newcomer
  std::vector<ContractCost> cells;
};

// ---------------------------------------------------------------------------
// LP construction
// ---------------------------------------------------------------------------

// Column layout of a station LP. Station blocks first (q, x, e, s, each H
// wide), then per EV a contiguous [r+ | r-] block over that EV's residual
// window.
struct LpLayout {
  int horizon_slots = 0;
  int q0 = 0, x0 = 0, e0 = 0, s0 = 0;
  struct EvCols {
    int rp0 = 0;
    int rn0 = 0;
    int window = 0;
  };
  std::vector<EvCols> evs;
  int total = 0;
};

namespace detail_station {

struct BuildSpec {
  const StationState* state;
  const EvRecord* newcomer = nullptr;   // nullptr for the residual (v_{-k}) problem
  const Contract* contract = nullptr;
};

inline LpLayout make_layout(const BuildSpec& spec) {
  const StationState& st = *spec.state;
  const int H = st.horizon - st.clock;
  LpLayout lay;
  lay.horizon_slots = H;
  lay.q0 = 0;
  lay.x0 = H;
  lay.e0 = 2 * H;
  lay.s0 = 3 * H;
  int off = 4 * H;
  auto push_ev = [&](int deadline) {
    LpLayout::EvCols c;
    c.window = std::min(deadline, st.horizon) - st.clock;
    c.rp0 = off;
    c.rn0 = off + c.window;
    off += 2 * c.window;
    lay.evs.push_back(c);
  };
  for (const EvRecord& e : st.active_evs) push_ev(e.deadline);
  if (spec.newcomer) push_ev(spec.contract->deadline);
  lay.total = off;
  return lay;
}

inline LinearProgram build_lp(const BuildSpec& spec, const LpLayout& lay) {
  const StationState& st = *spec.state;
  const int H = lay.horizon_slots;
  const int t0 = st.clock;
  const int n_ev = static_cast<int>(lay.evs.size());

  LinearProgram lp = LinearProgram::with_vars(lay.total);
  std::size_t n_rows = 3 * H - 1;
  for (const LpLayout::EvCols& c : lay.evs) n_rows += 4 * c.window + 2;
  lp.reserve_rows(n_rows);
  for (int j = 0; j < H; ++j) {
    lp.objective[lay.q0 + j] = st.buy_price[t0 + j];
    lp.objective[lay.x0 + j] = -st.sell_price[t0 + j];
  }

  auto ev_record = [&](int i) -> const EvRecord& {
    if (i < static_cast<int>(st.active_evs.size())) return st.active_evs[i];
    return *spec.newcomer;
  };

  // Bus balance per slot: q - x + e - s - sum r+/eta_c + sum eta_dc r- = 0.
  for (int j = 0; j < H; ++j) {
    double* row = lp.add_row(Relation::Eq, 0.0);
    row[lay.q0 + j] = 1.0;
    row[lay.x0 + j] = -1.0;
    row[lay.e0 + j] = 1.0;
    row[lay.s0 + j] = -1.0;
    for (int i = 0; i < n_ev; ++i) {
      const LpLayout::EvCols& c = lay.evs[i];
      if (j >= c.window) continue;
      const EvRecord& e = ev_record(i);
      row[c.rp0 + j] = -1.0 / e.eta_charge;
      row[c.rn0 + j] = e.eta_discharge;
    }
  }

  // Storage level after slot j: b0 + cum harvest + sum_{u<=j} (s_u eta_c - e_u/eta_d).
  // Kept within [0, B_max] each slot and pinned to the boundary level at the end.
  double cum_harvest = 0;
  for (int j = 0; j < H; ++j) {
    cum_harvest += st.renewable_forecast[t0 + j] * st.eta_charge_cs;
    double base = st.storage_level + cum_harvest;
    auto fill = [&](double* row) {
      for (int u = 0; u <= j; ++u) {
        row[lay.s0 + u] = st.eta_charge_cs;
        row[lay.e0 + u] = -1.0 / st.eta_discharge_cs;
      }
    };
    if (j + 1 < H) {
      fill(lp.add_row(Relation::LessEq, st.storage_capacity - base));
      fill(lp.add_row(Relation::GreaterEq, -base));
    } else {
      fill(lp.add_row(Relation::Eq, st.storage_initial - base));
    }
  }

  // Per-EV constraints: rate range, battery box, required energy, utilization.
  for (int i = 0; i < n_ev; ++i) {
    const LpLayout::EvCols& c = lay.evs[i];
    const EvRecord& e = ev_record(i);
    for (int j = 0; j < c.window; ++j) {
      double* hi = lp.add_row(Relation::LessEq, st.rate_max);
      hi[c.rp0 + j] = 1.0;
      hi[c.rn0 + j] = -1.0;
      double* lo = lp.add_row(Relation::GreaterEq, st.rate_min);
      lo[c.rp0 + j] = 1.0;
      lo[c.rn0 + j] = -1.0;
    }
    for (int j = 0; j < c.window; ++j) {
      double* hi = lp.add_row(Relation::LessEq, e.soc_max - e.soc);
      for (int u = 0; u <= j; ++u) {
        hi[c.rp0 + u] = 1.0;
        hi[c.rn0 + u] = -1.0;
      }
      double* lo = lp.add_row(Relation::GreaterEq, e.soc_min - e.soc);
      for (int u = 0; u <= j; ++u) {
        lo[c.rp0 + u] = 1.0;
        lo[c.rn0 + u] = -1.0;
      }
    }
    const bool is_new = spec.newcomer && i == n_ev - 1;
    const double need = is_new ? spec.contract->energy : e.residual_energy;
    const double budget = std::abs(need) + (is_new ? spec.contract->bu_cap : e.residual_bu);
    double* req = lp.add_row(Relation::GreaterEq, need);
    for (int j = 0; j < c.window; ++j) {
      req[c.rp0 + j] = 1.0;
      req[c.rn0 + j] = -1.0;
    }
    double* bu = lp.add_row(Relation::LessEq, budget);
    for (int j = 0; j < c.window; ++j) {
      bu[c.rp0 + j] = 1.0;
      bu[c.rn0 + j] = 1.0;
    }
  }
  return lp;
}

inline Schedule decode(const LpLayout& lay, const std::vector<double>& primal,
                       int start_slot, bool has_newcomer) {
  Schedule sc;
  sc.start_slot = start_slot;
  sc.has_newcomer = has_newcomer;
  sc.slots.resize(lay.horizon_slots);
  for (int j = 0; j < lay.horizon_slots; ++j) {
    SlotDispatch& d = sc.slots[j];
    d.grid_buy = primal[lay.q0 + j];
    d.grid_sell = primal[lay.x0 + j];
    d.storage_out = primal[lay.e0 + j];
    d.storage_in = primal[lay.s0 + j];
    d.evs.resize(lay.evs.size());
    for (std::size_t i = 0; i < lay.evs.size(); ++i) {
      const LpLayout::EvCols& c = lay.evs[i];
      if (j < c.window) {
        d.evs[i].charge = primal[c.rp0 + j];
        d.evs[i].discharge = primal[c.rn0 + j];
      }
    }
  }
  return sc;
}

}  // namespace detail_station

inline LinearProgram build_contract_lp(const StationState& state, const EvRecord& ev,
                                       const Contract& contract) {
  state.validate();
  if (contract.deadline <= state.clock || contract.deadline > state.horizon)
    throw StateError("contract deadline outside the residual horizon");
  if (contract.bu_cap < 0) throw StateError("negative battery-utilization cap");
  for (const EvRecord& e : state.active_evs)
    if (e.id == ev.id) throw StateError("EV already committed");
  detail_station::BuildSpec spec{&state, &ev, &contract};
  return detail_station::build_lp(spec, detail_station::make_layout(spec));
}

// ---------------------------------------------------------------------------
// Schedule normalization (simultaneous charge/discharge removal)
// ---------------------------------------------------------------------------

// Rewrites each slot so that r+ r- = 0 per EV and e s = 0 for the storage,
// keeping every battery trajectory unchanged and rebalancing the bus through
// the grid-trade variables. The objective never increases; at a true optimum
// it is unchanged.
inline void normalize_schedule(const StationState& state, Schedule& sc,
                               const std::vector<const EvRecord*>& evs) {
  for (SlotDispatch& d : sc.slots) {
    double surplus = 0;  // extra bus energy freed by the rewrites
    for (std::size_t i = 0; i < d.evs.size(); ++i) {
      EvDispatch& ed = d.evs[i];
      double m = std::min(ed.charge, ed.discharge);
      if (m > 0) {
        // Subtracting the min zeroes the smaller side exactly.
        surplus += m / evs[i]->eta_charge - m * evs[i]->eta_discharge;
        ed.charge -= m;
        ed.discharge -= m;
      }
    }
    if (d.storage_out > 0 && d.storage_in > 0) {
      double flux = d.storage_out / state.eta_discharge_cs -
                    d.storage_in * state.eta_charge_cs;  // battery-side outflow
      double e2, s2;
      if (flux >= 0) {
        e2 = flux * state.eta_discharge_cs;
        s2 = 0;
      } else {
        e2 = 0;
        s2 = -flux / state.eta_charge_cs;
      }
      surplus += (e2 - s2) - (d.storage_out - d.storage_in);
      d.storage_out = e2;
      d.storage_in = s2;
    }
    if (surplus > 0) {
      double dq = std::min(d.grid_buy, surplus);
      d.grid_buy -= dq;
      d.grid_sell += surplus - dq;
    }
  }
}

inline double schedule_objective(const StationState& state, const Schedule& sc) {
  double total = 0;
  for (std::size_t j = 0; j < sc.slots.size(); ++j) {
    int t = sc.start_slot + static_cast<int>(j);
    total += state.buy_price[t] * sc.slots[j].grid_buy -
             state.sell_price[t] * sc.slots[j].grid_sell;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Cost oracle
// ---------------------------------------------------------------------------

// Exact feasibility prescreen for a contract cell given a feasible residual
// state: a charging request is satisfiable iff the energy fits the battery
// headroom and the rate limit over the window; a discharge-only request is
// always satisfiable (zero dispatch qualifies). The grid connection is
// unbounded, so the newcomer never renders the rest of the fleet infeasible.
inline bool contract_reachable(const StationState& state, const EvRecord& ev,
                               const Contract& contract) {
  if (contract.energy <= 0) return true;
  int window = std::min(contract.deadline, state.horizon) - state.clock;
  if (contract.energy > state.rate_max * window + 1e-9) return false;
  if (contract.energy > ev.soc_max - ev.soc + 1e-9) return false;
  return true;
}

inline ContractCost contract_cost(const StationState& state, const EvRecord& ev,
                                  const Contract& contract, const LpOptions& opt = {}) {
  ContractCost out;
  out.contract = contract;
  LinearProgram lp = build_contract_lp(state, ev, contract);
  LpSolution sol = solve(lp, opt);
  if (sol.status == LpStatus::Unbounded)
    throw LpNumericalError("contract LP unbounded; tariff data violates c >= g >= 0");
  if (sol.status != LpStatus::Optimal) {
    out.cost = kInf;
    return out;
  }
  detail_station::BuildSpec spec{&state, &ev, &contract};
  LpLayout lay = detail_station::make_layout(spec);
  out.schedule = detail_station::decode(lay, sol.primal, state.clock, true);
  std::vector<const EvRecord*> evs;
  for (const EvRecord& e : state.active_evs) evs.push_back(&e);
  evs.push_back(&ev);
  normalize_schedule(state, out.schedule, evs);
  out.cost = sol.objective_value;
  return out;
}

// v_{-k} plus the optimal residual dispatch that realizes it.
inline MenuCosts plan_without_user(const StationState& state, const LpOptions& opt = {}) {
  state.validate();
  MenuCosts mc;
  detail_station::BuildSpec spec{&state, nullptr, nullptr};
  LpLayout lay = detail_station::make_layout(spec);
  LinearProgram lp = detail_station::build_lp(spec, lay);
  LpSolution sol = solve(lp, opt);
  if (sol.status == LpStatus::Unbounded)
    throw LpNumericalError("residual LP unbounded; tariff data violates c >= g >= 0");
  if (sol.status != LpStatus::Optimal) {
    mc.v_minus_k = kInf;
    return mc;
  }
  mc.v_minus_k = sol.objective_value;
  mc.residual_plan = detail_station::decode(lay, sol.primal, state.clock, false);
  std::vector<const EvRecord*> evs;
  for (const EvRecord& e : state.active_evs) evs.push_back(&e);
  normalize_schedule(state, mc.residual_plan, evs);
  return mc;
}

inline double cost_without_user(const StationState& state, const LpOptions& opt = {}) {
  return plan_without_user(state, opt).v_minus_k;
}

// One LP per grid cell via solve_batch; cells that fail the exact reachability
// prescreen are priced +inf without a solve. v_{-k} is computed once.
inline MenuCosts menu_costs(const StationState& state, const EvRecord& ev,
                            const std::vector<Contract>& cells, const LpOptions& opt = {}) {
  if (cells.empty()) throw StateError("empty contract grid");
  MenuCosts mc = plan_without_user(state, opt);
  mc.cells.resize(cells.size());

  std::vector<LinearProgram> lps;
  std::vector<std::size_t> solved_idx;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    mc.cells[i].contract = cells[i];
    mc.cells[i].cost = kInf;
    if (std::isfinite(mc.v_minus_k) && contract_reachable(state, ev, cells[i])) {
      lps.push_back(build_contract_lp(state, ev, cells[i]));
      solved_idx.push_back(i);
    }
  }
  std::vector<LpSolution> sols = solve_batch(lps, opt);

  std::vector<const EvRecord*> evs;
  for (const EvRecord& e : state.active_evs) evs.push_back(&e);
  evs.push_back(&ev);
  for (std::size_t k = 0; k < sols.size(); ++k) {
    if (sols[k].status != LpStatus::Optimal) continue;
    std::size_t i = solved_idx[k];
    detail_station::BuildSpec spec{&state, &ev, &cells[i]};
    LpLayout lay = detail_station::make_layout(spec);
    ContractCost& cc = mc.cells[i];
    cc.schedule = detail_station::decode(lay, sols[k].primal, state.clock, true);
    normalize_schedule(state, cc.schedule, evs);
    cc.cost = sols[k].objective_value;
  }
  return mc;
}

// Weighted average of the contract cost over renewable-generation scenarios.
inline double scenario_averaged_cost(
    const StationState& state, const EvRecord& ev, const Contract& contract,
    const std::vector<std::pair<double, std::vector<double>>>& scenarios,
    const LpOptions& opt = {}) {
  if (scenarios.empty()) throw StateError("no scenarios given");
  double wsum = 0;
  for (const auto& [w, trace] : scenarios) {
    if (w < 0) throw StateError("negative scenario weight");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9) throw StateError("scenario weights must sum to 1");
  double acc = 0;
  for (const auto& [w, trace] : scenarios) {
    StationState alt = state;
    alt.renewable_forecast = trace;
    double v = contract_cost(alt, ev, contract, opt).cost;
    if (!std::isfinite(v)) {
      if (w > 0) return kInf;
      continue;
    }
    acc += w * v;
  }
  return acc;
}

// ---------------------------------------------------------------------------
// State evolution
// ---------------------------------------------------------------------------

inline StationState commit_contract(const StationState& state, const EvRecord& ev,
                                    const Contract& contract, double price) {
  if (!std::isfinite(price)) throw StateError("cannot commit a contract priced +inf");
  if (!contract_reachable(state, ev, contract))
    throw StateError("cannot commit an unfulfillable contract");
  StationState next = state;
  EvRecord rec = ev;
  rec.residual_energy = contract.energy;
  rec.deadline = contract.deadline;
  rec.residual_bu = contract.bu_cap;
  next.active_evs.push_back(rec);
  return next;
}

// Applies the slot-t dispatch of a residual plan: advances the clock, rolls
// the storage and every EV battery forward, decrements residual obligations,
// and drops EVs whose deadline has passed.
inline StationState advance_time(const StationState& state, const SlotDispatch& dispatch) {
  if (state.clock >= state.horizon) throw StateError("cannot advance past the horizon");
  if (dispatch.evs.size() != state.active_evs.size())
    throw StateError("dispatch roster does not match state roster");

  StationState next = state;
  next.clock = state.clock + 1;

  // Harvested inflow beyond the capacity spills at the cap; overfilling by
  // dispatch alone, or draining below empty, is a corrupt dispatch.
  double harvest_in = state.renewable_forecast[state.clock] * state.eta_charge_cs;
  double traded = state.storage_level - dispatch.storage_out / state.eta_discharge_cs +
                  dispatch.storage_in * state.eta_charge_cs;
  double level = traded + harvest_in;
  if (level < -1e-6 || traded > state.storage_capacity + 1e-6)
    throw StateError("dispatch drives storage outside [0, capacity]");
  next.storage_level = std::clamp(level, 0.0, state.storage_capacity);

  next.active_evs.clear();
  for (std::size_t i = 0; i < state.active_evs.size(); ++i) {
    EvRecord e = state.active_evs[i];
    const EvDispatch& d = dispatch.evs[i];
    if (d.charge < -1e-9 || d.discharge < -1e-9)
      throw StateError("negative dispatch for EV " + std::to_string(e.id));
    double r = d.charge - d.discharge;
    if (r < state.rate_min - 1e-6 || r > state.rate_max + 1e-6)
      throw StateError("dispatch violates rate limits for EV " + std::to_string(e.id));
    double soc = e.soc + r;
    if (soc < e.soc_min - 1e-6 || soc > e.soc_max + 1e-6)
      throw StateError("dispatch drives EV " + std::to_string(e.id) +
                       " battery outside its bounds");
    double budget_before = std::abs(e.residual_energy) + e.residual_bu;
    double need_after = e.residual_energy - r;
    double budget_after = budget_before - (d.charge + d.discharge);
    double bu_after = budget_after - std::abs(need_after);
    if (bu_after < -1e-6)
      throw StateError("dispatch exceeds battery-utilization budget for EV " +
                       std::to_string(e.id));
    e.soc = std::clamp(soc, e.soc_min, e.soc_max);
    e.residual_energy = need_after;
    e.residual_bu = std::max(bu_after, 0.0);
    if (e.deadline <= next.clock) {
      if (std::abs(e.residual_energy) > 1e-6)
        throw StateError("EV " + std::to_string(e.id) +
                         " departs with an unmet energy obligation");
      continue;  // departed
    }
    next.active_evs.push_back(e);
  }
  return next;
}

// ---------------------------------------------------------------------------
// Schedule audit (used by property suites and the simulator)
// ---------------------------------------------------------------------------

struct ScheduleAudit {
  double max_violation = 0;       // worst constraint violation found
  double complementarity = 0;     // max r+ r- and e s product
  bool ok(double tol) const { return max_violation <= tol; }
};

inline ScheduleAudit audit_schedule(const StationState& state,
                                    const EvRecord* newcomer, const Contract* contract,
                                    const Schedule& sc) {
  ScheduleAudit a;
  auto track = [&](double v) { a.max_violation = std::max(a.max_violation, v); };
  const int H = static_cast<int>(sc.slots.size());
  const int t0 = sc.start_slot;

  std::vector<const EvRecord*> evs;
  for (const EvRecord& e : state.active_evs) evs.push_back(&e);
  if (newcomer) evs.push_back(newcomer);

  double storage = state.storage_level;
  std::vector<double> soc(evs.size()), delivered(evs.size(), 0.0), movement(evs.size(), 0.0);
  for (std::size_t i = 0; i < evs.size(); ++i) soc[i] = evs[i]->soc;

  for (int j = 0; j < H; ++j) {
    const SlotDispatch& d = sc.slots[j];
    track(-d.grid_buy);
    track(-d.grid_sell);
    track(-d.storage_out);
    track(-d.storage_in);
    a.complementarity = std::max(a.complementarity, d.storage_out * d.storage_in);

    double charge_bus = 0, discharge_bus = 0;
    for (std::size_t i = 0; i < evs.size(); ++i) {
      const EvDispatch& ed = d.evs[i];
      bool is_new = newcomer && i == evs.size() - 1;
      int ev_deadline = is_new ? contract->deadline : evs[i]->deadline;
      int window = std::min(ev_deadline, state.horizon) - t0;
      double r = ed.charge - ed.discharge;
      if (j >= window) {
        track(std::abs(ed.charge) + std::abs(ed.discharge));  // dispatch after departure
        continue;
      }
      track(-ed.charge);
      track(-ed.discharge);
      a.complementarity = std::max(a.complementarity, ed.charge * ed.discharge);
      track(r - state.rate_max);
      track(state.rate_min - r);
      charge_bus += ed.charge / evs[i]->eta_charge;
      discharge_bus += ed.discharge * evs[i]->eta_discharge;
      soc[i] += r;
      track(soc[i] - evs[i]->soc_max);
      track(evs[i]->soc_min - soc[i]);
      delivered[i] += r;
      movement[i] += ed.charge + ed.discharge;
    }

    // Bus balance, Eq. 9 form.
    double bus = d.grid_buy - charge_bus + discharge_bus - d.grid_sell -
                 (d.storage_in - d.storage_out);
    track(std::abs(bus));

    storage += state.renewable_forecast[t0 + j] * state.eta_charge_cs -
               d.storage_out / state.eta_discharge_cs + d.storage_in * state.eta_charge_cs;
    track(storage - state.storage_capacity);
    track(-storage);
  }
  track(std::abs(storage - state.storage_initial));

  for (std::size_t i = 0; i < evs.size(); ++i) {
    const bool is_new = newcomer && i == evs.size() - 1;
    double need = is_new ? contract->energy : evs[i]->residual_energy;
    double budget = std::abs(need) + (is_new ? contract->bu_cap : evs[i]->residual_bu);
    track(need - delivered[i]);
    track(movement[i] - budget);
  }
  return a;
}

}  // namespace v2g
