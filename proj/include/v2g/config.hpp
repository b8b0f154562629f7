#pragma once
// Scenario documents: strict JSON parsing with full defaults, validation that
// reports every violation at once, and canonical serialization for hashing
// and round-trip tests.

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "v2g/simulate.hpp"

namespace v2g {

using nlohmann::json;

struct ConfigError : std::runtime_error {
  std::vector<std::string> violations;
  explicit ConfigError(std::vector<std::string> v)
      : std::runtime_error(join(v)), violations(std::move(v)) {}
  static std::string join(const std::vector<std::string>& v) {
    std::string s = "invalid configuration:";
    for (const std::string& x : v) s += "\n  - " + x;
    return s;
  }
};

namespace detail_cfg {

// Tracks which keys of an object were consumed so unknown fields can be
// reported by name.
class Fields {
 public:
  Fields(const json& j, std::string path, std::vector<std::string>& errors)
      : j_(j), path_(std::move(path)), errors_(errors) {
    if (!j_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  template <typename T>
  void get(const char* name, T& out) {
    if (!j_.is_object()) return;
    seen_.insert(name);
    auto it = j_.find(name);
    if (it == j_.end()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      errors_.push_back(path_ + "." + name + ": wrong type");
    }
  }

  bool has(const char* name) {
    seen_.insert(name);
    return j_.is_object() && j_.contains(name);
  }

  const json& sub(const char* name) {
    seen_.insert(name);
    return j_.at(name);
  }

  ~Fields() {
    if (!j_.is_object()) return;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        errors_.push_back(path_ + ": unknown field \"" + it.key() + "\"");
  }

 private:
  const json& j_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

inline NoiseDistribution parse_noise(const json& j, const std::string& path,
                                     std::vector<std::string>& errors) {
  NoiseDistribution d;
  Fields f(j, path, errors);
  std::string kind = "uniform";
  f.get("kind", kind);
  if (kind == "uniform") d.kind = NoiseKind::Uniform;
  else if (kind == "point_mass") d.kind = NoiseKind::PointMass;
  else if (kind == "truncated_normal") d.kind = NoiseKind::TruncNormal;
  else if (kind == "discrete") d.kind = NoiseKind::Discrete;
  else errors.push_back(path + ".kind: unknown noise kind \"" + kind + "\"");
  f.get("a", d.a);
  f.get("b", d.b);
  f.get("mean", d.mean);
  f.get("sd", d.sd);
  f.get("atoms", d.atoms);
  f.get("weights", d.weights);
  return d;
}

inline json noise_to_json(const NoiseDistribution& d) {
  json j;
  switch (d.kind) {
    case NoiseKind::Uniform: j["kind"] = "uniform"; break;
    case NoiseKind::PointMass: j["kind"] = "point_mass"; break;
    case NoiseKind::TruncNormal: j["kind"] = "truncated_normal"; break;
    case NoiseKind::Discrete: j["kind"] = "discrete"; break;
  }
  j["a"] = d.a;
  j["b"] = d.b;
  j["mean"] = d.mean;
  j["sd"] = d.sd;
  j["atoms"] = d.atoms;
  j["weights"] = d.weights;
  return j;
}

}  // namespace detail_cfg

inline std::string strategy_name(StrategyKind k) {
  switch (k) {
    case StrategyKind::CostBased: return "cost";
    case StrategyKind::WorstCaseProfit: return "worst";
    case StrategyKind::Clairvoyant: return "clairvoyant";
    case StrategyKind::FixedBeta: return "beta";
    case StrategyKind::ZetaOptimal: return "zeta";
  }
  return "?";
}

inline bool strategy_from_name(const std::string& s, StrategyKind& out) {
  if (s == "cost") out = StrategyKind::CostBased;
  else if (s == "worst") out = StrategyKind::WorstCaseProfit;
  else if (s == "clairvoyant") out = StrategyKind::Clairvoyant;
  else if (s == "beta") out = StrategyKind::FixedBeta;
  else if (s == "zeta") out = StrategyKind::ZetaOptimal;
  else return false;
  return true;
}

// Parses a scenario document. Every omitted field keeps its default; unknown
// fields and type mismatches are collected and reported together.
inline SimConfig parse_config(const json& doc) {
  std::vector<std::string> errors;
  SimConfig cfg;
  {
    detail_cfg::Fields top(doc, "$", errors);
    if (top.has("station")) {
      detail_cfg::Fields f(top.sub("station"), "$.station", errors);
      StationParams& s = cfg.station;
      f.get("horizon", s.horizon);
      f.get("storage_capacity", s.storage_capacity);
      f.get("storage_initial", s.storage_initial);
      f.get("eta_charge", s.eta_charge_cs);
      f.get("eta_discharge", s.eta_discharge_cs);
      f.get("rate_max", s.rate_max);
      f.get("rate_min", s.rate_min);
      f.get("peak_price", s.peak_price);
      f.get("offpeak_price", s.offpeak_price);
      f.get("peak_start", s.peak_start);
      f.get("peak_end", s.peak_end);
      f.get("sell_margin", s.sell_margin);
      f.get("buy_price", s.buy_price_override);
      f.get("sell_price", s.sell_price_override);
      f.get("harvest_mean", s.harvest_mean);
      f.get("harvest_sd", s.harvest_sd);
    }
    if (top.has("population")) {
      detail_cfg::Fields f(top.sub("population"), "$.population", errors);
      PopulationParams& p = cfg.population;
      f.get("mean_energy", p.mean_energy);
      f.get("sd_energy", p.sd_energy);
      f.get("energy_lo", p.energy_lo);
      f.get("energy_hi", p.energy_hi);
      f.get("mean_pref_deadline", p.mean_pref_deadline);
      f.get("soc_lo", p.soc_lo);
      f.get("alpha", p.alpha);
      f.get("soc_min", p.soc_min);
      f.get("soc_max", p.soc_max);
      f.get("eta_charge", p.eta_charge);
      f.get("eta_discharge", p.eta_discharge);
      f.get("reference_energy", p.reference_energy);
      f.get("reference_pref_deadline", p.reference_pref_deadline);
      if (f.has("utility_model")) {
        std::string m = "quadratic";
        f.get("utility_model", m);
        if (m == "quadratic") p.model = UtilityModel::Quadratic;
        else if (m == "additive_noise") p.model = UtilityModel::AdditiveNoise;
        else errors.push_back("$.population.utility_model: unknown model \"" + m + "\"");
      }
      if (f.has("deadline_factor")) {
        std::string m = "relative";
        f.get("deadline_factor", m);
        if (m == "relative") p.deadline_mode = DeadlineFactorMode::Relative;
        else if (m == "absolute") p.deadline_mode = DeadlineFactorMode::Absolute;
        else errors.push_back("$.population.deadline_factor: unknown mode \"" + m + "\"");
      }
      if (f.has("noise"))
        p.noise = detail_cfg::parse_noise(f.sub("noise"), "$.population.noise", errors);
    }
    if (top.has("arrivals")) {
      detail_cfg::Fields f(top.sub("arrivals"), "$.arrivals", errors);
      ArrivalProcess& a = cfg.arrivals;
      f.get("peak_rate", a.peak_rate);
      f.get("offpeak_rate", a.offpeak_rate);
      f.get("peak_start", a.peak_start);
      f.get("peak_end", a.peak_end);
    }
    if (top.has("grid")) {
      detail_cfg::Fields f(top.sub("grid"), "$.grid", errors);
      GridParams& g = cfg.grid;
      f.get("max_energy", g.max_energy);
      f.get("energy_step", g.energy_step);
      f.get("max_deadline_hours", g.max_deadline_hours);
      f.get("bu_max", g.bu_max);
      f.get("bu_step", g.bu_step);
    }
    if (top.has("strategy")) {
      detail_cfg::Fields f(top.sub("strategy"), "$.strategy", errors);
      StrategyConfig& s = cfg.strategy;
      if (f.has("kind")) {
        std::string k;
        f.get("kind", k);
        if (!strategy_from_name(k, s.kind))
          errors.push_back("$.strategy.kind: unknown strategy \"" + k + "\"");
      }
      f.get("beta", s.beta);
      f.get("lower_endpoints", s.lower_endpoints);
      f.get("y_table", s.y_table);
      if (f.has("noise"))
        s.noise = detail_cfg::parse_noise(f.sub("noise"), "$.strategy.noise", errors);
    }
    top.get("replicates", cfg.replicates);
    top.get("seed", cfg.seed);
    top.get("v2g_enabled", cfg.v2g_enabled);
    top.get("discharge_only_enabled", cfg.discharge_only_enabled);
    top.get("threads", cfg.threads);
    if (top.has("sweep")) {
      detail_cfg::Fields f(top.sub("sweep"), "$.sweep", errors);
      f.get("beta", cfg.sweep_beta);
      f.get("bmax", cfg.sweep_bmax);
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

// Every violation is reported, not just the first.
inline void validate_config(const SimConfig& cfg) {
  std::vector<std::string> errors;
  const StationParams& s = cfg.station;
  if (s.horizon < 2) errors.push_back("station.horizon must be at least 2");
  if (s.storage_capacity < 0) errors.push_back("station.storage_capacity must be >= 0");
  if (s.storage_initial < 0 || s.storage_initial > s.storage_capacity)
    errors.push_back("station.storage_initial outside [0, storage_capacity]");
  if (!(s.eta_charge_cs > 0 && s.eta_charge_cs <= 1))
    errors.push_back("station.eta_charge outside (0, 1]");
  if (!(s.eta_discharge_cs > 0 && s.eta_discharge_cs <= 1))
    errors.push_back("station.eta_discharge outside (0, 1]");
  if (!(s.rate_min < 0 && s.rate_max > 0))
    errors.push_back("station rate limits need rate_min < 0 < rate_max");
  if (s.harvest_sd < 0) errors.push_back("station.harvest_sd must be >= 0");

  std::vector<double> c = s.buy_schedule(), g = s.sell_schedule();
  if (static_cast<int>(c.size()) != s.horizon)
    errors.push_back("station.buy_price must have one entry per slot");
  if (static_cast<int>(g.size()) != s.horizon)
    errors.push_back("station.sell_price must have one entry per slot");
  if (c.size() == g.size())
    for (std::size_t t = 0; t < c.size(); ++t) {
      if (c[t] < g[t])
        errors.push_back("arbitrage opportunity: sell price exceeds buy price at slot " +
                         std::to_string(t));
      if (g[t] < 0) errors.push_back("negative sell price at slot " + std::to_string(t));
    }

  const PopulationParams& p = cfg.population;
  if (!(p.energy_lo > 0 && p.energy_lo < p.energy_hi))
    errors.push_back("population energy bounds must satisfy 0 < lo < hi");
  if (p.sd_energy <= 0) errors.push_back("population.sd_energy must be > 0");
  if (p.mean_pref_deadline <= 0) errors.push_back("population.mean_pref_deadline must be > 0");
  if (p.alpha < 0) errors.push_back("population.alpha must be >= 0");
  if (!(p.soc_min < p.soc_max)) errors.push_back("population soc bounds must satisfy min < max");
  if (p.soc_lo < p.soc_min) errors.push_back("population.soc_lo below soc_min");
  if (p.soc_lo > p.soc_max - p.energy_hi)
    errors.push_back("population.soc_lo leaves no room for the largest desired energy");
  if (!(p.eta_charge > 0 && p.eta_charge <= 1 && p.eta_discharge > 0 && p.eta_discharge <= 1))
    errors.push_back("population EV efficiencies outside (0, 1]");
  try {
    p.noise.validate();
  } catch (const std::exception& e) {
    errors.push_back(std::string("population.noise: ") + e.what());
  }

  const ArrivalProcess& a = cfg.arrivals;
  if (a.peak_rate < 0 || a.offpeak_rate < 0) errors.push_back("arrival rates must be >= 0");

  const GridParams& gr = cfg.grid;
  if (!(gr.energy_step > 0 && gr.max_energy >= gr.energy_step))
    errors.push_back("grid energy axis is empty");
  if (gr.max_deadline_hours < 1) errors.push_back("grid.max_deadline_hours must be >= 1");
  if (!(gr.bu_step > 0) || gr.bu_max < 0) errors.push_back("grid BU axis is malformed");

  const StrategyConfig& st = cfg.strategy;
  if (st.beta < 0) errors.push_back("strategy.beta must be >= 0");
  if (st.kind == StrategyKind::ZetaOptimal &&
      cfg.population.model != UtilityModel::AdditiveNoise && st.y_table.empty())
    errors.push_back(
        "strategy zeta needs additive-noise utilities "
        "(population.utility_model = \"additive_noise\") or an explicit y_table");
  try {
    st.noise.validate();
  } catch (const std::exception& e) {
    errors.push_back(std::string("strategy.noise: ") + e.what());
  }

  if (cfg.replicates < 1) errors.push_back("replicates must be >= 1");
  for (double b : cfg.sweep_beta)
    if (b < 0) errors.push_back("sweep.beta values must be >= 0");
  for (double b : cfg.sweep_bmax)
    if (b < 0) errors.push_back("sweep.bmax values must be >= 0");

  if (!errors.empty()) throw ConfigError(std::move(errors));
}

inline json config_to_json(const SimConfig& cfg) {
  json j;
  const StationParams& s = cfg.station;
  j["station"] = {{"horizon", s.horizon},
                  {"storage_capacity", s.storage_capacity},
                  {"storage_initial", s.storage_initial},
                  {"eta_charge", s.eta_charge_cs},
                  {"eta_discharge", s.eta_discharge_cs},
                  {"rate_max", s.rate_max},
                  {"rate_min", s.rate_min},
                  {"peak_price", s.peak_price},
                  {"offpeak_price", s.offpeak_price},
                  {"peak_start", s.peak_start},
                  {"peak_end", s.peak_end},
                  {"sell_margin", s.sell_margin},
                  {"harvest_mean", s.harvest_mean},
                  {"harvest_sd", s.harvest_sd}};
  if (!s.buy_price_override.empty()) j["station"]["buy_price"] = s.buy_price_override;
  if (!s.sell_price_override.empty()) j["station"]["sell_price"] = s.sell_price_override;

  const PopulationParams& p = cfg.population;
  j["population"] = {
      {"mean_energy", p.mean_energy},
      {"sd_energy", p.sd_energy},
      {"energy_lo", p.energy_lo},
      {"energy_hi", p.energy_hi},
      {"mean_pref_deadline", p.mean_pref_deadline},
      {"soc_lo", p.soc_lo},
      {"alpha", p.alpha},
      {"soc_min", p.soc_min},
      {"soc_max", p.soc_max},
      {"eta_charge", p.eta_charge},
      {"eta_discharge", p.eta_discharge},
      {"utility_model", p.model == UtilityModel::Quadratic ? "quadratic" : "additive_noise"},
      {"deadline_factor",
       p.deadline_mode == DeadlineFactorMode::Relative ? "relative" : "absolute"},
      {"reference_energy", p.reference_energy},
      {"reference_pref_deadline", p.reference_pref_deadline},
      {"noise", detail_cfg::noise_to_json(p.noise)}};

  j["arrivals"] = {{"peak_rate", cfg.arrivals.peak_rate},
                   {"offpeak_rate", cfg.arrivals.offpeak_rate},
                   {"peak_start", cfg.arrivals.peak_start},
                   {"peak_end", cfg.arrivals.peak_end}};
  j["grid"] = {{"max_energy", cfg.grid.max_energy},
               {"energy_step", cfg.grid.energy_step},
               {"max_deadline_hours", cfg.grid.max_deadline_hours},
               {"bu_max", cfg.grid.bu_max},
               {"bu_step", cfg.grid.bu_step}};
  j["strategy"] = {{"kind", strategy_name(cfg.strategy.kind)},
                   {"beta", cfg.strategy.beta},
                   {"noise", detail_cfg::noise_to_json(cfg.strategy.noise)}};
  if (!cfg.strategy.lower_endpoints.empty())
    j["strategy"]["lower_endpoints"] = cfg.strategy.lower_endpoints;
  if (!cfg.strategy.y_table.empty()) j["strategy"]["y_table"] = cfg.strategy.y_table;

  j["replicates"] = cfg.replicates;
  j["seed"] = cfg.seed;
  j["v2g_enabled"] = cfg.v2g_enabled;
  j["discharge_only_enabled"] = cfg.discharge_only_enabled;
  j["threads"] = cfg.threads;
  j["sweep"] = {{"beta", cfg.sweep_beta}, {"bmax", cfg.sweep_bmax}};
  return j;
}

inline SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open " + path});
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ConfigError({path + ": parse error: " + e.what()});
  }
  SimConfig cfg = parse_config(doc);
  validate_config(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Station-state documents (scenario snapshots used by tests and tools)
// ---------------------------------------------------------------------------

inline json station_to_json(const StationState& st) {
  json evs = json::array();
  for (const EvRecord& e : st.active_evs)
    evs.push_back({{"id", e.id},
                   {"arrival_time", e.arrival_time},
                   {"residual_energy", e.residual_energy},
                   {"deadline", e.deadline},
                   {"residual_bu", e.residual_bu},
                   {"soc", e.soc},
                   {"soc_min", e.soc_min},
                   {"soc_max", e.soc_max},
                   {"eta_charge", e.eta_charge},
                   {"eta_discharge", e.eta_discharge}});
  return json{{"clock", st.clock},
              {"storage_level", st.storage_level},
              {"storage_capacity", st.storage_capacity},
              {"storage_initial", st.storage_initial},
              {"eta_charge", st.eta_charge_cs},
              {"eta_discharge", st.eta_discharge_cs},
              {"renewable_forecast", st.renewable_forecast},
              {"buy_price", st.buy_price},
              {"sell_price", st.sell_price},
              {"horizon", st.horizon},
              {"rate_min", st.rate_min},
              {"rate_max", st.rate_max},
              {"active_evs", evs}};
}

inline StationState station_from_json(const json& j) {
  std::vector<std::string> errors;
  StationState st;
  {
    detail_cfg::Fields f(j, "$", errors);
    f.get("clock", st.clock);
    f.get("storage_level", st.storage_level);
    f.get("storage_capacity", st.storage_capacity);
    f.get("storage_initial", st.storage_initial);
    f.get("eta_charge", st.eta_charge_cs);
    f.get("eta_discharge", st.eta_discharge_cs);
    f.get("renewable_forecast", st.renewable_forecast);
    f.get("buy_price", st.buy_price);
    f.get("sell_price", st.sell_price);
    f.get("horizon", st.horizon);
    f.get("rate_min", st.rate_min);
    f.get("rate_max", st.rate_max);
    if (f.has("active_evs")) {
      int idx = 0;
      for (const json& ej : f.sub("active_evs")) {
        detail_cfg::Fields fe(ej, "$.active_evs[" + std::to_string(idx++) + "]", errors);
        EvRecord e;
        fe.get("id", e.id);
        fe.get("arrival_time", e.arrival_time);
        fe.get("residual_energy", e.residual_energy);
        fe.get("deadline", e.deadline);
        fe.get("residual_bu", e.residual_bu);
        fe.get("soc", e.soc);
        fe.get("soc_min", e.soc_min);
        fe.get("soc_max", e.soc_max);
        fe.get("eta_charge", e.eta_charge);
        fe.get("eta_discharge", e.eta_discharge);
        st.active_evs.push_back(e);
      }
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  st.validate();
  return st;
}

}  // namespace v2g
