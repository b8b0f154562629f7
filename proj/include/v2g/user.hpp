#pragma once
// User population: sampled arrivals, the quadratic utility family, and the
// contract-choice rule.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "v2g/distributions.hpp"
#include "v2g/pricing.hpp"
#include "v2g/rng.hpp"
#include "v2g/station.hpp"

namespace v2g {

enum class UtilityModel { Quadratic, AdditiveNoise };
enum class DeadlineFactorMode { Relative, Absolute };

struct PopulationParams {
  double mean_energy = 6.9;
  double sd_energy = 4.9;
  double energy_lo = 2.0;
  double energy_hi = 20.0;
  double mean_pref_deadline = 2.5;  // hours
  double soc_lo = 2.0;              // initial soc uniform on [soc_lo, soc_max - r]
  double alpha = 0.07;              // per-kWh battery degradation cost

  // EV battery prototype for sampled arrivals.
  double soc_min = 2.0;
  double soc_max = 25.0;
  double eta_charge = 0.95;
  double eta_discharge = 0.95;

  UtilityModel model = UtilityModel::Quadratic;
  // The printed deadline discount divides by exp(T_pref - t_k) - 1, which
  // depends on the absolute clock; Relative normalizes by exp(T_pref) - 1 so
  // the factor is 1 just after arrival and 0 past the preferred deadline.
  // Both variants stay available.
  DeadlineFactorMode deadline_mode = DeadlineFactorMode::Relative;

  // Additive-noise population: U = Y(cell) + X with Y from a reference user.
  double reference_energy = 6.9;
  double reference_pref_deadline = 2.5;
  NoiseDistribution noise = NoiseDistribution::uniform(0.0, 1.0);
};

struct UserRealization {
  double desired_energy = 6.9;  // r
  double pref_deadline = 2.5;   // T_pref, hours
  double initial_soc = 2.0;
  double alpha = 0.07;
  int arrival_slot = 0;  // t_k
  double noise = 0.0;    // X_k draw (additive-noise model only)
};

struct UtilityEntry {
  Contract contract;
  double utility = 0;
};

struct UtilityTable {
  std::vector<UtilityEntry> entries;
};

struct Choice {
  bool accepted = false;
  int cell = -1;       // index into the menu when accepted
  double surplus = 0;  // max over cells of (u - p), clamped at 0 on reject
};

// Deadline discount in [0, 1]: 1 just after arrival, 0 once the elapsed time
// reaches the preferred deadline.
inline double deadline_factor(double pref_deadline, double elapsed_hours,
                              DeadlineFactorMode mode = DeadlineFactorMode::Relative,
                              int arrival_slot = 0) {
  double numer = std::exp(pref_deadline - elapsed_hours) - 1.0;
  if (numer <= 0) return 0.0;
  double denom = mode == DeadlineFactorMode::Relative
                     ? std::exp(pref_deadline) - 1.0
                     : std::exp(pref_deadline - arrival_slot) - 1.0;
  if (denom <= 0) return 0.0;
  return std::min(numer / denom, 1.0);
}

// Base utility of granting `energy` by `elapsed_hours` after arrival.
inline double base_utility(const UserRealization& user, double energy, double elapsed_hours,
                           DeadlineFactorMode mode = DeadlineFactorMode::Relative) {
  double r = user.desired_energy;
  double sat = std::min(-energy * energy + 2 * r * energy, r * r);
  return sat * deadline_factor(user.pref_deadline, elapsed_hours, mode, user.arrival_slot);
}

inline UtilityTable utility_table(const UserRealization& user,
                                  const std::vector<Contract>& cells,
                                  const PopulationParams& pop = {}) {
  UtilityTable table;
  table.entries.reserve(cells.size());
  for (const Contract& c : cells) {
    double dt = static_cast<double>(c.deadline - user.arrival_slot);
    double u;
    if (pop.model == UtilityModel::AdditiveNoise) {
      UserRealization ref;
      ref.desired_energy = pop.reference_energy;
      ref.pref_deadline = pop.reference_pref_deadline;
      ref.arrival_slot = user.arrival_slot;
      u = base_utility(ref, c.energy, dt, pop.deadline_mode) - pop.alpha * c.bu_cap +
          user.noise;
    } else {
      u = base_utility(user, c.energy, dt, pop.deadline_mode) - user.alpha * c.bu_cap;
    }
    table.entries.push_back({c, u});
  }
  return table;
}

// Picks the payoff-maximizing cell; accepts on a tie with rejecting. Equal
// payoffs break toward the lowest BU, then the earliest deadline, then the
// smallest energy.
inline Choice choose(const UtilityTable& table, const PriceMenu& menu) {
  if (table.entries.size() != menu.entries.size())
    throw std::invalid_argument("utility table and price menu use different grids");
  Choice ch;
  double best = -kInf;
  int best_i = -1;
  for (std::size_t i = 0; i < menu.entries.size(); ++i) {
    const Contract& a = table.entries[i].contract;
    const Contract& b = menu.entries[i].contract;
    if (!(a == b))
      throw std::invalid_argument("utility table and price menu use different grids");
    if (!std::isfinite(menu.entries[i].price)) continue;
    double payoff = table.entries[i].utility - menu.entries[i].price;
    if (payoff > best) {
      best = payoff;
      best_i = static_cast<int>(i);
    } else if (payoff == best && best_i >= 0) {
      const Contract& cur = menu.entries[best_i].contract;
      if (b.bu_cap < cur.bu_cap ||
          (b.bu_cap == cur.bu_cap &&
           (b.deadline < cur.deadline ||
            (b.deadline == cur.deadline && b.energy < cur.energy))))
        best_i = static_cast<int>(i);
    }
  }
  if (best_i >= 0 && best >= 0) {
    ch.accepted = true;
    ch.cell = best_i;
    ch.surplus = best;
  }
  return ch;
}

inline UserRealization sample_user(Rng& rng, int arrival_slot,
                                   const PopulationParams& pop = {}) {
  UserRealization u;
  u.arrival_slot = arrival_slot;
  u.desired_energy =
      rng.truncated_normal(pop.mean_energy, pop.sd_energy, pop.energy_lo, pop.energy_hi);
  u.pref_deadline = rng.exponential(pop.mean_pref_deadline);
  u.initial_soc = rng.uniform(pop.soc_lo, pop.soc_max - u.desired_energy);
  u.alpha = pop.alpha;
  if (pop.model == UtilityModel::AdditiveNoise) u.noise = pop.noise.sample(rng);
  return u;
}

inline EvRecord make_ev(const UserRealization& user, int id, const PopulationParams& pop = {}) {
  EvRecord e;
  e.id = id;
  e.arrival_time = user.arrival_slot;
  e.soc = user.initial_soc;
  e.soc_min = pop.soc_min;
  e.soc_max = pop.soc_max;
  e.eta_charge = pop.eta_charge;
  e.eta_discharge = pop.eta_discharge;
  return e;
}

}  // namespace v2g
