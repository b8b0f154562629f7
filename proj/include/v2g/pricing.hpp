#pragma once
// Menu pricing strategies. Every strategy here prices a cell as
//   price = cost - v_{-k} + delta
// with one non-negative offset delta shared by all cells; the strategies
// differ only in how delta is chosen. Unofferable cells (cost +inf) keep
// price +inf so the menu stays grid-shaped.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2g/distributions.hpp"
#include "v2g/station.hpp"

namespace v2g {

struct PricingError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class StrategyKind { CostBased, WorstCaseProfit, Clairvoyant, FixedBeta, ZetaOptimal };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::WorstCaseProfit;
  double beta = 0.0;                    // FixedBeta; also added on top of the
                                        // worst-case offset when kind == WorstCaseProfit
  std::vector<double> lower_endpoints;  // per cell; empty -> -alpha * BU
  double alpha = 0.07;                  // used for the derived lower endpoints
  std::vector<double> y_table;          // ZetaOptimal deterministic part, per cell
  NoiseDistribution noise;              // ZetaOptimal private noise X_k
};

struct MenuEntry {
  Contract contract;
  double cost = kInf;   // v^{BU}_{l,t}
  double price = kInf;  // p^{BU}_{k,l,t}
};

struct PriceMenu {
  std::vector<MenuEntry> entries;
  double v_minus_k = 0;
  double offset = 0;  // the delta applied to every finite cell
};

namespace detail_pricing {

inline PriceMenu apply_offset(const std::vector<ContractCost>& costs, double v_minus_k,
                              double offset) {
  if (!std::isfinite(v_minus_k)) throw PricingError("v_{-k} must be finite");
  PriceMenu menu;
  menu.v_minus_k = v_minus_k;
  menu.offset = offset;
  menu.entries.reserve(costs.size());
  for (const ContractCost& c : costs) {
    MenuEntry e;
    e.contract = c.contract;
    e.cost = c.cost;
    e.price = std::isfinite(c.cost) ? c.cost - v_minus_k + offset : kInf;
    menu.entries.push_back(e);
  }
  return menu;
}

}  // namespace detail_pricing

// Marginal-cost pricing: zero station profit on any acceptance.
inline PriceMenu price_cost_based(const std::vector<ContractCost>& costs, double v_minus_k) {
  return detail_pricing::apply_offset(costs, v_minus_k, 0.0);
}

// Marginal cost plus the largest profit compatible with ex-post welfare
// maximization: offset (max_cells {L - cost + v_{-k}})^+.
inline PriceMenu price_worst_case(const std::vector<ContractCost>& costs, double v_minus_k,
                                  const std::vector<double>& lower_endpoints) {
  if (lower_endpoints.size() != costs.size())
    throw PricingError("lower endpoint table does not match the menu grid");
  double best = -kInf;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!std::isfinite(costs[i].cost)) continue;
    if (!std::isfinite(lower_endpoints[i]))
      throw PricingError("missing lower endpoint for an offerable cell");
    best = std::max(best, lower_endpoints[i] - costs[i].cost + v_minus_k);
  }
  return detail_pricing::apply_offset(costs, v_minus_k, std::max(best, 0.0));
}

// Full-information pricing: extracts the entire surplus of the best cell.
// realized_utilities is aligned with `costs`.
inline PriceMenu price_clairvoyant(const std::vector<ContractCost>& costs, double v_minus_k,
                                   const std::vector<double>& realized_utilities) {
  if (realized_utilities.size() != costs.size())
    throw PricingError("utility table does not match the menu grid");
  double best = -kInf;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!std::isfinite(costs[i].cost)) continue;
    best = std::max(best, realized_utilities[i] - costs[i].cost + v_minus_k);
  }
  return detail_pricing::apply_offset(costs, v_minus_k, std::max(best, 0.0));
}

// Fixed guaranteed profit beta on any acceptance.
inline PriceMenu price_fixed_beta(const std::vector<ContractCost>& costs, double v_minus_k,
                                  double beta) {
  if (!(beta >= 0)) throw PricingError("beta must be non-negative");
  return detail_pricing::apply_offset(costs, v_minus_k, beta);
}

// The largest maximizer of beta * max_cells P(Y + X >= beta + cost - v_{-k}).
// Under an additive offset the best cell is the one with the most headroom
// Y - (cost - v_{-k}), so the objective reduces to h(beta) = beta * P(X >=
// beta - headroom). Discrete noise is searched over its candidate offsets
// exactly; continuous noise over a dense grid refined to 1e-4.
inline double compute_zeta(const std::vector<ContractCost>& costs, double v_minus_k,
                           const std::vector<double>& y_table, const NoiseDistribution& noise) {
  if (y_table.size() != costs.size())
    throw PricingError("Y table does not match the menu grid");
  noise.validate();
  double headroom = -kInf;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    if (!std::isfinite(costs[i].cost)) continue;
    headroom = std::max(headroom, y_table[i] - (costs[i].cost - v_minus_k));
  }
  if (!std::isfinite(headroom)) throw PricingError("no offerable cell in the menu");

  auto h = [&](double beta) { return beta * noise.prob_geq(beta - headroom); };
  double beta_hi = std::max(headroom + noise.support_hi(), 0.0);
  if (beta_hi == 0.0) return 0.0;

  if (noise.is_discrete()) {
    std::vector<double> cands = {0.0, beta_hi};
    if (noise.kind == NoiseKind::PointMass) cands.push_back(headroom + noise.a);
    else
      for (double atom : noise.atoms) cands.push_back(headroom + atom);
    double best_h = -kInf, best_beta = 0;
    std::sort(cands.begin(), cands.end());
    for (double b : cands) {
      if (b < 0) continue;
      double v = h(b);
      if (v > best_h + 1e-12 || (v > best_h - 1e-12 && b > best_beta)) {
        best_h = std::max(v, best_h);
        best_beta = b;
      }
    }
    return best_beta;
  }

  // Continuous noise: coarse scan, then ternary refinement around the winner.
  const int kGrid = 8000;
  double step = beta_hi / kGrid;
  double best_h = -kInf, best_beta = 0;
  for (int i = 0; i <= kGrid; ++i) {
    double b = i * step;
    double v = h(b);
    if (v > best_h + 1e-12 || (v >= best_h - 1e-12 && b > best_beta)) {
      best_h = std::max(v, best_h);
      best_beta = b;
    }
  }
  double lo = std::max(best_beta - step, 0.0), hi = std::min(best_beta + step, beta_hi);
  while (hi - lo > 1e-4) {
    double m1 = lo + (hi - lo) / 3, m2 = hi - (hi - lo) / 3;
    if (h(m1) <= h(m2)) lo = m1;
    else hi = m2;
  }
  double mid = 0.5 * (lo + hi);
  return h(mid) >= best_h ? mid : best_beta;
}

inline PriceMenu price_zeta(const std::vector<ContractCost>& costs, double v_minus_k,
                            double zeta) {
  if (!(zeta >= 0)) throw PricingError("zeta must be non-negative");
  return detail_pricing::apply_offset(costs, v_minus_k, zeta);
}

// Strategy dispatch used by the simulator and the CLI. `realized_utilities`
// is required for the clairvoyant station and ignored otherwise.
inline PriceMenu apply_strategy(const std::vector<ContractCost>& costs, double v_minus_k,
                                const StrategyConfig& strat,
                                const std::vector<double>* realized_utilities = nullptr) {
  switch (strat.kind) {
    case StrategyKind::CostBased:
      return price_cost_based(costs, v_minus_k);
    case StrategyKind::WorstCaseProfit: {
      std::vector<double> lower = strat.lower_endpoints;
      if (lower.empty()) {
        lower.resize(costs.size());
        for (std::size_t i = 0; i < costs.size(); ++i)
          lower[i] = -strat.alpha * costs[i].contract.bu_cap;
      }
      PriceMenu menu = price_worst_case(costs, v_minus_k, lower);
      if (strat.beta != 0.0)
        menu = detail_pricing::apply_offset(costs, v_minus_k, menu.offset + strat.beta);
      return menu;
    }
    case StrategyKind::Clairvoyant:
      if (!realized_utilities)
        throw PricingError("clairvoyant pricing needs the realized utility table");
      return price_clairvoyant(costs, v_minus_k, *realized_utilities);
    case StrategyKind::FixedBeta:
      return price_fixed_beta(costs, v_minus_k, strat.beta);
    case StrategyKind::ZetaOptimal: {
      if (strat.y_table.size() != costs.size())
        throw PricingError("zeta pricing needs a Y value per menu cell");
      double zeta = compute_zeta(costs, v_minus_k, strat.y_table, strat.noise);
      return price_zeta(costs, v_minus_k, zeta);
    }
  }
  throw PricingError("unknown strategy");
}

}  // namespace v2g
