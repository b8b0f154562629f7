#pragma once
// Bounded scalar distributions used for the additive utility noise X_k.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "v2g/rng.hpp"

namespace v2g {

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

enum class NoiseKind { PointMass, Uniform, TruncNormal, Discrete };

struct NoiseDistribution {
  NoiseKind kind = NoiseKind::Uniform;
  double a = 0.0;   // Uniform/TruncNormal lower support; PointMass location
  double b = 1.0;   // Uniform/TruncNormal upper support
  double mean = 0.0;
  double sd = 1.0;
  std::vector<double> atoms;
  std::vector<double> weights;

  static NoiseDistribution point_mass(double x) {
    NoiseDistribution d;
    d.kind = NoiseKind::PointMass;
    d.a = d.b = x;
    return d;
  }
  static NoiseDistribution uniform(double lo, double hi) {
    NoiseDistribution d;
    d.kind = NoiseKind::Uniform;
    d.a = lo;
    d.b = hi;
    return d;
  }
  static NoiseDistribution truncated_normal(double mean, double sd, double lo, double hi) {
    NoiseDistribution d;
    d.kind = NoiseKind::TruncNormal;
    d.mean = mean;
    d.sd = sd;
    d.a = lo;
    d.b = hi;
    return d;
  }
  static NoiseDistribution discrete(std::vector<double> xs, std::vector<double> ws) {
    NoiseDistribution d;
    d.kind = NoiseKind::Discrete;
    d.atoms = std::move(xs);
    d.weights = std::move(ws);
    return d;
  }

  bool is_discrete() const {
    return kind == NoiseKind::Discrete || kind == NoiseKind::PointMass;
  }

  double support_lo() const {
    if (kind == NoiseKind::Discrete)
      return *std::min_element(atoms.begin(), atoms.end());
    return a;
  }
  double support_hi() const {
    if (kind == NoiseKind::Discrete)
      return *std::max_element(atoms.begin(), atoms.end());
    return b;
  }

  void validate() const {
    switch (kind) {
      case NoiseKind::PointMass:
        break;
      case NoiseKind::Uniform:
        if (!(a < b)) throw std::invalid_argument("uniform noise: need a < b");
        break;
      case NoiseKind::TruncNormal:
        if (!(a < b)) throw std::invalid_argument("truncated normal noise: need a < b");
        if (!(sd > 0)) throw std::invalid_argument("truncated normal noise: need sd > 0");
        break;
      case NoiseKind::Discrete: {
        if (atoms.empty() || atoms.size() != weights.size())
          throw std::invalid_argument("discrete noise: atoms/weights mismatch");
        double sum = 0;
        for (double w : weights) {
          if (w < 0) throw std::invalid_argument("discrete noise: negative weight");
          sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-9)
          throw std::invalid_argument("discrete noise: weights must sum to 1");
        break;
      }
    }
  }

  // P(X <= x)
  double cdf(double x) const {
    switch (kind) {
      case NoiseKind::PointMass:
        return x >= a ? 1.0 : 0.0;
      case NoiseKind::Uniform:
        if (x <= a) return 0.0;
        if (x >= b) return 1.0;
        return (x - a) / (b - a);
      case NoiseKind::TruncNormal: {
        if (x <= a) return 0.0;
        if (x >= b) return 1.0;
        double za = normal_cdf((a - mean) / sd);
        double zb = normal_cdf((b - mean) / sd);
        return (normal_cdf((x - mean) / sd) - za) / (zb - za);
      }
      case NoiseKind::Discrete: {
        double p = 0;
        for (std::size_t i = 0; i < atoms.size(); ++i)
          if (atoms[i] <= x + 1e-12) p += weights[i];
        return std::min(p, 1.0);
      }
    }
    return 0.0;
  }

  // P(X >= x); differs from 1 - cdf(x) at atoms of a discrete law.
  double prob_geq(double x) const {
    if (kind == NoiseKind::PointMass) return a >= x - 1e-12 ? 1.0 : 0.0;
    if (kind == NoiseKind::Discrete) {
      double p = 0;
      for (std::size_t i = 0; i < atoms.size(); ++i)
        if (atoms[i] >= x - 1e-12) p += weights[i];
      return std::min(p, 1.0);
    }
    return 1.0 - cdf(x);
  }

  double sample(Rng& rng) const {
    switch (kind) {
      case NoiseKind::PointMass:
        return a;
      case NoiseKind::Uniform:
        return rng.uniform(a, b);
      case NoiseKind::TruncNormal:
        return rng.truncated_normal(mean, sd, a, b);
      case NoiseKind::Discrete: {
        double u = rng.uniform01();
        double acc = 0;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
          acc += weights[i];
          if (u < acc) return atoms[i];
        }
        return atoms.back();
      }
    }
    return 0.0;
  }
};

}  // namespace v2g
