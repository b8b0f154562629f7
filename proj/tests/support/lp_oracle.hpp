#pragma once
// Test-only oracles. Nothing here calls the simplex path it is used to check.

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "v2g/lp.hpp"

namespace v2g::test {

// ---------------------------------------------------------------------------
// Brute-force LP oracle: enumerate basic solutions (every choice of n tight
// constraints among rows and variable bounds), keep the feasible ones, and
// take the best objective. Requires finite bounds on every variable so the
// feasible set is a polytope and the optimum sits on a vertex.
// ---------------------------------------------------------------------------

struct OracleResult {
  bool feasible = false;
  double objective = kInf;
  std::vector<double> arg;
};

namespace detail {

// Gaussian elimination with partial pivoting; returns false when singular.
inline bool solve_square(std::vector<double> a, std::vector<double> b,
                         std::size_t n, std::vector<double>& x) {
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r * n + c]) > std::abs(a[p * n + c])) p = r;
    if (std::abs(a[p * n + c]) < 1e-9) return false;
    if (p != c) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[p * n + j], a[c * n + j]);
      std::swap(b[p], b[c]);
    }
    for (std::size_t r = c + 1; r < n; ++r) {
      double f = a[r * n + c] / a[c * n + c];
      if (f == 0.0) continue;
      for (std::size_t j = c; j < n; ++j) a[r * n + j] -= f * a[c * n + j];
      b[r] -= f * b[c];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t c = n; c-- > 0;) {
    double s = b[c];
    for (std::size_t j = c + 1; j < n; ++j) s -= a[c * n + j] * x[j];
    x[c] = s / a[c * n + c];
  }
  return true;
}

}  // namespace detail

inline OracleResult enumerate_vertices(const LinearProgram& lp, double feas_tol = 1e-7) {
  const std::size_t n = lp.num_vars();
  const std::size_t m = lp.num_rows();

  // Candidate tight constraints: each row, each lower bound, each upper bound.
  struct Cand {
    std::vector<double> coeff;
    double rhs;
  };
  std::vector<Cand> cands;
  for (std::size_t i = 0; i < m; ++i) {
    Cand c;
    c.coeff.assign(lp.row(i), lp.row(i) + n);
    c.rhs = lp.rhs[i];
    cands.push_back(std::move(c));
  }
  for (std::size_t j = 0; j < n; ++j) {
    Cand c;
    c.coeff.assign(n, 0.0);
    c.coeff[j] = 1.0;
    c.rhs = lp.lower[j];
    cands.push_back(c);
    c.rhs = lp.upper[j];
    cands.push_back(std::move(c));
  }

  auto feasible_point = [&](const std::vector<double>& x) {
    for (std::size_t j = 0; j < n; ++j)
      if (x[j] < lp.lower[j] - feas_tol || x[j] > lp.upper[j] + feas_tol) return false;
    for (std::size_t i = 0; i < m; ++i) {
      double act = 0;
      for (std::size_t j = 0; j < n; ++j) act += lp.row(i)[j] * x[j];
      switch (lp.relations[i]) {
        case Relation::LessEq:
          if (act > lp.rhs[i] + feas_tol) return false;
          break;
        case Relation::GreaterEq:
          if (act < lp.rhs[i] - feas_tol) return false;
          break;
        case Relation::Eq:
          if (std::abs(act - lp.rhs[i]) > feas_tol) return false;
          break;
      }
    }
    return true;
  };

  OracleResult best;
  std::vector<std::size_t> pick(n);
  std::vector<double> a(n * n), b(n), x;

  // Iterate over all n-subsets of candidate constraints.
  std::vector<std::size_t> idx(n);
  for (std::size_t j = 0; j < n; ++j) idx[j] = j;
  const std::size_t k = cands.size();
  if (k < n) return best;
  for (;;) {
    for (std::size_t r = 0; r < n; ++r) {
      const Cand& c = cands[idx[r]];
      std::copy(c.coeff.begin(), c.coeff.end(), a.begin() + r * n);
      b[r] = c.rhs;
    }
    if (detail::solve_square(a, b, n, x) && feasible_point(x)) {
      double obj = 0;
      for (std::size_t j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
      if (!best.feasible || obj < best.objective) {
        best.feasible = true;
        best.objective = obj;
        best.arg = x;
      }
    }
    // next combination
    std::size_t r = n;
    while (r-- > 0) {
      if (idx[r] != r + k - n) {
        ++idx[r];
        for (std::size_t j = r + 1; j < n; ++j) idx[j] = idx[j - 1] + 1;
        break;
      }
      if (r == 0) return best;
    }
  }
}

}  // namespace v2g::test
