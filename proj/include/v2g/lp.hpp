#pragma once
// Dense two-phase simplex for the desk-scale linear programs this project
// builds. Variable bounds (upper possibly +inf, lower possibly -inf) are
// handled implicitly by the pivoting rules instead of extra rows.
//
// Pricing is Dantzig's rule with smallest-index tie breaking; after a long
// degenerate stall the solver switches to Bland's rule until the objective
// moves again, so termination does not depend on luck. All rules are
// index-based, which makes the result bit-reproducible for a fixed input.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace v2g {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Relation { LessEq, Eq, GreaterEq };

struct LpStructureError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct LpNumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LinearProgram {
  std::vector<double> objective;   // size n, minimized
  std::vector<double> matrix;      // row-major, num_rows() x n
  std::vector<Relation> relations;
  std::vector<double> rhs;
  std::vector<double> lower;       // size n, may be -inf
  std::vector<double> upper;       // size n, may be +inf

  static LinearProgram with_vars(std::size_t n) {
    LinearProgram lp;
    lp.objective.assign(n, 0.0);
    lp.lower.assign(n, 0.0);
    lp.upper.assign(n, kInf);
    return lp;
  }

  std::size_t num_vars() const { return objective.size(); }
  std::size_t num_rows() const { return rhs.size(); }

  double* row(std::size_t i) { return matrix.data() + i * num_vars(); }
  const double* row(std::size_t i) const { return matrix.data() + i * num_vars(); }

  void reserve_rows(std::size_t n_rows) {
    matrix.reserve(n_rows * num_vars());
    relations.reserve(n_rows);
    rhs.reserve(n_rows);
  }

  // Appends an all-zero row and returns a pointer to its coefficients. The
  // pointer is invalidated by the next add_row: fill the row before adding
  // another one.
  double* add_row(Relation rel, double b) {
    matrix.resize(matrix.size() + num_vars(), 0.0);
    relations.push_back(rel);
    rhs.push_back(b);
    return row(num_rows() - 1);
  }

  void add_row(const std::vector<double>& coeffs, Relation rel, double b) {
    if (coeffs.size() != num_vars())
      throw LpStructureError("constraint row has wrong dimension");
    double* r = add_row(rel, b);
    std::copy(coeffs.begin(), coeffs.end(), r);
  }

  void validate() const {
    const std::size_t n = num_vars();
    if (n == 0) throw LpStructureError("LP has no variables");
    if (lower.size() != n || upper.size() != n)
      throw LpStructureError("bounds size mismatch");
    if (matrix.size() != num_rows() * n || relations.size() != num_rows())
      throw LpStructureError("constraint matrix size mismatch");
    for (std::size_t j = 0; j < n; ++j) {
      if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j])
        throw LpStructureError("variable " + std::to_string(j) + " has empty bound interval");
      if (std::isnan(objective[j]) || std::isinf(objective[j]))
        throw LpStructureError("objective coefficient not finite");
    }
    for (double a : matrix)
      if (!std::isfinite(a)) throw LpStructureError("constraint coefficient not finite");
    for (double b : rhs)
      if (!std::isfinite(b)) throw LpStructureError("rhs not finite");
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
  LpStatus status = LpStatus::Infeasible;
  double objective_value = kInf;   // +inf when infeasible, -inf when unbounded
  std::vector<double> primal;      // n values when Optimal, else empty
  std::vector<double> row_duals;   // simplex multipliers when Optimal, else empty
  long iterations = 0;
};

struct LpOptions {
  double feas_tol = 1e-7;
  double obj_tol = 1e-7;
  long max_iterations = 0;  // 0 -> 50 * (vars + rows)
  int threads = 0;          // solve_batch fan-out; 0 -> hardware concurrency
};

namespace detail {

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const LpOptions& opt) : lp_(lp), opt_(opt) {
    n_ = lp.num_vars();
    m_ = lp.num_rows();
    total_ = n_ + m_;  // artificial columns appended later
    lo_.assign(total_, 0.0);
    up_.assign(total_, kInf);
    cost_.assign(total_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      lo_[j] = lp.lower[j];
      up_[j] = lp.upper[j];
      cost_[j] = lp.objective[j];
    }
    for (std::size_t i = 0; i < m_; ++i) {
      std::size_t s = n_ + i;
      switch (lp.relations[i]) {
        case Relation::LessEq: lo_[s] = 0.0; up_[s] = kInf; break;
        case Relation::GreaterEq: lo_[s] = -kInf; up_[s] = 0.0; break;
        case Relation::Eq: lo_[s] = 0.0; up_[s] = 0.0; break;
      }
    }
  }

  LpSolution run() {
    build_tableau();
    long budget = opt_.max_iterations > 0
                      ? opt_.max_iterations
                      : 50 * static_cast<long>(n_ + m_);

    if (n_art_ > 0) {
      optimize(phase1_cost_, budget, /*phase1=*/true);
      double infeas = 0.0;
      for (std::size_t i = 0; i < m_; ++i)
        if (basis_[i] >= static_cast<int>(n_ + m_)) infeas += std::abs(xb_[i]);
      if (infeas > opt_.feas_tol * (1.0 + rhs_scale_)) {
        LpSolution sol;
        sol.status = LpStatus::Infeasible;
        sol.objective_value = kInf;
        sol.iterations = iterations_;
        return sol;
      }
      retire_artificials();
    }

    bool unbounded = !optimize(cost_, budget, /*phase1=*/false);
    LpSolution sol;
    sol.iterations = iterations_;
    if (unbounded) {
      sol.status = LpStatus::Unbounded;
      sol.objective_value = -kInf;
      return sol;
    }
    sol.status = LpStatus::Optimal;
    sol.primal.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) sol.primal[j] = value_of(j);
    double obj = 0.0;
    for (std::size_t j = 0; j < n_; ++j) obj += lp_.objective[j] * sol.primal[j];
    sol.objective_value = obj;
    sol.row_duals.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) sol.row_duals[i] = -reduced_[n_ + i];
    audit(sol);
    return sol;
  }

 private:
  static constexpr double kPivotTol = 1e-9;
  static constexpr double kCostTol = 1e-9;

  enum Status : std::uint8_t { AtLower, AtUpper, Basic, Free };

  const LinearProgram& lp_;
  const LpOptions& opt_;
  std::size_t n_ = 0, m_ = 0, total_ = 0, n_art_ = 0;
  std::vector<double> tab_;          // m_ x total_
  std::vector<double> xb_;           // basic values per row
  std::vector<int> basis_;           // row -> column
  std::vector<double> lo_, up_, cost_, phase1_cost_;
  std::vector<Status> status_;
  std::vector<double> reduced_;      // reduced costs of the active phase
  double rhs_scale_ = 1.0;
  long iterations_ = 0;

  double* tab_row(std::size_t i) { return tab_.data() + i * total_; }

  double value_of(std::size_t j) const {
    switch (status_[j]) {
      case AtLower: return lo_[j];
      case AtUpper: return up_[j];
      case Free: return 0.0;
      case Basic:
        for (std::size_t i = 0; i < m_; ++i)
          if (basis_[i] == static_cast<int>(j)) return xb_[i];
        return 0.0;
    }
    return 0.0;
  }

  void build_tableau() {
    status_.assign(total_, AtLower);
    for (std::size_t j = 0; j < total_; ++j) {
      if (std::isfinite(lo_[j])) status_[j] = AtLower;
      else if (std::isfinite(up_[j])) status_[j] = AtUpper;
      else status_[j] = Free;
    }

    rhs_scale_ = 0.0;
    for (double b : lp_.rhs) rhs_scale_ = std::max(rhs_scale_, std::abs(b));

    // Residual of each row at the initial nonbasic point.
    std::vector<double> resid(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      double act = 0.0;
      const double* r = lp_.row(i);
      for (std::size_t j = 0; j < n_; ++j) {
        double v = status_[j] == AtLower ? lo_[j] : (status_[j] == AtUpper ? up_[j] : 0.0);
        act += r[j] * v;
      }
      resid[i] = lp_.rhs[i] - act;  // slack starts at value 0
    }

    // A row whose slack can absorb the residual needs no artificial.
    std::vector<int> art_sign(m_, 0);
    basis_.assign(m_, -1);
    for (std::size_t i = 0; i < m_; ++i) {
      std::size_t s = n_ + i;
      if (resid[i] >= lo_[s] - 1e-12 && resid[i] <= up_[s] + 1e-12) {
        basis_[i] = static_cast<int>(s);
      } else {
        art_sign[i] = resid[i] > 0 ? 1 : -1;
        ++n_art_;
      }
    }

    total_ = n_ + m_ + n_art_;
    lo_.resize(total_, 0.0);
    up_.resize(total_, kInf);
    cost_.resize(total_, 0.0);
    status_.resize(total_, AtLower);
    phase1_cost_.assign(total_, 0.0);

    tab_.assign(m_ * total_, 0.0);
    xb_.assign(m_, 0.0);
    std::size_t art = n_ + m_;
    for (std::size_t i = 0; i < m_; ++i) {
      double* t = tab_row(i);
      const double* r = lp_.row(i);
      double sign = art_sign[i] < 0 ? -1.0 : 1.0;
      for (std::size_t j = 0; j < n_; ++j) t[j] = sign * r[j];
      t[n_ + i] = sign;
      if (art_sign[i] != 0) {
        t[art] = 1.0;
        phase1_cost_[art] = 1.0;
        basis_[i] = static_cast<int>(art);
        xb_[i] = std::abs(resid[i]);
        ++art;
      } else {
        xb_[i] = std::clamp(resid[i], lo_[n_ + i], up_[n_ + i]);
      }
      status_[basis_[i]] = Basic;
    }
  }

  void compute_reduced(const std::vector<double>& cost) {
    reduced_.assign(cost.begin(), cost.end());
    for (std::size_t i = 0; i < m_; ++i) {
      double cb = cost[basis_[i]];
      if (cb == 0.0) continue;
      const double* t = tab_row(i);
      for (std::size_t j = 0; j < total_; ++j) reduced_[j] -= cb * t[j];
    }
  }

  bool eligible(std::size_t j, bool phase1, int& dir) const {
    if (status_[j] == Basic) return false;
    if (!phase1 && j >= n_ + m_) return false;  // artificials may not re-enter
    if (lo_[j] == up_[j]) return false;
    double d = reduced_[j];
    switch (status_[j]) {
      case AtLower:
        if (d < -kCostTol) { dir = 1; return true; }
        return false;
      case AtUpper:
        if (d > kCostTol) { dir = -1; return true; }
        return false;
      case Free:
        if (d < -kCostTol) { dir = 1; return true; }
        if (d > kCostTol) { dir = -1; return true; }
        return false;
      default:
        return false;
    }
  }

  double objective_now(const std::vector<double>& cost) const {
    double z = 0.0;
    for (std::size_t i = 0; i < m_; ++i) z += cost[basis_[i]] * xb_[i];
    for (std::size_t j = 0; j < total_; ++j) {
      if (status_[j] == AtLower && cost[j] != 0.0) z += cost[j] * lo_[j];
      else if (status_[j] == AtUpper && cost[j] != 0.0) z += cost[j] * up_[j];
    }
    return z;
  }

  // Returns false when the phase objective is unbounded below.
  bool optimize(const std::vector<double>& cost, long budget, bool phase1) {
    compute_reduced(cost);
    bool bland = false;
    long stall = 0;
    double last_z = objective_now(cost);
    const long stall_limit = 2 * static_cast<long>(m_ + total_) + 50;

    for (;;) {
      if (iterations_ >= budget)
        throw LpNumericalError("simplex iteration limit (" + std::to_string(budget) +
                               ") exceeded; problem may be numerically degenerate");

      // Entering column.
      int enter = -1, dir = 0;
      if (bland) {
        for (std::size_t j = 0; j < total_; ++j) {
          int d;
          if (eligible(j, phase1, d)) { enter = static_cast<int>(j); dir = d; break; }
        }
      } else {
        double best = kCostTol;
        for (std::size_t j = 0; j < total_; ++j) {
          int d;
          if (!eligible(j, phase1, d)) continue;
          double merit = std::abs(reduced_[j]);
          if (merit > best) { best = merit; enter = static_cast<int>(j); dir = d; }
        }
      }
      if (enter < 0) return true;  // phase optimal

      // Ratio test along the entering direction.
      double span = up_[enter] - lo_[enter];  // inf when a bound is infinite
      double t_best = status_[enter] == Free ? kInf : span;
      int leave_row = -1;     // -1 means the entering variable hits its own bound
      bool leave_at_upper = false;

      for (std::size_t i = 0; i < m_; ++i) {
        double alpha = tab_row(i)[enter];
        double delta = -dir * alpha;  // rate of change of xb_[i]
        if (std::abs(delta) <= kPivotTol) continue;
        int bj = basis_[i];
        double t;
        bool hits_upper;
        if (delta > 0) {
          if (!std::isfinite(up_[bj])) continue;
          t = (up_[bj] - xb_[i]) / delta;
          hits_upper = true;
        } else {
          if (!std::isfinite(lo_[bj])) continue;
          t = (lo_[bj] - xb_[i]) / delta;
          hits_upper = false;
        }
        if (t < 0) t = 0;  // fp drift on a degenerate basis
        if (t < t_best - 1e-12 ||
            (t < t_best + 1e-12 && leave_row >= 0 && bj < basis_[leave_row])) {
          t_best = t;
          leave_row = static_cast<int>(i);
          leave_at_upper = hits_upper;
        }
      }

      if (!std::isfinite(t_best)) {
        if (phase1)
          throw LpNumericalError("phase-1 objective unbounded; tableau corrupt");
        return false;  // unbounded
      }

      ++iterations_;

      if (leave_row < 0) {
        // Entering variable runs to its opposite bound: a bound flip.
        for (std::size_t i = 0; i < m_; ++i) {
          double alpha = tab_row(i)[enter];
          if (alpha != 0.0) xb_[i] += -dir * alpha * t_best;
        }
        status_[enter] = status_[enter] == AtLower ? AtUpper : AtLower;
      } else {
        pivot(static_cast<std::size_t>(leave_row), static_cast<std::size_t>(enter),
              dir, t_best, leave_at_upper);
      }

      // Stall bookkeeping: long degenerate runs switch pricing to Bland's rule.
      double z = objective_now(cost);
      if (z < last_z - 1e-11) {
        last_z = z;
        stall = 0;
        bland = false;
      } else if (++stall > stall_limit) {
        bland = true;
      }
    }
  }


  void pivot(std::size_t r, std::size_t enter, int dir, double step, bool leave_at_upper) {
    double* prow = tab_row(r);
    double piv = prow[enter];
    if (std::abs(piv) < kPivotTol)
      throw LpNumericalError("pivot element below tolerance");

    double enter_start;
    switch (status_[enter]) {
      case AtLower: enter_start = lo_[enter]; break;
      case AtUpper: enter_start = up_[enter]; break;
      default: enter_start = 0.0; break;
    }

    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double alpha = tab_row(i)[enter];
      if (alpha != 0.0) xb_[i] += -dir * alpha * step;
    }

    int leaving = basis_[r];
    status_[leaving] = leave_at_upper ? AtUpper : AtLower;

    double inv = 1.0 / piv;
    for (std::size_t j = 0; j < total_; ++j) prow[j] *= inv;
    prow[enter] = 1.0;
    for (std::size_t i = 0; i < m_; ++i) {
      if (i == r) continue;
      double* t = tab_row(i);
      double f = t[enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < total_; ++j) t[j] -= f * prow[j];
      t[enter] = 0.0;
    }
    double f = reduced_[enter];
    if (f != 0.0) {
      for (std::size_t j = 0; j < total_; ++j) reduced_[j] -= f * prow[j];
      reduced_[enter] = 0.0;
    }

    basis_[r] = static_cast<int>(enter);
    status_[enter] = Basic;
    xb_[r] = enter_start + dir * step;
  }

  // After phase 1, pivot leftover artificials out of the basis where possible.
  // A row that admits no pivot is redundant; its artificial stays basic at 0
  // and its zero tableau row keeps it out of the way.
  void retire_artificials() {
    for (std::size_t i = 0; i < m_; ++i) {
      if (basis_[i] < static_cast<int>(n_ + m_)) continue;
      double* t = tab_row(i);
      int target = -1;
      for (std::size_t j = 0; j < n_ + m_; ++j) {
        if (status_[j] == Basic || lo_[j] == up_[j]) continue;
        if (std::abs(t[j]) > 1e-7) { target = static_cast<int>(j); break; }
      }
      if (target < 0) {
        xb_[i] = 0.0;
        continue;
      }
      int dir = 1;  // degenerate pivot, direction immaterial
      pivot(i, static_cast<std::size_t>(target), dir, 0.0, false);
    }
    // Artificials are frozen afterwards.
    for (std::size_t j = n_ + m_; j < total_; ++j)
      if (status_[j] != Basic) { lo_[j] = up_[j] = 0.0; status_[j] = AtLower; }
  }

  void audit(const LpSolution& sol) const {
    const double tol = opt_.feas_tol * (1.0 + rhs_scale_);
    for (std::size_t j = 0; j < n_; ++j) {
      double v = sol.primal[j];
      if (v < lp_.lower[j] - tol || v > lp_.upper[j] + tol)
        throw LpNumericalError("solution violates variable bounds beyond tolerance");
    }
    for (std::size_t i = 0; i < m_; ++i) {
      double act = 0.0;
      const double* r = lp_.row(i);
      for (std::size_t j = 0; j < n_; ++j) act += r[j] * sol.primal[j];
      double viol = 0.0;
      switch (lp_.relations[i]) {
        case Relation::LessEq: viol = act - lp_.rhs[i]; break;
        case Relation::GreaterEq: viol = lp_.rhs[i] - act; break;
        case Relation::Eq: viol = std::abs(act - lp_.rhs[i]); break;
      }
      if (viol > tol)
        throw LpNumericalError("solution violates row " + std::to_string(i) +
                               " beyond tolerance");
    }
  }
};

}  // namespace detail

inline LpSolution solve(const LinearProgram& lp, const LpOptions& opt = {}) {
  lp.validate();
  detail::Simplex s(lp, opt);
  return s.run();
}

// Element-wise solve; per-element failures are rethrown after the batch so a
// bad cell cannot poison its neighbours' results.
inline std::vector<LpSolution> solve_batch(const std::vector<LinearProgram>& lps,
                                           const LpOptions& opt = {}) {
  std::vector<LpSolution> out(lps.size());
  if (lps.empty()) return out;

  unsigned hw = opt.threads > 0 ? static_cast<unsigned>(opt.threads)
                                : std::max(1u, std::thread::hardware_concurrency());
  unsigned workers = std::min<unsigned>(hw, static_cast<unsigned>(lps.size()));

  std::vector<std::string> errors(lps.size());
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < lps.size(); i += workers) {
      try {
        out[i] = solve(lps[i], opt);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };

  if (workers <= 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }

  for (std::size_t i = 0; i < lps.size(); ++i)
    if (!errors[i].empty())
      throw LpNumericalError("batch element " + std::to_string(i) + ": " + errors[i]);
  return out;
}

}  // namespace v2g
