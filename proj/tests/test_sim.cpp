#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>

#include "v2g/simulate.hpp"

using namespace v2g;

namespace {

// A light configuration that keeps unit tests quick.
SimConfig small_config() {
  SimConfig cfg;
  cfg.station.horizon = 12;
  cfg.station.peak_start = 4;
  cfg.station.peak_end = 9;
  cfg.station.storage_capacity = 5.0;
  cfg.arrivals.peak_rate = 4.0;
  cfg.arrivals.offpeak_rate = 2.0;
  cfg.arrivals.peak_start = 4;
  cfg.arrivals.peak_end = 9;
  cfg.grid.max_energy = 8.0;
  cfg.grid.energy_step = 2.0;
  cfg.grid.max_deadline_hours = 4;
  cfg.grid.bu_max = 4.0;
  cfg.grid.bu_step = 2.0;
  cfg.strategy.kind = StrategyKind::WorstCaseProfit;
  cfg.strategy.beta = 0.5;
  cfg.seed = 11;
  return cfg;
}

}  // namespace

TEST_CASE("arrival sampling") {
  SECTION("zero rate gives no arrivals") {
    ArrivalProcess p;
    p.peak_rate = 0;
    p.offpeak_rate = 0;
    Rng rng(1);
    REQUIRE(sample_arrivals(p, 24, rng).empty());
  }

  SECTION("homogeneous mean count matches the Poisson law") {
    ArrivalProcess p;
    p.peak_rate = 5.0;
    p.offpeak_rate = 5.0;
    Rng rng(42);
    const int reps = 4000;
    double horizon = 10.0;
    double acc = 0;
    for (int k = 0; k < reps; ++k) {
      auto t = sample_arrivals(p, horizon, rng);
      acc += static_cast<double>(t.size());
      for (std::size_t i = 0; i + 1 < t.size(); ++i) REQUIRE(t[i] <= t[i + 1]);
      if (!t.empty()) {
        REQUIRE(t.front() >= 0.0);
        REQUIRE(t.back() < horizon);
      }
    }
    double mean = acc / reps;
    double se = std::sqrt(50.0 / reps);  // var of Poisson(50)
    REQUIRE(std::abs(mean - 50.0) <= 3 * se);
  }

  SECTION("counts in disjoint intervals are uncorrelated") {
    ArrivalProcess p;
    p.peak_rate = 6.0;
    p.offpeak_rate = 6.0;
    Rng rng(7);
    const int reps = 4000;
    double sx = 0, sy = 0, sxy = 0;
    for (int k = 0; k < reps; ++k) {
      auto t = sample_arrivals(p, 8.0, rng);
      int x = 0, y = 0;
      for (double a : t) (a < 4.0 ? x : y)++;
      sx += x;
      sy += y;
      sxy += double(x) * y;
    }
    double cov = sxy / reps - (sx / reps) * (sy / reps);
    // var of each count is 24; SE of the sample covariance ~ 24/sqrt(reps)
    REQUIRE(std::abs(cov) <= 3 * 24.0 / std::sqrt(double(reps)));
  }

  SECTION("thinning respects the piecewise rates") {
    ArrivalProcess p;  // 15 peak, 5 offpeak over 8..17
    Rng rng(3);
    const int reps = 2000;
    double peak = 0, off = 0;
    for (int k = 0; k < reps; ++k)
      for (double a : sample_arrivals(p, 24, rng)) (a >= 8 && a < 17 ? peak : off) += 1;
    REQUIRE(std::abs(peak / reps - 15.0 * 9) <= 3 * std::sqrt(135.0 / reps));
    REQUIRE(std::abs(off / reps - 5.0 * 15) <= 3 * std::sqrt(75.0 / reps));
  }
}

TEST_CASE("run_day basics") {
  SimConfig cfg = small_config();

  SECTION("no arrivals means no admissions and pure storage arbitrage") {
    SimConfig quiet = cfg;
    quiet.arrivals.peak_rate = 0;
    quiet.arrivals.offpeak_rate = 0;
    SimMetrics m = run_day(quiet, 5);
    REQUIRE(m.arrivals == 0);
    REQUIRE(m.admitted == 0);
    REQUIRE(m.total_station_profit == 0.0);
    REQUIRE(m.total_user_surplus == 0.0);
  }

  SECTION("seed determinism") {
    SimMetrics a = run_day(cfg, 99);
    SimMetrics b = run_day(cfg, 99);
    REQUIRE(a.arrivals == b.arrivals);
    REQUIRE(a.admitted == b.admitted);
    REQUIRE(a.total_station_profit == b.total_station_profit);
    REQUIRE(a.total_user_surplus == b.total_user_surplus);
    REQUIRE(a.grid_purchases == b.grid_purchases);
    SimMetrics c = run_day(cfg, 100);
    REQUIRE((a.arrivals != c.arrivals || a.total_station_profit != c.total_station_profit));
  }

  SECTION("ledger consistency: profit matches the acceptance records") {
    SimMetrics m = run_day(cfg, 7);
    double acc = 0;
    for (auto& [price, marginal] : m.acceptances) acc += price - marginal;
    REQUIRE(m.total_station_profit == Catch::Approx(acc).margin(1e-6));
    REQUIRE(static_cast<long>(m.acceptances.size()) == m.admitted);
    REQUIRE(m.admitted_fraction ==
            Catch::Approx(double(m.admitted) / double(m.arrivals)).margin(1e-12));
  }

  SECTION("an absurd beta admits nobody") {
    SimConfig pricey = cfg;
    pricey.strategy.kind = StrategyKind::FixedBeta;
    pricey.strategy.beta = 1000.0;
    SimMetrics m = run_day(pricey, 21);
    REQUIRE(m.arrivals > 0);
    REQUIRE(m.admitted == 0);
  }

  SECTION("V2G on beats V2G off on replicate-averaged profit") {
    double with_v2g = 0, without = 0;
    for (int r = 0; r < 6; ++r) {
      SimConfig on = cfg;
      SimMetrics a = run_day(on, replicate_seed(cfg.seed, r));
      SimConfig off = cfg;
      off.v2g_enabled = false;
      SimMetrics b = run_day(off, replicate_seed(cfg.seed, r));
      with_v2g += a.total_station_profit;
      without += b.total_station_profit;
    }
    REQUIRE(with_v2g >= without - 1e-9);
  }
}

TEST_CASE("sweep wiring") {
  SimConfig cfg = small_config();
  cfg.threads = 2;

  SECTION("single point, single replicate equals run_day") {
    SweepResult r = sweep(cfg, SweepAxis::Beta, {0.5}, 1);
    SimMetrics direct = run_day(with_axis_value(cfg, SweepAxis::Beta, 0.5),
                                replicate_seed(cfg.seed, 0));
    REQUIRE(r.points.size() == 1);
    REQUIRE(r.points[0].replicates.size() == 1);
    REQUIRE(r.points[0].replicates[0].total_station_profit == direct.total_station_profit);
    REQUIRE(r.points[0].replicates[0].admitted == direct.admitted);
  }

  SECTION("common random numbers: arrivals identical across sweep points") {
    SweepResult r = sweep(cfg, SweepAxis::Beta, {0.0, 2.0}, 3);
    for (int rep = 0; rep < 3; ++rep)
      REQUIRE(r.points[0].replicates[rep].arrivals == r.points[1].replicates[rep].arrivals);
  }

  SECTION("surplus trends down in beta") {
    SweepResult r = sweep(cfg, SweepAxis::Beta, {0.0, 3.0}, 4);
    std::vector<double> lo, hi;
    for (int rep = 0; rep < 4; ++rep) {
      lo.push_back(r.points[0].replicates[rep].total_user_surplus);
      hi.push_back(r.points[1].replicates[rep].total_user_surplus);
    }
    TrendCheck tc = paired_trend_geq(lo, hi);
    REQUIRE(tc.holds);
  }
}

TEST_CASE("trend test mechanics") {
  // All-positive differences hold; strongly negative ones are rejected.
  REQUIRE(paired_trend_geq({3, 4, 5, 6}, {1, 2, 3, 4}).holds);
  REQUIRE_FALSE(paired_trend_geq({1, 1.1, 0.9, 1.0, 1.05}, {2, 2.1, 1.9, 2.0, 2.05}).holds);
  // Small noise around zero is not evidence against the trend.
  REQUIRE(paired_trend_geq({1.0, 0.99, 1.01, 1.0}, {1.0, 1.0, 1.0, 1.0}).holds);
  // NaN pairs are dropped.
  auto tc = paired_trend_geq({1.0, std::nan("")}, {0.5, 1.0});
  REQUIRE(tc.pairs == 1);
}

TEST_CASE("timing probe", "[.timing]") {
  // Not part of the default run: `unit_tests "[.timing]"` prints how long a
  // day costs at various scales, which is how the acceptance sweep was sized.
  SimConfig cfg;  // spec-scale defaults
  auto t0 = std::chrono::steady_clock::now();
  SimMetrics m = run_day(cfg, 1);
  auto t1 = std::chrono::steady_clock::now();
  WARN("default-scale day: "
       << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
       << " ms, arrivals " << m.arrivals << ", admitted " << m.admitted
       << ", max active " << m.max_active_users);
}
