#pragma once
// Output artifacts: metrics.csv (one row per sweep point x replicate),
// traces.csv (tidy per-slot series), summary.json, and manifest.json.
// Formatting is fixed so rerunning a pinned (config, seed) reproduces the
// files byte for byte.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "v2g/config.hpp"
#include "v2g/simulate.hpp"

namespace v2g {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string format_num(double v) {
  if (std::isnan(v)) return "";  // empty field for undefined averages
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string config_hash(const SimConfig& cfg) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, fnv1a(config_to_json(cfg).dump()));
  return buf;
}

inline const char* kMetricsHeader =
    "sweep_param,sweep_value,replicate,arrivals,admitted,admitted_fraction,"
    "total_user_surplus,total_station_profit,avg_dwell_time_h,avg_additional_bu_kwh,"
    "avg_energy_kwh,max_active_users,onpeak_grid_kwh,offpeak_grid_kwh,peak_grid_kwh";

inline void append_metrics_rows(std::string& out, const std::string& param,
                                const SweepResult& result) {
  for (const SweepPointResult& point : result.points) {
    for (std::size_t r = 0; r < point.replicates.size(); ++r) {
      const SimMetrics& m = point.replicates[r];
      out += param + ',' + format_num(point.value) + ',' + std::to_string(r) + ',' +
             std::to_string(m.arrivals) + ',' + std::to_string(m.admitted) + ',' +
             format_num(m.admitted_fraction) + ',' + format_num(m.total_user_surplus) +
             ',' + format_num(m.total_station_profit) + ',' + format_num(m.avg_dwell_time) +
             ',' + format_num(m.avg_additional_bu) + ',' + format_num(m.avg_energy) + ',' +
             std::to_string(m.max_active_users) + ',' + format_num(m.onpeak_purchases) +
             ',' + format_num(m.offpeak_purchases) + ',' + format_num(m.peak_purchase) +
             '\n';
    }
  }
}

inline const char* kTracesHeader =
    "sweep_param,sweep_value,replicate,slot,grid_purchase_kwh,mean_offered_price,"
    "active_users";

inline void append_trace_rows(std::string& out, const std::string& param,
                              const SweepResult& result) {
  for (const SweepPointResult& point : result.points) {
    for (std::size_t r = 0; r < point.replicates.size(); ++r) {
      const SimMetrics& m = point.replicates[r];
      for (std::size_t t = 0; t < m.grid_purchases.size(); ++t)
        out += param + ',' + format_num(point.value) + ',' + std::to_string(r) + ',' +
               std::to_string(t) + ',' + format_num(m.grid_purchases[t]) + ',' +
               format_num(m.mean_offered_price[t]) + ',' +
               std::to_string(m.active_users[t]) + '\n';
    }
  }
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

inline json summarize(const std::string& param, const SweepResult& result) {
  json points = json::array();
  for (const SweepPointResult& p : result.points) {
    auto stat = [&](double (*f)(const SimMetrics&)) {
      double mean = 0, var = 0;
      long n = 0;
      for (const SimMetrics& m : p.replicates) {
        double v = f(m);
        if (std::isnan(v)) continue;
        mean += v;
        ++n;
      }
      if (n == 0) return json{{"mean", nullptr}, {"se", nullptr}};
      mean /= n;
      for (const SimMetrics& m : p.replicates) {
        double v = f(m);
        if (std::isnan(v)) continue;
        var += (v - mean) * (v - mean);
      }
      var = n > 1 ? var / (n - 1) : 0.0;
      return json{{"mean", mean}, {"se", std::sqrt(var / n)}};
    };
    json pj;
    pj["sweep_param"] = param;
    pj["sweep_value"] = p.value;
    pj["replicates"] = p.replicates.size();
    pj["admitted_fraction"] = stat([](const SimMetrics& m) { return m.admitted_fraction; });
    pj["total_user_surplus"] = stat([](const SimMetrics& m) { return m.total_user_surplus; });
    pj["total_station_profit"] =
        stat([](const SimMetrics& m) { return m.total_station_profit; });
    pj["avg_dwell_time_h"] = stat([](const SimMetrics& m) { return m.avg_dwell_time; });
    pj["avg_additional_bu_kwh"] =
        stat([](const SimMetrics& m) { return m.avg_additional_bu; });
    pj["onpeak_grid_kwh"] = stat([](const SimMetrics& m) { return m.onpeak_purchases; });
    pj["offpeak_grid_kwh"] = stat([](const SimMetrics& m) { return m.offpeak_purchases; });
    pj["peak_grid_kwh"] = stat([](const SimMetrics& m) { return m.peak_purchase; });
    points.push_back(pj);
  }
  return points;
}

inline json manifest_json(const SimConfig& cfg, const std::string& version) {
  return json{{"seed", cfg.seed},
              {"config_hash", config_hash(cfg)},
              {"replicates", cfg.replicates},
              {"version", version}};
}

}  // namespace v2g
