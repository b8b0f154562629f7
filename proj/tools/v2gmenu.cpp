// v2gmenu: menu-based pricing simulator for a bidirectional EV charging
// station. Loads a scenario document, runs a day simulation (optionally
// sweeping the profit margin or the storage capacity), and writes metrics,
// per-slot traces, a summary, and a run manifest. `--verify` runs the
// property suites instead.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "v2g/config.hpp"
#include "v2g/io.hpp"
#include "v2g/simulate.hpp"
#include "v2g/verify.hpp"

namespace {

constexpr const char* kVersion = "1.0.0";

std::vector<double> parse_range(const std::string& spec) {
  // "a:b:step" inclusive of both ends (within a half-step tolerance)
  double a, b, step;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &a, &b, &step) != 3 || step <= 0 || b < a)
    throw v2g::ConfigError({"--sweep-beta expects a:b:step with step > 0 and b >= a"});
  std::vector<double> out;
  for (double x = a; x <= b + step / 2; x += step) out.push_back(x);
  return out;
}

int run_verify(bool quick) {
  using namespace v2g;
  long n_state = quick ? 60 : 300;
  long n_menu = quick ? 20 : 80;
  long n_tables = quick ? 2000 : 10000;
  long n_users = quick ? 20000 : 100000;
  std::vector<VerifyReport> reports;
  reports.push_back(verify_no_simultaneous_flow(n_state, 1));
  reports.push_back(verify_bu_monotonicity(n_menu, 2));
  reports.push_back(verify_welfare_optimality(n_tables, 3));
  reports.push_back(verify_profit_law(n_users, 4));
  reports.push_back(verify_participation(n_tables, 5));
  reports.push_back(verify_zeta_dominance(n_users, 6, false));
  reports.push_back(verify_zeta_dominance(n_users, 7, true));
  int bad = print_reports(reports);
  if (bad) std::fprintf(stderr, "%d property suite(s) failed\n", bad);
  return bad ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"menu-based V2G charging-station pricing simulator"};
  app.set_version_flag("--version", kVersion);

  std::string config_path, out_dir, strategy, sweep_beta_spec;
  double beta = -1, bmax = -1;
  std::int64_t seed = -1;
  int replicates = -1, threads = -1;
  bool no_v2g = false, verify = false, quick = false;

  app.add_option("--config", config_path, "scenario document (JSON); defaults when omitted");
  app.add_option("--out", out_dir, "output directory for metrics/traces/summary/manifest");
  app.add_option("--strategy", strategy, "pricing strategy: cost|worst|clairvoyant|beta|zeta");
  app.add_option("--beta", beta, "profit margin added by the worst/beta strategies");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--replicates", replicates, "replicates per sweep point");
  app.add_option("--threads", threads, "parallel replicates (0 = hardware)");
  app.add_flag("--no-v2g", no_v2g, "restrict the menu to BU = 0");
  app.add_option("--sweep-beta", sweep_beta_spec, "sweep beta over a:b:step");
  app.add_option("--bmax", bmax, "storage capacity override");
  app.add_flag("--verify", verify, "run the property suites and exit");
  app.add_flag("--quick", quick, "reduce instance counts for --verify");

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify) return run_verify(quick);

    v2g::SimConfig cfg;
    if (!config_path.empty()) cfg = v2g::load_config(config_path);
    if (!strategy.empty() && !v2g::strategy_from_name(strategy, cfg.strategy.kind)) {
      std::fprintf(stderr, "unknown strategy \"%s\"\n", strategy.c_str());
      return 1;
    }
    if (beta >= 0) cfg.strategy.beta = beta;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (replicates >= 0) cfg.replicates = replicates;
    if (threads >= 0) cfg.threads = threads;
    if (no_v2g) cfg.v2g_enabled = false;
    if (bmax >= 0) cfg.station.storage_capacity = bmax;
    if (!sweep_beta_spec.empty()) cfg.sweep_beta = parse_range(sweep_beta_spec);
    v2g::validate_config(cfg);

    if (out_dir.empty()) {
      std::fprintf(stderr, "--out is required for a simulation run\n");
      return 1;
    }
    std::filesystem::create_directories(out_dir);

    std::string param = "beta";
    v2g::SweepAxis axis = v2g::SweepAxis::Beta;
    std::vector<double> values;
    if (!cfg.sweep_beta.empty()) {
      values = cfg.sweep_beta;
    } else if (!cfg.sweep_bmax.empty()) {
      axis = v2g::SweepAxis::StorageCapacity;
      param = "bmax";
      values = cfg.sweep_bmax;
    } else {
      values = {cfg.strategy.beta};  // degenerate single-point sweep
    }

    v2g::SweepResult result = v2g::sweep(cfg, axis, values, cfg.replicates);

    std::string metrics = std::string(v2g::kMetricsHeader) + '\n';
    v2g::append_metrics_rows(metrics, param, result);
    v2g::write_file(out_dir + "/metrics.csv", metrics);

    std::string traces = std::string(v2g::kTracesHeader) + '\n';
    v2g::append_trace_rows(traces, param, result);
    v2g::write_file(out_dir + "/traces.csv", traces);

    v2g::json summary;
    summary["points"] = v2g::summarize(param, result);
    summary["strategy"] = v2g::strategy_name(cfg.strategy.kind);
    v2g::write_file(out_dir + "/summary.json", summary.dump(2) + "\n");
    v2g::write_file(out_dir + "/manifest.json",
                    v2g::manifest_json(cfg, kVersion).dump(2) + "\n");

    std::printf("wrote %s/{metrics.csv,traces.csv,summary.json,manifest.json}\n",
                out_dir.c_str());
    return 0;
  } catch (const v2g::ConfigError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
