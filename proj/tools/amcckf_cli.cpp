// amcckf: simulate datasets, run filters, compare variants, benchmark.
//
// Exit codes: 0 success, 2 validation error, 3 data error, 1 anything else.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "amcckf/dataset.hpp"
#include "amcckf/experiment.hpp"
#include "amcckf/run_config.hpp"
#include "amcckf/sim_harness.hpp"

namespace {

using namespace amcckf;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> filter;
  std::optional<std::string> out;
  std::optional<std::string> scenario;
  std::optional<std::string> dataset;
  std::optional<std::string> truth;
  std::vector<std::string> overrides;  // key=value

  void attach(CLI::App* app) {
    app->add_option("--config", config, "key = value configuration file");
    app->add_option("--seed", seed, "random seed");
    app->add_option("--filter", filter, "ekf | akf | mcckf | r-amcckf | vb-amcckf");
    app->add_option("--out", out, "output directory");
    app->add_option("--scenario", scenario,
                    "hover | waypoint | figure-eight | jumps | divergence");
    app->add_option("--dataset", dataset, "dataset CSV (replaces the scenario)");
    app->add_option("--truth", truth, "ground-truth CSV for a dataset");
    app->add_option("--set", overrides, "extra key=value override, repeatable");
  }

  RunConfig resolve() const {
    RunConfig rc;
    if (!config.empty()) rc = load_run_config(config);
    if (seed) rc.set("seed", std::to_string(*seed));
    if (filter) rc.set("filter", *filter);
    if (out) rc.set("out", *out);
    if (scenario) rc.set("scenario", *scenario);
    if (dataset) rc.set("dataset", *dataset);
    if (truth) rc.set("truth", *truth);
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ValidationError("--set: expected key=value, got '" + kv + "'");
      rc.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    rc.validate();
    return rc;
  }
};

std::vector<FilterVariant> parse_filters(const std::vector<std::string>& names) {
  if (names.empty()) return all_variants();
  std::vector<FilterVariant> out;
  for (const auto& n : names) out.push_back(parse_variant(n));
  return out;
}

void print_warnings(const RunConfig& rc) {
  if (rc.dataset.empty()) return;
  for (const auto& w : ingest_dataset(rc.dataset).warnings) std::cerr << "warning: " << w << '\n';
}

int run(int argc, char** argv) {
  CLI::App app{"Adaptive maximum-correntropy Kalman filtering for IMU/odometry fusion"};
  app.require_subcommand(1);

  CommonFlags sim_flags, fuse_flags, cmp_flags, bench_flags;

  auto* sim = app.add_subcommand("simulate", "generate a synthetic dataset and ground truth");
  sim_flags.attach(sim);

  auto* fuse = app.add_subcommand("fuse", "run one filter and write estimates and metrics");
  fuse_flags.attach(fuse);

  auto* cmp = app.add_subcommand("compare", "run several filters on the same stream");
  cmp_flags.attach(cmp);
  std::vector<std::string> cmp_filters;
  cmp->add_option("--filters", cmp_filters, "variants to run (default: all)")->delimiter(',');

  auto* bch = app.add_subcommand("bench", "per-step timing table");
  bench_flags.attach(bch);
  std::vector<std::string> bench_filters;
  std::vector<int> windows;
  int repeats = 3;
  bch->add_option("--filters", bench_filters, "variants to time (default: all)")->delimiter(',');
  bch->add_option("--windows", windows, "window sizes to sweep")->delimiter(',');
  bch->add_option("--repeats", repeats, "repeats per configuration")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (sim->parsed()) {
    RunConfig rc = sim_flags.resolve();
    if (!rc.dataset.empty()) throw ValidationError("dataset: simulate generates a dataset, do not pass one");
    const ScenarioSpec spec = make_scenario_spec(rc);
    const auto truth = generate_truth(spec);
    const SensorStream stream = sample_sensors(truth, spec);
    std::filesystem::create_directories(rc.out);
    const std::filesystem::path out(rc.out);
    write_dataset((out / "dataset.csv").string(), stream.events);
    write_truth((out / "truth.csv").string(), truth);
    std::cout << "wrote " << stream.events.size() << " events to " << (out / "dataset.csv").string()
              << '\n';
    for (const auto& [id, n] : stream.jump_onsets) {
      std::cout << "  " << id << ": " << n << " jump onsets\n";
    }
    return 0;
  }

  if (fuse->parsed()) {
    RunConfig rc = fuse_flags.resolve();
    print_warnings(rc);
    const ExperimentResult res = run_experiment(rc);
    std::cout << format_compare_table({res.report});
    std::cout << "wrote " << rc.out << "/estimate.csv, metrics.json, timing.json\n";
    return 0;
  }

  if (cmp->parsed()) {
    RunConfig rc = cmp_flags.resolve();
    print_warnings(rc);
    const auto reports = compare(rc, parse_filters(cmp_filters));
    std::filesystem::create_directories(rc.out);
    const std::filesystem::path out(rc.out);
    for (const auto& r : reports) {
      write_metrics((out / ("metrics_" + r.filter + ".json")).string(), r);
      write_estimates((out / ("estimate_" + r.filter + ".csv")).string(), r);
    }
    write_timing((out / "timing.json").string(), reports);
    std::cout << format_compare_table(reports);
    return 0;
  }

  RunConfig base = bench_flags.resolve();
  std::vector<BenchCase> cases;
  const auto filters = bench_filters.empty() && !bench_flags.filter
                           ? all_variants()
                           : (bench_filters.empty() ? std::vector<FilterVariant>{base.filter}
                                                    : parse_filters(bench_filters));
  if (windows.empty()) windows.push_back(base.window);
  for (FilterVariant v : filters) {
    for (int w : windows) {
      RunConfig c = base;
      c.filter = v;
      c.window = w;
      c.validate();
      cases.push_back({std::string(to_string(v)) + " w=" + std::to_string(w), c});
    }
  }
  const auto rows = bench(cases, repeats);
  std::filesystem::create_directories(base.out);
  write_bench((std::filesystem::path(base.out) / "bench.json").string(), rows);
  std::cout << format_bench_table(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const amcckf::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 2;
  } catch (const amcckf::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
