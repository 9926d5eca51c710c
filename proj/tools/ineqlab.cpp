// Command-line front end: batch suites and one-off computations.

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "ineqlab/battery.hpp"
#include "ineqlab/densities.hpp"
#include "ineqlab/expression.hpp"
#include "ineqlab/generator.hpp"
#include "ineqlab/hopflax.hpp"
#include "ineqlab/suite.hpp"
#include "ineqlab/transport.hpp"

namespace {

using namespace ineqlab;

struct ModelFlags {
  std::string config;
  std::string potential = "ou";
  double lo = -8.0;
  double hi = 8.0;
  std::size_t n = 1024;

  void add(CLI::App* app) {
    app->add_option("--config", config, "take the model from the first entry of a config file");
    app->add_option("--potential", potential, "ou, double_well, quartic, uniform or an expression in x");
    app->add_option("--lo", lo, "left end of the domain");
    app->add_option("--hi", hi, "right end of the domain");
    app->add_option("--n", n, "number of grid nodes");
  }

  GridMeasure measure() const {
    if (!config.empty()) {
      const ModelSpec m = load_config(config).models.front();
      return GridMeasure::build(named_potential(m.potential), m.domain, m.n);
    }
    return GridMeasure::build(named_potential(potential), {lo, hi}, n);
  }
};

int run(const std::string& config_path, const std::string& out_dir, unsigned jobs) {
  const SuiteConfig config = load_config(config_path);
  const SuiteResult result = run_suite(config, jobs);
  const std::filesystem::path dir = out_dir.empty() ? config.output : std::filesystem::path(out_dir);
  write_outputs(result, config, dir);

  std::size_t counts[4] = {0, 0, 0, 0};
  for (const auto& r : result.reports) ++counts[static_cast<int>(r.verdict)];
  fmt::print("{} reports: {} pass, {} fail, {} vacuous, {} skipped\n", result.reports.size(), counts[0], counts[1],
             counts[2], counts[3]);
  for (const auto& r : result.reports) {
    if (r.verdict == Verdict::kFail) {
      fmt::print("FAIL {} [{}] lhs={:.6g} rhs={:.6g} {}\n", r.id, r.context, r.lhs, r.rhs, r.note);
    }
  }
  for (const auto& e : result.errors) fmt::print(stderr, "error: {}\n", e);
  fmt::print("wrote {}\n", (dir / "reports.json").string());
  return exit_status(result);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of transport and functional inequalities on 1D grid measures"};
  app.set_version_flag("--version", std::string(INEQLAB_VERSION));
  app.require_subcommand(0, 1);

  bool list_suites = false;
  app.add_flag("--list-suites", list_suites, "print the suite ids and exit");

  std::string config_path;
  std::string out_dir;
  unsigned jobs = 1;
  CLI::App* run_cmd = app.add_subcommand("run", "run the suites of a config file");
  run_cmd->add_option("--config", config_path, "config JSON")->required();
  run_cmd->add_option("--out", out_dir, "output directory (default: the config's \"output\")");
  run_cmd->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  CLI::App* compute = app.add_subcommand("compute", "one-off computations");
  compute->require_subcommand(1);

  ModelFlags gap_flags;
  CLI::App* gap = compute->add_subcommand("gap", "Poincare constant C_P of the model");
  gap_flags.add(gap);

  ModelFlags w2_flags;
  double w2_tilt = 0.0;
  CLI::App* w2 = compute->add_subcommand("w2", "W2 between exp(m x)-tilted mu and mu");
  w2_flags.add(w2);
  w2->add_option("--tilt", w2_tilt, "tilt slope m");

  ModelFlags evolve_flags;
  double evolve_tilt = 0.5;
  double evolve_t = 1.0;
  CLI::App* evolve_cmd = compute->add_subcommand("evolve", "P_t f for a tilted density, one node per line");
  evolve_flags.add(evolve_cmd);
  evolve_cmd->add_option("--tilt", evolve_tilt, "tilt slope m");
  evolve_cmd->add_option("--t", evolve_t, "time");

  ModelFlags hl_flags;
  std::string hl_h = "0";
  double hl_t = 1.0;
  CLI::App* hl = compute->add_subcommand("hopflax", "Q_t h on the grid, one node per line");
  hl->set_help_flag("--help", "print this help and exit");
  hl_flags.add(hl);
  hl->add_option("--h", hl_h, "expression in x");
  hl->add_option("--t", hl_t, "time");

  CLI11_PARSE(app, argc, argv);

  try {
    if (list_suites) {
      for (const auto& id : suite_ids()) fmt::print("{}\n", id);
      return 0;
    }
    if (*run_cmd) return run(config_path, out_dir, jobs);
    if (*gap) {
      fmt::print("{:.17g}\n", spectral_gap(GeneratorMatrix::from_measure(gap_flags.measure())));
      return 0;
    }
    if (*w2) {
      const GridMeasure mu = w2_flags.measure();
      fmt::print("{:.17g}\n", w2_quantile(exponential_tilt(w2_tilt, mu), mu));
      return 0;
    }
    if (*evolve_cmd) {
      const GridMeasure mu = evolve_flags.measure();
      const DensityRatio f = evolve(GeneratorMatrix::from_measure(mu), exponential_tilt(evolve_tilt, mu), evolve_t, mu);
      for (std::size_t i = 0; i < mu.size(); ++i) fmt::print("{:.17g} {:.17g}\n", mu.node(i), f[i]);
      return 0;
    }
    if (*hl) {
      const GridMeasure mu = hl_flags.measure();
      const Expression h = Expression::parse(hl_h);
      GridFunction g{std::vector<double>(mu.size())};
      for (std::size_t i = 0; i < mu.size(); ++i) g.values[i] = h(mu.node(i));
      const GridFunction q = hopf_lax(g, hl_t, mu);
      for (std::size_t i = 0; i < mu.size(); ++i) fmt::print("{:.17g} {:.17g}\n", mu.node(i), q[i]);
      return 0;
    }
    std::cout << app.help();
    return 0;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return 2;
  } catch (const ineqlab::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 3;
  }
}
