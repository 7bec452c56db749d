// deepls: train two-branch networks on 1D elliptic problems and tabulate runs.
//
//   deepls solve --problem poisson --loss fosls --activation leaky-relu --points 800 \
//                --iters 10000 --lr 5e-4 --seeds 1,2,3 --out runs/p800
//   deepls table1 --points 200
//   deepls table5 --mode local
//   deepls run --config runs/p800/config.txt --out runs/p800-again
//   deepls compare runs/p800 runs/p200 --csv table.csv

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deepls/experiment.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfig = 2,
  kIo = 3,
  kTraining = 4,
};

// Flag name -> config key; values are kept as text and parsed by the library
// so the command line and config files share one set of rules.
const std::vector<std::pair<std::string, std::string>> kSolveFlags = {
    {"--problem", "problem"},       {"--epsilon", "epsilon"},
    {"--k", "k"},                   {"--loss", "loss"},
    {"--activation", "activation"}, {"--points", "points"},
    {"--spacing", "h"},                  {"--iters", "iterations"},
    {"--lr", "lr"},                 {"--decay-every", "decay_every"},
    {"--refine", "refine"},         {"--seeds", "seeds"},
    {"--out", "out"},               {"--upper-widths", "upper_widths"},
    {"--lower-widths", "lower_widths"}, {"--denominator", "denominator"},
    {"--eval-points", "eval_points"},   {"--alpha-d", "alpha_d"},
    {"--alpha-n", "alpha_n"},         {"--init", "init"},
    {"--boundary-scale", "boundary_scale"},
};

struct Overrides {
  std::map<std::string, std::string> values;

  void bind(CLI::App* app, const std::vector<std::pair<std::string, std::string>>& flags) {
    for (const auto& [flag, key] : flags) app->add_option(flag, values[key]);
  }

  void apply(deepls::ExperimentConfig& config) const {
    for (const auto& [key, value] : values) {
      if (!value.empty()) deepls::set_config_value(config, key, value);
    }
  }
};

void print_report(const deepls::ExperimentOutcome& outcome, const deepls::ExperimentConfig& config) {
  const auto& r = outcome.report;
  auto opt = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("---");
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  std::printf("median replica: seed %llu (%.1f s, %zu points at the end)\n",
              static_cast<unsigned long long>(outcome.seed), outcome.wall_time_s, outcome.final_points);
  std::printf("  rel_l2_u       %.6f\n", r.rel_l2_u);
  std::printf("  rel_h1semi_u   %.6f\n", r.rel_h1semi_u);
  std::printf("  rel_energy_u   %s\n", opt(r.rel_energy_u).c_str());
  std::printf("  rel_l2_sigma   %s\n", opt(r.rel_l2_sigma).c_str());
  std::printf("  rel_functional %s (%s pair)\n", opt(r.rel_functional).c_str(),
              deepls::to_string(r.denominator_kind).c_str());
  for (const auto& failure : outcome.replicated.failures) std::printf("  failed replica: %s\n", failure.c_str());
  std::printf("outputs in %s\n", config.out_dir.c_str());
}

int execute(const deepls::ExperimentConfig& config) {
  deepls::validate(config);
  const deepls::ExperimentOutcome outcome = deepls::run_experiment(config);
  print_report(outcome, config);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep least-squares solvers for 1D elliptic problems"};
  app.require_subcommand(1);

  Overrides solve_flags;
  CLI::App* solve = app.add_subcommand("solve", "Train on a problem with explicit settings");
  solve_flags.bind(solve, kSolveFlags);
  solve->get_option("--problem")->required();

  struct PresetCommand {
    CLI::App* app = nullptr;
    Overrides flags;
    std::string mode = "local";
  };
  std::map<std::string, PresetCommand> presets;
  for (const char* name : {"table1", "table2", "table3", "table4", "table5"}) {
    PresetCommand& cmd = presets[name];
    cmd.app = app.add_subcommand(name, std::string("Reproduce ") + name + " settings");
    cmd.flags.bind(cmd.app, {{"--points", "points"},
                             {"--loss", "loss"},
                             {"--activation", "activation"},
                             {"--init", "init"},
                             {"--boundary-scale", "boundary_scale"},
                             {"--iters", "iterations"},
                             {"--seeds", "seeds"},
                             {"--out", "out"},
                             {"--eval-points", "eval_points"}});
    if (std::string(name) == "table5") {
      cmd.app->add_option("--mode", cmd.mode, "local, global or uniform")
          ->check(CLI::IsMember({"local", "global", "uniform"}));
    }
  }

  std::string config_file;
  std::string rerun_out;
  CLI::App* run = app.add_subcommand("run", "Re-run from a config snapshot");
  run->add_option("--config", config_file, "config.txt written by an earlier run")->required();
  run->add_option("--out", rerun_out, "output directory (defaults to the snapshot's)");

  std::vector<std::string> compare_dirs;
  std::string compare_csv;
  CLI::App* compare = app.add_subcommand("compare", "Tabulate metrics.json of several runs");
  compare->add_option("dirs", compare_dirs, "run directories")->required();
  compare->add_option("--csv", compare_csv, "also write the table as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (solve->parsed()) {
      deepls::ExperimentConfig config;
      config.out_dir.clear();
      solve_flags.apply(config);
      if (config.out_dir.empty()) config.out_dir = "run-" + config.problem;
      return execute(config);
    }
    for (auto& [name, cmd] : presets) {
      if (!cmd.app->parsed()) continue;
      deepls::ExperimentConfig config = deepls::preset(name, cmd.mode);
      cmd.flags.apply(config);
      return execute(config);
    }
    if (run->parsed()) {
      deepls::ExperimentConfig config = deepls::load_config(config_file);
      if (!rerun_out.empty()) config.out_dir = rerun_out;
      return execute(config);
    }
    if (compare->parsed()) {
      std::vector<std::filesystem::path> dirs(compare_dirs.begin(), compare_dirs.end());
      const deepls::ComparisonTable table = deepls::compare_runs(dirs);
      std::cout << table.to_text();
      if (!compare_csv.empty()) {
        std::ofstream os(compare_csv);
        if (!os) throw deepls::IoError("cannot write '" + compare_csv + "'");
        os << table.to_csv();
      }
      return kOk;
    }
  } catch (const deepls::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const deepls::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const deepls::NonFiniteError& e) {
    std::cerr << "training aborted: " << e.what() << '\n';
    return kTraining;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
