// Command-line front end for the study pipeline.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "myopass/errors.hpp"
#include "myopass/study.hpp"

namespace {

using namespace myopass;

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 0;
  std::string map;
};

StudyConfig resolve(const Options& opt) {
  StudyConfig config = opt.config.empty() ? StudyConfig{} : load_config(opt.config);
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.out.empty()) config.out_dir = opt.out;
  if (opt.jobs > 0) config.jobs = opt.jobs;
  config.validate();
  return config;
}

int run(const std::string& command, const Options& opt) {
  const StudyConfig config = resolve(opt);
  if (command == "simulate") {
    const auto manifest = cmd_simulate(config);
    std::cout << "simulated " << manifest.trial_count() << " trials for "
              << manifest.subjects.size() << " subjects into " << config.out_dir.string()
              << "\n";
  } else if (command == "analyze") {
    const auto result = cmd_analyze(config.out_dir / "manifest.json", config.jobs);
    std::cout << "estimated " << result.estimates.size() << " cells, "
              << result.missing_trials << " trials missing\n";
  } else if (command == "stats") {
    const auto report = cmd_stats(config.out_dir, config.frequencies,
                                  config.contrast_sidedness, config.slope_sidedness);
    for (const auto& c : report.contrasts) {
      std::cout << c.name << ": p = " << c.p_value() << " " << c.mark() << "\n";
    }
    if (report.slope_contrast) {
      std::cout << report.slope_contrast->name << ": p = " << report.slope_contrast->p_value()
                << " " << report.slope_contrast->mark() << "\n";
    }
  } else if (command == "stabilize") {
    std::optional<std::filesystem::path> map;
    if (!opt.map.empty()) map = opt.map;
    const auto report = cmd_stabilize(config, map);
    auto show = [](const char* name, const InterconnectionResult& r) {
      std::cout << name << ": " << (r.bounded ? "bounded" : "unbounded") << ", injected "
                << r.injected_dissipation << " J\n";
    };
    show("without map", report.without_map);
    if (report.with_map) show("with map", *report.with_map);
    if (report.savings) {
      std::cout << "saved " << report.savings->joules_saved << " J\n";
    }
  } else {
    cmd_all(config);
    std::cout << "study written to " << config.out_dir.string() << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric passivity maps from simulated perturbation studies"};
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print toolkit and format-schema versions");

  Options opt;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config, "Config file (sectioned key = value)");
    sub->add_option("--seed", opt.seed, "Cohort seed, overrides the config");
    sub->add_option("--out", opt.out, "Output directory, overrides the config");
    sub->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "Generate the cohort and all trials");
  auto* analyze = app.add_subcommand("analyze", "Estimate EoP and build maps");
  auto* stats = app.add_subcommand("stats", "Normality, Wilcoxon and trend statistics");
  auto* stabilize = app.add_subcommand("stabilize", "Run the stabilizer scenario");
  auto* all = app.add_subcommand("all", "simulate, analyze, stats and stabilize");
  for (auto* sub : {simulate, analyze, stats, stabilize, all}) add_common(sub);
  stabilize->add_option("--map", opt.map, "Passivity map JSON used as EoP budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }
  if (version) {
    std::cout << "myopass " << kToolkitVersion << " (format schema " << kFormatSchemaVersion
              << ")\n";
    return kExitOk;
  }
  const auto chosen = app.get_subcommands();
  if (chosen.empty()) {
    std::cerr << app.help();
    return kExitConfig;
  }

  try {
    return run(chosen.front()->get_name(), opt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const OutOfRangeError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitRefused;
  } catch (const Error& e) {
    std::cerr << "analysis error: " << e.what() << "\n";
    return kExitAnalysis;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
