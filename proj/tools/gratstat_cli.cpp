// Command-line front end for the interface-statistics pipeline.
//
// Subcommands mirror the pipeline phases; `run` chains all four. Exit
// codes: 0 success, 2 configuration error, 3 numerical failure, 4 artifact
// mismatch.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "gratstat/config.hpp"
#include "gratstat/pipeline.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_override;
  int workers_override = -1;
  long long seed_override = -1;
};

void add_common(CLI::App *cmd, CommonArgs &args) {
  cmd->add_option("--config", args.config_path, "experiment config JSON")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_override, "output directory (overrides config)");
  cmd->add_option("--workers", args.workers_override, "worker pool size (overrides config)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", args.seed_override, "master seed (overrides config)")
      ->check(CLI::NonNegativeNumber);
}

gratstat::ExperimentConfig resolve(const CommonArgs &args) {
  gratstat::ExperimentConfig c = gratstat::load_config(args.config_path);
  if (!args.out_override.empty()) c.output = args.out_override;
  if (args.workers_override >= 0) c.workers = args.workers_override;
  if (args.seed_override >= 0) {
    c.schedule.seed = static_cast<std::uint64_t>(args.seed_override);
    c.validate();
  }
  return c;
}

} // namespace

int main(int argc, char **argv) {
  gratstat::pin_blas_threads();

  CLI::App app{"statistical reconstruction of random periodic fluid-solid interfaces"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App *synthesize = app.add_subcommand("synthesize", "simulate near-field datasets");
  CLI::App *reconstruct = app.add_subcommand("reconstruct", "run the two-step continuation");
  CLI::App *stats = app.add_subcommand("stats", "reduce the ensemble to statistics");
  CLI::App *report = app.add_subcommand("report", "compute error metrics and the run manifest");
  CLI::App *run = app.add_subcommand("run", "full pipeline");
  for (CLI::App *cmd : {synthesize, reconstruct, stats, report, run}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    const gratstat::ExperimentConfig config = resolve(args);
    const std::filesystem::path outdir = config.output;
    std::filesystem::create_directories(outdir);

    if (synthesize->parsed()) {
      const auto s = gratstat::cmd_synthesize(config, outdir);
      std::printf("synthesized %d records (%d flagged) in %s\n", s.records, s.flagged,
                  outdir.string().c_str());
    } else if (reconstruct->parsed()) {
      const auto s = gratstat::cmd_reconstruct(config, outdir);
      std::printf("reconstructed %d samples (%d flagged) in %s\n", s.samples, s.flagged,
                  outdir.string().c_str());
    } else if (stats->parsed()) {
      gratstat::cmd_stats(config, outdir);
      std::printf("statistics written to %s\n", (outdir / "stats").string().c_str());
    } else if (report->parsed()) {
      const auto metrics = gratstat::cmd_report(config, outdir);
      std::printf("metrics: %s\n", metrics.dump().c_str());
    } else if (run->parsed()) {
      const auto s = gratstat::cmd_run(config, outdir);
      std::printf("metrics: %s\n", s.metrics.dump().c_str());
    }
    return 0;
  } catch (const gratstat::ConfigError &e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const gratstat::NumericalError &e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const gratstat::ArtifactError &e) {
    std::fprintf(stderr, "artifact error: %s\n", e.what());
    return 4;
  } catch (const std::exception &e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
