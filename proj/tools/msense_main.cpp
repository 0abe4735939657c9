#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "msense/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multi-camera depth sensing: replay, simulate, calibrate, bench, accuracy"};
  app.require_subcommand(1);
  msense::CliOptions o;
  std::uint64_t seed = 0;
  double duration = 0.0;
  long frames = 0;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Pipeline or experiment config (JSON)");
    sub->add_option("--input", o.input, "Input directory or file");
    sub->add_option("--output", o.output, "Output directory or file");
    sub->add_option("--seed", seed, "Random seed override");
    sub->add_flag("--realtime", o.realtime, "Pace replay to the recorded clock");
    sub->add_option("--duration", duration, "Seconds to process")->check(CLI::PositiveNumber);
  };

  auto* run = app.add_subcommand("run", "Replay a recording through the pipeline");
  common(run);
  auto* sim = app.add_subcommand("simulate", "Render a scene, then replay it (--input = scene)");
  common(sim);
  auto* cal = app.add_subcommand("calibrate", "Estimate a camera pose from correspondences");
  common(cal);
  cal->add_option("--source", o.source_ply, "Source cloud (PLY) for ICP refinement");
  cal->add_option("--target", o.target_ply, "Target cloud (PLY) for ICP refinement");
  auto* bench = app.add_subcommand("bench", "Throughput for one and two cameras, live and from files");
  common(bench);
  bench->add_option("--frames", frames, "Bundles per column (default 300)")->check(CLI::PositiveNumber);
  auto* acc = app.add_subcommand("accuracy", "Distance-accuracy heatmaps");
  common(acc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--duration")) o.duration = duration;
    if (sub == bench && bench->count("--frames")) o.frames = frames;
  }

  if (*run) return msense::cmd_run(o, std::cout, std::cerr);
  if (*sim) return msense::cmd_simulate(o, std::cout, std::cerr);
  if (*cal) return msense::cmd_calibrate(o, std::cout, std::cerr);
  if (*bench) return msense::cmd_bench(o, std::cout, std::cerr);
  return msense::cmd_accuracy(o, std::cout, std::cerr);
}
