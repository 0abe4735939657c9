#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "msense/io.hpp"
#include "msense/pipeline.hpp"
#include "msense/sim.hpp"

namespace msense {

// One column of the throughput table.
struct BenchColumn {
  std::string name;    // single_camera, two_cameras, 1_file, 2_files
  int cameras = 1;
  std::string source;  // "memory" (rendered live) or "files" (replayed from disk)
  long frames = 0;
  double wall_s = 0.0;
  double fps = 0.0;    // frames / wall_s, end to end
  FrameStats mean;     // per-stage means in milliseconds
};

struct BenchReport {
  long frames = 0;
  unsigned hardware_threads = 0;
  std::vector<BenchColumn> columns;
  const BenchColumn* column(const std::string& name) const;
};

nlohmann::ordered_json bench_report_to_json(const BenchReport& r);
BenchReport bench_report_from_json(const nlohmann::json& j);
std::string format_bench_table(const BenchReport& r);

// Two 640x360 cameras watching three walkers, one zone and one proximity rule.
struct BenchSetup {
  PipelineConfig config;  // two cameras
  Scene scene;
  NoiseModel noise;
  std::uint64_t seed = 7;
};
BenchSetup default_bench_setup();

// Measures the four columns over `frames` bundles. File columns replay
// `input_dir` when given, otherwise a recording rendered into `work_dir`
// beforehand (not timed).
BenchReport run_bench(const BenchSetup& setup, long frames, const fs::path& work_dir,
                      const std::optional<fs::path>& input_dir = std::nullopt);

}  // namespace msense
