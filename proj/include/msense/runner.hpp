#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "msense/config.hpp"
#include "msense/io.hpp"
#include "msense/pipeline.hpp"

namespace msense {

// Recorded input layout: <input>/cam<id>/frames.jsonl, the depth files it
// names, and <input>/cam<id>/detections.jsonl.
struct CameraRecording {
  int camera_id = 0;
  fs::path dir;
  std::vector<FrameRecord> frames;
  std::map<long, std::vector<Detection2D>> detections;  // by frame index
};

fs::path camera_dir(const fs::path& input_dir, int camera_id);

// Reads the frame and detection indexes of every configured camera. Depth
// files are read lazily during replay. Throws kInput.
std::vector<CameraRecording> load_recordings(const PipelineConfig& cfg, const fs::path& input_dir);

struct ReplayOptions {
  bool realtime = false;                 // pace bundles to the recorded clock
  std::optional<double> duration;        // seconds of recording to replay
  std::optional<long> max_bundles;
};

// Replays a recording through the pipeline and writes events.jsonl,
// tracks.jsonl and stats.json into `output_dir`.
RunStats run_replay(const PipelineConfig& cfg, const fs::path& input_dir, const fs::path& output_dir,
                    const ReplayOptions& opts = {});

// Renders the scene from each configured camera and writes a recording in the
// replay layout plus <output_dir>/ground_truth.jsonl. Scene cameras are used
// when the scene defines them (their ids must match the config), otherwise
// the configured cameras are rendered. Returns the number of frames.
long write_simulated_recording(const Scene& scene, const PipelineConfig& cfg,
                               const std::optional<NoiseModel>& noise, std::uint64_t seed,
                               const fs::path& input_dir, const fs::path& ground_truth_path);

// Scene cameras matched to the config's camera order.
Scene scene_for_config(Scene scene, const PipelineConfig& cfg);

// Options shared by the command-line subcommands.
struct CliOptions {
  std::string config;
  std::string input;
  std::string output;
  std::optional<std::uint64_t> seed;
  bool realtime = false;
  std::optional<double> duration;
  std::optional<long> frames;
  std::string source_ply;
  std::string target_ply;
};

// Exit status: 0 success, 1 internal error, 2 configuration error (including
// degenerate calibration input), 3 input error.
int exit_code_for(const Error& e);

int cmd_run(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_simulate(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_calibrate(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_bench(const CliOptions& o, std::ostream& out, std::ostream& err);
int cmd_accuracy(const CliOptions& o, std::ostream& out, std::ostream& err);

}  // namespace msense
