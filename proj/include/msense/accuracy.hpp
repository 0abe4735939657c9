#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "msense/geometry.hpp"
#include "msense/sim.hpp"

namespace msense {

// Heat colors: green up to 0.30 m of error, red from 1.00 m, linear blend in
// between.
inline constexpr double kGreenMaxError = 0.30;
inline constexpr double kRedMinError = 1.00;

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb&) const = default;
};

Rgb heat_color(double abs_error);
std::string color_label(double abs_error);  // "#rrggbb", or "missing" for NaN

struct Station {
  std::string label;
  Point3 position;  // subject centre, world frame (z up)
};

struct AccuracyCondition {
  std::string name;
  NoiseModel noise;
  double pitch_deg = 0.0;  // camera tilted down by this much
  std::uint64_t seed = 1;
};

// Two-subject distance experiment: a camera on a tripod looks along world +y,
// one subject stands fixed and the other visits each station in turn.
struct AccuracyConfig {
  CameraIntrinsics intrinsics;
  double camera_height = 0.85;  // meters above the floor (z = 0)
  Box subject{Point3(-0.25, -0.05, -0.85), Point3(0.25, 0.05, 0.85)};
  int subject_class = 0;
  Point3 center_subject = Point3(0.0, 5.0, 0.85);
  std::vector<Station> stations;
  std::vector<AccuracyCondition> conditions;
};

// Stations fanned out from the camera: one per (bearing, horizontal range)
// pair, bearings measured from the optical axis. Stations whose subject would
// leave the image (with `margin_px`), overlap the centre subject on screen, or
// fall outside the depth range are skipped.
std::vector<Station> fan_stations(const AccuracyConfig& base, std::span<const double> bearings_deg,
                                  std::span<const double> ranges, double margin_px = 8.0);

// 1280x720 camera at subject-centre height; a 0.5 x 0.1 x 1.7 m panel subject
// fixed 5 m out; stations on rays at +-12 and +-24 degrees every 1.5 m from
// 3.5 m to 12.5 m. Conditions: noise off, stereo noise on, stereo noise with a
// camera pitched 5 degrees down.
AccuracyConfig default_accuracy_config();

SimCamera experiment_camera(const AccuracyConfig& cfg, double pitch_deg);

struct HeatmapCell {
  std::string label;
  Point3 position;
  double camera_distance = 0.0;  // station distance from the camera
  double true_distance = 0.0;
  double measured_distance = 0.0;  // NaN when a subject was not measured
  double abs_error = 0.0;          // NaN when missing
  bool missing() const;
};

struct HeatmapReport {
  std::string name;
  std::vector<HeatmapCell> cells;
};

struct AccuracyResult {
  std::vector<HeatmapReport> conditions;
  HeatmapReport average;
};

HeatmapReport run_accuracy_condition(const AccuracyConfig& cfg, const AccuracyCondition& cond);

// Runs every condition plus the per-station average across them.
AccuracyResult run_accuracy_experiment(const AccuracyConfig& cfg);

HeatmapReport average_reports(std::span<const HeatmapReport> reports, std::string name = "average");

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// CSV: station,true_d,measured_d,abs_error,color
void write_heatmap_csv(std::ostream& os, const HeatmapReport& r);
HeatmapReport read_heatmap_csv(std::istream& is);
// Binary PPM, top-down map of the stations colored by error.
void write_heatmap_ppm(std::ostream& os, const HeatmapReport& r, const AccuracyConfig& cfg,
                       int size_px = 480);

}  // namespace msense
