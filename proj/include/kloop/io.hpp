#pragma once

// Serialization and run configuration: loop CSV/JSON, report JSON, sweep CSV,
// index-map export, SVG rendering, and the single-document run config.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kloop/verify.hpp"
#include "kloop/winding.hpp"

namespace kloop::io {

// %.17g with fixed spellings "nan"/"inf"/"-inf", the round-trip-exact number
// format used by every CSV writer.
std::string format_double(double x);

std::string read_text_file(const std::filesystem::path& p);
void write_text_file(const std::filesystem::path& p, const std::string& content);

// ---- loops: CSV "t,x,y" with t = k/N, and JSON {"n": N, "points": [[x,y],...]}
std::string loop_to_csv(const LoopCurve& u);
LoopCurve loop_from_csv(const std::string& text);
std::string loop_to_json(const LoopCurve& u);
LoopCurve loop_from_json(const std::string& text);

// Reads either format, keyed on the file extension (.csv / .json).
LoopCurve read_loop_file(const std::filesystem::path& p);

// ---- reports
std::string to_json(const fun::EnergyReport& report);
std::string to_json(const verify::VerificationReport& report);
std::string to_json(const mp::CriticalPointResult& result, bool include_points = true);
std::string to_json(const mp::MountainPassEstimate& estimate);
std::string to_json(const mp::LambdaSweep& sweep);
std::string sweep_csv_header();
std::string sweep_csv_row(const mp::LambdaSweep& sweep, size_t i);

// ---- index maps: greymap-style text grid + JSON metadata
std::string index_map_to_pgm(const winding::IndexMap& map);
std::string index_map_meta_json(const winding::IndexMap& map);

// ---- path export: per-node loop files, an index JSON, and "s,E,L,G" CSV
void export_path(const paths::PathFamily& path, const fields::CurvatureField& field,
                 double lambda, const std::filesystem::path& dir);

// ---- SVG: loop polyline over a 256x256 raster heatmap of K, viewBox from
// the loop bounding box padded 20%
std::string loop_svg(const LoopCurve& u, const fields::CurvatureField& field);

// ---- run configuration (single JSON document)
struct RunConfig {
  fields::CurvatureField field;
  std::string field_kind;  // as declared in the config, cross-checked
  std::optional<double> lambda;
  std::vector<double> lambda_grid;
  Eigen::Index num_samples = 256;
  int path_nodes = 33;
  std::string path_constructor = "auto";  // auto | periodic | bump | k4
  mp::SaddleOptions saddle;
  mp::DescentOptions descent;
  verify::VerifyThresholds thresholds;
  uint64_t seed = 0;
  std::filesystem::path output_dir = ".";
};

// Parses and validates; BadConfig on any violation (exactly one of
// lambda/lambda_grid, nonzero lambdas, positive tolerances, known
// constructor). The KLOOP_OUTDIR environment variable overrides output_dir.
RunConfig parse_config(const std::string& json_text);

}  // namespace kloop::io
