#include "kloop/io.hpp"

#include <zlib.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace kloop::io {

using nlohmann::json;

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrKind::BadConfig, "cannot open file: " + p.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error(ErrKind::BadConfig, "cannot write file: " + p.string());
  out << content;
}

// ---------------------------------------------------------------------------
// loops

std::string loop_to_csv(const LoopCurve& u) {
  std::string out = "t,x,y\n";
  const Eigen::Index n = u.n();
  for (Eigen::Index k = 0; k < n; ++k) {
    out += format_double(static_cast<double>(k) / n);
    out += ',';
    out += format_double(u.pts()(0, k));
    out += ',';
    out += format_double(u.pts()(1, k));
    out += '\n';
  }
  return out;
}

LoopCurve loop_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrKind::BadConfig, "empty loop CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,x,y") throw Error(ErrKind::BadConfig, "loop CSV must start with header t,x,y");

  std::vector<Vec2> pts;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double t, x, y;
    char tail;
    if (std::sscanf(line.c_str(), "%lf,%lf,%lf %c", &t, &x, &y, &tail) != 3)
      throw Error(ErrKind::BadConfig, "malformed loop CSV row: " + line);
    pts.emplace_back(x, y);
  }
  if (pts.size() < 16) throw Error(ErrKind::BadConfig, "loop CSV needs at least 16 rows");
  Mat2X m(2, static_cast<Eigen::Index>(pts.size()));
  for (size_t k = 0; k < pts.size(); ++k) m.col(static_cast<Eigen::Index>(k)) = pts[k];
  if (!m.allFinite()) throw Error(ErrKind::BadConfig, "loop CSV contains non-finite samples");
  return LoopCurve(std::move(m));
}

std::string loop_to_json(const LoopCurve& u) {
  json j;
  j["n"] = u.n();
  json pts = json::array();
  for (Eigen::Index k = 0; k < u.n(); ++k)
    pts.push_back(json::array({u.pts()(0, k), u.pts()(1, k)}));
  j["points"] = std::move(pts);
  return j.dump(2) + "\n";
}

LoopCurve loop_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception&) {
    throw Error(ErrKind::BadConfig, "loop file is not valid JSON");
  }
  if (!j.is_object() || !j.contains("points") || !j["points"].is_array())
    throw Error(ErrKind::BadConfig, "loop JSON needs a points array");
  const auto& pts = j["points"];
  if (pts.size() < 16) throw Error(ErrKind::BadConfig, "loop JSON needs at least 16 points");
  Mat2X m(2, static_cast<Eigen::Index>(pts.size()));
  for (size_t k = 0; k < pts.size(); ++k) {
    const auto& p = pts[k];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw Error(ErrKind::BadConfig, "loop JSON points must be [x,y] pairs");
    m(0, static_cast<Eigen::Index>(k)) = p[0].get<double>();
    m(1, static_cast<Eigen::Index>(k)) = p[1].get<double>();
  }
  if (j.contains("n") && j["n"].get<Eigen::Index>() != m.cols())
    throw Error(ErrKind::BadConfig, "loop JSON n does not match the points array");
  if (!m.allFinite()) throw Error(ErrKind::BadConfig, "loop JSON contains non-finite samples");
  return LoopCurve(std::move(m));
}

LoopCurve read_loop_file(const std::filesystem::path& p) {
  const std::string text = read_text_file(p);
  if (p.extension() == ".json") return loop_from_json(text);
  return loop_from_csv(text);
}

// ---------------------------------------------------------------------------
// reports

namespace {

json loop_points_json(const LoopCurve& u) {
  json pts = json::array();
  for (Eigen::Index k = 0; k < u.n(); ++k)
    pts.push_back(json::array({u.pts()(0, k), u.pts()(1, k)}));
  return json{{"n", u.n()}, {"points", std::move(pts)}};
}

const char* status_name(mp::DescentStatus s) {
  switch (s) {
    case mp::DescentStatus::Converged: return "converged";
    case mp::DescentStatus::BudgetExhausted: return "budget_exhausted";
    case mp::DescentStatus::CollapseToConstant: return "collapse_to_constant";
    case mp::DescentStatus::Stalled: return "stalled";
  }
  return "?";
}

}  // namespace

std::string to_json(const fun::EnergyReport& report) {
  const json j{{"length_energy", report.length_energy}, {"g_value", report.g_value},
               {"energy", report.energy},               {"lambda", report.lambda},
               {"iso_bound", report.iso_bound},         {"iso_satisfied", report.iso_satisfied}};
  return j.dump(2) + "\n";
}

std::string to_json(const verify::VerificationReport& report) {
  json details = json::array();
  for (const auto& c : report.details) {
    details.push_back(
        {{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"ok", c.ok}});
  }
  const json j{{"ode_residual_sup", report.ode_residual_sup},
               {"curvature_mismatch_sup", report.curvature_mismatch_sup},
               {"iso_slack", report.iso_slack},
               {"bounds_ok", report.bounds_ok},
               {"all_ok", report.all_ok()},
               {"details", std::move(details)}};
  return j.dump(2) + "\n";
}

std::string to_json(const mp::CriticalPointResult& result, bool include_points) {
  json j{{"energy", result.energy},
         {"grad_dual_norm", result.grad_dual_norm},
         {"ode_residual", result.ode_residual},
         {"winding_at_barycenter", result.winding_at_barycenter},
         {"converged", result.converged},
         {"status", status_name(result.status)},
         {"length_history", result.length_history}};
  if (include_points) j["loop"] = loop_points_json(result.loop);
  return j.dump(2) + "\n";
}

std::string to_json(const mp::MountainPassEstimate& estimate) {
  const json j{{"c_estimate", estimate.c_estimate},
               {"argmax_s", estimate.argmax_s},
               {"grad_dual_norm_at_max", estimate.grad_dual_norm_at_max},
               {"iterations", estimate.iterations},
               {"converged", estimate.converged},
               {"max_history", estimate.max_history},
               {"argmax_loop", loop_points_json(estimate.argmax_loop)}};
  return j.dump(2) + "\n";
}

std::string to_json(const mp::LambdaSweep& sweep) {
  const json j{{"lambdas", sweep.lambdas},
               {"c_values", sweep.c_values},
               {"left_quotients", sweep.left_quotients},
               {"flagged", sweep.flagged},
               {"converged", sweep.converged},
               {"grad_norms", sweep.grad_norms},
               {"ode_residuals", sweep.ode_residuals}};
  return j.dump(2) + "\n";
}

std::string sweep_csv_header() { return "lambda,c,quotient,flag,converged,grad_norm,ode_residual\n"; }

std::string sweep_csv_row(const mp::LambdaSweep& sweep, size_t i) {
  std::string out = format_double(sweep.lambdas[i]);
  out += ',';
  out += format_double(sweep.c_values[i]);
  out += ',';
  out += format_double(sweep.left_quotients[i]);
  out += ',';
  out += std::to_string(static_cast<int>(sweep.flagged[i]));
  out += ',';
  out += std::to_string(static_cast<int>(sweep.converged[i]));
  out += ',';
  out += format_double(sweep.grad_norms[i]);
  out += ',';
  out += format_double(sweep.ode_residuals[i]);
  out += '\n';
  return out;
}

// ---------------------------------------------------------------------------
// index maps

std::string index_map_to_pgm(const winding::IndexMap& map) {
  int lo = 0, hi = 0;
  for (int ix = 0; ix < map.nx; ++ix)
    for (int iy = 0; iy < map.ny; ++iy) {
      lo = std::min(lo, map.indices(ix, iy));
      hi = std::max(hi, map.indices(ix, iy));
    }
  const int shift = -lo;
  std::string out = "P2\n# winding index grid, values shifted by " + std::to_string(shift) + "\n";
  out += std::to_string(map.nx) + " " + std::to_string(map.ny) + "\n";
  out += std::to_string(std::max(1, hi + shift)) + "\n";
  for (int iy = map.ny - 1; iy >= 0; --iy) {  // raster top row = largest y
    for (int ix = 0; ix < map.nx; ++ix) {
      out += std::to_string(map.indices(ix, iy) + shift);
      out += ix + 1 == map.nx ? '\n' : ' ';
    }
  }
  return out;
}

std::string index_map_meta_json(const winding::IndexMap& map) {
  int lo = 0;
  for (int ix = 0; ix < map.nx; ++ix)
    for (int iy = 0; iy < map.ny; ++iy) lo = std::min(lo, map.indices(ix, iy));
  const json j{{"nx", map.nx},
               {"ny", map.ny},
               {"origin", {map.origin.x(), map.origin.y()}},
               {"spacing", map.spacing},
               {"shift", -lo},
               {"exclusion_band", map.exclusion_band},
               {"ambiguous_count", map.ambiguous_count}};
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// path export

void export_path(const paths::PathFamily& path, const fields::CurvatureField& field,
                 double lambda, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json files = json::array();
  std::string csv = "s,E,L,G\n";
  for (int j = 0; j < path.m(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "node_%03d.csv", j);
    write_text_file(dir / name, loop_to_csv(path.nodes[j]));
    files.push_back(name);

    const fun::EnergyReport rep = fun::energy(path.nodes[j], field, lambda);
    csv += format_double(path.s(j));
    csv += ',';
    csv += format_double(rep.energy);
    csv += ',';
    csv += format_double(rep.length_energy);
    csv += ',';
    csv += format_double(rep.g_value);
    csv += '\n';
  }
  const json index{{"lambda", lambda},
                   {"endpoint_energy", path.endpoint_energy},
                   {"nodes", std::move(files)}};
  write_text_file(dir / "path.json", index.dump(2) + "\n");
  write_text_file(dir / "energies.csv", csv);
}

// ---------------------------------------------------------------------------
// SVG over a K heatmap

namespace {

void put_u32_be(std::string& s, uint32_t v) {
  s.push_back(static_cast<char>(v >> 24));
  s.push_back(static_cast<char>((v >> 16) & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
  s.push_back(static_cast<char>(v & 0xff));
}

void png_chunk(std::string& out, const char type[4], const std::string& data) {
  put_u32_be(out, static_cast<uint32_t>(data.size()));
  std::string block(type, 4);
  block += data;
  out += block;
  const auto crc = crc32(0, reinterpret_cast<const Bytef*>(block.data()),
                         static_cast<uInt>(block.size()));
  put_u32_be(out, static_cast<uint32_t>(crc));
}

// Minimal RGB8 PNG encoder (filter 0 rows + zlib stream).
std::string encode_png_rgb(const std::vector<uint8_t>& rgb, int w, int h) {
  std::string raw;
  raw.reserve(static_cast<size_t>(h) * (1 + 3 * static_cast<size_t>(w)));
  for (int row = 0; row < h; ++row) {
    raw.push_back('\0');
    raw.append(reinterpret_cast<const char*>(rgb.data()) + static_cast<size_t>(row) * 3 * w,
               3 * static_cast<size_t>(w));
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::string compressed(bound, '\0');
  if (compress2(reinterpret_cast<Bytef*>(compressed.data()), &bound,
                reinterpret_cast<const Bytef*>(raw.data()), static_cast<uLong>(raw.size()),
                9) != Z_OK)
    throw Error(ErrKind::BadConfig, "PNG compression failed");
  compressed.resize(bound);

  std::string png("\x89PNG\r\n\x1a\n", 8);
  std::string ihdr;
  put_u32_be(ihdr, static_cast<uint32_t>(w));
  put_u32_be(ihdr, static_cast<uint32_t>(h));
  ihdr += '\x08';  // bit depth
  ihdr += '\x02';  // RGB
  ihdr += '\0';
  ihdr += '\0';
  ihdr += '\0';
  png_chunk(png, "IHDR", ihdr);
  png_chunk(png, "IDAT", compressed);
  png_chunk(png, "IEND", "");
  return png;
}

std::string base64(const std::string& bytes) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const uint32_t v = (static_cast<uint8_t>(bytes[i]) << 16) |
                       (static_cast<uint8_t>(bytes[i + 1]) << 8) |
                       static_cast<uint8_t>(bytes[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
  }
  if (i + 1 == bytes.size()) {
    const uint32_t v = static_cast<uint8_t>(bytes[i]) << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    const uint32_t v =
        (static_cast<uint8_t>(bytes[i]) << 16) | (static_cast<uint8_t>(bytes[i + 1]) << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

// Diverging blue-white-red ramp; t in [0, 1], 0.5 maps to near-white.
void ramp_color(double t, uint8_t* px) {
  t = std::clamp(t, 0.0, 1.0);
  const double lo[3] = {33, 102, 172}, mid[3] = {247, 247, 247}, hi[3] = {178, 24, 43};
  for (int c = 0; c < 3; ++c) {
    const double v = t < 0.5 ? lo[c] + 2 * t * (mid[c] - lo[c])
                             : mid[c] + 2 * (t - 0.5) * (hi[c] - mid[c]);
    px[c] = static_cast<uint8_t>(std::lround(v));
  }
}

}  // namespace

std::string loop_svg(const LoopCurve& u, const fields::CurvatureField& field) {
  const double x0 = u.pts().row(0).minCoeff(), x1 = u.pts().row(0).maxCoeff();
  const double y0 = u.pts().row(1).minCoeff(), y1 = u.pts().row(1).maxCoeff();
  const double padx = 0.2 * std::max(x1 - x0, 1e-6);
  const double pady = 0.2 * std::max(y1 - y0, 1e-6);
  const double wx0 = x0 - padx, wy0 = y0 - pady;
  const double w = (x1 - x0) + 2 * padx, h = (y1 - y0) + 2 * pady;

  constexpr int kRes = 256;
  std::vector<double> values(static_cast<size_t>(kRes) * kRes);
  double vmin = 0, vmax = 0;
  for (int row = 0; row < kRes; ++row) {
    const double y = wy0 + h * (kRes - 0.5 - row) / kRes;  // raster top = largest y
    for (int col = 0; col < kRes; ++col) {
      const double x = wx0 + w * (col + 0.5) / kRes;
      const double v = fields::eval_K(field, Vec2(x, y));
      values[static_cast<size_t>(row) * kRes + col] = v;
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
  }
  std::vector<uint8_t> rgb(values.size() * 3);
  const double scale = std::max({std::abs(vmin), std::abs(vmax), 1e-12});
  for (size_t i = 0; i < values.size(); ++i)
    ramp_color(0.5 + 0.5 * values[i] / scale, &rgb[3 * i]);  // symmetric about K = 0

  const std::string png64 = base64(encode_png_rgb(rgb, kRes, kRes));

  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" "
                    "xmlns:xlink=\"http://www.w3.org/1999/xlink\" viewBox=\"0 0 " +
                    format_double(w) + " " + format_double(h) + "\">\n";
  svg += "  <image x=\"0\" y=\"0\" width=\"" + format_double(w) + "\" height=\"" +
         format_double(h) +
         "\" preserveAspectRatio=\"none\" xlink:href=\"data:image/png;base64," + png64 + "\"/>\n";
  svg += "  <polyline fill=\"none\" stroke=\"#101010\" stroke-width=\"" +
         format_double(std::max(w, h) / 256.0) + "\" points=\"";
  for (Eigen::Index k = 0; k <= u.n(); ++k) {  // repeat the first node to close the loop
    const Vec2 p = u.at(k % u.n());
    svg += format_double(p.x() - wx0) + "," + format_double(wy0 + h - p.y());
    svg += k == u.n() ? "\"/>\n" : " ";
  }
  svg += "</svg>\n";
  return svg;
}

// ---------------------------------------------------------------------------
// run configuration

namespace {

double positive(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) throw Error(ErrKind::BadConfig, std::string(key) + " must be a number");
  const double v = j[key].get<double>();
  if (!(v > 0)) throw Error(ErrKind::BadConfig, std::string(key) + " must be positive");
  return v;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception&) {
    throw Error(ErrKind::BadConfig, "config is not valid JSON");
  }
  if (!j.is_object()) throw Error(ErrKind::BadConfig, "config must be a JSON object");
  if (!j.contains("field") || !j["field"].is_object())
    throw Error(ErrKind::BadConfig, "config needs a field object");

  const json& jf = j["field"];
  if (!jf.contains("name") || !jf["name"].is_string())
    throw Error(ErrKind::BadConfig, "field needs a catalog name");
  std::map<std::string, double> params;
  if (jf.contains("params")) {
    if (!jf["params"].is_object()) throw Error(ErrKind::BadConfig, "field params must be an object");
    for (const auto& [key, value] : jf["params"].items()) {
      if (!value.is_number()) throw Error(ErrKind::BadConfig, "field params must be numbers");
      params[key] = value.get<double>();
    }
  }

  fields::CurvatureField field = fields::make_field(jf["name"].get<std::string>(), params);
  std::string kind = fields::kind_name(field.kind);
  if (jf.contains("kind")) {
    if (!jf["kind"].is_string()) throw Error(ErrKind::BadConfig, "field kind must be a string");
    kind = jf["kind"].get<std::string>();
    if (kind != fields::kind_name(field.kind))
      throw Error(ErrKind::BadConfig, "field kind does not match the catalog entry (expected " +
                                          fields::kind_name(field.kind) + ")");
  }

  const bool has_lambda = j.contains("lambda");
  const bool has_grid = j.contains("lambda_grid");
  if (has_lambda == has_grid)
    throw Error(ErrKind::BadConfig, "config needs exactly one of lambda / lambda_grid");

  std::optional<double> lambda;
  std::vector<double> grid;
  if (has_lambda) {
    if (!j["lambda"].is_number()) throw Error(ErrKind::BadConfig, "lambda must be a number");
    lambda = j["lambda"].get<double>();
    if (*lambda == 0.0 || !std::isfinite(*lambda))
      throw Error(ErrKind::BadConfig, "lambda must be finite and nonzero");
  } else {
    if (!j["lambda_grid"].is_array())
      throw Error(ErrKind::BadConfig, "lambda_grid must be an array");
    for (const auto& v : j["lambda_grid"]) {
      if (!v.is_number()) throw Error(ErrKind::BadConfig, "lambda_grid entries must be numbers");
      const double x = v.get<double>();
      if (x == 0.0 || !std::isfinite(x))
        throw Error(ErrKind::BadConfig, "lambda_grid entries must be finite and nonzero");
      grid.push_back(x);
    }
  }

  RunConfig cfg{std::move(field), std::move(kind), lambda, std::move(grid)};

  if (j.contains("n")) {
    if (!j["n"].is_number_integer()) throw Error(ErrKind::BadConfig, "n must be an integer");
    cfg.num_samples = j["n"].get<Eigen::Index>();
    if (cfg.num_samples < 16 || cfg.num_samples > (1 << 20))
      throw Error(ErrKind::BadConfig, "n must be in [16, 2^20]");
  }
  if (j.contains("path")) {
    const json& jp = j["path"];
    if (!jp.is_object()) throw Error(ErrKind::BadConfig, "path options must be an object");
    if (jp.contains("m")) {
      if (!jp["m"].is_number_integer()) throw Error(ErrKind::BadConfig, "path m must be an integer");
      cfg.path_nodes = jp["m"].get<int>();
      if (cfg.path_nodes < 3 || cfg.path_nodes > 4096)
        throw Error(ErrKind::BadConfig, "path m must be in [3, 4096]");
    }
    if (jp.contains("constructor")) {
      if (!jp["constructor"].is_string())
        throw Error(ErrKind::BadConfig, "path constructor must be a string");
      cfg.path_constructor = jp["constructor"].get<std::string>();
      if (cfg.path_constructor != "auto" && cfg.path_constructor != "periodic" &&
          cfg.path_constructor != "bump" && cfg.path_constructor != "k4")
        throw Error(ErrKind::BadConfig, "path constructor must be auto|periodic|bump|k4");
    }
  }
  if (j.contains("solver")) {
    const json& js = j["solver"];
    if (!js.is_object()) throw Error(ErrKind::BadConfig, "solver options must be an object");
    cfg.saddle.tol_saddle = positive(js, "tol_saddle", cfg.saddle.tol_saddle);
    cfg.descent.tol_crit = positive(js, "tol_crit", cfg.descent.tol_crit);
    cfg.saddle.max_iterations =
        static_cast<int>(positive(js, "max_iter_path", cfg.saddle.max_iterations));
    cfg.descent.max_evaluations =
        static_cast<int>(positive(js, "max_eval_descent", cfg.descent.max_evaluations));
    const double armijo = positive(js, "armijo", cfg.saddle.armijo);
    if (armijo >= 1.0) throw Error(ErrKind::BadConfig, "armijo must be in (0, 1)");
    cfg.saddle.armijo = armijo;
  }
  if (j.contains("verify")) {
    const json& jv = j["verify"];
    if (!jv.is_object()) throw Error(ErrKind::BadConfig, "verify options must be an object");
    cfg.thresholds.max_ode_residual =
        positive(jv, "max_ode_residual", cfg.thresholds.max_ode_residual);
    cfg.thresholds.max_curvature_mismatch =
        positive(jv, "max_curvature_mismatch", cfg.thresholds.max_curvature_mismatch);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer()) throw Error(ErrKind::BadConfig, "seed must be an integer");
    cfg.seed = j["seed"].get<uint64_t>();
  }
  if (j.contains("output_dir")) {
    if (!j["output_dir"].is_string())
      throw Error(ErrKind::BadConfig, "output_dir must be a string");
    cfg.output_dir = j["output_dir"].get<std::string>();
  }
  if (const char* env = std::getenv("KLOOP_OUTDIR"); env && *env) cfg.output_dir = env;
  return cfg;
}

}  // namespace kloop::io
