// kloop: configuration-driven solver for closed planar loops whose curvature
// is a prescribed multiple of a spatial field. Subcommands: solve (one
// lambda), sweep (a lambda grid), verify (check a stored loop), export
// (renderings of a stored loop).

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "kloop/io.hpp"

namespace {

using namespace kloop;

paths::PathFamily build_path(const io::RunConfig& cfg, double lambda) {
  const paths::Interval range{lambda, lambda};
  const auto& field = cfg.field;
  if (cfg.path_constructor == "periodic")
    return paths::initial_path_periodic(field, range, cfg.num_samples, cfg.path_nodes);
  if (cfg.path_constructor == "bump")
    return paths::initial_path_bump(field, lambda, cfg.num_samples, cfg.path_nodes);
  if (cfg.path_constructor == "k4")
    return paths::initial_path_k4(field, range, cfg.num_samples, cfg.path_nodes);

  // auto: keyed on the structural kind, with the bump fallback when the
  // periodic construction is unavailable (zero cell average)
  if (field.kind == fields::FieldKind::DoublyPeriodic) {
    try {
      return paths::initial_path_periodic(field, range, cfg.num_samples, cfg.path_nodes);
    } catch (const Error& err) {
      if (err.kind() != ErrKind::ZeroAverage) throw;
      return paths::initial_path_bump(field, lambda, cfg.num_samples, cfg.path_nodes);
    }
  }
  return paths::initial_path_k4(field, range, cfg.num_samples, cfg.path_nodes);
}

double require_single_lambda(const io::RunConfig& cfg, const char* cmd) {
  if (!cfg.lambda)
    throw Error(ErrKind::BadConfig, std::string(cmd) + " needs a single lambda in the config");
  return *cfg.lambda;
}

int cmd_solve(const io::RunConfig& cfg) {
  const double lambda = require_single_lambda(cfg, "solve");
  const auto& field = cfg.field;

  const paths::PathFamily path = build_path(cfg, lambda);
  const mp::MountainPassEstimate est = mp::estimate_c(path, field, lambda, cfg.saddle);
  const mp::CriticalPointResult crit = mp::refine_critical(est.argmax_loop, field, lambda, cfg.descent);

  verify::VerificationReport report = verify::verify_loop(crit.loop, field, lambda, cfg.thresholds);
  report.bounds_ok = verify::check_bounds(est, field, lambda);

  const auto& dir = cfg.output_dir;
  io::write_text_file(dir / "estimate.json", io::to_json(est));
  io::write_text_file(dir / "result.json", io::to_json(crit));
  io::write_text_file(dir / "verify.json", io::to_json(report));
  io::write_text_file(dir / "loop.csv", io::loop_to_csv(crit.loop));
  io::write_text_file(dir / "loop.json", io::loop_to_json(crit.loop));
  io::write_text_file(dir / "loop.svg", io::loop_svg(crit.loop, field));
  io::export_path(est.path_final, field, lambda, dir / "path");

  // Success means a certified loop: the refinement converged and every check
  // passed. The string estimate reports its own converged flag in
  // estimate.json; on rough landscapes it bottoms out at the node-spacing
  // scale while the refined loop is still exact.
  const bool ok = crit.converged && report.all_ok();
  std::cout << "solve: lambda=" << io::format_double(lambda)
            << " c_estimate=" << io::format_double(est.c_estimate)
            << " energy=" << io::format_double(crit.energy)
            << " grad=" << io::format_double(crit.grad_dual_norm)
            << " ode_residual=" << io::format_double(crit.ode_residual)
            << " winding=" << crit.winding_at_barycenter << "\n";
  std::cout << "solve: estimate_converged=" << est.converged
            << " refine_converged=" << crit.converged << " checks_ok=" << report.all_ok()
            << " -> " << (ok ? "ok" : "FAILED") << " (artifacts in " << dir.string() << ")\n";
  if (!ok) {
    std::cout << io::to_json(report);
    if (!crit.converged)
      std::cout << "solve: refinement stopped with status "
                << io::to_json(crit, false);
  }
  return ok ? 0 : 1;
}

int cmd_sweep(const io::RunConfig& cfg) {
  if (cfg.lambda)
    throw Error(ErrKind::BadConfig, "sweep needs a lambda_grid in the config");
  const auto& field = cfg.field;

  std::vector<double> grid = cfg.lambda_grid;
  std::sort(grid.begin(), grid.end());
  const auto last = std::unique(grid.begin(), grid.end(), [](double x, double y) {
    return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(x));
  });
  if (last != grid.end())
    std::cerr << "warning: lambda_grid contains duplicates; deduplicated "
              << cfg.lambda_grid.size() << " -> " << (last - grid.begin()) << " entries\n";
  grid.erase(last, grid.end());

  std::filesystem::create_directories(cfg.output_dir);
  const auto csv_path = cfg.output_dir / "sweep.csv";
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw Error(ErrKind::BadConfig, "cannot write " + csv_path.string());
  csv << io::sweep_csv_header() << std::flush;

  mp::SweepOptions opts;
  opts.num_samples = cfg.num_samples;
  opts.path_nodes = cfg.path_nodes;
  opts.saddle = cfg.saddle;
  opts.descent = cfg.descent;
  // flush one row per completed entry so an interrupted sweep leaves a valid
  // partial CSV (flags pending; the file is rewritten whole on completion)
  opts.on_entry = [&](const mp::LambdaSweep& partial) {
    const size_t i = partial.size() - 1;
    csv << io::sweep_csv_row(partial, i) << std::flush;
    if (partial.runs[i]) {
      char name[32];
      std::snprintf(name, sizeof name, "run_%03zu.json", i);
      io::write_text_file(cfg.output_dir / name, io::to_json(*partial.runs[i]));
    }
    std::cout << "sweep: lambda=" << io::format_double(partial.lambdas[i])
              << " c=" << io::format_double(partial.c_values[i])
              << " converged=" << static_cast<int>(partial.converged[i]) << "\n";
  };

  const mp::LambdaSweep sweep = mp::lambda_sweep(field, grid, opts);

  // final rewrite with the settled Denjoy flags
  csv.close();
  std::string full = io::sweep_csv_header();
  for (size_t i = 0; i < sweep.size(); ++i) full += io::sweep_csv_row(sweep, i);
  io::write_text_file(csv_path, full);
  io::write_text_file(cfg.output_dir / "sweep.json", io::to_json(sweep));

  bool all_ok = true;
  int flags = 0;
  for (size_t i = 0; i < sweep.size(); ++i) {
    all_ok = all_ok && sweep.converged[i];
    flags += sweep.flagged[i];
  }
  std::cout << "sweep: " << sweep.size() << " lambdas, " << flags << " flagged quotients";
  if (field.kind == fields::FieldKind::Constant)
    std::cout << ", lambda*c spread=" << io::format_double(sweep.lambda_c_spread);
  std::cout << " -> " << (all_ok ? "ok" : "FAILED") << " (artifacts in "
            << cfg.output_dir.string() << ")\n";
  return all_ok ? 0 : 1;
}

int cmd_verify(const io::RunConfig& cfg, const std::string& loop_path) {
  const double lambda = require_single_lambda(cfg, "verify");
  const LoopCurve loop = io::read_loop_file(loop_path);
  const verify::VerificationReport report =
      verify::verify_loop(loop, cfg.field, lambda, cfg.thresholds);
  std::cout << io::to_json(report);
  return report.all_ok() ? 0 : 1;
}

int cmd_export(const io::RunConfig& cfg, const std::string& loop_path) {
  const double lambda = require_single_lambda(cfg, "export");
  const LoopCurve loop = io::read_loop_file(loop_path);
  const auto& dir = cfg.output_dir;

  io::write_text_file(dir / "loop.svg", io::loop_svg(loop, cfg.field));
  io::write_text_file(dir / "loop.csv", io::loop_to_csv(loop));
  io::write_text_file(dir / "energy.json",
                      io::to_json(fun::energy(loop, cfg.field, lambda)));
  const winding::IndexMap map = winding::index_map(winding::perturb_generic(loop, cfg.seed), 256);
  io::write_text_file(dir / "index_map.pgm", io::index_map_to_pgm(map));
  io::write_text_file(dir / "index_map.json", io::index_map_meta_json(map));
  std::cout << "export: wrote loop.svg, loop.csv, energy.json, index_map.{pgm,json} to "
            << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"closed loops with prescribed curvature via the mountain-pass functional"};
  app.require_subcommand(1);

  std::string config_path, loop_path;
  CLI::App* solve = app.add_subcommand("solve", "find one critical loop at a single lambda");
  solve->add_option("-c,--config", config_path, "run config JSON")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "run estimate+refine over a lambda grid");
  sweep->add_option("-c,--config", config_path, "run config JSON")->required();
  CLI::App* verify_cmd = app.add_subcommand("verify", "validate a stored loop file");
  verify_cmd->add_option("-c,--config", config_path, "run config JSON")->required();
  verify_cmd->add_option("-l,--loop", loop_path, "loop CSV/JSON file")->required();
  CLI::App* export_cmd = app.add_subcommand("export", "render a stored loop file");
  export_cmd->add_option("-c,--config", config_path, "run config JSON")->required();
  export_cmd->add_option("-l,--loop", loop_path, "loop CSV/JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const io::RunConfig cfg = io::parse_config(io::read_text_file(config_path));
    if (solve->parsed()) return cmd_solve(cfg);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (verify_cmd->parsed()) return cmd_verify(cfg, loop_path);
    if (export_cmd->parsed()) return cmd_export(cfg, loop_path);
    return 2;
  } catch (const kloop::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return err.kind() == kloop::ErrKind::BadConfig ? 2 : 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
