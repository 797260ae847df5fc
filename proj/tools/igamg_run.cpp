// Command-line experiment runner.
//
// Exit codes: 0 success, 1 invalid input or geometry, 2 divergence or
// iteration cap, 3 I/O error.

#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "igamg/experiment.hpp"
#include "igamg/geometry_io.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitIo = 3;

std::ostream* open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return &std::cout;
  file.open(path);
  if (!file) throw std::ios_base::failure("cannot open output file '" + path + "'");
  return &file;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace igamg;
  CLI::App app{"Multi-patch isogeometric Poisson solver with geometric multigrid"};
  app.fallthrough();
  app.require_subcommand(0, 1);

  ExperimentSpec spec;
  std::string smoother = "gs", iteration = "d", csv_path, json_path;
  bool text_table = false;
  app.add_option("-g,--geometry", spec.geometry,
                 "unit_square | l_shape | fichera | square_grid:RxC | distorted:RxC:amp:seed | "
                 "distorted_fichera:amp:seed | path to a geometry JSON file")
      ->capture_default_str();
  app.add_option("-r,--refinements", spec.refinements, "number of uniform refinements L")->capture_default_str();
  app.add_option("-p,--degree", spec.degree, "spline degree")->capture_default_str();
  app.add_option("-s,--smoother", smoother, "gs | scms | hyb")
      ->check(CLI::IsMember({"gs", "scms", "hyb"}))
      ->capture_default_str();
  app.add_option("-i,--iteration", iteration, "d (stationary multigrid) | cg (multigrid-preconditioned CG)")
      ->check(CLI::IsMember({"d", "cg"}))
      ->capture_default_str();
  app.add_flag("--DG", spec.dg, "symmetric interior penalty coupling across interfaces");
  app.add_flag("--NonMatching", spec.nonmatching, "patch-dependent degrees and grids (requires --DG)");
  app.add_option("--MG.Damping", spec.tau, "scms damping tau")->capture_default_str();
  app.add_option("--MG.Scaling", spec.delta, "scms scaling delta (mass weight 1/(delta h^2))")->capture_default_str();
  app.add_option("--penalty", spec.sigma, "interior penalty parameter sigma")->capture_default_str();
  app.add_option("--cycle", spec.mu, "1 = V-cycle, 2 = W-cycle")->check(CLI::IsMember({1, 2}))->capture_default_str();
  app.add_option("--smoothing-steps", spec.nu, "smoothing steps per level")->capture_default_str();
  app.add_flag("--growing-schedule", spec.growing_schedule,
               "multiply smoothing steps by 2^(L-l) (1+L-l)^2 on coarser levels");
  std::string guess = "zero", reference = "rhs";
  app.add_option("--initial-guess", guess, "zero | random (uniform in [-1,1), seeded)")
      ->check(CLI::IsMember({"zero", "random"}))
      ->capture_default_str();
  app.add_option("--seed", spec.seed, "seed for the random initial guess")->capture_default_str();
  app.add_option("--residual-reference", reference, "rhs: ||r||/||f||, initial: ||r||/||r0||")
      ->check(CLI::IsMember({"rhs", "initial"}))
      ->capture_default_str();
  std::string step = "fixed";
  app.add_option("--step", step, "stationary step: fixed (u += B r) | steepest (energy-optimal scaling)")
      ->check(CLI::IsMember({"fixed", "steepest"}))
      ->capture_default_str();
  bool benchmark = false;
  app.add_flag("--benchmark-protocol", benchmark,
               "shorthand for --initial-guess random --residual-reference initial --step steepest");
  app.add_option("--max-iterations", spec.max_iterations, "iteration cap")->capture_default_str();
  app.add_option("--csv", csv_path, "write CSV to this file instead of standard output");
  app.add_option("--json", json_path, "also write a JSON record per experiment to this file");
  app.add_flag("--text", text_table, "print an aligned iteration table instead of CSV");

  CLI::App* table = app.add_subcommand("table", "run one experiment per (L, p) and emit a table");
  std::vector<int> levels, degrees;
  table->add_option("--levels", levels, "refinement levels")->expected(0, -1);
  table->add_option("--degrees", degrees, "spline degrees")->expected(0, -1);

  CLI::App* exporter = app.add_subcommand("export", "write the selected geometry as JSON");
  std::string export_path;
  exporter->add_option("-o,--output", export_path, "output file (default: standard output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  static const std::map<std::string, SmootherKind> kinds{
      {"gs", SmootherKind::gauss_seidel}, {"scms", SmootherKind::scms}, {"hyb", SmootherKind::hybrid}};
  spec.smoother = kinds.at(smoother);
  spec.mode = iteration == "d" ? IterationMode::direct : IterationMode::pcg;
  spec.random_initial_guess = guess == "random";
  spec.relative_to_initial = reference == "initial";
  spec.steepest_descent = step == "steepest";
  if (benchmark) spec.random_initial_guess = spec.relative_to_initial = spec.steepest_descent = true;

  try {
    std::ofstream file;
    if (*exporter) {
      std::ostream* out = open_output(export_path, file);
      write_geometry(*out, resolve_domain(spec.geometry));
      return 0;
    }

    std::vector<ExperimentResult> rows;
    if (*table) {
      spec.validate();
      rows = run_table(spec, levels, degrees);
      for (const auto& r : rows)
        if (r.error) std::cerr << "L=" << r.spec.refinements << " p=" << r.spec.degree << ": " << *r.error << '\n';
    } else {
      rows.push_back(run_experiment(spec));
    }

    std::ostream* out = open_output(csv_path, file);
    if (text_table)
      write_text_table(*out, rows);
    else
      write_csv(*out, rows);
    if (!json_path.empty()) {
      std::ofstream js(json_path);
      if (!js) throw std::ios_base::failure("cannot open output file '" + json_path + "'");
      for (const auto& r : rows) js << to_json(r) << '\n';
    }
    if (!*table && !rows[0].report.ok()) {
      std::cerr << "solver did not converge: " << rows[0].status() << '\n';
      return kExitDivergence;
    }
    return 0;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitValidation;
  }
}
