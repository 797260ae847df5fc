#include "igamg/experiment.hpp"

#include <chrono>
#include <cstdio>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "igamg/assembly.hpp"
#include "igamg/geometry_io.hpp"

namespace igamg {

const char* to_string(IterationMode m) { return m == IterationMode::direct ? "direct" : "pcg"; }

void ExperimentSpec::validate() const {
  if (refinements < 0) throw std::invalid_argument("number of refinements must be nonnegative");
  if (degree < 1) throw std::invalid_argument("spline degree must be at least 1");
  if (nonmatching && !dg) throw std::invalid_argument("--NonMatching requires --DG");
  if (smoother != SmootherKind::gauss_seidel && !(tau > 0.0 && delta > 0.0))
    throw std::invalid_argument("scms and hyb need positive damping and scaling");
  if (dg && !(sigma > 0.0)) throw std::invalid_argument("penalty parameter must be positive");
  if (mu != 1 && mu != 2) throw std::invalid_argument("cycle must be 1 (V) or 2 (W)");
  if (nu < 0) throw std::invalid_argument("smoothing steps must be nonnegative");
  if (max_iterations < 1) throw std::invalid_argument("iteration cap must be positive");
}

std::string ExperimentSpec::discretization() const {
  if (!dg) return "conforming";
  return nonmatching ? "dg-nonmatching" : "dg";
}

std::string ExperimentResult::status() const {
  if (error) return "error";
  return to_string(report.status);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::pair<int, int> grid_size(const std::string& s, const std::string& name) {
  const auto parts = split(s, 'x');
  if (parts.size() != 2) throw std::invalid_argument("expected RxC in geometry name '" + name + "'");
  return {std::stoi(parts[0]), std::stoi(parts[1])};
}

}  // namespace

MultiPatchDomain resolve_domain(const std::string& name) {
  if (name == "unit_square") return unit_square();
  if (name == "l_shape") return l_shape();
  if (name == "fichera") return fichera();
  const auto parts = split(name, ':');
  try {
    if (parts[0] == "square_grid" && parts.size() == 2) {
      const auto [r, c] = grid_size(parts[1], name);
      return square_grid(r, c);
    }
    if (parts[0] == "distorted" && parts.size() == 4) {
      const auto [r, c] = grid_size(parts[1], name);
      return distorted_grid(r, c, std::stod(parts[2]), static_cast<unsigned>(std::stoul(parts[3])));
    }
    if (parts[0] == "distorted_fichera" && parts.size() == 3)
      return distorted_fichera(std::stod(parts[1]), static_cast<unsigned>(std::stoul(parts[2])));
  } catch (const std::logic_error&) {
    throw std::invalid_argument("malformed builtin geometry name '" + name + "'");
  }
  return read_geometry_file(name);
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto start = std::chrono::steady_clock::now();
  ExperimentResult res;
  res.spec = spec;
  const MultiPatchDomain dom = resolve_domain(spec.geometry);
  const DiscreteHierarchy h(dom, spec.degree, spec.refinements, spec.dg ? Coupling::dg : Coupling::conforming,
                            spec.nonmatching ? SpaceRule::nonmatching : SpaceRule::matching);
  ManufacturedProblem problem;
  problem.dim = dom.dim();
  const LinearSystem sys = assemble_system(h, problem, spec.sigma);
  res.num_dofs = static_cast<int>(sys.a.rows());

  CycleConfig cfg;
  cfg.mu = spec.mu;
  cfg.smoother = spec.smoother;
  cfg.tau = spec.tau;
  cfg.delta = spec.delta;
  cfg.nu = spec.nu;
  cfg.growing_schedule = spec.growing_schedule;
  cfg.max_iterations = spec.max_iterations;
  cfg.random_initial_guess = spec.random_initial_guess;
  cfg.relative_to_initial = spec.relative_to_initial;
  cfg.seed = spec.seed;
  cfg.steepest_descent = spec.steepest_descent;
  const Multigrid mg(h, sys.a, cfg);
  res.setup_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  res.report = spec.mode == IterationMode::direct ? solve_stationary(mg, sys.f) : solve_pcg(mg, sys.f);
  return res;
}

std::vector<ExperimentResult> run_table(const ExperimentSpec& base, const std::vector<int>& levels,
                                        const std::vector<int>& degrees) {
  std::vector<ExperimentResult> out;
  for (int l : levels)
    for (int p : degrees) {
      ExperimentSpec s = base;
      s.refinements = l;
      s.degree = p;
      try {
        out.push_back(run_experiment(s));
      } catch (const std::exception& e) {
        ExperimentResult r;
        r.spec = s;
        r.error = e.what();
        out.push_back(std::move(r));
      }
    }
  return out;
}

std::string csv_header() { return "domain,mode,smoother,p,L,iterations,rel_residual,seconds,status"; }

std::string csv_row(const ExperimentResult& r) {
  std::ostringstream os;
  os << r.spec.geometry << ',' << r.spec.discretization() << ',' << to_string(r.spec.smoother) << ','
     << r.spec.degree << ',' << r.spec.refinements << ',';
  if (r.error) {
    os << ",,,error";
    return os.str();
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", r.report.final_residual());
  os << r.report.iterations << ',' << buf << ',';
  std::snprintf(buf, sizeof buf, "%.3f", r.setup_seconds + r.report.seconds);
  os << buf << ',' << r.status();
  return os.str();
}

void write_csv(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  out << csv_header() << '\n';
  for (const auto& r : rows) out << csv_row(r) << '\n';
}

std::string to_json(const ExperimentResult& r) {
  nlohmann::json j;
  const ExperimentSpec& s = r.spec;
  j["domain"] = s.geometry;
  j["mode"] = s.discretization();
  j["smoother"] = to_string(s.smoother);
  j["iteration"] = to_string(s.mode);
  j["p"] = s.degree;
  j["L"] = s.refinements;
  j["tau"] = s.tau;
  j["delta"] = s.delta;
  j["sigma"] = s.sigma;
  j["cycle"] = s.mu;
  j["smoothing_steps"] = s.nu;
  j["initial_guess"] = s.random_initial_guess ? "random" : "zero";
  j["residual_reference"] = s.relative_to_initial ? "initial" : "rhs";
  j["seed"] = s.seed;
  j["step"] = s.steepest_descent ? "steepest" : "fixed";
  j["status"] = r.status();
  if (r.error) {
    j["error"] = *r.error;
    return j.dump();
  }
  j["dofs"] = r.num_dofs;
  j["iterations"] = r.report.iterations;
  j["rel_residual"] = r.report.final_residual();
  j["residuals"] = r.report.residuals;
  j["setup_seconds"] = r.setup_seconds;
  j["solve_seconds"] = r.report.seconds;
  return j.dump();
}

void write_text_table(std::ostream& out, const std::vector<ExperimentResult>& rows) {
  std::set<int> degrees;
  std::map<int, std::map<int, std::string>> cells;
  for (const auto& r : rows) {
    degrees.insert(r.spec.degree);
    std::string cell = r.error ? "err" : r.report.ok() ? std::to_string(r.report.iterations) : "--";
    cells[r.spec.refinements][r.spec.degree] = cell;
  }
  out << std::setw(4) << "L";
  for (int p : degrees) out << std::setw(6) << ("p=" + std::to_string(p));
  out << '\n';
  for (const auto& [l, row] : cells) {
    out << std::setw(4) << l;
    for (int p : degrees) {
      auto it = row.find(p);
      out << std::setw(6) << (it == row.end() ? "" : it->second);
    }
    out << '\n';
  }
}

}  // namespace igamg
