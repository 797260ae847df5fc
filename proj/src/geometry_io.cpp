#include "igamg/geometry_io.hpp"

#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace igamg {

using json = nlohmann::json;

namespace {

GeometryMap parse_patch(const json& j, int dim, int index) {
  const std::string where = "patch " + std::to_string(index) + ": ";
  const auto& knots = j.at("knots");
  if (!knots.is_array() || static_cast<int>(knots.size()) != dim)
    throw ValidationError(where + "expected one knot vector per direction");
  std::vector<SplineSpace1D> spaces;
  for (int d = 0; d < dim; ++d) {
    const auto kv = knots[d].get<std::vector<double>>();
    try {
      spaces.push_back(SplineSpace1D::from_knots(kv));
    } catch (const std::invalid_argument& e) {
      throw ValidationError(where + e.what());
    }
  }
  if (j.contains("degrees")) {
    const auto deg = j.at("degrees").get<std::vector<int>>();
    if (static_cast<int>(deg.size()) != dim)
      throw ValidationError(where + "expected one degree per direction");
    for (int d = 0; d < dim; ++d)
      if (deg[d] != spaces[d].degree())
        throw ValidationError(where + "degree does not match knot vector in direction " +
                              std::to_string(d));
  }
  TensorSpace ts(std::move(spaces));
  const auto& cp = j.at("control_points");
  if (!cp.is_array() || static_cast<int>(cp.size()) != ts.size())
    throw ValidationError(where + "expected " + std::to_string(ts.size()) + " control points");
  Eigen::MatrixXd cps(ts.size(), dim);
  for (int i = 0; i < ts.size(); ++i) {
    const auto pt = cp[i].get<std::vector<double>>();
    if (static_cast<int>(pt.size()) != dim)
      throw ValidationError(where + "control point has wrong dimension");
    for (int c = 0; c < dim; ++c) cps(i, c) = pt[c];
  }
  std::vector<double> w;
  if (j.contains("weights")) w = j.at("weights").get<std::vector<double>>();
  try {
    return GeometryMap(std::move(ts), std::move(cps), std::move(w));
  } catch (const std::invalid_argument& e) {
    throw ValidationError(where + e.what());
  }
}

}  // namespace

MultiPatchDomain read_geometry(std::istream& in) {
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("geometry file is not valid JSON: ") + e.what());
  }
  try {
    const int dim = j.at("dimension").get<int>();
    if (dim != 2 && dim != 3) throw ValidationError("geometry dimension must be 2 or 3");
    std::vector<GeometryMap> patches;
    int idx = 0;
    for (const auto& p : j.at("patches")) patches.push_back(parse_patch(p, dim, idx++));
    if (!j.contains("interfaces")) return detect_interfaces(std::move(patches));

    for (std::size_t k = 0; k < patches.size(); ++k) check_bijective(patches[k], static_cast<int>(k));
    std::vector<Interface> ifaces;
    for (const auto& f : j.at("interfaces")) {
      Interface iface;
      const auto pp = f.at("patches").get<std::vector<int>>();
      const auto ss = f.at("sides").get<std::vector<int>>();
      if (pp.size() != 2 || ss.size() != 2) throw ValidationError("interface needs two patches and two sides");
      iface.patch_a = pp[0];
      iface.patch_b = pp[1];
      iface.side_a = ss[0];
      iface.side_b = ss[1];
      if (f.contains("perm")) {
        const auto perm = f.at("perm").get<std::vector<int>>();
        for (std::size_t t = 0; t < perm.size() && t < 2; ++t) iface.orientation.perm[t] = perm[t];
      }
      if (f.contains("flip")) {
        const auto flip = f.at("flip").get<std::vector<bool>>();
        for (std::size_t t = 0; t < flip.size() && t < 2; ++t) iface.orientation.flip[t] = flip[t];
      }
      if (iface.patch_a > iface.patch_b) throw ValidationError("interface patches must be listed as a < b");
      ifaces.push_back(iface);
    }
    MultiPatchDomain dom(std::move(patches), std::move(ifaces));
    for (const auto& f : dom.interfaces())
      if (interface_mismatch(dom, f) > 1e-8)
        throw ValidationError("interface between patches " + std::to_string(f.patch_a) + " and " +
                              std::to_string(f.patch_b) + " does not match geometrically");
    return dom;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed geometry file: ") + e.what());
  }
}

MultiPatchDomain read_geometry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open geometry file " + path);
  return read_geometry(in);
}

void write_geometry(std::ostream& out, const MultiPatchDomain& domain) {
  json j;
  const int dim = domain.dim();
  j["dimension"] = dim;
  j["patches"] = json::array();
  for (const auto& g : domain.patches()) {
    json p;
    std::vector<int> deg;
    json knots = json::array();
    for (int d = 0; d < dim; ++d) {
      deg.push_back(g.space()[d].degree());
      knots.push_back(g.space()[d].knots());
    }
    p["degrees"] = deg;
    p["knots"] = knots;
    json cps = json::array();
    for (int i = 0; i < g.control_points().rows(); ++i) {
      std::vector<double> pt(dim);
      for (int c = 0; c < dim; ++c) pt[c] = g.control_points()(i, c);
      cps.push_back(pt);
    }
    p["control_points"] = cps;
    if (g.rational()) p["weights"] = g.weights();
    j["patches"].push_back(p);
  }
  j["interfaces"] = json::array();
  for (const auto& f : domain.interfaces()) {
    json jf;
    jf["patches"] = {f.patch_a, f.patch_b};
    jf["sides"] = {f.side_a, f.side_b};
    jf["perm"] = {f.orientation.perm[0], f.orientation.perm[1]};
    jf["flip"] = {f.orientation.flip[0], f.orientation.flip[1]};
    j["interfaces"].push_back(jf);
  }
  out << j.dump(1) << '\n';
}

}  // namespace igamg
