#pragma once

#include <iosfwd>
#include <string>

#include "igamg/geometry.hpp"

namespace igamg {

/// Multi-patch geometry file (JSON):
///
///   { "dimension": 2,
///     "patches": [ { "degrees": [1, 1],
///                    "knots": [[0,0,1,1], [0,0,1,1]],
///                    "control_points": [[0,0], [1,0], [0,1], [1,1]],
///                    "weights": [1, 1, 1, 1] } ],          // optional
///     "interfaces": [ { "patches": [0, 1], "sides": [1, 0],
///                       "perm": [0, 1], "flip": [false, false] } ] }  // optional
///
/// Control points are listed with parameter direction 0 running fastest.
/// Without an "interfaces" entry, interfaces are detected from the geometry.
MultiPatchDomain read_geometry(std::istream& in);
MultiPatchDomain read_geometry_file(const std::string& path);

void write_geometry(std::ostream& out, const MultiPatchDomain& domain);

}  // namespace igamg
