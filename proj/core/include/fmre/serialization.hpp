#pragma once

#include "fmre/manifolds.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace fmre {

/// One point as a JSON object with a "manifold" tag and a flat coordinate
/// array (row-major for matrices, (cos, sin) pairs for torus components).
std::string point_to_json(const ManifoldPoint& point);
ManifoldPoint point_from_json(const std::string& text);

/// Data files carry a one-line JSON header naming the manifold and its
/// shape, followed by one flat JSON array per line.
void write_data_file(std::ostream& out, const std::vector<ManifoldPoint>& points);
std::vector<ManifoldPoint> read_data_file(std::istream& in);

}  // namespace fmre
