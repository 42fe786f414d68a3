#include "fmre/serialization.hpp"

#include <json.hpp>

#include <istream>
#include <ostream>
#include <stdexcept>

namespace fmre {

namespace {

using nlohmann::json;

json flat_coords(const ManifoldPoint& point) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        json a = json::array();
        if constexpr (std::is_same_v<T, UnitVector>) {
          for (int i = 0; i < p.ambient_dim(); ++i) a.push_back(p.coords()(i));
        } else if constexpr (std::is_same_v<T, HyperboloidPoint>) {
          for (int i = 0; i < p.ambient_dim(); ++i) a.push_back(p.coords()(i));
        } else if constexpr (std::is_same_v<T, TorusPoint>) {
          for (int i = 0; i < p.size(); ++i) {
            a.push_back(p.component(i)(0));
            a.push_back(p.component(i)(1));
          }
        } else if constexpr (std::is_same_v<T, SpdMatrix>) {
          for (int i = 0; i < p.dim(); ++i) {
            for (int j = 0; j < p.dim(); ++j) a.push_back(p.entries()(i, j));
          }
        } else {
          for (int i = 0; i < p.rows(); ++i) {
            for (int j = 0; j < p.cols(); ++j) a.push_back(p.entries()(i, j));
          }
        }
        return a;
      },
      point);
}

json header_fields(const ManifoldPoint& point) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        json h;
        if constexpr (std::is_same_v<T, UnitVector>) {
          h["manifold"] = "sphere";
          h["ambient_dim"] = p.ambient_dim();
        } else if constexpr (std::is_same_v<T, HyperboloidPoint>) {
          h["manifold"] = "hyperboloid";
          h["ambient_dim"] = p.ambient_dim();
          h["radius"] = p.radius();
        } else if constexpr (std::is_same_v<T, TorusPoint>) {
          h["manifold"] = "torus";
          h["p"] = p.size();
        } else if constexpr (std::is_same_v<T, SpdMatrix>) {
          h["manifold"] = "spd";
          h["p"] = p.dim();
        } else {
          h["manifold"] = "stiefel";
          h["rows"] = p.rows();
          h["cols"] = p.cols();
        }
        return h;
      },
      point);
}

Vec to_vec(const json& a) {
  Vec v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) v(i) = a[i].get<double>();
  return v;
}

ManifoldPoint point_from_header_and_coords(const json& header, const json& coords) {
  const std::string manifold = header.at("manifold").get<std::string>();
  Vec flat = to_vec(coords);
  if (manifold == "sphere") {
    return UnitVector(flat);
  }
  if (manifold == "hyperboloid") {
    return HyperboloidPoint(flat, header.at("radius").get<double>());
  }
  if (manifold == "torus") {
    if (flat.size() % 2 != 0) throw std::invalid_argument("torus point: odd coordinate count");
    int p = static_cast<int>(flat.size()) / 2;
    Eigen::Matrix2Xd c(2, p);
    for (int i = 0; i < p; ++i) {
      c(0, i) = flat(2 * i);
      c(1, i) = flat(2 * i + 1);
    }
    return TorusPoint(std::move(c));
  }
  if (manifold == "spd") {
    int p = header.contains("p") ? header.at("p").get<int>()
                                 : static_cast<int>(std::lround(std::sqrt(flat.size())));
    if (p * p != flat.size()) throw std::invalid_argument("spd point: coordinate count mismatch");
    Mat m(p, p);
    for (int i = 0; i < p; ++i) {
      for (int j = 0; j < p; ++j) m(i, j) = flat(i * p + j);
    }
    return SpdMatrix(std::move(m));
  }
  if (manifold == "stiefel") {
    int rows = header.at("rows").get<int>();
    int cols = header.at("cols").get<int>();
    if (rows * cols != flat.size()) {
      throw std::invalid_argument("stiefel point: coordinate count mismatch");
    }
    Mat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) m(i, j) = flat(i * cols + j);
    }
    return StiefelFrame(std::move(m));
  }
  throw std::invalid_argument("unknown manifold tag: " + manifold);
}

}  // namespace

std::string point_to_json(const ManifoldPoint& point) {
  json obj = header_fields(point);
  obj["coords"] = flat_coords(point);
  return obj.dump();
}

ManifoldPoint point_from_json(const std::string& text) {
  json obj = json::parse(text);
  return point_from_header_and_coords(obj, obj.at("coords"));
}

void write_data_file(std::ostream& out, const std::vector<ManifoldPoint>& points) {
  if (points.empty()) throw std::invalid_argument("write_data_file: no points");
  out << header_fields(points.front()).dump() << "\n";
  for (const auto& p : points) {
    if (p.index() != points.front().index()) {
      throw std::invalid_argument("write_data_file: mixed manifold variants");
    }
    out << flat_coords(p).dump() << "\n";
  }
}

std::vector<ManifoldPoint> read_data_file(std::istream& in) {
  std::string line;
  json header;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    header = json::parse(line);
    break;
  }
  if (header.is_null()) throw std::invalid_argument("read_data_file: missing header line");
  std::vector<ManifoldPoint> points;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    points.push_back(point_from_header_and_coords(header, json::parse(line)));
  }
  if (points.empty()) throw std::invalid_argument("read_data_file: no points");
  return points;
}

}  // namespace fmre
