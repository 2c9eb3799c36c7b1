#include "lqr/json_io.h"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "lqr/errors.h"

namespace lqr {

namespace {

using nlohmann::json;

MatrixXd matrix_field(const json& j, const std::string& key) {
  if (!j.contains(key)) throw DimensionError("missing matrix field \"" + key + "\"");
  const json& rows = j.at(key);
  if (!rows.is_array() || rows.empty()) {
    throw DimensionError("field \"" + key + "\" must be a non-empty array of rows");
  }
  const std::size_t r = rows.size();
  if (!rows[0].is_array() || rows[0].empty()) {
    throw DimensionError("field \"" + key + "\" must contain non-empty rows");
  }
  const std::size_t c = rows[0].size();
  MatrixXd M(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    if (!rows[i].is_array() || rows[i].size() != c) {
      throw DimensionError("field \"" + key + "\" has ragged rows");
    }
    for (std::size_t k = 0; k < c; ++k) {
      if (!rows[i][k].is_number()) {
        throw DimensionError("field \"" + key + "\" has a non-numeric entry");
      }
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          rows[i][k].get<double>();
    }
  }
  return M;
}

json matrix_to_json(const MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Plant plant_from_json(const std::string& text, const Tolerances& tol) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DimensionError(std::string("instance is not valid JSON: ") + e.what());
  }
  const MatrixXd A = matrix_field(j, "A");
  const MatrixXd B = matrix_field(j, "B");
  const MatrixXd Q = matrix_field(j, "Q");
  const MatrixXd R = matrix_field(j, "R");
  const MatrixXd W = matrix_field(j, "W");

  std::optional<MatrixXd> B1;
  if (j.contains("B1")) B1 = matrix_field(j, "B1");

  std::optional<VectorXd> x0;
  if (j.contains("x0")) {
    const json& v = j.at("x0");
    if (!v.is_array() || v.empty()) {
      throw DimensionError("field \"x0\" must be a non-empty array");
    }
    VectorXd x(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) throw DimensionError("field \"x0\" has a non-numeric entry");
      x(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    x0 = std::move(x);
  }
  return make_plant(A, B, Q, R, W, std::move(B1), std::move(x0), tol);
}

Plant load_plant(const std::string& path, const Tolerances& tol) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open instance file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return plant_from_json(buf.str(), tol);
}

std::string plant_to_json(const Plant& plant) {
  json j;
  j["A"] = matrix_to_json(plant.A);
  j["B"] = matrix_to_json(plant.B);
  j["Q"] = matrix_to_json(plant.Q);
  j["R"] = matrix_to_json(plant.R);
  j["W"] = matrix_to_json(plant.W);
  if (plant.B1) j["B1"] = matrix_to_json(*plant.B1);
  if (plant.x0) {
    json v = json::array();
    for (Eigen::Index i = 0; i < plant.x0->size(); ++i) v.push_back((*plant.x0)(i));
    j["x0"] = v;
  }
  return j.dump(2);
}

}  // namespace lqr
