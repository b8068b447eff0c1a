#pragma once

// JSON model manifests:
//
// {
//   "coords": ["x", "y", "z"],
//   "rank": 2,
//   "frame": [["1", "0", "-y/2"], ["0", "1", "x/2"], ["0", "0", "1"]],
//   "gram1": [["1", "0"], ["0", "1"]],
//   "gram2": [["4", "0"], ["0", "4"]],
//   "domain": {"min": [-1, -1, -1], "max": [1, 1, 1],
//              "annulus": {"axes": [0, 1], "center": [0, 0], "r_min": 0.1, "r_max": 0.4}}
// }
//
// Expression entries may be strings or numbers. "annulus" is optional.

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "geoequiv/errors.hpp"
#include "geoequiv/geometry.hpp"

namespace geoequiv {

using Json = nlohmann::json;

namespace detail {

inline const Json& member(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ModelError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ModelError(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline ScalarExpr expr_at(const Json& v, const std::vector<std::string>& coords, const std::string& path) {
  if (v.is_number()) return ScalarExpr::constant(v.get<double>());
  if (!v.is_string()) throw ModelError(path, "expected an expression string or number");
  try {
    return parse(v.get<std::string>(), coords);
  } catch (const ParseError& e) {
    throw ModelError(path, e.what());
  }
}

inline Vec numbers_at(const Json& v, std::size_t n, const std::string& path) {
  if (!v.is_array() || v.size() != n) throw ModelError(path, "expected an array of " + std::to_string(n) + " numbers");
  Vec out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    if (!v[i].is_number()) throw ModelError(path + "[" + std::to_string(i) + "]", "expected a number");
    out[static_cast<Eigen::Index>(i)] = v[i].get<double>();
  }
  return out;
}

inline ExprMatrix matrix_at(const Json& v, std::size_t rows, std::size_t cols, const std::vector<std::string>& coords,
                            const std::string& path) {
  if (!v.is_array() || v.size() != rows) throw ModelError(path, "expected " + std::to_string(rows) + " rows");
  ExprMatrix out(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    std::string p = path + "[" + std::to_string(i) + "]";
    if (!v[i].is_array() || v[i].size() != cols) throw ModelError(p, "expected " + std::to_string(cols) + " entries");
    for (std::size_t j = 0; j < cols; ++j) out[i].push_back(expr_at(v[i][j], coords, p + "[" + std::to_string(j) + "]"));
  }
  return out;
}

}  // namespace detail

inline Domain domain_from_json(const Json& d, std::size_t n, const std::string& path = "domain") {
  Domain dom;
  dom.min = detail::numbers_at(detail::member(d, "min", path), n, path + ".min");
  dom.max = detail::numbers_at(detail::member(d, "max", path), n, path + ".max");
  for (std::size_t i = 0; i < n; ++i) {
    auto ii = static_cast<Eigen::Index>(i);
    if (!(dom.min[ii] < dom.max[ii])) throw ModelError(path + ".min[" + std::to_string(i) + "]", "must be below max");
  }
  if (d.contains("annulus")) {
    std::string p = path + ".annulus";
    const Json& a = d["annulus"];
    if (!a.is_object()) throw ModelError(p, "expected an object");
    Annulus an;
    if (a.contains("axes")) {
      Vec ax = detail::numbers_at(a["axes"], 2, p + ".axes");
      if (ax[0] < 0 || ax[1] < 0 || ax[0] >= static_cast<double>(n) || ax[1] >= static_cast<double>(n) || ax[0] == ax[1])
        throw ModelError(p + ".axes", "must name two distinct coordinates");
      an.axis0 = static_cast<std::size_t>(ax[0]);
      an.axis1 = static_cast<std::size_t>(ax[1]);
    }
    if (a.contains("center")) {
      Vec c = detail::numbers_at(a["center"], 2, p + ".center");
      an.cx = c[0];
      an.cy = c[1];
    }
    const Json& rmin = detail::member(a, "r_min", p);
    const Json& rmax = detail::member(a, "r_max", p);
    if (!rmin.is_number()) throw ModelError(p + ".r_min", "expected a number");
    if (!rmax.is_number()) throw ModelError(p + ".r_max", "expected a number");
    an.r_min = rmin.get<double>();
    an.r_max = rmax.get<double>();
    if (!(an.r_min >= 0.0 && an.r_min < an.r_max)) throw ModelError(p, "need 0 <= r_min < r_max");
    dom.annulus = an;
  }
  return dom;
}

inline Json domain_to_json(const Domain& d) {
  Json j;
  j["min"] = std::vector<double>(d.min.data(), d.min.data() + d.min.size());
  j["max"] = std::vector<double>(d.max.data(), d.max.data() + d.max.size());
  if (d.annulus) {
    const Annulus& a = *d.annulus;
    j["annulus"] = {{"axes", {a.axis0, a.axis1}}, {"center", {a.cx, a.cy}}, {"r_min", a.r_min}, {"r_max", a.r_max}};
  }
  return j;
}

/// Builds and structurally checks a model; numeric validation is separate (validate_model).
inline GeometryModel model_from_json(const Json& j) {
  if (!j.is_object()) throw ModelError("", "manifest must be a JSON object");
  GeometryModel m;
  const Json& coords = detail::member(j, "coords", "");
  if (!coords.is_array() || coords.empty()) throw ModelError("coords", "expected a non-empty array of names");
  for (std::size_t i = 0; i < coords.size(); ++i) {
    std::string p = "coords[" + std::to_string(i) + "]";
    if (!coords[i].is_string()) throw ModelError(p, "expected a string");
    std::string name = coords[i].get<std::string>();
    bool ok = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_');
    for (char c : name) ok = ok && (std::isalnum(static_cast<unsigned char>(c)) || c == '_');
    if (!ok) throw ModelError(p, "not a valid identifier");
    for (const char* f : {"sin", "cos", "exp", "log", "sqrt", "abs", "sgn"})
      if (name == f) throw ModelError(p, "coordinate name clashes with a function name");
    if (std::find(m.coords.begin(), m.coords.end(), name) != m.coords.end()) throw ModelError(p, "duplicate name");
    m.coords.push_back(name);
  }
  std::size_t n = m.coords.size();
  const Json& rank = detail::member(j, "rank", "");
  if (!rank.is_number_integer() || rank.get<long long>() < 1 || rank.get<long long>() > static_cast<long long>(n))
    throw ModelError("rank", "expected an integer in [1, " + std::to_string(n) + "]");
  m.rank = rank.get<std::size_t>();
  ExprMatrix frame = detail::matrix_at(detail::member(j, "frame", ""), n, n, m.coords, "frame");
  m.frame.assign(frame.begin(), frame.end());
  m.gram1 = detail::matrix_at(detail::member(j, "gram1", ""), m.rank, m.rank, m.coords, "gram1");
  m.gram2 = detail::matrix_at(detail::member(j, "gram2", ""), m.rank, m.rank, m.coords, "gram2");
  m.domain = domain_from_json(detail::member(j, "domain", ""), n);
  return m;
}

inline Json model_to_json(const GeometryModel& m) {
  Json j;
  j["coords"] = m.coords;
  j["rank"] = m.rank;
  auto strings = [&](const ExprMatrix& M) {
    Json rows = Json::array();
    for (const auto& row : M) {
      Json r = Json::array();
      for (const auto& e : row) r.push_back(e.to_string(m.coords));
      rows.push_back(r);
    }
    return rows;
  };
  j["frame"] = strings(ExprMatrix(m.frame.begin(), m.frame.end()));
  j["gram1"] = strings(m.gram1);
  j["gram2"] = strings(m.gram2);
  j["domain"] = domain_to_json(m.domain);
  return j;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw ModelError("", path + ": invalid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

inline GeometryModel load_model(const std::string& path) { return model_from_json(read_json_file(path)); }

}  // namespace geoequiv
