#pragma once

// Constructor parameter files: JSON objects naming the data of each normal form.

#include <string>
#include <vector>

#include "geoequiv/constructors.hpp"
#include "geoequiv/errors.hpp"
#include "geoequiv/manifest.hpp"

namespace geoequiv {

namespace detail {

inline double number_at(const Json& j, const std::string& key, const std::string& path, std::optional<double> fallback = {}) {
  auto it = j.find(key);
  if (it == j.end()) {
    if (fallback) return *fallback;
    throw ModelError(path + key, "missing");
  }
  if (!it->is_number()) throw ModelError(path + key, "expected a number");
  return it->get<double>();
}

inline ScalarExpr expr_in(const Json& j, const std::string& key, const std::vector<std::string>& vars, const std::string& path) {
  return expr_at(member(j, key, path.empty() ? "" : path.substr(0, path.size() - 1)), vars, path + key);
}

inline std::vector<std::string> names_at(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) throw ModelError(path, "expected a non-empty array of names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string()) throw ModelError(path + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

}  // namespace detail

inline const std::vector<std::string>& constructor_names() {
  static const std::vector<std::string> names{"levi-civita", "dini", "gendini1", "gendini2", "quasi-contact", "beltrami"};
  return names;
}

/// Builds a model from a parameter object. Malformed files raise ModelError with a field path;
/// violated hypotheses raise ArgumentError.
inline GeometryModel build_from_params(const std::string& kind, const Json& j) {
  using detail::expr_in;
  using detail::number_at;
  if (!j.is_object()) throw ModelError("", "parameters must be a JSON object");
  const std::vector<std::string> t{"t"};
  if (kind == "levi-civita") {
    LeviCivitaSpec s;
    const Json& blocks = detail::member(j, "blocks", "");
    if (!blocks.is_array() || blocks.empty()) throw ModelError("blocks", "expected a non-empty array");
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      std::string p = "blocks[" + std::to_string(b) + "]";
      LeviCivitaBlock blk;
      blk.coords = detail::names_at(detail::member(blocks[b], "coords", p), p + ".coords");
      std::size_t k = blk.coords.size();
      blk.g = detail::matrix_at(detail::member(blocks[b], "metric", p), k, k, blk.coords, p + ".metric");
      blk.beta = expr_in(blocks[b], "beta", blk.coords, p + ".");
      s.blocks.push_back(std::move(blk));
    }
    std::size_t n = 0;
    for (const auto& b : s.blocks) n += b.coords.size();
    s.domain = domain_from_json(detail::member(j, "domain", ""), n);
    s.q0 = j.contains("q0") ? detail::numbers_at(j["q0"], n, "q0") : Vec((s.domain.min + s.domain.max) / 2);
    return build_levi_civita(s);
  }
  if (kind == "dini") {
    std::vector<std::string> coords{"x1", "x2"};
    if (j.contains("coords")) coords = detail::names_at(j["coords"], "coords");
    if (coords.size() != 2) throw ModelError("coords", "expected two names");
    ScalarExpr b1 = expr_in(j, "beta1", {coords[0]}, "");
    ScalarExpr b2 = expr_in(j, "beta2", {coords[1]}, "");
    return build_dini(b1, b2, domain_from_json(detail::member(j, "domain", ""), 2), coords);
  }
  if (kind == "gendini1") {
    return build_gendini_case1(expr_in(j, "U", {"u"}, ""), expr_in(j, "V", {"v"}, ""), number_at(j, "r_min", ""),
                               number_at(j, "r_max", ""));
  }
  if (kind == "gendini2") {
    return build_gendini_case2(expr_in(j, "R", {"r"}, ""), number_at(j, "a", "", 1.0), number_at(j, "C", "", 1.0),
                               number_at(j, "r_min", ""), number_at(j, "r_max", ""));
  }
  if (kind == "quasi-contact") {
    QuasiContactSpec s;
    double k = number_at(j, "k", "", 1.0);
    if (k < 1 || k != std::floor(k)) throw ModelError("k", "expected a positive integer");
    s.k = static_cast<std::size_t>(k);
    s.beta = expr_in(j, "beta", t, "");
    s.C1 = number_at(j, "C1", "");
    s.C2 = number_at(j, "C2", "");
    std::vector<std::string> hyper;
    for (std::size_t i = 1; i <= s.k; ++i) hyper.push_back(s.k == 1 ? "x" : "x" + std::to_string(i));
    for (std::size_t i = 1; i <= s.k; ++i) hyper.push_back(s.k == 1 ? "y" : "y" + std::to_string(i));
    hyper.push_back("z");
    if (j.contains("gbar")) {
      s.gbar = detail::matrix_at(j["gbar"], 2 * s.k, 2 * s.k, hyper, "gbar");
    } else {
      s.gbar = detail::zeros(2 * s.k);
      for (std::size_t i = 0; i < 2 * s.k; ++i) s.gbar[i][i] = ScalarExpr::constant(1.0);
    }
    s.domain = domain_from_json(detail::member(j, "domain", ""), 2 * s.k + 2);
    return build_quasi_contact(s);
  }
  if (kind == "beltrami") {
    return build_beltrami(number_at(j, "half_width", "", 1.0));
  }
  throw ArgumentError("unknown constructor '" + kind + "'");
}

}  // namespace geoequiv
