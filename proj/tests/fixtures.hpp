#pragma once

#include <string>
#include <vector>

#include "geoequiv/constructors.hpp"
#include "geoequiv/expr.hpp"
#include "geoequiv/geometry.hpp"

namespace fixtures {

using namespace geoequiv;

inline Domain box(std::vector<double> lo, std::vector<double> hi) {
  Domain d;
  d.min = Eigen::Map<Vec>(lo.data(), static_cast<Eigen::Index>(lo.size()));
  d.max = Eigen::Map<Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()));
  return d;
}

inline Vec vec(std::vector<double> v) { return Eigen::Map<Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

inline ExprMatrix exprs(const std::vector<std::vector<std::string>>& rows, const std::vector<std::string>& coords) {
  ExprMatrix out;
  for (const auto& r : rows) {
    std::vector<ScalarExpr> row;
    for (const auto& s : r) row.push_back(parse(s, coords));
    out.push_back(row);
  }
  return out;
}

inline GeometryModel model(std::vector<std::string> coords, std::size_t rank,
                           const std::vector<std::vector<std::string>>& frame,
                           const std::vector<std::vector<std::string>>& g1,
                           const std::vector<std::vector<std::string>>& g2, Domain d) {
  GeometryModel m;
  m.coords = coords;
  m.rank = rank;
  for (const auto& f : exprs(frame, coords)) m.frame.push_back(f);
  m.gram1 = exprs(g1, coords);
  m.gram2 = exprs(g2, coords);
  m.domain = std::move(d);
  return m;
}

/// Heisenberg distribution X1 = dx - y/2 dz, X2 = dy + x/2 dz, completed by dz; G1 = I on (X1, X2).
inline GeometryModel heisenberg(const std::vector<std::vector<std::string>>& g2,
                                const std::vector<std::vector<std::string>>& g1 = {{"1", "0"}, {"0", "1"}}) {
  return model({"x", "y", "z"}, 2, {{"1", "0", "-y/2"}, {"0", "1", "x/2"}, {"0", "0", "1"}}, g1, g2,
               box({-1, -1, -1}, {1, 1, 1}));
}

inline GeometryModel heisenberg_conformal(const std::string& factor) {
  return heisenberg({{factor, "0"}, {"0", factor}});
}

/// Euclidean plane against a second metric on the coordinate frame.
inline GeometryModel plane(const std::vector<std::vector<std::string>>& g2,
                           const std::vector<std::vector<std::string>>& g1 = {{"1", "0"}, {"0", "1"}},
                           Domain d = box({-1, -1}, {1, 1})) {
  return model({"x", "y"}, 2, {{"1", "0"}, {"0", "1"}}, g1, g2, std::move(d));
}

inline ScalarExpr t_expr(const std::string& s) { return parse(s, std::vector<std::string>{"t"}); }

inline GeometryModel dini_linear() {
  return build_dini(t_expr("1 + t/10"), t_expr("2 + t/10"), box({-1, -1}, {1, 1}));
}

inline GeometryModel dini_flat() { return build_dini(t_expr("1"), t_expr("2"), box({-1, -1}, {1, 1})); }

/// N = 2 on a surface with non-constant betas.
inline GeometryModel levi_civita_2d() {
  LeviCivitaSpec s;
  s.blocks.push_back({{"x1"}, {{t_expr("1 + t*t/4")}}, t_expr("1 + t/5")});
  s.blocks.push_back({{"x2"}, {{t_expr("1")}}, t_expr("3 + sin(t)/4")});
  s.domain = box({-1, -1}, {1, 1});
  s.q0 = Vec::Zero(2);
  return build_levi_civita(s);
}

/// N = 2 on a 3-manifold: a two-dimensional block with constant beta and a one-dimensional block.
inline GeometryModel levi_civita_3d() {
  std::vector<std::string> ab{"a", "b"};
  LeviCivitaSpec s;
  s.blocks.push_back({{"x1", "x2"}, exprs({{"1 + a*a/10", "a*b/20"}, {"a*b/20", "1 + b*b/10"}}, ab), t_expr("1.5")});
  s.blocks.push_back({{"x3"}, {{t_expr("1")}}, t_expr("3 + t/4")});
  s.domain = box({-1, -1, -1}, {1, 1, 1});
  s.q0 = Vec::Zero(3);
  return build_levi_civita(s);
}

inline QuasiContactSpec quasi_contact_spec() {
  QuasiContactSpec s;
  s.k = 1;
  s.beta = t_expr("exp(t)");
  s.C1 = 1.0;
  s.C2 = 1.0;
  s.gbar = {{ScalarExpr::constant(1.0), ScalarExpr::constant(0.0)},
            {ScalarExpr::constant(0.0), ScalarExpr::constant(1.0)}};
  s.domain = box({-1, -1, -1, -1}, {1, 1, 1, 1});
  return s;
}

inline GeometryModel gendini1() { return build_gendini_case1(t_expr("1 - t"), t_expr("1 + t"), 0.1, 0.4); }

inline GeometryModel gendini2() { return build_gendini_case2(t_expr("1 + t*t"), 1.0, 1.0, 0.1, 0.4); }

}  // namespace fixtures
