#pragma once

// Geodesically equivalent metric pairs in normal form.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "geoequiv/errors.hpp"
#include "geoequiv/expr.hpp"
#include "geoequiv/geometry.hpp"

namespace geoequiv {

namespace detail {

inline ScalarExpr c(double v) { return ScalarExpr::constant(v); }
inline ScalarExpr x(std::size_t i) { return ScalarExpr::coordinate(i); }

inline std::vector<VectorField> coordinate_frame(std::size_t n) {
  std::vector<VectorField> F(n, VectorField(n, c(0.0)));
  for (std::size_t i = 0; i < n; ++i) F[i][i] = c(1.0);
  return F;
}

inline ExprMatrix zeros(std::size_t n) { return ExprMatrix(n, std::vector<ScalarExpr>(n, c(0.0))); }

// Re-indexes an expression written in its own block coordinates into the chart.
inline ScalarExpr lift(const ScalarExpr& e, std::size_t offset, std::size_t count) {
  std::vector<ScalarExpr> repl;
  for (std::size_t i = 0; i < count; ++i) repl.push_back(x(offset + i));
  return substitute(e, repl);
}

inline double eval_at(const ScalarExpr& e, const Vec& q) {
  return e.evaluate(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())));
}

template <class F>
void for_grid(const Domain& d, F&& f) {
  ProbeOptions opt;
  opt.random_points = 20;
  for (const Vec& q : probe_points(d, opt)) f(q);
}

}  // namespace detail

struct LeviCivitaBlock {
  std::vector<std::string> coords;
  ExprMatrix g;     // Riemannian metric on the block, in block coordinates
  ScalarExpr beta;  // function of the block coordinates, constant when the block has dimension > 1
};

struct LeviCivitaSpec {
  std::vector<LeviCivitaBlock> blocks;
  Domain domain;
  Vec q0;
};

/// Product-coordinate pair G1 = sum gamma_s g_s, G2 = sum lambda_s gamma_s g_s with
/// lambda_s = beta_s prod_l beta_l and gamma_s = prod_{l != s} |1/beta_l - 1/beta_s|.
inline GeometryModel build_levi_civita(const LeviCivitaSpec& spec) {
  std::size_t N = spec.blocks.size();
  if (N < 1) throw ArgumentError("at least one block is required");
  GeometryModel m;
  std::vector<std::size_t> offset;
  std::vector<ScalarExpr> beta;
  for (std::size_t s = 0; s < N; ++s) {
    const auto& b = spec.blocks[s];
    std::size_t k = b.coords.size();
    if (k == 0) throw ArgumentError("block " + std::to_string(s) + " has no coordinates");
    if (b.g.size() != k) throw ArgumentError("block " + std::to_string(s) + ": metric size mismatch");
    if (k > 1 && !b.beta.is_constant())
      throw ArgumentError("block " + std::to_string(s) + ": beta must be constant on a block of dimension > 1");
    offset.push_back(m.coords.size());
    for (const auto& name : b.coords) m.coords.push_back(name);
    beta.push_back(detail::lift(b.beta, offset.back(), k));
  }
  std::size_t n = m.coords.size();
  if (spec.q0.size() != static_cast<Eigen::Index>(n)) throw ArgumentError("q0 must have n components");
  for (std::size_t s = 0; s < N; ++s)
    for (std::size_t l = s + 1; l < N; ++l) {
      double bs = detail::eval_at(beta[s], spec.q0), bl = detail::eval_at(beta[l], spec.q0);
      if (std::abs(bs - bl) <= 1e-12 * std::max(std::abs(bs), std::abs(bl)))
        throw ArgumentError("beta values of blocks " + std::to_string(s) + " and " + std::to_string(l) +
                            " coincide at q0");
    }
  m.rank = n;
  m.frame = detail::coordinate_frame(n);
  m.domain = spec.domain;
  ScalarExpr prod = detail::c(1.0);
  for (const auto& b : beta) prod = prod * b;
  m.gram1 = detail::zeros(n);
  m.gram2 = detail::zeros(n);
  for (std::size_t s = 0; s < N; ++s) {
    ScalarExpr gamma = detail::c(1.0);
    for (std::size_t l = 0; l < N; ++l)
      if (l != s) gamma = gamma * abs(1.0 / beta[l] - 1.0 / beta[s]);
    ScalarExpr lambda = beta[s] * prod;
    std::size_t k = spec.blocks[s].coords.size();
    for (std::size_t a = 0; a < k; ++a)
      for (std::size_t b = 0; b < k; ++b) {
        ScalarExpr g = detail::lift(spec.blocks[s].g[a][b], offset[s], k);
        m.gram1[offset[s] + a][offset[s] + b] = gamma * g;
        m.gram2[offset[s] + a][offset[s] + b] = lambda * gamma * g;
      }
  }
  detail::for_grid(m.domain, [&](const Vec& q) {
    for (std::size_t s = 0; s < N; ++s)
      if (!(detail::eval_at(beta[s], q) > 0.0)) throw ArgumentError("beta must be positive on the domain");
    for (std::size_t s = 0; s < N; ++s)
      for (std::size_t l = s + 1; l < N; ++l)
        if (detail::eval_at(beta[s], q) == detail::eval_at(beta[l], q))
          throw ArgumentError("beta values collide inside the domain");
  });
  return m;
}

/// Surface pair (1/b1 - 1/b2)(dx1^2 + dx2^2) and b1 b2 (1/b1 - 1/b2)(b1 dx1^2 + b2 dx2^2),
/// b1 a function of x1 and b2 a function of x2 (each written over the single coordinate of its own).
inline GeometryModel build_dini(const ScalarExpr& beta1, const ScalarExpr& beta2, const Domain& domain,
                                std::vector<std::string> coords = {"x1", "x2"}) {
  if (coords.size() != 2) throw ArgumentError("Dini pairs live on surfaces");
  ScalarExpr b1 = detail::lift(beta1, 0, 1), b2 = detail::lift(beta2, 1, 1);
  GeometryModel m;
  m.coords = coords;
  m.rank = 2;
  m.frame = detail::coordinate_frame(2);
  m.domain = domain;
  ScalarExpr f = 1.0 / b1 - 1.0 / b2;
  m.gram1 = {{f, detail::c(0.0)}, {detail::c(0.0), f}};
  m.gram2 = {{b1 * b2 * f * b1, detail::c(0.0)}, {detail::c(0.0), b1 * b2 * f * b2}};
  detail::for_grid(domain, [&](const Vec& q) {
    double v1 = detail::eval_at(b1, q), v2 = detail::eval_at(b2, q);
    if (!(v1 > 0.0 && v2 > 0.0)) throw ArgumentError("beta1 and beta2 must be positive on the domain");
    if (!(v1 < v2)) throw ArgumentError("beta1 < beta2 must hold on the domain");
  });
  return m;
}

namespace detail {

inline double eval1(const ScalarExpr& e, double t) { return e.evaluate(std::vector<double>{t}); }

inline double derivative1(const ScalarExpr& e, double t) { return eval1(differentiate(e, 0), t); }

inline Domain annulus_domain(double r_min, double r_max) {
  if (!(r_min > 0.0 && r_min < r_max)) throw ArgumentError("need 0 < r_min < r_max");
  Domain d;
  d.min = Vec::Constant(2, -r_max);
  d.max = Vec::Constant(2, r_max);
  Annulus a;
  a.r_min = r_min;
  a.r_max = r_max;
  d.annulus = a;
  return d;
}

}  // namespace detail

/// Generalized Dini pair with an isolated proportionality point, first kind, in Cartesian
/// coordinates on an annulus around the origin. U and V are functions of one variable.
inline GeometryModel build_gendini_case1(const ScalarExpr& U, const ScalarExpr& V, double r_min, double r_max) {
  double U0 = detail::eval1(U, 0.0), V0 = detail::eval1(V, 0.0);
  if (std::abs(U0 - V0) > 1e-12 * std::max(1.0, std::abs(U0))) throw ArgumentError("U(0) must equal V(0)");
  double dU = detail::derivative1(U, 0.0), dV = detail::derivative1(V, 0.0);
  if (std::abs(dU + dV) > 1e-12 * std::max(1.0, std::abs(dV))) throw ArgumentError("U'(0) must equal -V'(0)");
  if (!(dV > 0.0)) throw ArgumentError("V'(0) must be positive");
  for (int i = 1; i <= 200; ++i) {
    double t = r_max * i / 200.0;
    double u = detail::eval1(U, t), v = detail::eval1(V, t);
    if (!(u > 0.0 && u < U0)) throw ArgumentError("0 < U(u) < U(0) must hold for 0 < u <= r_max");
    if (!(v > V0)) throw ArgumentError("V(v) > V(0) must hold for 0 < v <= r_max");
  }
  using detail::c;
  ScalarExpr X = detail::x(0), Y = detail::x(1);
  ScalarExpr r = sqrt(X * X + Y * Y);
  // r cos^2(theta/2) = (r + x)/2 and r sin^2(theta/2) = (r - x)/2
  ScalarExpr Uq = substitute(U, std::vector<ScalarExpr>{(r + X) / 2.0});
  ScalarExpr Vq = substitute(V, std::vector<ScalarExpr>{(r - X) / 2.0});
  ScalarExpr A = Uq + Vq, S = Vq - Uq;
  ScalarExpr f1 = (1.0 / Uq - 1.0 / Vq) / (4.0 * r);
  ScalarExpr k = S / (8.0 * r);
  GeometryModel m;
  m.coords = {"x", "y"};
  m.rank = 2;
  m.frame = detail::coordinate_frame(2);
  m.domain = detail::annulus_domain(r_min, r_max);
  m.gram1 = {{f1, c(0.0)}, {c(0.0), f1}};
  ScalarExpr off = -(k * S * Y / r);
  m.gram2 = {{k * (A - S * X / r), off}, {off, k * (A + S * X / r)}};
  return m;
}

/// Generalized Dini pair, second kind: R a function of r with R(0) = C, R'(0) = 0, R''(0) != 0.
inline GeometryModel build_gendini_case2(const ScalarExpr& R, double a, double C, double r_min, double r_max) {
  if (!(a > 0.0 && C > 0.0)) throw ArgumentError("a and C must be positive");
  if (std::abs(detail::eval1(R, 0.0) - C) > 1e-12 * C) throw ArgumentError("R(0) must equal C");
  if (std::abs(detail::derivative1(R, 0.0)) > 1e-12) throw ArgumentError("R'(0) must vanish");
  if (std::abs(detail::eval1(differentiate(differentiate(R, 0), 0), 0.0)) < 1e-12)
    throw ArgumentError("R''(0) must be nonzero");
  for (int i = 1; i <= 200; ++i) {
    double t = r_max * i / 200.0;
    if (detail::eval1(R, t) == C) throw ArgumentError("R(r) must differ from C for r > 0");
  }
  using detail::c;
  ScalarExpr X = detail::x(0), Y = detail::x(1);
  ScalarExpr r2 = X * X + Y * Y;
  ScalarExpr Rq = substitute(R, std::vector<ScalarExpr>{sqrt(r2)});
  ScalarExpr f1 = abs(1.0 / C - 1.0 / Rq) * a / r2;
  ScalarExpr f2 = a * C * Rq / r2 * abs(1.0 / C - 1.0 / Rq);
  // R dr^2 + C r^2 dtheta^2 = C (dx^2 + dy^2) + (R - C)/r^2 (x dx + y dy)^2
  ScalarExpr t = (Rq - C) / r2;
  GeometryModel m;
  m.coords = {"x", "y"};
  m.rank = 2;
  m.frame = detail::coordinate_frame(2);
  m.domain = detail::annulus_domain(r_min, r_max);
  m.gram1 = {{f1, c(0.0)}, {c(0.0), f1}};
  m.gram2 = {{f2 * (C + t * X * X), f2 * t * X * Y}, {f2 * t * X * Y, f2 * (C + t * Y * Y)}};
  return m;
}

struct QuasiContactSpec {
  std::size_t k = 1;            // contact hypersurface of dimension 2k+1
  ScalarExpr beta;              // function of one variable t, beta(0) = 1
  double C1 = 1.0, C2 = 1.0;    // C1 > 0, C2 > -1, C2 != 0
  ExprMatrix gbar;              // 2k x 2k Gram on the contact frame, in coordinates (x.., y.., z)
  Domain domain;                // over (x.., y.., z, w)
};

/// Pair on the quasi-contact distribution ker(dz - sum x_i dy_i) in coordinates (x.., y.., z, w),
/// abnormal field X = d/dw, leaves w = const. Frame: d/dx_i, d/dy_i + x_i d/dz, d/dw, then d/dz.
inline GeometryModel build_quasi_contact(const QuasiContactSpec& spec) {
  std::size_t k = spec.k, n = 2 * k + 2, m = 2 * k + 1;
  if (k < 1) throw ArgumentError("k must be at least 1");
  if (!(spec.C1 > 0.0)) throw ArgumentError("C1 must be positive");
  if (!(spec.C2 > -1.0)) throw ArgumentError("C2 must exceed -1");
  if (spec.C2 == 0.0) throw ArgumentError("C2 = 0 gives a constantly proportional pair");
  if (std::abs(detail::eval1(spec.beta, 0.0) - 1.0) > 1e-12) throw ArgumentError("beta(0) must equal 1");
  if (spec.gbar.size() != 2 * k) throw ArgumentError("gbar must be 2k x 2k");
  if (spec.domain.min.size() != static_cast<Eigen::Index>(n)) throw ArgumentError("domain must have 2k+2 coordinates");
  using detail::c;
  GeometryModel mdl;
  for (std::size_t i = 1; i <= k; ++i) mdl.coords.push_back(k == 1 ? "x" : "x" + std::to_string(i));
  for (std::size_t i = 1; i <= k; ++i) mdl.coords.push_back(k == 1 ? "y" : "y" + std::to_string(i));
  mdl.coords.push_back("z");
  mdl.coords.push_back("w");
  mdl.rank = m;
  std::size_t iz = 2 * k, iw = 2 * k + 1;
  mdl.frame.assign(n, VectorField(n, c(0.0)));
  for (std::size_t i = 0; i < k; ++i) {
    mdl.frame[i][i] = c(1.0);
    mdl.frame[k + i][k + i] = c(1.0);
    mdl.frame[k + i][iz] = detail::x(i);
  }
  mdl.frame[2 * k][iw] = c(1.0);
  mdl.frame[2 * k + 1][iz] = c(1.0);
  mdl.domain = spec.domain;

  ScalarExpr beta = substitute(spec.beta, std::vector<ScalarExpr>{detail::x(iw)});
  ScalarExpr ratio = spec.C1 / (1.0 + spec.C2 * beta);
  mdl.gram1 = detail::zeros(m);
  mdl.gram2 = detail::zeros(m);
  for (std::size_t a = 0; a < 2 * k; ++a)
    for (std::size_t b = 0; b < 2 * k; ++b) {
      // gbar is written over (x.., y.., z); the chart appends w, which it must not depend on
      if (spec.gbar[a].size() != 2 * k) throw ArgumentError("gbar must be 2k x 2k");
      if (spec.gbar[a][b].arity() > 2 * k + 1) throw ArgumentError("gbar may depend on x, y, z only");
      mdl.gram1[a][b] = beta * spec.gbar[a][b];
      mdl.gram2[a][b] = ratio * beta * spec.gbar[a][b];
    }
  mdl.gram1[2 * k][2 * k] = c(1.0);
  mdl.gram2[2 * k][2 * k] = ratio * ratio / spec.C1;
  detail::for_grid(mdl.domain, [&](const Vec& q) {
    double b = detail::eval_at(beta, q);
    if (!(b > 0.0)) throw ArgumentError("beta must be positive on the domain");
    if (!(1.0 + spec.C2 * b > 0.0)) throw ArgumentError("1 + C2 beta must be positive on the domain");
  });
  return mdl;
}

/// Euclidean plane z = 1 and the round metric pulled back by central projection onto the unit sphere.
inline GeometryModel build_beltrami(double half_width = 1.0) {
  using detail::c;
  ScalarExpr X = detail::x(0), Y = detail::x(1);
  ScalarExpr rho = sqrt(1.0 + X * X + Y * Y);
  VectorField F{X / rho, Y / rho, 1.0 / rho};
  GeometryModel m;
  m.coords = {"x", "y"};
  m.rank = 2;
  m.frame = detail::coordinate_frame(2);
  m.domain.min = Vec::Constant(2, -half_width);
  m.domain.max = Vec::Constant(2, half_width);
  m.gram1 = {{c(1.0), c(0.0)}, {c(0.0), c(1.0)}};
  m.gram2 = detail::zeros(2);
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 2; ++b) {
      ScalarExpr s = c(0.0);
      for (const auto& comp : F) s = s + differentiate(comp, a) * differentiate(comp, b);
      m.gram2[a][b] = s;
    }
  return m;
}

/// Residuals of the structural conditions satisfied by the quasi-contact normal form.
struct QuasiContactCheck {
  double orthogonal_complements = 0.0;  // D1 = D2: G2(X, Y) for Y in the G1-complement of X in D
  double closure = 0.0;                 // D1^2 closed under brackets
  double flow_invariance = 0.0;         // [X, D1^2] inside D1^2
  double leaf_tangency = 0.0;           // dw vanishes on D1^2
  double g2_on_leaf = 0.0;              // G2|D1 - C1/(1 + C2 beta) G1|D1
  double g2_abnormal = 0.0;             // G2(X, X) - C1/(1 + C2 beta)^2
  double max() const {
    return std::max({orthogonal_complements, closure, flow_invariance, leaf_tangency, g2_on_leaf, g2_abnormal});
  }
};

inline QuasiContactCheck check_quasi_contact(const GeometryModel& mdl, const QuasiContactSpec& spec,
                                             const ProbeOptions& opt = {}) {
  std::size_t n = mdl.dim(), m = mdl.rank, iw = n - 1, ix = m - 1;  // X is the last D-field
  std::size_t d1 = m - 1;
  // D1 fields: G1-projections of the other D-fields off X
  std::vector<VectorField> Y(d1, VectorField(n));
  for (std::size_t a = 0; a < d1; ++a) {
    ScalarExpr coef = mdl.gram1[ix][a] / mdl.gram1[ix][ix];
    for (std::size_t k = 0; k < n; ++k) Y[a][k] = mdl.frame[a][k] - coef * mdl.frame[ix][k];
  }
  const VectorField& Xf = mdl.frame[ix];
  std::vector<VectorField> span = Y;
  std::vector<VectorField> first;
  for (std::size_t a = 0; a < d1; ++a)
    for (std::size_t b = a + 1; b < d1; ++b) first.push_back(lie_bracket(Y[a], Y[b]));
  std::vector<VectorField> second, along_x;
  for (const auto& f : first)
    for (std::size_t a = 0; a < d1; ++a) second.push_back(lie_bracket(Y[a], f));
  for (std::size_t a = 0; a < d1; ++a) along_x.push_back(lie_bracket(Xf, Y[a]));
  for (const auto& f : first) along_x.push_back(lie_bracket(Xf, f));
  ScalarExpr beta = substitute(spec.beta, std::vector<ScalarExpr>{ScalarExpr::coordinate(iw)});

  QuasiContactCheck out;
  for (const Vec& q : probe_points(mdl.domain, opt)) {
    Mat basis(static_cast<Eigen::Index>(n), 0);
    auto append = [&](const Vec& v) {
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v;
    };
    for (const auto& y : Y) append(evaluate(y, q));
    for (const auto& f : first) append(evaluate(f, q));
    // orthonormal basis of D1^2 (rank n-1 expected)
    Eigen::JacobiSVD<Mat> svd(basis, Eigen::ComputeThinU);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()[i] > 1e-9 * svd.singularValues()[0]) ++r;
    Mat U = svd.matrixU().leftCols(r);
    auto off_span = [&](const Vec& v) { return (v - U * (U.transpose() * v)).norm() / std::max(1.0, v.norm()); };
    for (const auto& f : second) out.closure = std::max(out.closure, off_span(evaluate(f, q)));
    if (r != static_cast<int>(n) - 1) out.closure = std::max(out.closure, 1.0);
    for (const auto& f : along_x) out.flow_invariance = std::max(out.flow_invariance, off_span(evaluate(f, q)));
    for (Eigen::Index c = 0; c < basis.cols(); ++c)
      out.leaf_tangency = std::max(out.leaf_tangency, std::abs(basis(static_cast<Eigen::Index>(iw), c)));

    Mat F = frame_matrix(mdl, q);
    Mat G1 = evaluate(mdl.gram1, q), G2 = evaluate(mdl.gram2, q);
    // coefficients of Y_a in the D-frame
    Mat Ycoef = Mat::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d1));
    for (std::size_t a = 0; a < d1; ++a)
      Ycoef(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(a)) =
          -G1(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(a)) / G1(static_cast<Eigen::Index>(ix), static_cast<Eigen::Index>(ix));
    Vec e = Vec::Zero(static_cast<Eigen::Index>(m));
    e[static_cast<Eigen::Index>(ix)] = 1.0;
    Vec cross = Ycoef.transpose() * G2 * e;
    out.orthogonal_complements = std::max(out.orthogonal_complements, cross.cwiseAbs().maxCoeff());
    double b = detail::eval_at(beta, q);
    double ratio = spec.C1 / (1.0 + spec.C2 * b);
    Mat on_leaf = Ycoef.transpose() * (G2 - ratio * G1) * Ycoef;
    out.g2_on_leaf = std::max(out.g2_on_leaf, on_leaf.cwiseAbs().maxCoeff());
    double xx2 = e.dot(G2 * e) / e.dot(G1 * e);  // X has unit G1 length
    out.g2_abnormal = std::max(out.g2_abnormal, std::abs(xx2 - ratio * ratio / spec.C1));
    (void)F;
  }
  return out;
}

}  // namespace geoequiv
