#pragma once

// Charts, frames, distributions and metric pairs on them.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "geoequiv/errors.hpp"
#include "geoequiv/expr.hpp"

namespace geoequiv {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VectorField = std::vector<ScalarExpr>;
using ExprMatrix = std::vector<std::vector<ScalarExpr>>;

struct Annulus {
  std::size_t axis0 = 0, axis1 = 1;
  double cx = 0.0, cy = 0.0;
  double r_min = 0.0, r_max = 1.0;

  double radius(const Vec& q) const { return std::hypot(q[axis0] - cx, q[axis1] - cy); }
};

struct Domain {
  Vec min, max;
  std::optional<Annulus> annulus;

  bool contains(const Vec& q) const {
    for (Eigen::Index i = 0; i < q.size(); ++i)
      if (!(q[i] >= min[i] && q[i] <= max[i])) return false;
    if (annulus) {
      double r = annulus->radius(q);
      if (r < annulus->r_min || r > annulus->r_max) return false;
    }
    return true;
  }

  /// Same domain pulled inward by `margin` (a fraction of each extent).
  Domain shrunk(double margin) const {
    Domain d = *this;
    Vec w = max - min;
    d.min = min + margin * w;
    d.max = max - margin * w;
    if (annulus) {
      double dr = annulus->r_max - annulus->r_min;
      d.annulus->r_min += margin * dr;
      d.annulus->r_max -= margin * dr;
    }
    return d;
  }

  template <class Rng>
  Vec sample(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec q(min.size());
    for (int attempt = 0; attempt < 100000; ++attempt) {
      for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = min[i] + unit(rng) * (max[i] - min[i]);
      if (contains(q)) return q;
    }
    throw DomainError("domain has no sampleable interior");
  }
};

/// Frame fields 1..rank span the distribution D; gram1/gram2 are Gram matrices on that part.
struct GeometryModel {
  std::vector<std::string> coords;
  std::size_t rank = 0;
  std::vector<VectorField> frame;
  ExprMatrix gram1, gram2;
  Domain domain;

  std::size_t dim() const { return coords.size(); }
  const ExprMatrix& gram(int tag) const { return tag == 2 ? gram2 : gram1; }
};

inline Vec evaluate(const VectorField& f, const Vec& q) {
  Vec v(static_cast<Eigen::Index>(f.size()));
  std::span<const double> x(q.data(), static_cast<std::size_t>(q.size()));
  for (std::size_t i = 0; i < f.size(); ++i) v[static_cast<Eigen::Index>(i)] = f[i].evaluate(x);
  return v;
}

inline Mat evaluate(const ExprMatrix& m, const Vec& q) {
  std::span<const double> x(q.data(), static_cast<std::size_t>(q.size()));
  Mat out(static_cast<Eigen::Index>(m.size()), m.empty() ? 0 : static_cast<Eigen::Index>(m[0].size()));
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m[i].size(); ++j)
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j].evaluate(x);
  return out;
}

/// Directional derivative X(f) = sum_j X_j d_j f.
inline ScalarExpr apply(const VectorField& X, const ScalarExpr& f) {
  ScalarExpr out = ScalarExpr::constant(0.0);
  for (std::size_t j = 0; j < X.size(); ++j) {
    if (X[j].is_zero()) continue;
    out = out + X[j] * differentiate(f, j);
  }
  return out;
}

/// [X, Y]_k = sum_j (X_j d_j Y_k - Y_j d_j X_k).
inline VectorField lie_bracket(const VectorField& X, const VectorField& Y) {
  if (X.size() != Y.size()) throw ArgumentError("lie_bracket: dimension mismatch");
  VectorField out(X.size());
  for (std::size_t k = 0; k < X.size(); ++k) out[k] = apply(X, Y[k]) - apply(Y, X[k]);
  return out;
}

/// Matrix whose columns are the frame fields at q.
inline Mat frame_matrix(const GeometryModel& model, const Vec& q) {
  std::size_t n = model.dim();
  Mat F(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.frame.size()));
  for (std::size_t a = 0; a < model.frame.size(); ++a) F.col(static_cast<Eigen::Index>(a)) = evaluate(model.frame[a], q);
  return F;
}

// Symbolic determinant by cofactor expansion; fine for the small charts used here.
inline ScalarExpr determinant(const ExprMatrix& A) {
  std::size_t n = A.size();
  if (n == 0) return ScalarExpr::constant(1.0);
  if (n == 1) return A[0][0];
  if (n == 2) return A[0][0] * A[1][1] - A[0][1] * A[1][0];
  ScalarExpr det = ScalarExpr::constant(0.0);
  for (std::size_t c = 0; c < n; ++c) {
    if (A[0][c].is_zero()) continue;
    ExprMatrix minor;
    for (std::size_t r = 1; r < n; ++r) {
      std::vector<ScalarExpr> row;
      for (std::size_t k = 0; k < n; ++k)
        if (k != c) row.push_back(A[r][k]);
      minor.push_back(std::move(row));
    }
    ScalarExpr term = A[0][c] * determinant(minor);
    det = (c % 2 == 0) ? det + term : det - term;
  }
  return det;
}

// Pfaffian of an antisymmetric matrix (only the strict upper triangle is read).
inline ScalarExpr pfaffian(const ExprMatrix& A) {
  std::size_t n = A.size();
  if (n == 0) return ScalarExpr::constant(1.0);
  if (n % 2 == 1) return ScalarExpr::constant(0.0);
  ScalarExpr pf = ScalarExpr::constant(0.0);
  for (std::size_t j = 1; j < n; ++j) {
    if (A[0][j].is_zero()) continue;
    std::vector<std::size_t> keep;
    for (std::size_t k = 1; k < n; ++k)
      if (k != j) keep.push_back(k);
    ExprMatrix sub(keep.size(), std::vector<ScalarExpr>(keep.size()));
    for (std::size_t r = 0; r < keep.size(); ++r)
      for (std::size_t c = 0; c < keep.size(); ++c) sub[r][c] = A[keep[r]][keep[c]];
    ScalarExpr term = A[0][j] * pfaffian(sub);
    pf = (j % 2 == 1) ? pf + term : pf - term;
  }
  return pf;
}

/// Exact evaluator for frame and Gram entries and their first partial derivatives.
class ModelFunctions {
 public:
  struct Point {
    Mat F;                    // n x n, columns are frame fields
    std::vector<Mat> dF;      // dF[l] = d_l F
    Mat G1, G2;               // m x m
    std::vector<Mat> dG1, dG2;
  };

  explicit ModelFunctions(const GeometryModel& model) : n_(model.dim()), m_(model.rank) {
    if (model.frame.size() != n_) throw ArgumentError("frame must contain n fields");
    F_ = model.frame;
    G1_ = model.gram1;
    G2_ = model.gram2;
    dF_.resize(n_);
    dG1_.resize(n_);
    dG2_.resize(n_);
    for (std::size_t l = 0; l < n_; ++l) {
      dF_[l].resize(n_);
      for (std::size_t a = 0; a < n_; ++a) {
        dF_[l][a].resize(n_);
        for (std::size_t k = 0; k < n_; ++k) dF_[l][a][k] = differentiate(F_[a][k], l);
      }
      dG1_[l] = derivative(G1_, l);
      dG2_[l] = derivative(G2_, l);
    }
  }

  std::size_t dim() const { return n_; }
  std::size_t rank() const { return m_; }

  Point at(const Vec& q, bool derivatives = true) const {
    Point P;
    P.F = fields(F_, q);
    P.G1 = evaluate(G1_, q);
    P.G2 = evaluate(G2_, q);
    if (derivatives) {
      P.dF.resize(n_);
      P.dG1.resize(n_);
      P.dG2.resize(n_);
      for (std::size_t l = 0; l < n_; ++l) {
        P.dF[l] = fields(dF_[l], q);
        P.dG1[l] = evaluate(dG1_[l], q);
        P.dG2[l] = evaluate(dG2_[l], q);
      }
    }
    return P;
  }

  /// D-part of the frame, one Gram matrix and their derivatives; what the geodesic flow needs.
  void metric_at(const Vec& q, int tag, Mat& FD, std::vector<Mat>& dFD, Mat& G, std::vector<Mat>& dG) const {
    std::span<const double> x(q.data(), static_cast<std::size_t>(q.size()));
    auto n = static_cast<Eigen::Index>(n_);
    auto m = static_cast<Eigen::Index>(m_);
    FD.resize(n, m);
    for (std::size_t a = 0; a < m_; ++a)
      for (std::size_t k = 0; k < n_; ++k) FD(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = F_[a][k].evaluate(x);
    dFD.resize(n_);
    dG.resize(n_);
    const auto& Gs = tag == 2 ? G2_ : G1_;
    const auto& dGs = tag == 2 ? dG2_ : dG1_;
    G = evaluate(Gs, q);
    for (std::size_t l = 0; l < n_; ++l) {
      dFD[l].resize(n, m);
      for (std::size_t a = 0; a < m_; ++a)
        for (std::size_t k = 0; k < n_; ++k)
          dFD[l](static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = dF_[l][a][k].evaluate(x);
      dG[l] = evaluate(dGs[l], q);
    }
  }

  Mat gram(const Vec& q, int tag) const { return evaluate(tag == 2 ? G2_ : G1_, q); }
  Mat frame(const Vec& q) const { return fields(F_, q); }

 private:
  static ExprMatrix derivative(const ExprMatrix& G, std::size_t l) {
    ExprMatrix out(G.size());
    for (std::size_t i = 0; i < G.size(); ++i) {
      out[i].resize(G[i].size());
      for (std::size_t j = 0; j < G[i].size(); ++j) out[i][j] = differentiate(G[i][j], l);
    }
    return out;
  }

  Mat fields(const std::vector<VectorField>& F, const Vec& q) const {
    std::span<const double> x(q.data(), static_cast<std::size_t>(q.size()));
    Mat out(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(F.size()));
    for (std::size_t a = 0; a < F.size(); ++a)
      for (std::size_t k = 0; k < n_; ++k)
        out(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(a)) = F[a][k].evaluate(x);
    return out;
  }

  std::size_t n_, m_;
  std::vector<VectorField> F_;
  std::vector<std::vector<VectorField>> dF_;
  ExprMatrix G1_, G2_;
  std::vector<ExprMatrix> dG1_, dG2_;
};

/// c(j, i, k) with [X_i, X_j] = sum_k c(j, i, k) X_k; indices are zero-based.
class StructureTensor {
 public:
  explicit StructureTensor(std::size_t n = 0) : n_(n), c_(n * n * n, 0.0) {}
  double& operator()(std::size_t j, std::size_t i, std::size_t k) { return c_[(j * n_ + i) * n_ + k]; }
  double operator()(std::size_t j, std::size_t i, std::size_t k) const { return c_[(j * n_ + i) * n_ + k]; }
  std::size_t dim() const { return n_; }

 private:
  std::size_t n_;
  std::vector<double> c_;
};

/// Structure functions of the model frame, evaluable at points.
class StructureFunctions {
 public:
  explicit StructureFunctions(const GeometryModel& model) : model_(&model) {
    std::size_t n = model.dim();
    brackets_.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) brackets_[i * n + j] = lie_bracket(model.frame[i], model.frame[j]);
  }

  StructureTensor at(const Vec& q) const {
    std::size_t n = model_->dim();
    Mat F = frame_matrix(*model_, q);
    Eigen::FullPivLU<Mat> lu(F);
    if (!lu.isInvertible() || std::abs(lu.determinant()) < 1e-14 * std::max(1.0, F.norm()))
      throw NumericError("singular frame at query point");
    StructureTensor c(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        Vec coeff = lu.solve(evaluate(brackets_[i * n + j], q));
        for (std::size_t k = 0; k < n; ++k) {
          c(j, i, k) = coeff[static_cast<Eigen::Index>(k)];
          c(i, j, k) = -coeff[static_cast<Eigen::Index>(k)];
        }
      }
    return c;
  }

  const VectorField& bracket(std::size_t i, std::size_t j) const { return brackets_[i * model_->dim() + j]; }

 private:
  const GeometryModel* model_;
  std::vector<VectorField> brackets_;
};

struct ProbeOptions {
  std::size_t max_grid = 625;
  std::size_t random_points = 50;
  std::uint64_t seed = 0;
  double tol = 1e-10;
};

/// Regular grid (at most 5 per axis, at most max_grid total) plus seeded random points, all inside the domain.
inline std::vector<Vec> probe_points(const Domain& domain, const ProbeOptions& opt = {}) {
  std::size_t n = static_cast<std::size_t>(domain.min.size());
  std::size_t per_axis = 5;
  auto total = [&](std::size_t k) {
    std::size_t t = 1;
    for (std::size_t i = 0; i < n; ++i) t *= k;
    return t;
  };
  while (per_axis > 1 && total(per_axis) > opt.max_grid) --per_axis;
  std::vector<Vec> pts;
  std::vector<std::size_t> idx(n, 0);
  std::size_t count = total(per_axis);
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t r = c;
    Vec q(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t k = r % per_axis;
      r /= per_axis;
      auto ii = static_cast<Eigen::Index>(i);
      double t = per_axis == 1 ? 0.5 : static_cast<double>(k) / static_cast<double>(per_axis - 1);
      q[ii] = domain.min[ii] + t * (domain.max[ii] - domain.min[ii]);
    }
    if (domain.contains(q)) pts.push_back(q);
  }
  std::mt19937_64 rng(opt.seed);
  for (std::size_t i = 0; i < opt.random_points; ++i) pts.push_back(domain.sample(rng));
  return pts;
}

/// G1-orthonormal D-frame at q: columns of F_D L^{-T} with G1 = L L^T.
inline Mat orthonormal_frame(const Mat& FD, const Mat& G) {
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw NumericError("Gram matrix is not positive definite");
  Mat Lt = llt.matrixL().transpose();
  return Lt.triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(FD);
}

/// Evaluable G-orthonormal frame of D for one of the two metrics.
class Orthonormalizer {
 public:
  Orthonormalizer(const GeometryModel& model, int tag = 1) : model_(&model), tag_(tag) {}
  Mat at(const Vec& q) const {
    Mat F = frame_matrix(*model_, q);
    Mat G = evaluate(model_->gram(tag_), q);
    return orthonormal_frame(F.leftCols(static_cast<Eigen::Index>(model_->rank)), G);
  }

 private:
  const GeometryModel* model_;
  int tag_;
};

inline Orthonormalizer orthonormalize(const GeometryModel& model, int tag = 1) { return Orthonormalizer(model, tag); }

enum class DistributionTag { Full, Contact, QuasiContact, Other };

inline const char* to_string(DistributionTag t) {
  switch (t) {
    case DistributionTag::Full:
      return "full";
    case DistributionTag::Contact:
      return "contact";
    case DistributionTag::QuasiContact:
      return "quasi-contact";
    default:
      return "other";
  }
}

struct DistributionType {
  DistributionTag tag = DistributionTag::Other;
  VectorField abnormal;  // kernel of d omega restricted to D, for quasi-contact
  ExprMatrix curvature;  // d omega(F_a, F_b) on the D-frame
  std::string diagnostic;
};

namespace detail {

// Annihilator of D up to a nonvanishing factor: cofactors of the last frame column.
inline VectorField annihilator(const GeometryModel& model) {
  std::size_t n = model.dim();
  ExprMatrix A(n, std::vector<ScalarExpr>(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t k = 0; k < n; ++k) A[k][a] = model.frame[a][k];
  VectorField omega(n);
  std::size_t col = n - 1;
  for (std::size_t k = 0; k < n; ++k) {
    ExprMatrix minor;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == k) continue;
      std::vector<ScalarExpr> row;
      for (std::size_t c = 0; c < n; ++c)
        if (c != col) row.push_back(A[r][c]);
      minor.push_back(std::move(row));
    }
    ScalarExpr cof = determinant(minor);
    omega[k] = ((k + col) % 2 == 0) ? cof : -cof;
  }
  return omega;
}

inline ScalarExpr pair(const VectorField& omega, const VectorField& X) {
  ScalarExpr s = ScalarExpr::constant(0.0);
  for (std::size_t k = 0; k < X.size(); ++k) s = s + omega[k] * X[k];
  return s;
}

inline int numeric_rank(const Mat& A, double tol) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Mat> svd(A);
  const auto& s = svd.singularValues();
  double scale = std::max(s[0], 1e-300);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > tol * std::max(1.0, scale)) ++r;
  return r;
}

}  // namespace detail

/// Contact / quasi-contact / full typing from the rank of d omega on D over the probe grid.
inline DistributionType classify_distribution(const GeometryModel& model, const ProbeOptions& opt = {}) {
  std::size_t n = model.dim(), m = model.rank;
  DistributionType out;
  if (m == n) {
    out.tag = DistributionTag::Full;
    return out;
  }
  if (m + 1 != n) {
    out.tag = DistributionTag::Other;
    out.diagnostic = "corank greater than 1";
    return out;
  }
  VectorField omega = detail::annihilator(model);
  out.curvature.assign(m, std::vector<ScalarExpr>(m));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      ScalarExpr v = -detail::pair(omega, lie_bracket(model.frame[a], model.frame[b]));
      out.curvature[a][b] = v;
      out.curvature[b][a] = -v;
    }
  std::vector<int> ranks;
  for (const Vec& q : probe_points(model.domain, opt)) {
    Mat W = evaluate(out.curvature, q);
    double scale = evaluate(omega, q).norm() * std::max(1.0, frame_matrix(model, q).norm());
    ranks.push_back(detail::numeric_rank(W / std::max(scale, 1e-300), 1e-8));
  }
  int lo = *std::min_element(ranks.begin(), ranks.end());
  int hi = *std::max_element(ranks.begin(), ranks.end());
  if (lo != hi) {
    out.tag = DistributionTag::Other;
    out.diagnostic = "rank of d omega on D varies over the probe grid (" + std::to_string(lo) + ".." +
                     std::to_string(hi) + ")";
    return out;
  }
  auto mi = static_cast<int>(m);
  if (n % 2 == 1 && lo == mi) {
    out.tag = DistributionTag::Contact;
  } else if (n % 2 == 0 && lo == mi - 1) {
    out.tag = DistributionTag::QuasiContact;
    // kernel coefficients are signed Pfaffians of the principal minors
    VectorField coeff(m);
    for (std::size_t a = 0; a < m; ++a) {
      ExprMatrix sub;
      for (std::size_t r = 0; r < m; ++r) {
        if (r == a) continue;
        std::vector<ScalarExpr> row;
        for (std::size_t c = 0; c < m; ++c)
          if (c != a) row.push_back(r == c ? ScalarExpr::constant(0.0) : out.curvature[r][c]);
        sub.push_back(std::move(row));
      }
      ScalarExpr pf = pfaffian(sub);
      coeff[a] = (a % 2 == 0) ? pf : -pf;
    }
    out.abnormal.assign(n, ScalarExpr::constant(0.0));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t k = 0; k < n; ++k) out.abnormal[k] = out.abnormal[k] + coeff[a] * model.frame[a][k];
  } else {
    out.tag = DistributionTag::Other;
    out.diagnostic = "rank of d omega on D is " + std::to_string(lo);
  }
  return out;
}

/// Checks frame independence and Gram positivity on the probe grid; throws ModelError.
inline void validate_model(const GeometryModel& model, const ProbeOptions& opt = {}) {
  std::size_t n = model.dim(), m = model.rank;
  if (n == 0) throw ModelError("coords", "must be non-empty");
  if (m == 0 || m > n) throw ModelError("rank", "must satisfy 1 <= rank <= n");
  if (model.frame.size() != n) throw ModelError("frame", "must contain n fields");
  for (std::size_t a = 0; a < n; ++a)
    if (model.frame[a].size() != n) throw ModelError("frame[" + std::to_string(a) + "]", "must have n components");
  for (const char* name : {"gram1", "gram2"}) {
    const ExprMatrix& G = std::string(name) == "gram1" ? model.gram1 : model.gram2;
    if (G.size() != m) throw ModelError(name, "must be rank x rank");
    for (std::size_t i = 0; i < m; ++i)
      if (G[i].size() != m) throw ModelError(std::string(name) + "[" + std::to_string(i) + "]", "must have rank entries");
  }
  if (model.domain.min.size() != static_cast<Eigen::Index>(n) || model.domain.max.size() != static_cast<Eigen::Index>(n))
    throw ModelError("domain", "min and max must have n entries");
  for (std::size_t i = 0; i < n; ++i)
    if (!(model.domain.min[static_cast<Eigen::Index>(i)] < model.domain.max[static_cast<Eigen::Index>(i)]))
      throw ModelError("domain.min[" + std::to_string(i) + "]", "must be below domain.max");
  for (const Vec& q : probe_points(model.domain, opt)) {
    std::string at = " at q = (";
    for (Eigen::Index i = 0; i < q.size(); ++i) at += (i ? ", " : "") + detail::format_number(q[i]);
    at += ")";
    Mat F;
    try {
      F = frame_matrix(model, q);
    } catch (const DomainError& e) {
      throw ModelError("frame", std::string(e.what()) + at);
    }
    Eigen::JacobiSVD<Mat> svd(F);
    const auto& s = svd.singularValues();
    if (s[s.size() - 1] < 1e-10 * std::max(1.0, s[0])) throw ModelError("frame", "fields are linearly dependent" + at);
    for (int tag : {1, 2}) {
      std::string name = tag == 1 ? "gram1" : "gram2";
      Mat G;
      try {
        G = evaluate(model.gram(tag), q);
      } catch (const DomainError& e) {
        throw ModelError(name, std::string(e.what()) + at);
      }
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) {
          auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
          if (std::abs(G(ii, jj) - G(jj, ii)) > 1e-10 * std::max(1.0, G.norm()))
            throw ModelError(name + "[" + std::to_string(i) + "][" + std::to_string(j) + "]", "not symmetric" + at);
        }
      Eigen::LLT<Mat> llt(G);
      if (llt.info() != Eigen::Success) throw ModelError(name, "not positive definite" + at);
    }
  }
}

}  // namespace geoequiv
