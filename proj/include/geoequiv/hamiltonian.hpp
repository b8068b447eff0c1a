#pragma once

// Normal extremals: h = 1/2 |p restricted to D|^2 integrated in canonical coordinates.

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "geoequiv/errors.hpp"
#include "geoequiv/geometry.hpp"
#include "geoequiv/ode.hpp"

namespace geoequiv {

struct CovectorPoint {
  Vec q;
  Vec p;
};

struct Trajectory {
  std::vector<CovectorPoint> samples;
  std::vector<double> times;
  std::vector<double> h_values;
  std::vector<Vec> velocities;  // dq/dt at each sample, for dense output
  std::vector<double> scale;    // integral of a along the flow, when requested
  int metric_tag = 1;
  bool clipped = false;

  /// Cubic Hermite position between samples i and i+1 at local parameter u in [0, 1].
  Vec position(std::size_t i, double u) const {
    double h = times[i + 1] - times[i];
    double u2 = u * u, u3 = u2 * u;
    double h00 = 2 * u3 - 3 * u2 + 1, h10 = u3 - 2 * u2 + u, h01 = -2 * u3 + 3 * u2, h11 = u3 - u2;
    return h00 * samples[i].q + h10 * h * velocities[i] + h01 * samples[i + 1].q + h11 * h * velocities[i + 1];
  }
};

/// u_i = p(X_i(q)) for the columns of `frame`.
inline Vec quasi_impulses(const Mat& frame, const Vec& p) { return frame.transpose() * p; }

inline Vec quasi_impulses(const GeometryModel& model, const CovectorPoint& l) {
  return quasi_impulses(frame_matrix(model, l.q), l.p);
}

/// Canonical equations of one metric of the pair, optionally carrying ds/dt = sqrt(P) for the pair.
class GeodesicFlow {
 public:
  GeodesicFlow(const GeometryModel& model, int tag) : model_(&model), fns_(model), tag_(tag) {
    if (tag != 1 && tag != 2) throw ArgumentError("metric tag must be 1 or 2");
  }

  const GeometryModel& model() const { return *model_; }
  int tag() const { return tag_; }

  double hamiltonian(const Vec& q, const Vec& p) const {
    Mat F = fns_.frame(q);
    Mat G = fns_.gram(q, tag_);
    Vec u = F.leftCols(static_cast<Eigen::Index>(model_->rank)).transpose() * p;
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) throw NumericError("Gram matrix is not positive definite");
    return 0.5 * u.dot(llt.solve(u));
  }

  /// sqrt of u^T G1^-1 G2 G1^-1 u with raw quasi-impulses u; the orbital time factor.
  double scale_factor(const Vec& q, const Vec& p) const {
    Mat F = fns_.frame(q);
    Vec u = F.leftCols(static_cast<Eigen::Index>(model_->rank)).transpose() * p;
    Eigen::LLT<Mat> llt(fns_.gram(q, 1));
    if (llt.info() != Eigen::Success) throw NumericError("Gram matrix is not positive definite");
    Vec w = llt.solve(u);
    return std::sqrt(std::max(0.0, w.dot(fns_.gram(q, 2) * w)));
  }

  /// State y = (q, p[, s]); writes dy.
  void rhs(const Vec& y, Vec& dy, bool with_scale) const {
    auto n = static_cast<Eigen::Index>(model_->dim());
    Vec q = y.head(n), p = y.segment(n, n);
    Mat FD, G;
    std::vector<Mat> dFD, dG;
    fns_.metric_at(q, tag_, FD, dFD, G, dG);
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) throw DomainError("Gram matrix lost positive definiteness");
    Vec u = FD.transpose() * p;
    Vec w = llt.solve(u);
    dy.resize(y.size());
    dy.head(n) = FD * w;
    for (Eigen::Index l = 0; l < n; ++l) {
      auto L = static_cast<std::size_t>(l);
      dy[n + l] = -(w.dot(dFD[L].transpose() * p) - 0.5 * w.dot(dG[L] * w));
    }
    if (with_scale) {
      Eigen::LLT<Mat> llt1(fns_.gram(q, 1));
      Vec w1 = llt1.solve(u);
      dy[2 * n] = std::sqrt(std::max(0.0, w1.dot(fns_.gram(q, 2) * w1)));
    }
  }

  Trajectory integrate(const CovectorPoint& l0, double T, const OdeOptions& opt = {}, bool with_scale = false) const {
    auto n = static_cast<Eigen::Index>(model_->dim());
    if (l0.q.size() != n || l0.p.size() != n) throw ArgumentError("q and p must have n components");
    if (!model_->domain.contains(l0.q)) throw DomainError("initial point outside the model domain");
    Vec y0(with_scale ? 2 * n + 1 : 2 * n);
    y0.head(n) = l0.q;
    y0.segment(n, n) = l0.p;
    if (with_scale) y0[2 * n] = 0.0;
    auto f = [&](double, const Vec& y, Vec& dy) { rhs(y, dy, with_scale); };
    const Domain& dom = model_->domain;
    auto guard = [&](const Vec& y) { return dom.contains(y.head(n)); };
    OdeSolution s = dormand_prince(f, y0, 0.0, T, opt, guard);
    Trajectory tr;
    tr.metric_tag = tag_;
    tr.clipped = s.stopped;
    for (std::size_t i = 0; i < s.t.size(); ++i) {
      CovectorPoint c{s.y[i].head(n), s.y[i].segment(n, n)};
      tr.times.push_back(s.t[i]);
      tr.h_values.push_back(hamiltonian(c.q, c.p));
      tr.velocities.push_back(s.dy[i].head(n));
      if (with_scale) tr.scale.push_back(s.y[i][2 * n]);
      tr.samples.push_back(std::move(c));
    }
    return tr;
  }

  /// Covector with projected velocity along v in D(q), h = 1/2, and given transverse quasi-impulses.
  CovectorPoint initial_covector(const Vec& q, const Vec& v, const Vec& transverse) const {
    std::size_t n = model_->dim(), m = model_->rank;
    if (static_cast<std::size_t>(transverse.size()) != n - m)
      throw ArgumentError(n == m ? "Riemannian model takes no transverse components"
                                 : "expected " + std::to_string(n - m) + " transverse components");
    Mat F = fns_.frame(q);
    auto mi = static_cast<Eigen::Index>(m);
    Mat G = fns_.gram(q, tag_);
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) throw NumericError("Gram matrix is not positive definite");
    Mat L = llt.matrixL();
    Mat E = orthonormal_frame(F.leftCols(mi), G);
    Vec c = E.colPivHouseholderQr().solve(v);
    if ((E * c - v).norm() > 1e-8 * std::max(1.0, v.norm())) throw ArgumentError("v is not in D(q)");
    if (c.norm() == 0.0) throw ArgumentError("v must be nonzero");
    Vec rhs(static_cast<Eigen::Index>(n));
    rhs.head(mi) = L * (c / c.norm());
    rhs.tail(static_cast<Eigen::Index>(n - m)) = transverse;
    Vec p = F.transpose().fullPivLu().solve(rhs);
    return {q, p};
  }

 private:
  const GeometryModel* model_;
  ModelFunctions fns_;
  int tag_;
};

inline double hamiltonian(const GeometryModel& model, int tag, const CovectorPoint& l) {
  return GeodesicFlow(model, tag).hamiltonian(l.q, l.p);
}

inline Trajectory integrate(const GeometryModel& model, int tag, const CovectorPoint& l0, double T,
                            const OdeOptions& opt = {}) {
  return GeodesicFlow(model, tag).integrate(l0, T, opt);
}

inline CovectorPoint initial_covector(const GeometryModel& model, int tag, const Vec& q, const Vec& v,
                                      const Vec& transverse) {
  return GeodesicFlow(model, tag).initial_covector(q, v, transverse);
}

/// Columns t, q_1..q_n, p_1..p_n, h.
inline std::string trajectory_csv(const Trajectory& tr) {
  std::string out = "t";
  std::size_t n = tr.samples.empty() ? 0 : static_cast<std::size_t>(tr.samples[0].q.size());
  for (std::size_t i = 1; i <= n; ++i) out += ",q_" + std::to_string(i);
  for (std::size_t i = 1; i <= n; ++i) out += ",p_" + std::to_string(i);
  out += ",h\n";
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    put(tr.times[k]);
    for (Eigen::Index i = 0; i < tr.samples[k].q.size(); ++i) {
      out += ',';
      put(tr.samples[k].q[i]);
    }
    for (Eigen::Index i = 0; i < tr.samples[k].p.size(); ++i) {
      out += ',';
      put(tr.samples[k].p[i]);
    }
    out += ',';
    put(tr.h_values[k]);
    out += '\n';
  }
  return out;
}

}  // namespace geoequiv
