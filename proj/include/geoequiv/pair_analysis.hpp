#pragma once

// The ordered pair (G1, G2): transition operator, adapted frames, fiber polynomials and the
// divisibility conditions.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "geoequiv/errors.hpp"
#include "geoequiv/geometry.hpp"
#include "geoequiv/polynomial.hpp"

namespace geoequiv {

inline constexpr double kClusterTol = 1e-7;

/// Sizes of runs of an ascending sequence whose consecutive relative gaps are within eps.
inline std::vector<std::size_t> cluster_sizes(const Vec& sorted, double eps = kClusterTol) {
  std::vector<std::size_t> sizes;
  for (Eigen::Index i = 0; i < sorted.size(); ++i) {
    double scale = std::max({std::abs(sorted[i]), i ? std::abs(sorted[i - 1]) : 0.0, 1e-300});
    if (i == 0 || sorted[i] - sorted[i - 1] > eps * scale)
      sizes.push_back(1);
    else
      ++sizes.back();
  }
  return sizes;
}

/// Smallest relative gap between consecutive ascending values (infinity for one value).
inline double relative_gap(const Vec& sorted) {
  double g = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i < sorted.size(); ++i)
    g = std::min(g, (sorted[i] - sorted[i - 1]) / std::max(std::abs(sorted[i]), 1e-300));
  return g;
}

struct TransitionSpectrum {
  Mat S;               // in the basis of the model's D-frame
  Vec eigenvalues;     // ascending alpha_i^2
  Mat eigenvectors;    // columns, G1-orthonormal coefficients on the D-frame
  std::size_t N = 0;   // number of distinct eigenvalues
  std::vector<std::size_t> multiplicities;
};

inline TransitionSpectrum transition_spectrum(const Mat& G1, const Mat& G2, double eps = kClusterTol) {
  Eigen::LLT<Mat> llt(G1);
  if (llt.info() != Eigen::Success) throw NumericError("G1 is not positive definite");
  if (Eigen::LLT<Mat>(G2).info() != Eigen::Success) throw NumericError("G2 is not positive definite");
  TransitionSpectrum t;
  t.S = llt.solve(G2);
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(G2, G1);
  if (es.info() != Eigen::Success) throw NumericError("generalized eigensolver failed");
  t.eigenvalues = es.eigenvalues();
  t.eigenvectors = es.eigenvectors();
  t.multiplicities = cluster_sizes(t.eigenvalues, eps);
  t.N = t.multiplicities.size();
  return t;
}

/// S with G2(v, w) = G1(S v, w) on D(q), its sorted spectrum and N(q).
inline TransitionSpectrum transition_operator(const GeometryModel& model, const Vec& q, double eps = kClusterTol) {
  return transition_spectrum(evaluate(model.gram1, q), evaluate(model.gram2, q), eps);
}

struct RegularityReport {
  bool regular = true;
  std::vector<std::size_t> N_values;  // N at every probed point, grid first
  Vec min_gap_point;                  // where the smallest relative eigenvalue gap was found
  double min_gap = std::numeric_limits<double>::infinity();
};

/// Samples N on a ball grid and minimizes the eigenvalue gap by compass search; regular iff N is constant.
/// The ball is not clipped to the model domain.
inline RegularityReport regularity_probe(const GeometryModel& model, const Vec& q, double radius,
                                         double eps = kClusterTol) {
  if (!(radius > 0.0)) throw ArgumentError("radius must be positive");
  std::size_t n = model.dim();
  auto eigen_at = [&](const Vec& x) -> Vec {
    // a point where the coefficients are singular is nudged off it
    for (double delta : {0.0, 1e-9, 1e-7, 1e-5}) {
      Vec y = x;
      y[0] += delta;
      try {
        Mat G1 = evaluate(model.gram1, y), G2 = evaluate(model.gram2, y);
        return transition_spectrum(G1, G2, eps).eigenvalues;
      } catch (const DomainError&) {
      } catch (const NumericError&) {
      }
    }
    throw DomainError("transition operator undefined near probe point");
  };
  RegularityReport rep;
  std::size_t per_axis = 5;
  auto total = [&](std::size_t k) {
    std::size_t t = 1;
    for (std::size_t i = 0; i < n; ++i) t *= k;
    return t;
  };
  while (per_axis > 2 && total(per_axis) > 625) --per_axis;
  Vec best = q;
  double best_gap = std::numeric_limits<double>::infinity();
  auto visit = [&](const Vec& x) {
    Vec ev = eigen_at(x);
    rep.N_values.push_back(cluster_sizes(ev, eps).size());
    double g = relative_gap(ev);
    if (g < best_gap) {
      best_gap = g;
      best = x;
    }
    return g;
  };
  for (std::size_t c = 0; c < total(per_axis); ++c) {
    std::size_t r = c;
    Vec t(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      t[static_cast<Eigen::Index>(i)] = -1.0 + 2.0 * static_cast<double>(r % per_axis) / static_cast<double>(per_axis - 1);
      r /= per_axis;
    }
    if (t.norm() > 1.0 + 1e-12) continue;
    visit(q + radius * t);
  }
  if (model.rank > 1 && std::isfinite(best_gap)) {
    Vec x = best;
    double gx = best_gap;
    double step = radius / 4;
    for (int it = 0; it < 2000 && step > 1e-10 * std::max(1.0, radius); ++it) {
      bool improved = false;
      for (std::size_t i = 0; i < n && !improved; ++i)
        for (double s : {1.0, -1.0}) {
          Vec y = x;
          y[static_cast<Eigen::Index>(i)] += s * step;
          if ((y - q).norm() > radius) continue;
          double gy;
          try {
            gy = relative_gap(eigen_at(y));
          } catch (const DomainError&) {
            continue;
          }
          if (gy < gx) {
            x = y;
            gx = gy;
            improved = true;
            break;
          }
        }
      if (!improved) step *= 0.5;
    }
    visit(x);
  }
  rep.min_gap = best_gap;
  rep.min_gap_point = best;
  for (std::size_t v : rep.N_values) rep.regular = rep.regular && v == rep.N_values.front();
  return rep;
}

/// Adapted frame and its first-order data at one point.
struct FramePoint {
  Vec q;
  Mat X;                   // n x n; columns 0..m-1 are G1-orthonormal eigenfields of S, the rest complete the frame
  std::vector<Mat> dX;     // dX[l] = d_l X
  Vec alpha2;              // alpha_i^2, set to 1 beyond m
  Mat X_alpha2;            // (i, j) = X_i(alpha_j^2)
  StructureTensor c;       // [X_i, X_j] = sum_k c(j, i, k) X_k
  std::vector<std::size_t> cluster;  // eigenvalue cluster of each i < m
  std::size_t m = 0;

  std::size_t n() const { return static_cast<std::size_t>(X.cols()); }
  double alpha(std::size_t i) const { return std::sqrt(alpha2[static_cast<Eigen::Index>(i)]); }
};

/// Adapted frame near an anchor point. Eigenspace bases are the polar projections of the
/// anchor's bases, so the frame is smooth where eigenvalue multiplicities stay constant.
class AdaptedFrame {
 public:
  AdaptedFrame(std::shared_ptr<const ModelFunctions> fns, const Vec& anchor, double eps = kClusterTol)
      : fns_(std::move(fns)), eps_(eps) {
    auto P = fns_->at(anchor, false);
    Mat Linv = inverse_cholesky(P.G1);
    Mat M = Linv * P.G2 * Linv.transpose();
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (M + M.transpose()));
    sizes_ = cluster_sizes(es.eigenvalues(), eps_);
    Mat V = es.eigenvectors();
    for (Eigen::Index c = 0; c < V.cols(); ++c) {
      Eigen::Index k;
      V.col(c).cwiseAbs().maxCoeff(&k);
      if (V(k, c) < 0) V.col(c) = -V.col(c);
    }
    Z_ = V;
  }

  AdaptedFrame(const GeometryModel& model, const Vec& anchor, double eps = kClusterTol)
      : AdaptedFrame(std::make_shared<ModelFunctions>(model), anchor, eps) {}

  const std::vector<std::size_t>& multiplicities() const { return sizes_; }

  FramePoint at(const Vec& q) const {
    const std::size_t n = fns_->dim(), m = fns_->rank();
    const auto ni = static_cast<Eigen::Index>(n), mi = static_cast<Eigen::Index>(m);
    auto P = fns_->at(q, true);
    Mat Linv = inverse_cholesky(P.G1);
    Mat M = Linv * P.G2 * Linv.transpose();
    M = 0.5 * (M + M.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(M);
    Vec ev = es.eigenvalues();
    Mat V = es.eigenvectors();

    // split by the anchor multiplicities and check the split is still a clustering
    std::vector<Eigen::Index> start;
    Eigen::Index s0 = 0;
    for (std::size_t k : sizes_) {
      start.push_back(s0);
      s0 += static_cast<Eigen::Index>(k);
    }
    Vec lambda(static_cast<Eigen::Index>(sizes_.size()));
    for (std::size_t s = 0; s < sizes_.size(); ++s) {
      auto k = static_cast<Eigen::Index>(sizes_[s]);
      Vec seg = ev.segment(start[s], k);
      lambda[static_cast<Eigen::Index>(s)] = seg.mean();
      if (seg.maxCoeff() - seg.minCoeff() > eps_ * std::abs(seg.maxCoeff()))
        throw NumericError("eigenvalue multiplicity changed: eigenvalues split inside a cluster");
      if (s > 0) {
        double prev = ev[start[s] - 1];
        if (seg.minCoeff() - prev <= eps_ * std::abs(seg.minCoeff()))
          throw NumericError("eigenvalue crossing: clusters merged");
      }
    }

    Mat W(mi, mi);
    std::vector<Mat> B(sizes_.size());
    for (std::size_t s = 0; s < sizes_.size(); ++s) {
      auto k = static_cast<Eigen::Index>(sizes_[s]);
      Mat Vs = V.middleCols(start[s], k);
      Mat Zs = Z_.middleCols(start[s], k);
      Mat C = Vs.transpose() * Zs;
      Eigen::JacobiSVD<Mat> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
      if (svd.singularValues().minCoeff() < 1e-3)
        throw NumericError("adapted frame orientation lost: too far from the anchor point");
      W.middleCols(start[s], k) = Vs * svd.matrixU() * svd.matrixV().transpose();
      B[s] = W.middleCols(start[s], k).transpose() * Zs;
      B[s] = 0.5 * (B[s] + B[s].transpose());
    }

    FramePoint fp;
    fp.q = q;
    fp.m = m;
    fp.X.resize(ni, ni);
    Mat FD = P.F.leftCols(mi);
    Mat LinvT = Linv.transpose();
    fp.X.leftCols(mi) = FD * LinvT * W;
    if (n > m) fp.X.rightCols(ni - mi) = P.F.rightCols(ni - mi);
    fp.alpha2 = Vec::Ones(ni);
    fp.cluster.resize(m);
    for (std::size_t s = 0; s < sizes_.size(); ++s)
      for (std::size_t r = 0; r < sizes_[s]; ++r) {
        auto i = static_cast<std::size_t>(start[s]) + r;
        fp.alpha2[static_cast<Eigen::Index>(i)] = lambda[static_cast<Eigen::Index>(s)];
        fp.cluster[i] = s;
      }

    Mat dalpha2 = Mat::Zero(ni, ni);  // (l, j) = d_l alpha_j^2
    fp.dX.resize(n);
    for (std::size_t l = 0; l < n; ++l) {
      auto li = static_cast<Eigen::Index>(l);
      Mat A1 = Linv * P.dG1[l] * LinvT;
      Mat K = A1.triangularView<Eigen::StrictlyLower>();
      K.diagonal() = 0.5 * A1.diagonal();
      Mat Mdot = -K * M - M * K.transpose() + Linv * P.dG2[l] * LinvT;
      Mdot = 0.5 * (Mdot + Mdot.transpose());
      Mat Wdot(mi, mi);
      for (std::size_t s = 0; s < sizes_.size(); ++s) {
        auto k = static_cast<Eigen::Index>(sizes_[s]);
        Mat Ws = W.middleCols(start[s], k);
        Mat Zs = Z_.middleCols(start[s], k);
        double lam_dot = (Ws.transpose() * Mdot * Ws).trace() / static_cast<double>(k);
        for (Eigen::Index r = 0; r < k; ++r) dalpha2(li, start[s] + r) = lam_dot;
        Mat O = Mat::Zero(mi, k);
        for (std::size_t t = 0; t < sizes_.size(); ++t) {
          if (t == s) continue;
          Mat Wt = W.middleCols(start[t], static_cast<Eigen::Index>(sizes_[t]));
          O += Wt * (Wt.transpose() * Mdot * Ws) /
               (lambda[static_cast<Eigen::Index>(s)] - lambda[static_cast<Eigen::Index>(t)]);
        }
        // in-space rotation keeping W^T Z symmetric: Omega B + B Omega = O^T Z - Z^T O
        Mat Cr = O.transpose() * Zs - Zs.transpose() * O;
        Eigen::SelfAdjointEigenSolver<Mat> eb(B[s]);
        Mat Vb = eb.eigenvectors();
        Mat Ct = Vb.transpose() * Cr * Vb;
        for (Eigen::Index a = 0; a < k; ++a)
          for (Eigen::Index b = 0; b < k; ++b) Ct(a, b) /= eb.eigenvalues()[a] + eb.eigenvalues()[b];
        Mat Omega = Vb * Ct * Vb.transpose();
        Wdot.middleCols(start[s], k) = Ws * Omega + O;
      }
      fp.dX[l].resize(ni, ni);
      fp.dX[l].leftCols(mi) = P.dF[l].leftCols(mi) * LinvT * W - FD * LinvT * K.transpose() * W + FD * LinvT * Wdot;
      if (n > m) fp.dX[l].rightCols(ni - mi) = P.dF[l].rightCols(ni - mi);
    }

    fp.X_alpha2 = fp.X.transpose() * dalpha2;

    Eigen::FullPivLU<Mat> lu(fp.X);
    if (!lu.isInvertible()) throw NumericError("adapted frame is singular");
    fp.c = StructureTensor(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        Vec br = Vec::Zero(ni);
        for (std::size_t l = 0; l < n; ++l) {
          auto li = static_cast<Eigen::Index>(l);
          br += fp.X(li, static_cast<Eigen::Index>(i)) * fp.dX[l].col(static_cast<Eigen::Index>(j)) -
                fp.X(li, static_cast<Eigen::Index>(j)) * fp.dX[l].col(static_cast<Eigen::Index>(i));
        }
        Vec coeff = lu.solve(br);
        for (std::size_t k = 0; k < n; ++k) {
          fp.c(j, i, k) = coeff[static_cast<Eigen::Index>(k)];
          fp.c(i, j, k) = -coeff[static_cast<Eigen::Index>(k)];
        }
      }
    return fp;
  }

 private:
  static Mat inverse_cholesky(const Mat& G) {
    Eigen::LLT<Mat> llt(G);
    if (llt.info() != Eigen::Success) throw NumericError("G1 is not positive definite");
    Mat L = llt.matrixL();
    return L.triangularView<Eigen::Lower>().solve(Mat::Identity(G.rows(), G.cols()));
  }

  std::shared_ptr<const ModelFunctions> fns_;
  double eps_;
  std::vector<std::size_t> sizes_;
  Mat Z_;
};

/// sum_i alpha_i^2 u_i^2.
inline FiberPolynomial fiber_P(const FramePoint& f) {
  FiberPolynomial P(f.n(), 2);
  for (std::size_t i = 0; i < f.m; ++i) P.add({i, i}, f.alpha2[static_cast<Eigen::Index>(i)]);
  return P;
}

/// u^T G1^-1 G2 G1^-1 u for the raw quasi-impulses u of the model's D-frame.
inline double intrinsic_P(const Mat& G1, const Mat& G2, const Vec& u_raw) {
  Eigen::LLT<Mat> llt(G1);
  Vec w = llt.solve(u_raw);
  return w.dot(G2 * w);
}

/// Derivative of P along the G1 extremal flow, as a cubic in u.
inline FiberPolynomial fiber_hP(const FramePoint& f) {
  FiberPolynomial H(f.n(), 3);
  for (std::size_t i = 0; i < f.m; ++i)
    for (std::size_t j = 0; j < f.m; ++j) {
      H.add({i, j, j}, f.X_alpha2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      double a2 = f.alpha2[static_cast<Eigen::Index>(j)];
      for (std::size_t k = 0; k < f.n(); ++k) H.add({i, j, k}, 2.0 * f.c(j, i, k) * a2);
    }
  return H;
}

struct FirstDivisibility {
  bool holds = false;
  FiberPolynomial quotient;     // linear form sum p_i u_i
  double residual = 0.0;        // remainder coefficient norm
  double relative_residual = 0.0;  // residual / |hP| (0 when hP vanishes)
  double pi_mismatch = 0.0;     // max |p_i - X_i(alpha_i^2)/alpha_i^2| over i <= m
};

inline FirstDivisibility first_divisibility(const FramePoint& f, double tol = 1e-8) {
  FiberPolynomial H = fiber_hP(f), P = fiber_P(f);
  Division d = divide(H, P, tol);
  FirstDivisibility r;
  r.quotient = d.quotient;
  r.residual = d.residual;
  double hn = H.norm();
  r.relative_residual = hn > 0 ? d.residual / hn : 0.0;
  r.holds = d.holds;
  for (std::size_t i = 0; i < f.m; ++i) {
    Exponents e(f.n(), 0);
    e[i] = 1;
    auto ii = static_cast<Eigen::Index>(i);
    double expected = f.X_alpha2(ii, ii) / f.alpha2[ii];
    r.pi_mismatch = std::max(r.pi_mismatch, std::abs(d.quotient.coeff(e) - expected));
  }
  return r;
}

namespace detail {

// X_i(alpha_j), alpha = 1 beyond m
inline double X_alpha(const FramePoint& f, std::size_t i, std::size_t j) {
  if (j >= f.m) return 0.0;
  return f.X_alpha2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / (2.0 * f.alpha(j));
}

}  // namespace detail

/// Structure functions of the frame X_i / alpha_i (i <= m), X_i (i > m).
inline double cbar(const FramePoint& f, std::size_t j, std::size_t i, std::size_t k) {
  double ai = f.alpha(i), aj = f.alpha(j), ak = f.alpha(k);
  double v = f.c(j, i, k) / (ai * aj);
  // X_i(1/alpha_j) = -X_i(alpha_j) / alpha_j^2
  if (k == j) v += -detail::X_alpha(f, i, j) / (aj * aj) / ai;
  if (k == i) v -= -detail::X_alpha(f, j, i) / (ai * ai) / aj;
  return ak * v;
}

/// Q_jk = sum_{i <= m} cbar_{ji}^k alpha_i u_i.
inline FiberPolynomial fiber_Q(const FramePoint& f, std::size_t j, std::size_t k) {
  FiberPolynomial Q(f.n(), 1);
  for (std::size_t i = 0; i < f.m; ++i) Q.add({i}, cbar(f, j, i, k) * f.alpha(i));
  return Q;
}

/// R_j in the expanded form valid when the first divisibility condition holds.
inline FiberPolynomial fiber_R(const FramePoint& f, std::size_t j) {
  if (j >= f.m) throw ArgumentError("R_j is defined for j <= m");
  FiberPolynomial R(f.n(), 2);
  auto a2 = [&](std::size_t i) { return f.alpha2[static_cast<Eigen::Index>(i)]; };
  auto Xa2 = [&](std::size_t i, std::size_t k) {
    return f.X_alpha2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  };
  double aj2 = a2(j);
  for (std::size_t i = 0; i < f.m; ++i) {
    if (i == j) continue;
    R.add({i, i}, (aj2 - a2(i)) * f.c(j, i, i) - Xa2(j, i) / 2.0);
    // X_i(alpha_j^4 / alpha_i^2)
    double x = 2.0 * aj2 * Xa2(i, j) / a2(i) - aj2 * aj2 * Xa2(i, i) / (a2(i) * a2(i));
    R.add({i, j}, a2(i) / (2.0 * aj2) * x);
  }
  for (std::size_t i = 0; i < f.m; ++i)
    for (std::size_t k = 0; k < f.m; ++k)
      if (i != k) R.add({i, k}, (aj2 - a2(k)) * f.c(j, i, k));
  for (std::size_t i = 0; i < f.m; ++i)
    for (std::size_t k = f.m; k < f.n(); ++k) R.add({i, k}, aj2 * f.c(j, i, k));
  return R;
}

/// R_j straight from its definition, with h1(a^2)/a^2 replaced by the first-divisibility quotient.
inline FiberPolynomial fiber_R_direct(const FramePoint& f, std::size_t j, const FiberPolynomial& quotient) {
  std::size_t n = f.n();
  double aj2 = f.alpha2[static_cast<Eigen::Index>(j)], aj = f.alpha(j);
  FiberPolynomial R(n, 2);
  for (std::size_t i = 0; i < f.m; ++i)
    R.add({i, j}, 0.5 * f.X_alpha2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  for (std::size_t i = 0; i < f.m; ++i)
    for (std::size_t k = 0; k < n; ++k) R.add({i, k}, aj2 * f.c(j, i, k));
  FiberPolynomial uj(n, 1);
  uj.add({j}, 1.0);
  R = R - (uj * quotient) * (0.5 * aj2);
  for (std::size_t i = 0; i < f.m; ++i)
    for (std::size_t k = 0; k < f.m; ++k) R.add({i, k}, -cbar(f, j, i, k) * f.alpha(i) * aj * f.alpha(k));
  return R;
}

struct SecondDivisibility {
  std::vector<std::size_t> applicable;  // j with Q_{j,m+1} not identically zero
  std::vector<bool> holds;
  std::vector<double> residuals;        // relative remainders
  std::vector<FiberPolynomial> quotients;  // R_j / (alpha_j Q_{j,m+1})
  double quotient_spread = 0.0;         // relative spread of the quotients across applicable j
  bool all_hold() const { return std::all_of(holds.begin(), holds.end(), [](bool b) { return b; }); }
};

inline SecondDivisibility second_divisibility(const FramePoint& f, double tol = 1e-8) {
  if (f.m + 1 != f.n()) throw ArgumentError("second divisibility needs a corank-1 distribution");
  SecondDivisibility r;
  double qscale = 0.0;
  std::vector<FiberPolynomial> Qs;
  for (std::size_t j = 0; j < f.m; ++j) {
    Qs.push_back(fiber_Q(f, j, f.m));
    qscale = std::max(qscale, Qs.back().norm());
  }
  for (std::size_t j = 0; j < f.m; ++j) {
    if (Qs[j].norm() <= 1e-10 * std::max(qscale, 1.0)) continue;
    FiberPolynomial R = fiber_R(f, j);
    Division d = divide(R, Qs[j], tol);
    r.applicable.push_back(j);
    r.holds.push_back(d.holds);
    r.residuals.push_back(d.residual / std::max(d.scale, 1e-300));
    r.quotients.push_back(d.quotient * (1.0 / f.alpha(j)));
  }
  double qn = 0.0;
  for (const auto& q : r.quotients) qn = std::max(qn, q.norm());
  for (std::size_t a = 1; a < r.quotients.size(); ++a)
    r.quotient_spread =
        std::max(r.quotient_spread, (r.quotients[a] - r.quotients[0]).norm() / std::max(qn, 1e-300));
  return r;
}

struct RelationResiduals {
  double ratio_derivative = 0.0, cross_derivative = 0.0, mixed_derivative = 0.0, cyclic_structure = 0.0;
  bool transverse_equal = true;           // bracket leaving D only between equal eigenvalues
  double transverse_gap = 0.0;
  bool equal_on_transverse = true;     // eigenvalues agree on indices whose brackets leave D
  double shared_derivative = 0.0;         // max |X_j(alpha)| over the eigenvalue shared by those indices
  bool shared_applicable = false;
};

/// Residuals of the relations forced by the first divisibility condition, plus the corank-1
/// constraints on indices whose brackets leave D.
inline RelationResiduals forced_relations(const FramePoint& f, double tol = 1e-8) {
  RelationResiduals r;
  std::size_t m = f.m, n = f.n();
  auto a2 = [&](std::size_t i) { return f.alpha2[static_cast<Eigen::Index>(i)]; };
  auto Xa2 = [&](std::size_t i, std::size_t k) {
    return f.X_alpha2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
  };
  auto distinct = [&](std::size_t i, std::size_t j) { return f.cluster[i] != f.cluster[j]; };
  double amax = f.alpha2.head(static_cast<Eigen::Index>(m)).maxCoeff();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      double ratio = a2(j) / a2(i);
      double Xratio = Xa2(i, j) / a2(i) - a2(j) * Xa2(i, i) / (a2(i) * a2(i));
      r.ratio_derivative = std::max(r.ratio_derivative, std::abs(Xratio - 2.0 * f.c(j, i, j) * (1.0 - ratio)));
      if (distinct(i, j)) {
        double v = Xa2(i, j) / f.alpha(i) - a2(j) * Xa2(i, i) / (2.0 * a2(i) * f.alpha(i));
        r.cross_derivative = std::max(r.cross_derivative, std::abs(v));
      }
      double transverse = 0.0;
      for (std::size_t k = m; k < n; ++k) transverse = std::max(transverse, std::abs(f.c(j, i, k)));
      if (transverse > tol) {
        double gap = std::abs(f.alpha(i) - f.alpha(j)) / std::sqrt(amax);
        if (gap > tol) {
          r.transverse_equal = false;
          r.transverse_gap = std::max(r.transverse_gap, gap);
        }
      }
      for (std::size_t k = 0; k < m; ++k) {
        if (k == i || k == j) continue;
        if (distinct(j, i) && distinct(k, i)) {
          double Xaj = detail::X_alpha(f, i, j), Xak = detail::X_alpha(f, i, k);
          double v = Xaj / f.alpha(k) - f.alpha(j) * Xak / a2(k);
          r.mixed_derivative = std::max(r.mixed_derivative, std::abs(v));
        }
        double v5 = (a2(j) - a2(i)) * f.c(j, i, k) + (a2(j) - a2(k)) * f.c(j, k, i) + (a2(i) - a2(k)) * f.c(i, k, j);
        r.cyclic_structure = std::max(r.cyclic_structure, std::abs(v5));
      }
    }
  if (n == m + 1) {
    std::vector<std::size_t> I;
    for (std::size_t j = 0; j < m; ++j) {
      double t = 0.0;
      for (std::size_t i = 0; i < m; ++i) t = std::max(t, std::abs(f.c(j, i, m)));
      if (t > tol) I.push_back(j);
    }
    if (!I.empty()) {
      r.shared_applicable = true;
      for (std::size_t j : I) r.equal_on_transverse = r.equal_on_transverse && f.cluster[j] == f.cluster[I[0]];
      for (std::size_t j = 0; j < m; ++j)
        if (f.cluster[j] == f.cluster[I[0]])
          r.shared_derivative = std::max(r.shared_derivative, std::abs(detail::X_alpha(f, j, I[0])) / f.alpha(I[0]));
    }
  }
  return r;
}

/// beta_s from the distinct transition eigenvalues lambda_1..lambda_N (product form of the
/// Levi-Civita normal form): beta_s = lambda_s^{N/(N+1)} prod_{l != s} lambda_l^{-1/(N+1)}.
inline Vec recover_betas(const Vec& lambdas) {
  auto N = static_cast<double>(lambdas.size());
  Vec b(lambdas.size());
  for (Eigen::Index s = 0; s < lambdas.size(); ++s) {
    double logb = N / (N + 1) * std::log(lambdas[s]);
    for (Eigen::Index l = 0; l < lambdas.size(); ++l)
      if (l != s) logb -= std::log(lambdas[l]) / (N + 1);
    b[s] = std::exp(logb);
  }
  return b;
}

/// Distinct eigenvalues (cluster means) of the transition operator, ascending.
inline Vec distinct_eigenvalues(const TransitionSpectrum& t) {
  Vec out(static_cast<Eigen::Index>(t.N));
  Eigen::Index at = 0;
  for (std::size_t s = 0; s < t.N; ++s) {
    auto k = static_cast<Eigen::Index>(t.multiplicities[s]);
    out[static_cast<Eigen::Index>(s)] = t.eigenvalues.segment(at, k).mean();
    at += k;
  }
  return out;
}

}  // namespace geoequiv
