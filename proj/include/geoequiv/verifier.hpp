#pragma once

// Numerical certificate of geodesic equivalence: orbital map, matched extremal pairs and
// unparametrized curve comparison.

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "geoequiv/errors.hpp"
#include "geoequiv/geometry.hpp"
#include "geoequiv/hamiltonian.hpp"
#include "geoequiv/pair_analysis.hpp"

namespace geoequiv {

struct OrbitalImage {
  CovectorPoint source;
  CovectorPoint image;  // same base point
  Vec u;                // adapted quasi-impulses of the source
  Vec phi;              // adapted quasi-impulses of the image
  double a = 0.0;       // sqrt(P), the time-rescaling factor
  std::size_t jbar = 0; // index used for the transverse component (corank 1)
};

/// Image of a covector on the unit level of h1 under the orbital map built from the adapted frame at its base point.
inline OrbitalImage orbital_map(const FramePoint& f, const CovectorPoint& l, double min_denominator = 1e-8) {
  std::size_t n = f.n(), m = f.m;
  if (n > m + 1) throw ArgumentError("orbital map is implemented for corank 0 and 1");
  OrbitalImage o;
  o.source = l;
  o.u = f.X.transpose() * l.p;
  double h1 = 0.5 * o.u.head(static_cast<Eigen::Index>(m)).squaredNorm();
  if (std::abs(h1 - 0.5) > 1e-9) throw ArgumentError("covector is not on the unit level set of h1");
  o.a = std::sqrt(fiber_P(f).evaluate(o.u));
  o.phi = Vec::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < m; ++i) {
    auto ii = static_cast<Eigen::Index>(i);
    o.phi[ii] = f.alpha2[ii] * o.u[ii] / o.a;
  }
  if (n == m + 1) {
    double best = -1.0, qbest = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      double v = f.alpha(j) * fiber_Q(f, j, m).evaluate(o.u);
      if (std::abs(v) > best) {
        best = std::abs(v);
        qbest = v;
        o.jbar = j;
      }
    }
    if (best < min_denominator) throw NumericError("orbital map denominator vanishes (abnormal or singular direction)");
    o.phi[static_cast<Eigen::Index>(m)] = fiber_R(f, o.jbar).evaluate(o.u) / (qbest * o.a);
  }
  o.image = {l.q, f.X.transpose().fullPivLu().solve(o.phi)};
  return o;
}

struct OrbitalResiduals {
  std::vector<double> first;   // per j <= m: alpha_j sum_k Q_jk Phi_k - R_j / a
  std::vector<double> second;  // per s > m: h1(Phi_s) - sum_k Q_sk Phi_k - (1/a) sum_{k<=m} Q_sk alpha_k u_k
  double max() const {
    double r = 0.0;
    for (double v : first) r = std::max(r, std::abs(v));
    for (double v : second) r = std::max(r, std::abs(v));
    return r;
  }
};

/// Residuals of the two identities characterizing the orbital map. Derivatives of the transverse
/// components along the h1 flow are central differences in flow time.
inline OrbitalResiduals check_orbital_identities(const GeometryModel& model, const CovectorPoint& l,
                                                 double step = 1e-5, const OdeOptions& opt = {}) {
  auto fns = std::make_shared<ModelFunctions>(model);
  AdaptedFrame af(fns, l.q);
  FramePoint f = af.at(l.q);
  OrbitalImage o = orbital_map(f, l);
  std::size_t n = f.n(), m = f.m;
  auto Q = [&](const FramePoint& g, std::size_t j, std::size_t k, const Vec& u) { return fiber_Q(g, j, k).evaluate(u); };
  OrbitalResiduals r;
  for (std::size_t j = 0; j < m; ++j) {
    double lhs = 0.0;
    for (std::size_t k = m; k < n; ++k) lhs += f.alpha(j) * Q(f, j, k, o.u) * o.phi[static_cast<Eigen::Index>(k)];
    r.first.push_back(lhs - fiber_R(f, j).evaluate(o.u) / o.a);
  }
  if (n == m) return r;
  GeodesicFlow flow(model, 1);
  OdeOptions fine = opt;
  fine.max_step = std::min(opt.max_step, step);
  auto phi_at = [&](double t) {
    Trajectory tr = flow.integrate(l, t, fine);
    if (tr.clipped) throw DomainError("orbital identity check left the domain");
    const CovectorPoint& s = tr.samples.back();
    FramePoint g = af.at(s.q);
    Vec u = g.X.transpose() * s.p;
    double a = std::sqrt(fiber_P(g).evaluate(u));
    double q = g.alpha(o.jbar) * Q(g, o.jbar, m, u);
    return fiber_R(g, o.jbar).evaluate(u) / (q * a);
  };
  double dphi = (phi_at(step) - phi_at(-step)) / (2 * step);
  for (std::size_t s = m; s < n; ++s) {
    double lhs = dphi;
    for (std::size_t k = m; k < n; ++k) lhs -= Q(f, s, k, o.u) * o.phi[static_cast<Eigen::Index>(k)];
    double rhs = 0.0;
    for (std::size_t k = 0; k < m; ++k) rhs += Q(f, s, k, o.u) * f.alpha(k) * o.u[static_cast<Eigen::Index>(k)];
    r.second.push_back(lhs - rhs / o.a);
  }
  return r;
}

/// Distance from x to the dense-output curve of a trajectory.
inline double distance_to_curve(const Trajectory& tr, const Vec& x) {
  std::size_t N = tr.samples.size();
  if (N == 1) return (tr.samples[0].q - x).norm();
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < N; ++i) {
    Vec a = tr.samples[i].q, b = tr.samples[i + 1].q;
    Vec d = b - a;
    double len2 = d.squaredNorm();
    double t = len2 > 0 ? std::clamp((x - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    double dist = (a + t * d - x).norm();
    if (dist < best_d) {
      best_d = dist;
      best = i;
    }
  }
  double out = best_d;
  std::size_t lo = best > 0 ? best - 1 : 0, hi = std::min(best + 1, N - 2);
  const double g = (std::sqrt(5.0) - 1) / 2;
  for (std::size_t i = lo; i <= hi; ++i) {
    auto f = [&](double u) { return (tr.position(i, u) - x).norm(); };
    double a = 0.0, b = 1.0;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 80; ++it) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - g * (b - a);
        fc = f(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + g * (b - a);
        fd = f(d);
      }
    }
    out = std::min({out, fc, fd, f(0.0), f(1.0)});
  }
  return out;
}

inline double chart_length(const Trajectory& tr) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < tr.samples.size(); ++i) len += (tr.samples[i + 1].q - tr.samples[i].q).norm();
  return len;
}

inline double energy_drift(const Trajectory& tr) {
  double d = 0.0;
  for (double h : tr.h_values) d = std::max(d, std::abs(h - tr.h_values.front()));
  return d;
}

struct VerifyOptions {
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  double T = 0.3;
  double tol_curve = 1e-6;
  std::optional<double> abnormal_cone = 0.1;  // half-angle in the adapted frame; quasi-contact only
  double margin = 0.2;                        // base points are drawn from the domain shrunk by this fraction
  OdeOptions ode;
  std::size_t threads = 0;                    // 0: hardware concurrency
  std::size_t max_attempts = 200;             // redraws per sample before giving up
};

struct SampleRecord {
  std::size_t index = 0;
  Vec q, p, p_image;
  double a = 0.0;
  double T1 = 0.0, T2 = 0.0;           // parameter lengths of the G1 and G2 runs
  double deviation = std::numeric_limits<double>::quiet_NaN();
  double length1 = 0.0, length2 = 0.0; // chart (Euclidean) lengths of the projected curves
  double drift1 = 0.0, drift2 = 0.0;   // max |h - h(0)| along each run
  double h2_image_error = 0.0;         // |h2(image) - 1/2|
  double collinearity = 0.0;           // |dq2/dt - dq1/dt / a| / |dq1/dt / a| at the start
  std::size_t rejected = 0;            // redraws before this sample was accepted
  bool clipped = false;
  std::string error;                   // set when no admissible sample was found
};

enum class Verdict { Pass, Fail, Inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    default:
      return "inconclusive";
  }
}

struct EquivalenceReport {
  std::vector<SampleRecord> records;
  std::size_t accepted = 0, clipped = 0, failed = 0;
  double max_deviation = 0.0, median_deviation = 0.0;
  Verdict verdict = Verdict::Inconclusive;
  VerifyOptions options;
  DistributionTag distribution = DistributionTag::Other;
};

namespace detail {

inline SampleRecord verify_one(const GeometryModel& model, const std::shared_ptr<const ModelFunctions>& fns,
                               const GeodesicFlow& flow1, const GeodesicFlow& flow2, const VectorField* abnormal,
                               const VerifyOptions& opt, std::size_t index) {
  SampleRecord rec;
  rec.index = index;
  std::seed_seq seq{static_cast<std::uint64_t>(opt.seed), static_cast<std::uint64_t>(index)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Domain inner = model.domain.shrunk(opt.margin);
  std::size_t n = model.dim(), m = model.rank;
  auto ni = static_cast<Eigen::Index>(n), mi = static_cast<Eigen::Index>(m);
  for (std::size_t attempt = 0; attempt < opt.max_attempts; ++attempt) {
    rec.rejected = attempt;
    try {
      Vec q = inner.sample(rng);
      Vec u(ni);
      for (Eigen::Index i = 0; i < ni; ++i) u[i] = gauss(rng);
      double un = u.head(mi).norm();
      if (un == 0.0) continue;
      u.head(mi) /= un;
      FramePoint f = AdaptedFrame(fns, q).at(q);
      if (abnormal && opt.abnormal_cone) {
        Vec c = f.X.fullPivLu().solve(evaluate(*abnormal, q)).head(mi);
        double cosang = std::abs(c.dot(u.head(mi))) / c.norm();
        if (std::acos(std::min(1.0, cosang)) < *opt.abnormal_cone) continue;
      }
      CovectorPoint l0{q, f.X.transpose().fullPivLu().solve(u)};
      OrbitalImage o = orbital_map(f, l0);
      rec.q = q;
      rec.p = l0.p;
      rec.p_image = o.image.p;
      rec.a = o.a;
      rec.h2_image_error = std::abs(flow2.hamiltonian(q, o.image.p) - 0.5);
      Vec y1(2 * ni), y2(2 * ni), d1, d2;
      y1 << q, l0.p;
      y2 << q, o.image.p;
      flow1.rhs(y1, d1, false);
      flow2.rhs(y2, d2, false);
      Vec expect = d1.head(ni) / o.a;
      rec.collinearity = (d2.head(ni) - expect).norm() / std::max(expect.norm(), 1e-300);

      Trajectory g1 = flow1.integrate(l0, opt.T, opt.ode, true);
      rec.T1 = g1.times.back();
      rec.T2 = g1.scale.back();
      Trajectory g2 = flow2.integrate(o.image, rec.T2, opt.ode);
      rec.clipped = g1.clipped || g2.clipped;
      rec.drift1 = energy_drift(g1);
      rec.drift2 = energy_drift(g2);
      rec.length1 = chart_length(g1);
      rec.length2 = chart_length(g2);
      double dev = 0.0;
      for (std::size_t k = 0; k < g2.samples.size(); ++k) {
        dev = std::max(dev, distance_to_curve(g1, g2.samples[k].q));
        if (k + 1 < g2.samples.size()) dev = std::max(dev, distance_to_curve(g1, g2.position(k, 0.5)));
      }
      rec.deviation = dev;
      return rec;
    } catch (const NumericError&) {
    } catch (const DomainError&) {
    }
  }
  rec.error = "no admissible sample after " + std::to_string(opt.max_attempts) + " draws";
  return rec;
}

}  // namespace detail

/// Samples covectors on the unit level of h1, maps them by the orbital map, and measures how far each
/// G2 extremal strays from the matching G1 extremal as an unparametrized curve.
inline EquivalenceReport verify_equivalence(const GeometryModel& model, const VerifyOptions& opt = {}) {
  if (!(opt.tol_curve > 0.0)) throw ArgumentError("curve tolerance must be positive");
  if (opt.samples == 0) throw ArgumentError("at least one sample is required");
  if (opt.T == 0.0) throw ArgumentError("T must be nonzero");
  std::size_t n = model.dim(), m = model.rank;
  if (n > m + 1) throw ArgumentError("verification is implemented for corank 0 and 1");
  EquivalenceReport rep;
  rep.options = opt;
  auto fns = std::make_shared<const ModelFunctions>(model);
  GeodesicFlow flow1(model, 1), flow2(model, 2);
  DistributionType type = classify_distribution(model);
  rep.distribution = type.tag;
  const VectorField* abnormal = type.tag == DistributionTag::QuasiContact ? &type.abnormal : nullptr;

  rep.records.resize(opt.samples);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < opt.samples; i = next++)
      rep.records[i] = detail::verify_one(model, fns, flow1, flow2, abnormal, opt, i);
  };
  std::size_t threads = opt.threads ? opt.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, opt.samples);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> devs;
  for (const auto& r : rep.records) {
    if (!r.error.empty()) {
      ++rep.failed;
      continue;
    }
    if (r.clipped) {
      ++rep.clipped;
      continue;
    }
    ++rep.accepted;
    devs.push_back(r.deviation);
  }
  if (!devs.empty()) {
    std::sort(devs.begin(), devs.end());
    rep.max_deviation = devs.back();
    std::size_t k = devs.size();
    rep.median_deviation = k % 2 ? devs[k / 2] : 0.5 * (devs[k / 2 - 1] + devs[k / 2]);
  }
  if (rep.accepted == 0 || 2 * rep.clipped > opt.samples || 2 * rep.failed > opt.samples)
    rep.verdict = Verdict::Inconclusive;
  else
    rep.verdict = rep.max_deviation <= opt.tol_curve ? Verdict::Pass : Verdict::Fail;
  return rep;
}

/// The same pair with the roles of G1 and G2 exchanged.
inline GeometryModel swap_metrics(GeometryModel model) {
  std::swap(model.gram1, model.gram2);
  return model;
}

}  // namespace geoequiv
