#pragma once

// JSON reports with a versioned schema. Objects are key-sorted, so equal inputs dump to equal bytes.

#include <cmath>
#include <string>
#include <vector>

#include "geoequiv/hamiltonian.hpp"
#include "geoequiv/manifest.hpp"
#include "geoequiv/pair_analysis.hpp"
#include "geoequiv/verifier.hpp"

namespace geoequiv {

inline constexpr const char* kReportSchema = "geoequiv-report/1";

inline Json number_json(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_json(v[i]));
  return a;
}

inline Json mat_json(const Mat& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

inline Json polynomial_json(const FiberPolynomial& p) {
  return {{"degree", p.degree()}, {"text", p.to_string()}, {"max_abs", p.max_abs()}};
}

inline Json make_report(const std::string& command, Json config, Json result) {
  return {{"schema", kReportSchema}, {"command", command}, {"config", std::move(config)}, {"result", std::move(result)}};
}

inline Json ode_json(const OdeOptions& o) {
  return {{"tol", o.tol}, {"max_step", o.max_step}, {"min_step", o.min_step}, {"initial_step", o.initial_step}};
}

/// Everything known about the pair at one point: spectrum, regularity, divisibility and relations.
inline Json analyze_point(const GeometryModel& model, const Vec& q, double radius, double tol) {
  Json out;
  out["q"] = vec_json(q);
  TransitionSpectrum t = transition_operator(model, q);
  out["transition"] = {{"S", mat_json(t.S)},
                       {"eigenvalues", vec_json(t.eigenvalues)},
                       {"N", t.N},
                       {"multiplicities", t.multiplicities}};
  RegularityReport reg = regularity_probe(model, q, radius);
  std::vector<std::size_t> Ns = reg.N_values;
  std::sort(Ns.begin(), Ns.end());
  Ns.erase(std::unique(Ns.begin(), Ns.end()), Ns.end());
  out["regularity"] = {{"radius", radius},
                       {"regular", reg.regular},
                       {"N_values", Ns},
                       {"min_gap", number_json(reg.min_gap)},
                       {"min_gap_point", vec_json(reg.min_gap_point)}};
  out["distribution"] = to_string(classify_distribution(model).tag);
  FramePoint f;
  try {
    f = AdaptedFrame(model, q).at(q);
  } catch (const NumericError& e) {
    out["adapted_frame"] = {{"error", e.what()}};
    return out;
  }
  Vec alphas(static_cast<Eigen::Index>(f.m));
  for (std::size_t i = 0; i < f.m; ++i) alphas[static_cast<Eigen::Index>(i)] = f.alpha(i);
  out["adapted_frame"] = {{"X", mat_json(f.X)}, {"alpha", vec_json(alphas)}, {"X_alpha2", mat_json(f.X_alpha2)}};
  if (t.N >= 1 && f.m == f.n()) out["recovered_beta"] = vec_json(recover_betas(distinct_eigenvalues(t)));
  out["P"] = polynomial_json(fiber_P(f));
  out["hP"] = polynomial_json(fiber_hP(f));
  FirstDivisibility d1 = first_divisibility(f, tol);
  out["first_divisibility"] = {{"holds", d1.holds},
                               {"quotient", polynomial_json(d1.quotient)},
                               {"residual", d1.residual},
                               {"relative_residual", d1.relative_residual},
                               {"pi_mismatch", d1.pi_mismatch}};
  if (!d1.holds) {
    out["R"] = "undefined (first divisibility fails)";
  } else {
    Json R = Json::array();
    for (std::size_t j = 0; j < f.m; ++j) R.push_back(polynomial_json(fiber_R(f, j)));
    out["R"] = R;
  }
  if (f.n() == f.m + 1) {
    Json Q = Json::array();
    for (std::size_t j = 0; j < f.m; ++j) Q.push_back(polynomial_json(fiber_Q(f, j, f.m)));
    out["Q"] = Q;
    SecondDivisibility d2 = second_divisibility(f, tol);
    Json rows = Json::array();
    for (std::size_t a = 0; a < d2.applicable.size(); ++a)
      rows.push_back({{"j", d2.applicable[a]}, {"holds", static_cast<bool>(d2.holds[a])}, {"residual", d2.residuals[a]}});
    out["second_divisibility"] = {{"per_j", rows}, {"holds", d2.all_hold()}, {"quotient_spread", d2.quotient_spread}};
  }
  RelationResiduals r = forced_relations(f, tol);
  out["relations"] = {{"ratio_derivative", r.ratio_derivative},
                      {"cross_derivative", r.cross_derivative},
                      {"mixed_derivative", r.mixed_derivative},
                      {"cyclic_structure", r.cyclic_structure},
                      {"transverse_equal", r.transverse_equal},
                      {"transverse_gap", r.transverse_gap},
                      {"equal_on_transverse", r.equal_on_transverse},
                      {"shared_derivative", r.shared_derivative},
                      {"shared_applicable", r.shared_applicable}};
  return out;
}

inline Json verify_config_json(const VerifyOptions& o) {
  return {{"samples", o.samples},
          {"seed", o.seed},
          {"T", o.T},
          {"tol_curve", o.tol_curve},
          {"abnormal_cone", o.abnormal_cone ? Json(*o.abnormal_cone) : Json(nullptr)},
          {"margin", o.margin},
          {"ode", ode_json(o.ode)},
          {"threads", o.threads},
          {"max_attempts", o.max_attempts}};
}

inline Json equivalence_json(const EquivalenceReport& r) {
  Json recs = Json::array();
  for (const auto& s : r.records) {
    Json j = {{"index", s.index}, {"clipped", s.clipped}, {"rejected_draws", s.rejected}};
    if (!s.error.empty()) {
      j["error"] = s.error;
    } else {
      j.update({{"q", vec_json(s.q)},
                {"p", vec_json(s.p)},
                {"p_image", vec_json(s.p_image)},
                {"a", s.a},
                {"T1", s.T1},
                {"T2", s.T2},
                {"deviation", number_json(s.deviation)},
                {"length1", s.length1},
                {"length2", s.length2},
                {"energy_drift1", s.drift1},
                {"energy_drift2", s.drift2},
                {"h2_image_error", s.h2_image_error},
                {"collinearity", s.collinearity}});
    }
    recs.push_back(j);
  }
  return {{"verdict", to_string(r.verdict)},
          {"distribution", to_string(r.distribution)},
          {"accepted", r.accepted},
          {"clipped", r.clipped},
          {"failed", r.failed},
          {"max_deviation", r.max_deviation},
          {"median_deviation", r.median_deviation},
          {"samples", recs}};
}

inline Json trajectory_json(const Trajectory& tr) {
  Json t = Json::array(), q = Json::array(), p = Json::array(), h = Json::array();
  for (std::size_t k = 0; k < tr.samples.size(); ++k) {
    t.push_back(tr.times[k]);
    q.push_back(vec_json(tr.samples[k].q));
    p.push_back(vec_json(tr.samples[k].p));
    h.push_back(tr.h_values[k]);
  }
  return {{"metric", tr.metric_tag}, {"clipped", tr.clipped}, {"t", t}, {"q", q}, {"p", p}, {"h", h},
          {"energy_drift", energy_drift(tr)}};
}

}  // namespace geoequiv
