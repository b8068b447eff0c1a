#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "geoequiv/geoequiv.hpp"

using namespace geoequiv;

namespace {

enum Exit { kOk = 0, kUsage = 1, kFail = 2, kInconclusive = 3, kInvalidModel = 4 };

struct Output {
  std::string format = "text";
  std::string path;

  void emit(const std::string& text) const {
    if (path.empty()) {
      std::cout << text;
      std::cout.flush();
    } else {
      write_text_file(path, text);
    }
  }
  void emit(const Json& report) const { emit(report.dump(2) + "\n"); }
};

void add_output(CLI::App* cmd, Output& out, std::vector<std::string> formats) {
  std::string def = formats.front();
  out.format = def;
  cmd->add_option("--format", out.format, "Output format")->check(CLI::IsMember(formats))->capture_default_str();
  cmd->add_option("--out", out.path, "Write to this file instead of stdout");
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt(const Vec& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

GeometryModel load_checked(const std::string& path) {
  GeometryModel m = load_model(path);
  validate_model(m);
  return m;
}

Vec point_arg(const GeometryModel& m, const std::vector<double>& q, const std::string& name) {
  if (q.size() != m.dim())
    throw ArgumentError(name + " needs " + std::to_string(m.dim()) + " coordinates, got " + std::to_string(q.size()));
  return to_vec(q);
}

// generate

struct GenerateArgs {
  std::string kind, params;
  Output out;
};

int run_generate(const GenerateArgs& a) {
  Json params = read_json_file(a.params);
  GeometryModel m;
  try {
    m = build_from_params(a.kind, params);
  } catch (const ArgumentError& e) {
    throw ModelError(a.params, e.what());
  }
  validate_model(m);
  Json manifest = model_to_json(m);
  if (a.out.format == "json") {
    a.out.emit(manifest);
  } else {
    std::ostringstream s;
    s << "kind: " << a.kind << "\ncoords: " << m.coords.size() << "\nrank: " << m.rank
      << "\ndistribution: " << to_string(classify_distribution(m).tag) << "\n";
    s << manifest.dump(2) << "\n";
    a.out.emit(s.str());
  }
  return kOk;
}

// analyze

struct AnalyzeArgs {
  std::string model;
  std::vector<double> at;
  double radius = 0.05, tol = 1e-8;
  Output out;
};

int run_analyze(const AnalyzeArgs& a) {
  GeometryModel m = load_checked(a.model);
  Vec q = point_arg(m, a.at, "--at");
  if (!m.domain.contains(q)) throw ArgumentError("--at " + fmt(q) + " lies outside the model domain");
  Json result = analyze_point(m, q, a.radius, a.tol);
  Json config = {{"model", a.model}, {"at", vec_json(q)}, {"radius", a.radius}, {"tol", a.tol}};
  if (a.out.format == "json") {
    a.out.emit(make_report("analyze", config, result));
    return kOk;
  }
  std::ostringstream s;
  s << "point: " << fmt(q) << "\n";
  s << "distribution: " << result["distribution"].get<std::string>() << "\n";
  s << "transition eigenvalues: " << result["transition"]["eigenvalues"].dump() << "\n";
  s << "N: " << result["transition"]["N"].get<std::size_t>() << "\n";
  const Json& reg = result["regularity"];
  s << "regular within radius " << fmt(a.radius) << ": " << (reg["regular"].get<bool>() ? "yes" : "no")
    << " (N values " << reg["N_values"].dump() << ")\n";
  if (result["adapted_frame"].contains("error")) {
    s << "adapted frame: " << result["adapted_frame"]["error"].get<std::string>() << "\n";
  } else {
    if (result.contains("recovered_beta")) s << "recovered beta: " << result["recovered_beta"].dump() << "\n";
    s << "P: " << result["P"]["text"].get<std::string>() << "\n";
    const Json& d1 = result["first_divisibility"];
    s << "first divisibility: " << (d1["holds"].get<bool>() ? "holds" : "fails")
      << " (relative residual " << fmt(d1["relative_residual"].get<double>()) << ")\n";
    if (result["R"].is_array())
      for (std::size_t j = 0; j < result["R"].size(); ++j)
        s << "R_" << j + 1 << ": " << result["R"][j]["text"].get<std::string>() << "\n";
    if (result.contains("second_divisibility"))
      s << "second divisibility: " << (result["second_divisibility"]["holds"].get<bool>() ? "holds" : "fails") << "\n";
    const Json& r = result["relations"];
    double worst = std::max({r["ratio_derivative"].get<double>(), r["cross_derivative"].get<double>(),
                             r["mixed_derivative"].get<double>(), r["cyclic_structure"].get<double>()});
    s << "relation residual: " << fmt(worst) << "\n";
    if (r["shared_applicable"].get<bool>())
      s << "transverse eigenvalue derivative: " << fmt(r["shared_derivative"].get<double>()) << "\n";
  }
  a.out.emit(s.str());
  return kOk;
}

// geodesic

struct GeodesicArgs {
  std::string model;
  int metric = 1;
  std::vector<double> q, p;
  double T = 1.0, tol = 1e-10, max_step = 1e-2;
  Output out;
};

int run_geodesic(const GeodesicArgs& a) {
  GeometryModel m = load_checked(a.model);
  CovectorPoint l0{point_arg(m, a.q, "--q"), point_arg(m, a.p, "--p")};
  if (!m.domain.contains(l0.q)) throw ArgumentError("--q " + fmt(l0.q) + " lies outside the model domain");
  OdeOptions ode;
  ode.tol = a.tol;
  ode.max_step = a.max_step;
  Trajectory tr = integrate(m, a.metric, l0, a.T, ode);
  if (a.out.format == "csv") {
    a.out.emit(trajectory_csv(tr));
  } else if (a.out.format == "json") {
    Json config = {{"model", a.model}, {"metric", a.metric}, {"q", vec_json(l0.q)}, {"p", vec_json(l0.p)},
                   {"T", a.T}, {"ode", ode_json(ode)}};
    a.out.emit(make_report("geodesic", config, trajectory_json(tr)));
  } else {
    std::ostringstream s;
    s << "metric: G" << a.metric << "\nsamples: " << tr.samples.size() << "\nend time: " << fmt(tr.times.back())
      << "\nend point: " << fmt(tr.samples.back().q) << "\nenergy: " << fmt(tr.h_values.front())
      << "\nenergy drift: " << fmt(energy_drift(tr)) << "\nchart length: " << fmt(chart_length(tr))
      << "\nclipped: " << (tr.clipped ? "yes" : "no") << "\n";
    a.out.emit(s.str());
  }
  return kOk;
}

// verify

struct VerifyArgs {
  std::string model;
  VerifyOptions opt;
  double cone = -1.0;
  bool swap = false;
  Output out;
};

int run_verify(VerifyArgs a) {
  GeometryModel m = load_checked(a.model);
  if (a.swap) m = swap_metrics(m);
  a.opt.abnormal_cone = a.cone >= 0.0 ? std::optional<double>(a.cone) : std::nullopt;
  EquivalenceReport r = verify_equivalence(m, a.opt);
  Json config = verify_config_json(a.opt);
  config["model"] = a.model;
  config["swap"] = a.swap;
  if (a.out.format == "json") {
    a.out.emit(make_report("verify", config, equivalence_json(r)));
  } else {
    std::ostringstream s;
    s << "verdict: " << to_string(r.verdict) << "\ndistribution: " << to_string(r.distribution)
      << "\nsamples: " << r.records.size() << " (accepted " << r.accepted << ", clipped " << r.clipped << ", failed "
      << r.failed << ")\nmax deviation: " << fmt(r.max_deviation) << "\nmedian deviation: " << fmt(r.median_deviation)
      << "\ntolerance: " << fmt(a.opt.tol_curve) << "\n";
    a.out.emit(s.str());
  }
  switch (r.verdict) {
    case Verdict::Pass:
      return kOk;
    case Verdict::Fail:
      return kFail;
    default:
      return kInconclusive;
  }
}

// check-relations

struct RelationsArgs {
  std::string model;
  std::vector<double> at;
  std::size_t points = 50;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  Output out;
};

int run_check_relations(const RelationsArgs& a) {
  GeometryModel m = load_checked(a.model);
  std::vector<Vec> pts;
  if (!a.at.empty()) {
    pts.push_back(point_arg(m, a.at, "--at"));
  } else {
    ProbeOptions po;
    po.random_points = a.points;
    po.seed = a.seed;
    po.max_grid = 0;
    pts = probe_points(m.domain, po);
  }
  std::size_t skipped = 0, first_fail = 0, second_fail = 0, second_checked = 0, relation_fail = 0;
  double worst_first = 0, worst_R = 0, worst_relation = 0, worst_acon = 0;
  Json rows = Json::array();
  for (const Vec& q : pts) {
    FramePoint f;
    try {
      f = AdaptedFrame(m, q).at(q);
    } catch (const NumericError& e) {
      ++skipped;
      rows.push_back({{"q", vec_json(q)}, {"skipped", e.what()}});
      continue;
    }
    Json row = {{"q", vec_json(q)}};
    FirstDivisibility d1 = first_divisibility(f, a.tol);
    worst_first = std::max(worst_first, d1.relative_residual);
    row["first_divisibility"] = d1.holds;
    row["first_residual"] = d1.relative_residual;
    if (!d1.holds) {
      ++first_fail;
    } else {
      double rmax = 0;
      for (std::size_t j = 0; j < f.m; ++j) rmax = std::max(rmax, fiber_R(f, j).max_abs());
      worst_R = std::max(worst_R, rmax);
      row["R_max"] = rmax;
      if (f.n() == f.m + 1) {
        ++second_checked;
        bool ok = second_divisibility(f, a.tol).all_hold();
        second_fail += !ok;
        row["second_divisibility"] = ok;
      }
    }
    RelationResiduals r = forced_relations(f, a.tol);
    double rel = std::max({r.ratio_derivative, r.cross_derivative, r.mixed_derivative, r.cyclic_structure});
    bool bad = rel > a.tol || !r.transverse_equal || !r.equal_on_transverse || (r.shared_applicable && r.shared_derivative > a.tol);
    relation_fail += bad;
    worst_relation = std::max(worst_relation, rel);
    if (r.shared_applicable) worst_acon = std::max(worst_acon, r.shared_derivative);
    row["relations"] = {{"residual", rel}, {"transverse_equal", r.transverse_equal}, {"equal_on_transverse", r.equal_on_transverse},
                        {"shared_derivative", r.shared_applicable ? Json(r.shared_derivative) : Json(nullptr)}, {"hold", !bad}};
    rows.push_back(row);
  }
  std::size_t checked = pts.size() - skipped;
  bool holds = checked > 0 && first_fail == 0 && second_fail == 0 && relation_fail == 0;
  Json summary = {{"points", pts.size()},
                  {"skipped", skipped},
                  {"first_divisibility_failures", first_fail},
                  {"second_divisibility_checked", second_checked},
                  {"second_divisibility_failures", second_fail},
                  {"relation_failures", relation_fail},
                  {"max_first_residual", worst_first},
                  {"max_R_coefficient", worst_R},
                  {"max_relation_residual", worst_relation},
                  {"max_transverse_derivative", worst_acon},
                  {"holds", holds},
                  {"per_point", rows}};
  if (a.out.format == "json") {
    Json config = {{"model", a.model}, {"points", a.points}, {"seed", a.seed}, {"tol", a.tol},
                   {"at", a.at.empty() ? Json(nullptr) : vec_json(to_vec(a.at))}};
    a.out.emit(make_report("check-relations", config, summary));
  } else {
    std::ostringstream s;
    s << "points: " << pts.size() << " (skipped " << skipped << ")\nfirst divisibility failures: " << first_fail
      << "\nsecond divisibility failures: " << second_fail << " of " << second_checked
      << "\nrelation failures: " << relation_fail << "\nmax R coefficient: " << fmt(worst_R)
      << "\nmax transverse derivative: " << fmt(worst_acon) << "\nresult: " << (holds ? "holds" : "violated") << "\n";
    a.out.emit(s.str());
  }
  return holds ? kOk : kFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geodesic equivalence of sub-Riemannian metric pairs"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Build a model manifest from constructor parameters");
  g->add_option("kind", gen.kind, "Constructor")->required()->check(CLI::IsMember(constructor_names()));
  g->add_option("--params", gen.params, "Parameter file (JSON)")->required();
  add_output(g, gen.out, {"json", "text"});

  AnalyzeArgs an;
  auto* a = app.add_subcommand("analyze", "Pointwise analysis of a metric pair");
  a->add_option("--model", an.model, "Model manifest")->required();
  a->add_option("--at", an.at, "Point coordinates")->required()->expected(1, -1);
  a->add_option("--radius", an.radius, "Regularity probe radius")->capture_default_str();
  a->add_option("--tol", an.tol, "Relative divisibility tolerance")->capture_default_str();
  add_output(a, an.out, {"text", "json"});

  GeodesicArgs ge;
  auto* d = app.add_subcommand("geodesic", "Integrate a normal geodesic");
  d->add_option("--model", ge.model, "Model manifest")->required();
  d->add_option("--metric", ge.metric, "Metric tag")->check(CLI::IsMember({1, 2}))->capture_default_str();
  d->add_option("--q", ge.q, "Initial point")->required()->expected(1, -1);
  d->add_option("--p", ge.p, "Initial covector")->required()->expected(1, -1);
  d->add_option("--T", ge.T, "Parameter length")->capture_default_str();
  d->add_option("--tol", ge.tol, "Integrator tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  d->add_option("--max-step", ge.max_step, "Maximum step")->check(CLI::PositiveNumber)->capture_default_str();
  add_output(d, ge.out, {"csv", "json", "text"});

  VerifyArgs ve;
  auto* v = app.add_subcommand("verify", "Sample geodesics of both metrics and compare the curves");
  v->add_option("--model", ve.model, "Model manifest")->required();
  v->add_option("--samples", ve.opt.samples, "Number of geodesic pairs")->capture_default_str();
  v->add_option("--seed", ve.opt.seed, "Random seed")->capture_default_str();
  v->add_option("--T", ve.opt.T, "Parameter length of the first metric's run")->capture_default_str();
  v->add_option("--tol", ve.opt.tol_curve, "Curve deviation tolerance")->capture_default_str();
  v->add_option("--ode-tol", ve.opt.ode.tol, "Integrator tolerance")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--max-step", ve.opt.ode.max_step, "Maximum integrator step")->check(CLI::PositiveNumber)->capture_default_str();
  v->add_option("--margin", ve.opt.margin, "Domain shrink fraction for base points")->check(CLI::Range(0.0, 0.99))->capture_default_str();
  v->add_option("--exclude-abnormal-cone", ve.cone, "Half-angle of the excluded cone around the abnormal direction")
      ->default_val(0.1)
      ->capture_default_str();
  v->add_option("--threads", ve.opt.threads, "Worker threads (0: all cores)")->capture_default_str();
  v->add_flag("--swap", ve.swap, "Exchange the two metrics");
  add_output(v, ve.out, {"text", "json"});

  RelationsArgs re;
  auto* r = app.add_subcommand("check-relations", "Check the divisibility conditions and their consequences");
  r->add_option("--model", re.model, "Model manifest")->required();
  r->add_option("--at", re.at, "Single point instead of random probes")->expected(1, -1);
  r->add_option("--points", re.points, "Number of random probe points")->capture_default_str();
  r->add_option("--seed", re.seed, "Random seed")->capture_default_str();
  r->add_option("--tol", re.tol, "Relative tolerance")->capture_default_str();
  add_output(r, re.out, {"text", "json"});

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*g) return run_generate(gen);
    if (*a) return run_analyze(an);
    if (*d) return run_geodesic(ge);
    if (*v) return run_verify(ve);
    if (*r) return run_check_relations(re);
  } catch (const ModelError& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return kInvalidModel;
  } catch (const ParseError& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return kInvalidModel;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}
