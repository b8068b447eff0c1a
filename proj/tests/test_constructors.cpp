#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "geoequiv/pair_analysis.hpp"
#include "geoequiv/params.hpp"

using namespace geoequiv;
using namespace fixtures;

namespace {

std::vector<Vec> random_points(const Domain& d, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) out.push_back(d.sample(rng));
  return out;
}

Json params(const std::string& name) { return read_json_file(std::string(GEOEQUIV_PARAMS) + "/" + name); }

}  // namespace

TEST(LeviCivita, ConstantBetasExample) {
  LeviCivitaSpec s;
  s.blocks.push_back({{"x1"}, {{t_expr("1")}}, t_expr("1")});
  s.blocks.push_back({{"x2"}, {{t_expr("1")}}, t_expr("2")});
  s.domain = box({-1, -1}, {1, 1});
  s.q0 = vec({0, 0});
  GeometryModel m = build_levi_civita(s);
  Vec q = vec({0.3, 0.4});
  EXPECT_LE((evaluate(m.gram1, q) - 0.5 * Mat::Identity(2, 2)).norm(), 1e-15);
  EXPECT_LE((evaluate(m.gram2, q) - Mat(Eigen::Vector2d(1, 2).asDiagonal())).norm(), 1e-15);
}

TEST(LeviCivita, IdenticalBetasRejected) {
  LeviCivitaSpec s;
  s.blocks.push_back({{"x1"}, {{t_expr("1")}}, t_expr("2")});
  s.blocks.push_back({{"x2"}, {{t_expr("1")}}, t_expr("2")});
  s.domain = box({-1, -1}, {1, 1});
  s.q0 = vec({0, 0});
  EXPECT_THROW(build_levi_civita(s), ArgumentError);
}

TEST(LeviCivita, NonConstantBetaOnWideBlockRejected) {
  std::vector<std::string> ab{"a", "b"};
  LeviCivitaSpec s;
  s.blocks.push_back({{"x1", "x2"}, exprs({{"1", "0"}, {"0", "1"}}, ab), parse("1 + a/10", ab)});
  s.blocks.push_back({{"x3"}, {{t_expr("1")}}, t_expr("3")});
  s.domain = box({-1, -1, -1}, {1, 1, 1});
  s.q0 = Vec::Zero(3);
  EXPECT_THROW(build_levi_civita(s), ArgumentError);
}

TEST(LeviCivita, ValidatesAndPassesRelations) {
  for (const GeometryModel& m : {levi_civita_2d(), levi_civita_3d()}) {
    EXPECT_NO_THROW(validate_model(m));
    for (const Vec& q : random_points(m.domain, 20, 1)) {
      RelationResiduals r = forced_relations(AdaptedFrame(m, q).at(q));
      EXPECT_LT(std::max({r.ratio_derivative, r.cross_derivative, r.mixed_derivative, r.cyclic_structure}), 1e-8);
    }
  }
}

TEST(LeviCivita, EigenvaluesAndBetaRecovery) {
  GeometryModel m = levi_civita_3d();
  for (const Vec& q : random_points(m.domain, 50, 2)) {
    double b1 = 1.5, b2 = 3 + q[2] / 4;
    TransitionSpectrum t = transition_operator(m, q);
    ASSERT_EQ(t.N, 2u);
    Vec lam = distinct_eigenvalues(t);
    double prod = b1 * b2;
    EXPECT_NEAR(lam[0], b1 * prod, 1e-8 * lam[0]);
    EXPECT_NEAR(lam[1], b2 * prod, 1e-8 * lam[1]);
    Vec b = recover_betas(lam);
    EXPECT_NEAR(b[0], b1, 1e-6 * b1);
    EXPECT_NEAR(b[1], b2, 1e-6 * b2);
  }
}

TEST(Dini, FlatPair) {
  GeometryModel m = dini_flat();
  Vec q = vec({0.1, -0.7});
  EXPECT_LE((evaluate(m.gram1, q) - 0.5 * Mat::Identity(2, 2)).norm(), 1e-15);
  EXPECT_LE((evaluate(m.gram2, q) - Mat(Eigen::Vector2d(1, 2).asDiagonal())).norm(), 1e-15);
}

TEST(Dini, AgreesWithLeviCivita) {
  LeviCivitaSpec s;
  s.blocks.push_back({{"x1"}, {{t_expr("1")}}, t_expr("1 + t/10")});
  s.blocks.push_back({{"x2"}, {{t_expr("1")}}, t_expr("2 + t/10")});
  s.domain = box({-1, -1}, {1, 1});
  s.q0 = vec({0, 0});
  GeometryModel lc = build_levi_civita(s), d = dini_linear();
  for (const Vec& q : random_points(d.domain, 20, 3)) {
    EXPECT_LE((evaluate(lc.gram1, q) - evaluate(d.gram1, q)).norm(), 1e-12);
    EXPECT_LE((evaluate(lc.gram2, q) - evaluate(d.gram2, q)).norm(), 1e-12);
  }
}

TEST(Dini, OrderingViolationRejected) {
  EXPECT_THROW(build_dini(t_expr("2"), t_expr("2"), box({-1, -1}, {1, 1})), ArgumentError);
  EXPECT_THROW(build_dini(t_expr("1 + t"), t_expr("1.5"), box({-1, -1}, {1, 1})), ArgumentError);
}

TEST(GenDini, Case1ConformalFactorPositive) {
  GeometryModel m = gendini1();
  EXPECT_NO_THROW(validate_model(m));
  for (const Vec& q : probe_points(m.domain)) {
    Mat G1 = evaluate(m.gram1, q);
    EXPECT_GT(G1(0, 0), 0.0);
    EXPECT_EQ(G1(0, 1), 0.0);
  }
}

TEST(GenDini, Case1HypothesesChecked) {
  EXPECT_THROW(build_gendini_case1(t_expr("1 - t"), t_expr("2 + t"), 0.1, 0.4), ArgumentError);
  EXPECT_THROW(build_gendini_case1(t_expr("1 - t"), t_expr("1 + 2*t"), 0.1, 0.4), ArgumentError);
  EXPECT_THROW(build_gendini_case1(t_expr("1 + t"), t_expr("1 - t"), 0.1, 0.4), ArgumentError);
}

TEST(GenDini, Case1MatchesPolarForm) {
  // G1 = (1/U - 1/V)/(4r) (dr^2 + r^2 dtheta^2), G2 = S/(4r) [A (dr^2 + r^2 dth^2)/2 ... ] checked through
  // its polar components: G2(dr, dr) = S (A - S cos th) / (8 r), G2(r dth, r dth) = S (A + S cos th) / (8 r),
  // G2(dr, r dth) = S^2 sin th / (8 r)
  GeometryModel m = gendini1();
  for (const Vec& q : random_points(m.domain, 20, 4)) {
    double r = q.norm(), th = std::atan2(q[1], q[0]);
    double U = 1 - r * std::cos(th / 2) * std::cos(th / 2), V = 1 + r * std::sin(th / 2) * std::sin(th / 2);
    double A = U + V, S = V - U;
    Mat J(2, 2);  // columns: d/dr, (1/r) d/dtheta in Cartesian components
    J << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    Mat G1 = J.transpose() * evaluate(m.gram1, q) * J, G2 = J.transpose() * evaluate(m.gram2, q) * J;
    double f1 = (1 / U - 1 / V) / (4 * r);
    EXPECT_NEAR(G1(0, 0), f1, 1e-12);
    EXPECT_NEAR(G1(1, 1), f1, 1e-12);
    EXPECT_NEAR(G2(0, 0), S * (A - S * std::cos(th)) / (8 * r), 1e-12);
    EXPECT_NEAR(G2(1, 1), S * (A + S * std::cos(th)) / (8 * r), 1e-12);
    EXPECT_NEAR(G2(0, 1), S * S * std::sin(th) / (8 * r), 1e-12);
  }
}

TEST(GenDini, Case2Eigenvalues) {
  GeometryModel m = gendini2();
  for (const Vec& q : random_points(m.domain, 50, 5)) {
    double r2 = q.squaredNorm();
    TransitionSpectrum t = transition_operator(m, q);
    EXPECT_NEAR(t.eigenvalues[0], 1 + r2, 1e-8);
    EXPECT_NEAR(t.eigenvalues[1], (1 + r2) * (1 + r2), 1e-8);
  }
}

TEST(GenDini, Case2HypothesesChecked) {
  EXPECT_THROW(build_gendini_case2(t_expr("1 + t"), 1, 1, 0.1, 0.4), ArgumentError);
  EXPECT_THROW(build_gendini_case2(t_expr("2 + t*t"), 1, 1, 0.1, 0.4), ArgumentError);
  EXPECT_THROW(build_gendini_case2(t_expr("1 + t^4"), 1, 1, 0.1, 0.4), ArgumentError);
  EXPECT_THROW(build_gendini_case2(t_expr("1 + t*t"), 1, 1, 0.5, 0.4), ArgumentError);
}

TEST(QuasiContact, RejectsDegenerateConstants) {
  QuasiContactSpec s = quasi_contact_spec();
  s.C2 = 0.0;
  EXPECT_THROW(build_quasi_contact(s), ArgumentError);
  s = quasi_contact_spec();
  s.C1 = -1.0;
  EXPECT_THROW(build_quasi_contact(s), ArgumentError);
  s = quasi_contact_spec();
  s.C2 = -1.0;
  EXPECT_THROW(build_quasi_contact(s), ArgumentError);
  s = quasi_contact_spec();
  s.beta = t_expr("2");
  EXPECT_THROW(build_quasi_contact(s), ArgumentError);
  s = quasi_contact_spec();
  s.C2 = -0.9;
  s.beta = t_expr("exp(3*t)");  // 1 - 0.9 e^3 < 0 at w = 1
  EXPECT_THROW(build_quasi_contact(s), ArgumentError);
}

TEST(QuasiContact, LeafMetricAtZero) {
  GeometryModel m = build_quasi_contact(quasi_contact_spec());
  Vec q = vec({0.3, -0.2, 0.5, 0});
  Mat G1 = evaluate(m.gram1, q), G2 = evaluate(m.gram2, q);
  EXPECT_LE((G2.topLeftCorner(2, 2) - 0.5 * G1.topLeftCorner(2, 2)).norm(), 1e-15);
  EXPECT_NEAR(G2(2, 2), 0.25, 1e-15);
  EXPECT_NEAR(G1(2, 2), 1.0, 1e-15);
}

TEST(QuasiContact, StructuralConditions) {
  QuasiContactSpec s = quasi_contact_spec();
  GeometryModel m = build_quasi_contact(s);
  EXPECT_NO_THROW(validate_model(m));
  QuasiContactCheck c = check_quasi_contact(m, s);
  EXPECT_LT(c.orthogonal_complements, 1e-10);
  EXPECT_LT(c.closure, 1e-10);
  EXPECT_LT(c.flow_invariance, 1e-10);
  EXPECT_LT(c.leaf_tangency, 1e-10);
  EXPECT_LT(c.g2_on_leaf, 1e-10);
  EXPECT_LT(c.g2_abnormal, 1e-10);
  EXPECT_EQ(classify_distribution(m).tag, DistributionTag::QuasiContact);
}

TEST(QuasiContact, HigherDimensionalAndCurvedLeafMetric) {
  QuasiContactSpec s = quasi_contact_spec();
  s.k = 2;
  s.C2 = -0.3;
  s.beta = t_expr("1 + t/3");
  std::vector<std::string> h{"x1", "x2", "y1", "y2", "z"};
  s.gbar = exprs({{"1 + x1*x1/4", "0", "0", "0"},
                  {"0", "1", "0", "0"},
                  {"0", "0", "1 + z*z/4", "0.1"},
                  {"0", "0", "0.1", "1"}},
                 h);
  s.domain = box({-1, -1, -1, -1, -1, -1}, {1, 1, 1, 1, 1, 1});
  GeometryModel m = build_quasi_contact(s);
  EXPECT_NO_THROW(validate_model(m));
  EXPECT_EQ(classify_distribution(m).tag, DistributionTag::QuasiContact);
  EXPECT_LT(check_quasi_contact(m, s).max(), 1e-10);
  for (const Vec& q : random_points(m.domain, 10, 6)) {
    FramePoint f = AdaptedFrame(m, q).at(q);
    EXPECT_TRUE(first_divisibility(f).holds);
    EXPECT_TRUE(second_divisibility(f).all_hold());
  }
}

TEST(Beltrami, SymbolicPullback) {
  GeometryModel m = build_beltrami();
  for (const Vec& q : random_points(m.domain, 20, 7)) {
    double x = q[0], y = q[1], w = 1 + x * x + y * y;
    Mat expected(2, 2);
    expected << (1 + y * y) / (w * w), -x * y / (w * w), -x * y / (w * w), (1 + x * x) / (w * w);
    EXPECT_LE((evaluate(m.gram2, q) - expected).norm(), 1e-14);
  }
  EXPECT_LE((evaluate(m.gram2, vec({0, 0})) - Mat::Identity(2, 2)).norm(), 1e-15);
}

TEST(Beltrami, TransitionSpectrumRegression) {
  GeometryModel m = build_beltrami();
  EXPECT_EQ(transition_operator(m, vec({0, 0})).N, 1u);
  TransitionSpectrum t = transition_operator(m, vec({0.3, 0.4}));
  EXPECT_EQ(t.N, 2u);
  double w = 1.25;
  EXPECT_NEAR(t.eigenvalues[0], 1 / (w * w), 1e-14);
  EXPECT_NEAR(t.eigenvalues[1], 1 / w, 1e-14);
}

TEST(Params, AllSampleFilesBuild) {
  for (const auto& kind : constructor_names()) {
    GeometryModel m = build_from_params(kind, params(kind + ".json"));
    EXPECT_NO_THROW(validate_model(m)) << kind;
  }
}

TEST(Params, FieldPaths) {
  Json j = params("levi-civita.json");
  j["blocks"][1]["beta"] = "3 + ";
  try {
    build_from_params("levi-civita", j);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.path(), "blocks[1].beta");
  }
  Json d = params("dini.json");
  d.erase("beta2");
  try {
    build_from_params("dini", d);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.path(), "beta2");
  }
  EXPECT_THROW(build_from_params("nope", Json::object()), ArgumentError);
}
