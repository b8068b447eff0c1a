#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "geoequiv/manifest.hpp"

using namespace geoequiv;
using namespace fixtures;

namespace {

void expect_field(const VectorField& f, const Vec& q, const Vec& expected, double tol = 1e-14) {
  Vec v = evaluate(f, q);
  EXPECT_LE((v - expected).norm(), tol) << v.transpose();
}

}  // namespace

TEST(LieBracket, CoordinateFieldsCommute) {
  std::vector<std::string> xy{"x", "y"};
  VectorField dx{parse("1", xy), parse("0", xy)}, dy{parse("0", xy), parse("1", xy)};
  VectorField b = lie_bracket(dx, dy);
  EXPECT_TRUE(b[0].is_zero());
  EXPECT_TRUE(b[1].is_zero());
}

TEST(LieBracket, Heisenberg) {
  GeometryModel m = heisenberg_conformal("1");
  VectorField b = lie_bracket(m.frame[0], m.frame[1]);
  for (const Vec& q : probe_points(m.domain)) expect_field(b, q, vec({0, 0, 1}));
}

TEST(LieBracket, ShearField) {
  std::vector<std::string> xy{"x", "y"};
  VectorField dx{parse("1", xy), parse("0", xy)}, xdy{parse("0", xy), parse("x", xy)};
  expect_field(lie_bracket(dx, xdy), vec({0.3, -2}), vec({0, 1}));
}

TEST(StructureFunctions, FlatFrameVanishes) {
  GeometryModel m = plane({{"1", "0"}, {"0", "1"}});
  StructureFunctions sf(m);
  StructureTensor c = sf.at(vec({0.2, 0.4}));
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(c(j, i, k), 0.0);
}

TEST(StructureFunctions, HeisenbergSigns) {
  GeometryModel m = heisenberg_conformal("1");
  StructureFunctions sf(m);
  for (const Vec& q : probe_points(m.domain)) {
    StructureTensor c = sf.at(q);
    EXPECT_NEAR(c(1, 0, 2), 1.0, 1e-14);   // [X1, X2] = X3
    EXPECT_NEAR(c(0, 1, 2), -1.0, 1e-14);
    EXPECT_NEAR(c(1, 0, 0), 0.0, 1e-14);
    EXPECT_NEAR(c(1, 0, 1), 0.0, 1e-14);
    EXPECT_NEAR(c(2, 0, 2), 0.0, 1e-14);
  }
}

TEST(StructureFunctions, QuasiContactFrame) {
  GeometryModel m = build_quasi_contact(quasi_contact_spec());
  StructureFunctions sf(m);
  for (const Vec& q : probe_points(m.domain)) {
    StructureTensor c = sf.at(q);
    EXPECT_NEAR(c(1, 0, 3), 1.0, 1e-14);   // [X1, X2] = dz = X4
    EXPECT_NEAR(c(0, 1, 3), -1.0, 1e-14);
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(c(2, i, k), 0.0, 1e-14);
  }
}

TEST(StructureFunctions, AntisymmetryAndJacobi) {
  std::vector<std::string> xyz{"x", "y", "z"};
  GeometryModel m = model(xyz, 3,
                          {{"1", "sin(z)", "0"}, {"0", "1 + x*x/4", "y"}, {"x*y/5", "0", "2 + cos(x)"}},
                          {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}},
                          {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}}, box({-1, -1, -1}, {1, 1, 1}));
  StructureFunctions sf(m);
  ProbeOptions opt;
  for (const Vec& q : probe_points(m.domain, opt)) {
    StructureTensor c = sf.at(q);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(c(j, i, k), -c(i, j, k), 1e-10);
  }
  // Jacobi identity on the symbolic brackets
  const auto& F = m.frame;
  VectorField jac(3, ScalarExpr::constant(0.0));
  for (int r = 0; r < 3; ++r) {
    VectorField t = lie_bracket(F[r], lie_bracket(F[(r + 1) % 3], F[(r + 2) % 3]));
    for (std::size_t k = 0; k < 3; ++k) jac[k] = jac[k] + t[k];
  }
  for (const Vec& q : probe_points(m.domain)) EXPECT_LE(evaluate(jac, q).norm(), 1e-8);
}

TEST(StructureFunctions, SingularFrameRaises) {
  GeometryModel m = plane({{"1", "0"}, {"0", "1"}});
  m.frame[1] = {parse("x", m.coords), parse("0", m.coords)};
  EXPECT_THROW(StructureFunctions(m).at(vec({0.5, 0.5})), NumericError);
}

TEST(Classify, Heisenberg) { EXPECT_EQ(classify_distribution(heisenberg_conformal("1")).tag, DistributionTag::Contact); }

TEST(Classify, QuasiContactAbnormalDirection) {
  GeometryModel m = build_quasi_contact(quasi_contact_spec());
  DistributionType t = classify_distribution(m);
  ASSERT_EQ(t.tag, DistributionTag::QuasiContact);
  for (const Vec& q : probe_points(m.domain)) {
    Vec a = evaluate(t.abnormal, q);
    ASSERT_GT(a.norm(), 0.0);
    a /= a.norm();
    EXPECT_NEAR(std::abs(a[3]), 1.0, 1e-12);
  }
}

TEST(Classify, Riemannian) { EXPECT_EQ(classify_distribution(dini_flat()).tag, DistributionTag::Full); }

TEST(Classify, InvariantUnderDFrameRescaling) {
  GeometryModel m = heisenberg_conformal("1");
  for (std::size_t a = 0; a < 2; ++a)
    for (auto& comp : m.frame[a]) comp = comp * parse("2 + sin(x*y)", m.coords);
  EXPECT_EQ(classify_distribution(m).tag, DistributionTag::Contact);
  GeometryModel qc = build_quasi_contact(quasi_contact_spec());
  for (auto& comp : qc.frame[2]) comp = comp * parse("1 + x*x", qc.coords);
  EXPECT_EQ(classify_distribution(qc).tag, DistributionTag::QuasiContact);
}

TEST(Classify, MixedRankIsOther) {
  // D = span(dx, dy + x^2 dz): contact away from x = 0 only
  GeometryModel m = model({"x", "y", "z"}, 2, {{"1", "0", "0"}, {"0", "1", "x*x"}, {"0", "0", "1"}},
                          {{"1", "0"}, {"0", "1"}}, {{"1", "0"}, {"0", "1"}}, box({-1, -1, -1}, {1, 1, 1}));
  DistributionType t = classify_distribution(m);
  EXPECT_EQ(t.tag, DistributionTag::Other);
  EXPECT_FALSE(t.diagnostic.empty());
}

TEST(Orthonormalize, DiagonalGram) {
  GeometryModel m = plane({{"1", "0"}, {"0", "1"}}, {{"4", "0"}, {"0", "1"}});
  Mat E = orthonormalize(m).at(vec({0.1, 0.2}));
  EXPECT_NEAR(E(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(E(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(E(1, 0), 0.0, 1e-15);
}

TEST(Orthonormalize, IdentityGramKeepsFrame) {
  GeometryModel m = heisenberg_conformal("1");
  Vec q = vec({0.3, -0.2, 0.1});
  Mat E = orthonormalize(m).at(q);
  EXPECT_LE((E - frame_matrix(m, q).leftCols(2)).norm(), 1e-15);
}

TEST(Orthonormalize, RandomConstantGram) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  Mat A(3, 3);
  for (int i = 0; i < 9; ++i) A(i / 3, i % 3) = g(rng);
  Mat G = A * A.transpose() + 0.5 * Mat::Identity(3, 3);
  std::vector<std::vector<std::string>> gs(3, std::vector<std::string>(3));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) gs[i][j] = detail::format_number(G(i, j));
  GeometryModel m = model({"x", "y", "z"}, 3, {{"1", "0", "0"}, {"0", "1", "0"}, {"0", "0", "1"}}, gs, gs,
                          box({-1, -1, -1}, {1, 1, 1}));
  Mat E = orthonormalize(m).at(vec({0, 0, 0}));
  EXPECT_LE((E.transpose() * G * E - Mat::Identity(3, 3)).norm(), 1e-12);
}

TEST(Orthonormalize, VariableGramAtRandomPoints) {
  GeometryModel m = levi_civita_3d();
  ProbeOptions opt;
  opt.max_grid = 1;
  Orthonormalizer on(m);
  for (const Vec& q : probe_points(m.domain, opt)) {
    Mat E = on.at(q);
    Mat F = frame_matrix(m, q);
    // coefficients of E on the frame, then Gram
    Mat C = F.fullPivLu().solve(E);
    Mat G = evaluate(m.gram1, q);
    EXPECT_LE((C.transpose() * G * C - Mat::Identity(3, 3)).norm(), 1e-10);
  }
}

TEST(Validate, RejectsIndefiniteGram) {
  GeometryModel m = plane({{"1", "0"}, {"0", "x"}});
  try {
    validate_model(m);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.path(), "gram2");
  }
}

TEST(Validate, RejectsDependentFrame) {
  GeometryModel m = plane({{"1", "0"}, {"0", "1"}});
  m.frame[1] = {parse("1", m.coords), parse("0", m.coords)};
  EXPECT_THROW(validate_model(m), ModelError);
}

TEST(Manifest, RoundTrip) {
  GeometryModel m = gendini2();
  Json j = model_to_json(m);
  GeometryModel back = model_from_json(j);
  EXPECT_EQ(model_to_json(back).dump(), j.dump());
  Vec q = vec({0.2, 0.1});
  EXPECT_LE((evaluate(back.gram2, q) - evaluate(m.gram2, q)).norm(), 1e-14);
  ASSERT_TRUE(back.domain.annulus.has_value());
  EXPECT_DOUBLE_EQ(back.domain.annulus->r_min, 0.1);
}

TEST(Manifest, FieldPathErrors) {
  Json j = model_to_json(heisenberg_conformal("1"));
  Json bad = j;
  bad["gram1"][1][0] = "x + ";
  try {
    model_from_json(bad);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.path(), "gram1[1][0]");
  }
  bad = j;
  bad.erase("rank");
  try {
    model_from_json(bad);
    FAIL();
  } catch (const ModelError& e) {
    EXPECT_EQ(e.path(), "rank");
  }
  bad = j;
  bad["frame"].erase(2);
  EXPECT_THROW(model_from_json(bad), ModelError);
}

TEST(Domain, AnnulusMembershipAndSampling) {
  GeometryModel m = gendini1();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    Vec q = m.domain.sample(rng);
    double r = q.norm();
    EXPECT_GE(r, 0.1);
    EXPECT_LE(r, 0.4);
  }
  EXPECT_FALSE(m.domain.contains(vec({0.0, 0.0})));
  EXPECT_TRUE(m.domain.contains(vec({0.2, 0.0})));
  EXPECT_FALSE(m.domain.shrunk(0.2).contains(vec({0.11, 0.0})));
}
