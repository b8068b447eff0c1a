#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "geoequiv/hamiltonian.hpp"

using namespace geoequiv;
using namespace fixtures;

namespace {

GeometryModel euclid() { return plane({{"1", "0"}, {"0", "1"}}, {{"1", "0"}, {"0", "1"}}, box({-5, -5}, {5, 5})); }

double max_energy_drift(const Trajectory& tr) {
  double d = 0.0;
  for (double h : tr.h_values) d = std::max(d, std::abs(h - tr.h_values.front()));
  return d;
}

// Max distance of the projected curve from the chord through its end points.
double chord_deviation(const Trajectory& tr) {
  Vec a = tr.samples.front().q, b = tr.samples.back().q;
  Vec d = (b - a).normalized();
  double worst = 0.0;
  for (const auto& s : tr.samples) {
    Vec r = s.q - a;
    worst = std::max(worst, (r - r.dot(d) * d).norm());
  }
  return worst;
}

}  // namespace

TEST(QuasiImpulses, CoordinateFrame) {
  GeometryModel m = euclid();
  Vec u = quasi_impulses(m, {vec({0, 0}), vec({3, -1})});
  EXPECT_EQ(u, vec({3, -1}));
}

TEST(QuasiImpulses, Heisenberg) {
  GeometryModel m = heisenberg_conformal("1");
  Vec u = quasi_impulses(m, {vec({0, 2, 0}), vec({1, 0, 4})});
  EXPECT_DOUBLE_EQ(u[0], -3.0);
  EXPECT_TRUE(quasi_impulses(m, {vec({0.1, 0.2, 0.3}), vec({0, 0, 0})}).isZero());
}

TEST(Hamiltonian, Examples) {
  EXPECT_DOUBLE_EQ(hamiltonian(euclid(), 1, {vec({0, 0}), vec({1, 0})}), 0.5);
  EXPECT_DOUBLE_EQ(hamiltonian(heisenberg_conformal("1"), 1, {vec({0, 0, 0}), vec({0, 0, 1})}), 0.0);
  GeometryModel m = plane({{"1", "0"}, {"0", "1"}}, {{"4", "0"}, {"0", "1"}});
  EXPECT_DOUBLE_EQ(hamiltonian(m, 1, {vec({0, 0}), vec({2, 0})}), 0.5);
}

TEST(Hamiltonian, MatchesOrthonormalQuasiImpulses) {
  GeometryModel m = levi_civita_3d();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int i = 0; i < 20; ++i) {
    Vec q = m.domain.sample(rng);
    Vec p = vec({g(rng), g(rng), g(rng)});
    for (int tag : {1, 2}) {
      Mat E = orthonormalize(m, tag).at(q);
      Vec u = E.transpose() * p;
      EXPECT_NEAR(hamiltonian(m, tag, {q, p}), 0.5 * u.squaredNorm(), 1e-12 * std::max(1.0, u.squaredNorm()));
    }
  }
}

TEST(Integrate, EuclideanStraightLine) {
  Trajectory tr = integrate(euclid(), 1, {vec({0, 0}), vec({1, 0})}, 1.0);
  ASSERT_FALSE(tr.clipped);
  EXPECT_LE((tr.samples.back().q - vec({1, 0})).norm(), 1e-12);
  EXPECT_DOUBLE_EQ(tr.times.back(), 1.0);
}

TEST(Integrate, BeltramiGeodesicsAreStraight) {
  GeometryModel m = build_beltrami();
  GeodesicFlow flow(m, 2);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.5, 0.5), ang(0, 2 * M_PI);
  for (int i = 0; i < 10; ++i) {
    Vec q = vec({u(rng), u(rng)});
    double a = ang(rng);
    CovectorPoint l0 = flow.initial_covector(q, vec({std::cos(a), std::sin(a)}), Vec(0));
    EXPECT_NEAR(flow.hamiltonian(l0.q, l0.p), 0.5, 1e-14);
    Trajectory tr = flow.integrate(l0, 0.3);
    ASSERT_FALSE(tr.clipped);
    EXPECT_LT(chord_deviation(tr), 1e-6);
  }
}

TEST(Integrate, HeisenbergEnergyConservation) {
  GeometryModel m = heisenberg_conformal("1");
  OdeOptions opt;
  Trajectory tr = integrate(m, 1, {vec({0, 0, 0}), vec({1, 0, 0.5})}, 0.5, opt);
  ASSERT_FALSE(tr.clipped);
  EXPECT_LT(max_energy_drift(tr), 1e-9);
  EXPECT_LE(max_energy_drift(tr), 10 * opt.tol * 0.5);
}

TEST(Integrate, HeisenbergClosedForm) {
  // u = (cos(c t), sin(c t)) for p = (1, 0, c) at the origin
  GeometryModel m = heisenberg_conformal("1");
  double c = 0.5, T = 0.5;
  Trajectory tr = integrate(m, 1, {vec({0, 0, 0}), vec({1, 0, c})}, T);
  double x = std::sin(c * T) / c, y = (1 - std::cos(c * T)) / c;
  double z = (T - std::sin(c * T) / c) / (2 * c);
  EXPECT_LE((tr.samples.back().q - vec({x, y, z})).norm(), 1e-9);
}

TEST(Integrate, VelocityMatchesFrameExpansion) {
  GeometryModel m = build_quasi_contact(quasi_contact_spec());
  GeodesicFlow flow(m, 1);
  CovectorPoint l0 = flow.initial_covector(vec({0.1, 0.1, 0, 0}), vec({0.6, 0, 0, 0.8}), vec({0.7}));
  Trajectory tr = flow.integrate(l0, 0.4);
  for (std::size_t k = 0; k < tr.samples.size(); k += 5) {
    const auto& s = tr.samples[k];
    Mat E = orthonormalize(m).at(s.q);
    Vec u = E.transpose() * s.p;
    Vec v = E * u;
    EXPECT_LE((tr.velocities[k] - v).norm(), 1e-6 * std::max(1.0, v.norm()));
  }
}

TEST(Integrate, UnitSpeedArclength) {
  GeometryModel m = levi_civita_2d();
  GeodesicFlow flow(m, 1);
  CovectorPoint l0 = flow.initial_covector(vec({0.1, -0.2}), vec({1, 2}), Vec(0));
  Trajectory tr = flow.integrate(l0, 0.5);
  ASSERT_FALSE(tr.clipped);
  double len = 0.0;
  for (std::size_t k = 0; k + 1 < tr.samples.size(); ++k) {
    // Simpson on the Hermite interpolant
    double h = tr.times[k + 1] - tr.times[k];
    auto speed = [&](double u) {
      double e = 1e-6;
      Vec a = tr.position(k, std::max(0.0, u - e)), b = tr.position(k, std::min(1.0, u + e));
      Vec v = (b - a) / ((std::min(1.0, u + e) - std::max(0.0, u - e)) * h);
      Vec mid = tr.position(k, u);
      Mat G = evaluate(m.gram1, mid);
      return std::sqrt(v.dot(G * v));
    };
    len += h / 6 * (speed(0) + 4 * speed(0.5) + speed(1));
  }
  EXPECT_NEAR(len, 0.5, 1e-6 * 0.5);
}

TEST(Integrate, TimeReversal) {
  GeometryModel m = levi_civita_3d();
  OdeOptions opt;
  GeodesicFlow flow(m, 2);
  CovectorPoint l0 = flow.initial_covector(vec({0.1, 0.2, -0.1}), vec({1, -1, 0.5}), Vec(0));
  Trajectory fw = flow.integrate(l0, 0.4, opt);
  Trajectory bw = flow.integrate(fw.samples.back(), -0.4, opt);
  EXPECT_LE((bw.samples.back().q - l0.q).norm(), 100 * opt.tol);
  EXPECT_LE((bw.samples.back().p - l0.p).norm(), 100 * opt.tol * std::max(1.0, l0.p.norm()));
}

TEST(Integrate, DomainExitClips) {
  GeometryModel m = plane({{"1", "0"}, {"0", "1"}});
  Trajectory tr = integrate(m, 1, {vec({0, 0}), vec({1, 0})}, 3.0);
  EXPECT_TRUE(tr.clipped);
  EXPECT_LE(tr.samples.back().q[0], 1.0);
  EXPECT_GT(tr.samples.back().q[0], 0.9);
}

TEST(InitialCovector, Euclidean) {
  CovectorPoint l = initial_covector(euclid(), 1, vec({0, 0}), vec({0, 2}), Vec(0));
  EXPECT_LE((l.p - vec({0, 1})).norm(), 1e-15);
  EXPECT_THROW(initial_covector(euclid(), 1, vec({0, 0}), vec({0, 2}), vec({1})), ArgumentError);
}

TEST(InitialCovector, HeisenbergTransverse) {
  GeometryModel m = heisenberg_conformal("1");
  GeodesicFlow flow(m, 1);
  for (double c : {-2.0, 0.0, 0.7}) {
    CovectorPoint l = flow.initial_covector(vec({0, 0, 0}), vec({1, 0, 0}), vec({c}));
    EXPECT_LE((l.p - vec({1, 0, c})).norm(), 1e-14);
    Vec y(6), dy;
    y << l.q, l.p;
    flow.rhs(y, dy, false);
    EXPECT_LE((dy.head(3) - vec({1, 0, 0})).norm(), 1e-14);
  }
  EXPECT_THROW(flow.initial_covector(vec({0, 0, 0}), vec({0, 0, 1}), vec({0})), ArgumentError);
}

TEST(Csv, Columns) {
  Trajectory tr = integrate(euclid(), 1, {vec({0, 0}), vec({1, 0})}, 0.05);
  std::string csv = trajectory_csv(tr);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,q_1,q_2,p_1,p_2,h");
}
