#include <gtest/gtest.h>

#include <cmath>

#include "desamp/metrics.hpp"
#include "desamp/rng.hpp"
#include "normal_quantile.hpp"

using namespace desamp;

namespace {

DenseMatrix diag2(double a, double b) {
  DenseMatrix m(2, 2);
  m(0, 0) = a;
  m(1, 1) = b;
  return m;
}

DenseMatrix random_spd(RngStream& s, std::size_t d) {
  DenseMatrix a(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) a(i, j) = s.next_normal();
  DenseMatrix spd = a.multiply(a.transpose());
  for (std::size_t i = 0; i < d; ++i) spd(i, i) += 0.1;
  return spd;
}

}  // namespace

TEST(FitGaussian, HandValues) {
  const GaussianSummary g = fit_gaussian({{0.0}, {2.0}});
  EXPECT_NEAR(g.mean[0], 1.0, 1e-14);
  EXPECT_NEAR(g.covariance(0, 0), 2.0, 1e-14);  // divisor M-1

  const GaussianSummary zero = fit_gaussian({{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}});
  EXPECT_EQ(zero.covariance(0, 0), 0.0);
  EXPECT_EQ(zero.covariance(1, 1), 0.0);

  EXPECT_THROW(fit_gaussian({{1.0, 2.0}, {3.0, 4.0}}), ValidationError);  // M <= d
  EXPECT_THROW(fit_gaussian({}), ValidationError);
}

TEST(FitGaussian, MonteCarloRoundTrip) {
  const Vector m = {1.0, -2.0};
  DenseMatrix v(2, 2);
  v(0, 0) = 2.0;
  v(0, 1) = v(1, 0) = 0.5;
  v(1, 1) = 1.0;
  const DenseMatrix l = cholesky(v);
  RngStream s(42, 0);
  std::vector<Vector> samples;
  samples.reserve(100000);
  for (int r = 0; r < 100000; ++r) {
    const Vector z = standard_normal_vector(s, 2);
    const Vector lz = l.multiply(z);
    samples.push_back({m[0] + lz[0], m[1] + lz[1]});
  }
  const GaussianSummary fit = fit_gaussian(samples);
  EXPECT_LE(fit.covariance.minus(v).frobenius_norm(), 0.02 * v.frobenius_norm());
  Vector dm = fit.mean;
  axpy(-1.0, m, dm);
  EXPECT_LE(norm2(dm), 0.05);
}

TEST(W2, ClosedForms) {
  DenseMatrix one(1, 1), four(1, 1);
  one(0, 0) = 1.0;
  four(0, 0) = 4.0;
  EXPECT_NEAR(w2_gaussian({0.0}, one, {3.0}, four), std::sqrt(10.0), 1e-10);
  EXPECT_NEAR(w2_gaussian({0.0}, one, {0.0}, one), 0.0, 1e-12);
  EXPECT_NEAR(w2_gaussian({0.0, 0.0}, diag2(1, 4), {0.0, 0.0}, diag2(4, 1)),
              std::sqrt(2.0), 1e-10);
}

TEST(W2, RandomOneDimensionalPairs) {
  RngStream s(7, 0);
  for (int trial = 0; trial < 100; ++trial) {
    const double m1 = s.next_normal(), m2 = s.next_normal();
    const double s1 = 0.2 + s.next_uniform(), s2 = 0.2 + s.next_uniform();
    DenseMatrix v1(1, 1), v2(1, 1);
    v1(0, 0) = s1 * s1;
    v2(0, 0) = s2 * s2;
    const double expected = std::sqrt((m1 - m2) * (m1 - m2) + (s1 - s2) * (s1 - s2));
    EXPECT_NEAR(w2_gaussian({m1}, v1, {m2}, v2), expected, 1e-10);
  }
}

TEST(W2, QuantileCouplingOracle) {
  RngStream s(8, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const double m1 = 2.0 * s.next_normal(), m2 = 2.0 * s.next_normal();
    const double s1 = 0.3 + s.next_uniform(), s2 = 0.3 + s.next_uniform();
    DenseMatrix v1(1, 1), v2(1, 1);
    v1(0, 0) = s1 * s1;
    v2(0, 0) = s2 * s2;
    const double exact = w2_gaussian({m1}, v1, {m2}, v2);
    const double oracle = w2_quantile_oracle_1d(m1, s1, m2, s2);
    EXPECT_NEAR(oracle, exact, 0.01 * std::max(exact, 0.05));
  }
}

TEST(W2, SymmetryScalingTriangle) {
  RngStream s(9, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector ma = standard_normal_vector(s, 3);
    const Vector mb = standard_normal_vector(s, 3);
    const Vector mc = standard_normal_vector(s, 3);
    const DenseMatrix va = random_spd(s, 3), vb = random_spd(s, 3), vc = random_spd(s, 3);
    const double ab = w2_gaussian(ma, va, mb, vb);
    EXPECT_NEAR(ab, w2_gaussian(mb, vb, ma, va), 1e-9);
    EXPECT_LE(ab, w2_gaussian(ma, va, mc, vc) + w2_gaussian(mc, vc, mb, vb) + 1e-8);

    const double c = 2.5;
    Vector sma = ma, smb = mb;
    for (double& v : sma) v *= c;
    for (double& v : smb) v *= c;
    EXPECT_NEAR(w2_gaussian(sma, va.scaled(c * c), smb, vb.scaled(c * c)), c * ab,
                1e-9 * std::max(1.0, c * ab));
  }
}

TEST(W2Curve, SelfTargetIsZero) {
  RngStream s(10, 0);
  std::vector<Trace> traces(30);
  for (Trace& t : traces) {
    t.agents = 2;
    t.dim = 1;
    t.ks = {0, 1};
    t.positions = {standard_normal_vector(s, 2), standard_normal_vector(s, 2)};
  }
  std::vector<Vector> at_k1;
  for (const Trace& t : traces) at_k1.push_back(t.average_block(1));
  const GaussianSummary fit = fit_gaussian(at_k1);
  GaussianPosterior target{fit.mean, fit.covariance};
  const auto curve = w2_curve(traces, target, SubjectAverage{});
  ASSERT_EQ(curve.size(), 2u);
  EXPECT_NEAR(curve[1].value, 0.0, 1e-9);
  EXPECT_EQ(curve[1].k, 1u);

  traces.back().ks = {0, 2};
  EXPECT_THROW(w2_curve(traces, target, SubjectAverage{}), IntegrityError);
}

TEST(ConsensusError, HandValues) {
  Trace t;
  t.agents = 2;
  t.dim = 1;
  t.ks = {0, 5};
  t.positions = {{1.0, 1.0}, {0.0, 2.0}};
  EXPECT_EQ(consensus_error(t, 0), 0.0);
  EXPECT_NEAR(consensus_error(t, 5), 2.0, 1e-14);
  EXPECT_THROW(consensus_error(t, 3), ValidationError);
}

TEST(Accuracy, BoundaryAndSeparable) {
  const std::vector<Vector> feats = {{1.0}, {-2.0}, {3.0}};
  const Vector labels = {1.0, 0.0, 1.0};
  // x = 0: every score is 0, ties go to class 1.
  EXPECT_NEAR(classification_accuracy({0.0}, feats, labels), 2.0 / 3.0, 1e-14);
  // Separator aligned with the labels.
  EXPECT_EQ(classification_accuracy({5.0}, feats, labels), 1.0);
  // Flipping labels complements the accuracy.
  const Vector flipped = {0.0, 1.0, 0.0};
  EXPECT_NEAR(classification_accuracy({5.0}, feats, flipped), 0.0, 1e-14);
  EXPECT_THROW(classification_accuracy({5.0}, feats, Vector{1.0, 2.0, 0.0}), ValidationError);
}

TEST(Accuracy, CurveAggregation) {
  std::vector<Trace> traces(2);
  for (Trace& t : traces) {
    t.agents = 1;
    t.dim = 1;
    t.ks = {0};
  }
  traces[0].positions = {{5.0}};   // accuracy 1 on the set below
  traces[1].positions = {{-5.0}};  // accuracy 0
  const std::vector<Vector> feats = {{1.0}, {2.0}};
  const Vector labels = {1.0, 1.0};
  const auto curve = accuracy_curve(traces, feats, labels, SubjectAgent{0});
  ASSERT_EQ(curve.size(), 1u);
  EXPECT_NEAR(curve[0].value, 0.5, 1e-14);
  EXPECT_NEAR(curve[0].std_dev, 0.5, 1e-14);
}
