#include <gtest/gtest.h>

#include <cmath>

#include "desamp/datasets.hpp"
#include "desamp/models.hpp"
#include "desamp/samplers.hpp"

using namespace desamp;

namespace {

// f_i(x) = ||x||^2 / (2N): the pooled target is the standard Gaussian.
class QuadModel : public AgentModel {
 public:
  QuadModel(std::size_t agents, std::size_t dim) : agents_(agents), dim_(dim) {}
  std::size_t agents() const override { return agents_; }
  std::size_t dim() const override { return dim_; }
  std::size_t shard_size(std::size_t) const override { return 1; }
  Vector component_grad(std::size_t, const Vector& x) const override {
    Vector g = x;
    for (double& v : g) v /= static_cast<double>(agents_);
    return g;
  }
  double component_value(std::size_t, const Vector& x) const override {
    return dot(x, x) / (2.0 * static_cast<double>(agents_));
  }
  Vector stochastic_grad(std::size_t agent, const Vector& x, std::size_t,
                         RngStream&) const override {
    return component_grad(agent, x);
  }

 private:
  std::size_t agents_, dim_;
};

class ZeroModel : public QuadModel {
 public:
  using QuadModel::QuadModel;
  Vector component_grad(std::size_t, const Vector& x) const override {
    return Vector(x.size(), 0.0);
  }
  double component_value(std::size_t, const Vector&) const override { return 0.0; }
};

LinearRegressionModel random_linreg(std::uint64_t seed, std::size_t n, std::size_t d,
                                    std::size_t agents) {
  RngStream data(seed, 900);
  const SyntheticRegression sim = synth_linreg(data, n, d, 1.0, 10.0);
  RngStream part(seed, 901);
  const Partition p = split_and_partition(sim.features.size(), 0.0, agents, part);
  return LinearRegressionModel(materialize_shards(sim.features, sim.responses, p), 10.0);
}

}  // namespace

TEST(Desgld, PureGossipWithoutGradientOrNoise) {
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::circular, 4));
  ZeroModel model(4, 2);
  SamplerConfig cfg;
  cfg.eta = 0.1;
  cfg.inject_noise = false;
  SamplerState st = init_state(cfg, 4, 2, 0, 0);
  RngStream fill(2, 0);
  st.x = standard_normal_vector(fill, 8);
  const Vector expected = apply_mixing(w, st.x);
  desgld_step(st, w, model, cfg);
  EXPECT_EQ(st.x, expected);
  EXPECT_EQ(st.k, 1u);
}

TEST(Desgld, QuadraticAverageRecursion) {
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::complete, 5));
  QuadModel model(5, 2);
  SamplerConfig cfg;
  cfg.eta = 0.3;
  cfg.inject_noise = false;
  SamplerState st = init_state(cfg, 5, 2, 0, 0);
  RngStream fill(3, 0);
  st.x = standard_normal_vector(fill, 10);
  Vector avg = st.average_block();
  const double rate = 1.0 - cfg.eta / 5.0;
  for (int k = 0; k < 50; ++k) {
    desgld_step(st, w, model, cfg);
    for (double& v : avg) v *= rate;
    const Vector got = st.average_block();
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got[c], avg[c], 1e-12);
  }
}

TEST(Desgld, AverageIterateIdentity) {
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::circular, 6));
  LinearRegressionModel model = random_linreg(41, 60, 2, 6);
  SamplerConfig cfg;
  cfg.eta = 0.005;
  cfg.batch = 4;
  SamplerState st = init_state(cfg, 6, 2, 7, 0);
  for (int k = 0; k < 30; ++k) {
    const Vector before = st.x;
    const Vector avg_before = st.average_block();
    StepLog log;
    desgld_step(st, w, model, cfg, &log);
    Vector expected = avg_before;
    for (std::size_t c = 0; c < 2; ++c) {
      double grad_sum = 0.0, noise_sum = 0.0;
      for (std::size_t i = 0; i < 6; ++i) {
        grad_sum += log.grad[i * 2 + c];
        noise_sum += log.noise[i * 2 + c];
      }
      expected[c] += -cfg.eta / 6.0 * grad_sum + std::sqrt(2.0 * cfg.eta) * noise_sum / 6.0;
    }
    const Vector got = st.average_block();
    for (std::size_t c = 0; c < 2; ++c) EXPECT_NEAR(got[c], expected[c], 1e-10);
    (void)before;
  }
}

TEST(Desghmc, PureGossip) {
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::circular, 4));
  ZeroModel model(4, 3);
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::de_sghmc;
  cfg.eta = 0.1;
  cfg.gamma = 1.0;
  cfg.inject_noise = false;
  SamplerState st = init_state(cfg, 4, 3, 0, 0);
  RngStream fill(5, 0);
  st.x = standard_normal_vector(fill, 12);
  const Vector expected = apply_mixing(w, st.x);
  desghmc_step(st, w, model, cfg);
  for (std::size_t c = 0; c < 12; ++c) EXPECT_NEAR(st.x[c], expected[c], 1e-15);
  for (double v : st.v) EXPECT_EQ(v, 0.0);
}

TEST(Desghmc, HeavyBallOracleEquivalence) {
  const struct {
    std::size_t n, d;
    double eta, gamma;
    TopologyKind kind;
  } configs[] = {
      {4, 2, 0.05, 20.0, TopologyKind::complete},
      {8, 4, 0.02, 50.0, TopologyKind::circular},
      {2, 1, 0.1, 10.0, TopologyKind::complete},   // beta = 0
      {6, 3, 0.04, 5.0, TopologyKind::circular},
      {5, 2, 0.08, 2.5, TopologyKind::complete},
  };
  int idx = 0;
  for (const auto& c : configs) {
    const MixingMatrix w = metropolis_weights(make_topology(c.kind, c.n));
    LinearRegressionModel model = random_linreg(100 + idx, 20 * c.n, c.d, c.n);
    SamplerConfig cfg;
    cfg.algorithm = Algorithm::de_sghmc;
    cfg.eta = c.eta;
    cfg.gamma = c.gamma;
    SamplerState st = init_state(cfg, c.n, c.d, 55, idx);

    Vector x_km1 = st.x;
    StepLog log;
    desghmc_step(st, w, model, cfg, &log);
    Vector x_k = st.x;
    for (int k = 1; k <= 200; ++k) {
      desghmc_step(st, w, model, cfg, &log);
      const Vector oracle =
          heavyball_oracle_step(x_k, x_km1, w, log.grad, c.eta, c.gamma, log.noise);
      for (std::size_t i = 0; i < oracle.size(); ++i)
        ASSERT_NEAR(st.x[i], oracle[i], 1e-10) << "config " << idx << " step " << k;
      x_km1 = x_k;
      x_k = st.x;
    }
    ++idx;
  }
}

TEST(Desghmc, OracleRejectsBadBeta) {
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::complete, 2));
  const Vector z(2, 0.0);
  EXPECT_THROW(heavyball_oracle_step(z, z, w, z, 0.1, 0.0, z), ValidationError);
  EXPECT_THROW(heavyball_oracle_step(z, z, w, z, 0.1, 100.0, z), ValidationError);
}

TEST(Ula, LinearMapOnQuadratic) {
  QuadModel model(1, 1);
  RngStream stream(0, 0);
  Vector x = {2.0};
  for (int k = 0; k < 10; ++k) {
    const double expected = 0.9 * x[0];
    x = ula_step(x, model, 0.1, stream, false, false);
    EXPECT_NEAR(x[0], expected, 1e-15);
  }
  EXPECT_THROW(ula_step(x, model, 0.0, stream), ValidationError);
}

TEST(Ula, StationaryVariance) {
  // AR(1) fixed point: var = 2 eta / (1 - (1-eta)^2) = 2/(2-eta).
  QuadModel model(1, 1);
  RngStream stream(77, 0);
  const double eta = 0.1;
  Vector x = {0.0};
  double sum_sq = 0.0;
  const std::size_t steps = 1000000;
  for (std::size_t k = 0; k < steps; ++k) {
    x = ula_step(x, model, eta, stream);
    sum_sq += x[0] * x[0];
  }
  const double var = sum_sq / steps;
  EXPECT_NEAR(var, 2.0 / (2.0 - eta), 0.02 * 2.0 / (2.0 - eta) * 2.0);
}

TEST(Run, SingleAgentDegeneracyMatchesUla) {
  LinearRegressionModel model = random_linreg(200, 30, 2, 1);
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::complete, 1));
  SamplerConfig cfg;
  cfg.eta = 0.001;
  cfg.iterations = 1000;
  const Trace tr = run(cfg, w, model, 1, 99, 1)[0];

  RngStream stream(99, stream_id(0, 0, StreamKind::noise));
  Vector x(2, 0.0);
  for (std::size_t k = 0; k < 1000; ++k) {
    x = ula_step(x, model, cfg.eta, stream);
    const Vector rec = tr.agent_block(k + 1, 0);
    ASSERT_EQ(rec[0], x[0]) << "k=" << k;
    ASSERT_EQ(rec[1], x[1]);
  }
}

TEST(Run, RecordStrideAndMomenta) {
  QuadModel model(3, 2);
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::complete, 3));
  SamplerConfig cfg;
  cfg.algorithm = Algorithm::de_sghmc;
  cfg.eta = 0.05;
  cfg.gamma = 10.0;
  cfg.iterations = 100;
  cfg.record_stride = 10;
  const Trace tr = run(cfg, w, model, 1, 1, 1)[0];
  ASSERT_EQ(tr.ks.size(), 11u);
  for (std::size_t r = 0; r < tr.ks.size(); ++r) EXPECT_EQ(tr.ks[r], 10 * r);
  EXPECT_EQ(tr.momenta.size(), tr.positions.size());
}

TEST(Run, DeterministicAcrossThreadCounts) {
  LinearRegressionModel model = random_linreg(300, 40, 2, 4);
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::circular, 4));
  SamplerConfig cfg;
  cfg.eta = 0.002;
  cfg.batch = 4;
  cfg.iterations = 50;
  const auto seq = run(cfg, w, model, 6, 5, 1);
  const auto par = run(cfg, w, model, 6, 5, 4);
  const auto rerun = run(cfg, w, model, 6, 5, 1);
  ASSERT_EQ(seq.size(), par.size());
  for (std::size_t r = 0; r < seq.size(); ++r) {
    EXPECT_EQ(seq[r].positions, par[r].positions);
    EXPECT_EQ(seq[r].positions, rerun[r].positions);
  }
}

TEST(Run, StrictModeEnforcesCeilings) {
  LinearRegressionModel model = random_linreg(400, 30, 2, 3);
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::complete, 3));
  const ModelConstants c = model_constants(model, 0, nullptr);
  SamplerConfig cfg;
  cfg.eta = 10.0 / c.L;  // far above the ceiling
  cfg.iterations = 1;
  cfg.strict = true;
  cfg.mu = c.mu;
  cfg.L = c.L;
  EXPECT_THROW(run(cfg, w, model, 1, 0, 1), ValidationError);
  cfg.eta = 0.5 * sgld_stepsize_ceiling(c.mu, c.L, w.lambdaN);
  EXPECT_NO_THROW(run(cfg, w, model, 1, 0, 1));
}

TEST(Run, GaussianInitialization) {
  QuadModel model(2, 3);
  const MixingMatrix w = metropolis_weights(make_topology(TopologyKind::complete, 2));
  SamplerConfig cfg;
  cfg.eta = 0.1;
  cfg.iterations = 0;
  cfg.init_std = 2.0;
  const Trace tr = run(cfg, w, model, 1, 12, 1)[0];
  RngStream s0(12, stream_id(0, 0, StreamKind::init));
  RngStream s1(12, stream_id(0, 1, StreamKind::init));
  const Vector b0 = tr.agent_block(0, 0), b1 = tr.agent_block(0, 1);
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(b0[c], 2.0 * s0.next_normal());
  for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(b1[c], 2.0 * s1.next_normal());
}
