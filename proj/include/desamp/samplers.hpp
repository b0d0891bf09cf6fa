#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <thread>
#include <vector>

#include "desamp/conditions.hpp"
#include "desamp/matrix.hpp"
#include "desamp/models.hpp"
#include "desamp/network.hpp"
#include "desamp/rng.hpp"

namespace desamp {

enum class Algorithm { de_sgld, de_sghmc, ula };

// Stream-id layout: (replica << 24) | (agent << 4) | kind. Gradient-minibatch
// indices and injected Gaussians use distinct streams per agent so a paired
// oracle run can replay the exact Gaussian noise.
enum class StreamKind : std::uint64_t { noise = 0, minibatch = 1, init = 2 };

inline std::uint64_t stream_id(std::size_t replica, std::size_t agent, StreamKind kind) {
  return (static_cast<std::uint64_t>(replica) << 24) |
         (static_cast<std::uint64_t>(agent) << 4) | static_cast<std::uint64_t>(kind);
}

struct SamplerConfig {
  Algorithm algorithm = Algorithm::de_sgld;
  double eta = 0.0;
  double gamma = 0.0;       // friction, de_sghmc only
  std::size_t batch = 0;    // 0 = full (deterministic) gradients
  std::size_t iterations = 0;
  std::size_t record_stride = 1;
  double init_std = 0.0;    // 0 = start every agent at the origin
  bool inject_noise = true; // test hook; off makes the chain deterministic
  bool strict = false;      // enforce the validity ceilings before iterating

  // Constants backing the strict-mode checks (mu, L from the model).
  double mu = 0.0;
  double L = 0.0;
};

struct SamplerState {
  std::size_t k = 0;
  Vector x;  // stacked N*d
  Vector v;  // stacked N*d, de_sghmc only
  std::vector<RngStream> noise_streams;
  std::vector<RngStream> grad_streams;

  std::size_t agents() const { return noise_streams.size(); }
  std::size_t dim() const { return x.size() / agents(); }

  Vector average_block() const {
    const std::size_t n = agents(), d = dim();
    Vector avg(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < d; ++c) avg[c] += x[i * d + c];
    for (double& v : avg) v /= static_cast<double>(n);
    return avg;
  }
};

struct Trace {
  std::size_t agents = 0;
  std::size_t dim = 0;
  std::size_t stride = 1;
  std::vector<std::size_t> ks;
  std::vector<Vector> positions;  // one stacked N*d snapshot per recorded k
  std::vector<Vector> momenta;    // de_sghmc only

  Vector agent_block(std::size_t rec, std::size_t agent) const {
    const Vector& snap = positions.at(rec);
    return Vector(snap.begin() + agent * dim, snap.begin() + (agent + 1) * dim);
  }

  Vector average_block(std::size_t rec) const {
    const Vector& snap = positions.at(rec);
    Vector avg(dim, 0.0);
    for (std::size_t i = 0; i < agents; ++i)
      for (std::size_t c = 0; c < dim; ++c) avg[c] += snap[i * dim + c];
    for (double& v : avg) v /= static_cast<double>(agents);
    return avg;
  }
};

// Per-step intermediates exposed for test oracles.
struct StepLog {
  Vector grad;   // stacked stochastic (or full) gradient at x^(k)
  Vector noise;  // stacked standard-normal draws w^(k+1)
};

inline SamplerState init_state(const SamplerConfig& cfg, std::size_t agents,
                               std::size_t dim, std::uint64_t seed, std::size_t replica) {
  SamplerState st;
  st.x.assign(agents * dim, 0.0);
  if (cfg.algorithm == Algorithm::de_sghmc) st.v.assign(agents * dim, 0.0);
  for (std::size_t i = 0; i < agents; ++i) {
    st.noise_streams.emplace_back(seed, stream_id(replica, i, StreamKind::noise));
    st.grad_streams.emplace_back(seed, stream_id(replica, i, StreamKind::minibatch));
  }
  if (cfg.init_std > 0.0) {
    for (std::size_t i = 0; i < agents; ++i) {
      RngStream init(seed, stream_id(replica, i, StreamKind::init));
      for (std::size_t c = 0; c < dim; ++c)
        st.x[i * dim + c] = cfg.init_std * init.next_normal();
    }
  }
  return st;
}

namespace detail {

inline Vector agent_gradient(const AgentModel& model, std::size_t agent, const Vector& xi,
                             const SamplerConfig& cfg, RngStream& grad_stream) {
  if (cfg.batch == 0) return model.component_grad(agent, xi);
  return model.stochastic_grad(agent, xi, cfg.batch, grad_stream);
}

}  // namespace detail

// One DE-SGLD step:
//   x_i <- sum_j W_ij x_j - eta * grad~f_i(x_i) + sqrt(2 eta) w_i.
inline void desgld_step(SamplerState& st, const MixingMatrix& w, const AgentModel& model,
                        const SamplerConfig& cfg, StepLog* log = nullptr) {
  const std::size_t n = st.agents(), d = st.dim();
  const Vector mixed = apply_mixing(w, st.x);
  const double noise_scale = std::sqrt(2.0 * cfg.eta);
  if (log) {
    log->grad.assign(n * d, 0.0);
    log->noise.assign(n * d, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vector xi(st.x.begin() + i * d, st.x.begin() + (i + 1) * d);
    const Vector g = detail::agent_gradient(model, i, xi, cfg, st.grad_streams[i]);
    for (std::size_t c = 0; c < d; ++c) {
      double wnoise = 0.0;
      if (cfg.inject_noise) wnoise = st.noise_streams[i].next_normal();
      st.x[i * d + c] = mixed[i * d + c] - cfg.eta * g[c] + noise_scale * wnoise;
      if (log) {
        log->grad[i * d + c] = g[c];
        log->noise[i * d + c] = wnoise;
      }
    }
  }
  ++st.k;
}

// One DE-SGHMC step:
//   v_i <- v_i - eta (gamma v_i + grad~f_i(x_i)) + sqrt(2 gamma eta) w_i
//   x_i <- sum_j W_ij x_j + eta v_i.
inline void desghmc_step(SamplerState& st, const MixingMatrix& w, const AgentModel& model,
                         const SamplerConfig& cfg, StepLog* log = nullptr) {
  const std::size_t n = st.agents(), d = st.dim();
  const double beta = 1.0 - cfg.gamma * cfg.eta;
  if (cfg.strict && (beta < 0.0 || beta >= 1.0))
    throw ValidationError("desghmc_step: beta = 1 - gamma*eta outside [0,1)");
  const Vector mixed = apply_mixing(w, st.x);
  const double noise_scale = std::sqrt(2.0 * cfg.gamma * cfg.eta);
  if (log) {
    log->grad.assign(n * d, 0.0);
    log->noise.assign(n * d, 0.0);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Vector xi(st.x.begin() + i * d, st.x.begin() + (i + 1) * d);
    const Vector g = detail::agent_gradient(model, i, xi, cfg, st.grad_streams[i]);
    for (std::size_t c = 0; c < d; ++c) {
      double wnoise = 0.0;
      if (cfg.inject_noise) wnoise = st.noise_streams[i].next_normal();
      double& vi = st.v[i * d + c];
      vi = vi - cfg.eta * (cfg.gamma * vi + g[c]) + noise_scale * wnoise;
      st.x[i * d + c] = mixed[i * d + c] + cfg.eta * vi;
      if (log) {
        log->grad[i * d + c] = g[c];
        log->noise[i * d + c] = wnoise;
      }
    }
  }
  ++st.k;
}

// Heavy-ball reconstruction of the DE-SGHMC position recursion, used as a
// test oracle:
//   x^(k+1) = W x^(k) - eta^2 grad~F(x^(k))
//             + (1 - gamma eta)(x^(k) - W x^(k-1)) + eta sqrt(2 gamma eta) w.
// grad_tilde and noise must be the draws the paired sampler consumed at k.
inline Vector heavyball_oracle_step(const Vector& x_k, const Vector& x_km1,
                                    const MixingMatrix& w, const Vector& grad_tilde,
                                    double eta, double gamma, const Vector& noise) {
  const double beta = 1.0 - gamma * eta;
  if (beta < 0.0 || beta >= 1.0)
    throw ValidationError("heavyball_oracle_step: beta outside [0,1)");
  if (x_k.size() != x_km1.size() || x_k.size() != grad_tilde.size() ||
      x_k.size() != noise.size())
    throw ValidationError("heavyball_oracle_step: size mismatch");
  const Vector wx_k = apply_mixing(w, x_k);
  const Vector wx_km1 = apply_mixing(w, x_km1);
  const double noise_scale = eta * std::sqrt(2.0 * gamma * eta);
  Vector out(x_k.size());
  for (std::size_t c = 0; c < out.size(); ++c)
    out[c] = wx_k[c] - eta * eta * grad_tilde[c] + beta * (x_k[c] - wx_km1[c]) +
             noise_scale * noise[c];
  return out;
}

// One Euler-Maruyama step on the pooled target. With `averaged_variant` the
// chain follows x <- x - (eta/N) grad f(x) + sqrt(2 eta) w_bar, where w_bar
// has covariance I/N.
inline Vector ula_step(const Vector& x, const AgentModel& model, double eta,
                       RngStream& stream, bool averaged_variant = false,
                       bool inject_noise = true) {
  if (!(eta > 0.0)) throw ValidationError("ula_step: eta must be positive");
  const std::size_t d = model.dim();
  const Vector g = model.full_grad(x);
  const double n = static_cast<double>(model.agents());
  const double grad_scale = averaged_variant ? eta / n : eta;
  const double noise_scale =
      std::sqrt(2.0 * eta) * (averaged_variant ? 1.0 / std::sqrt(n) : 1.0);
  Vector out(d);
  for (std::size_t c = 0; c < d; ++c) {
    double wnoise = 0.0;
    if (inject_noise) wnoise = stream.next_normal();
    out[c] = x[c] - grad_scale * g[c] + noise_scale * wnoise;
  }
  return out;
}

inline void validate_strict(const SamplerConfig& cfg, const MixingMatrix& w) {
  if (!cfg.strict) return;
  if (!(cfg.mu > 0.0) || !(cfg.L >= cfg.mu))
    throw ValidationError("strict mode requires model constants (mu, L)");
  if (cfg.algorithm == Algorithm::de_sgld) {
    const double ceiling = sgld_stepsize_ceiling(cfg.mu, cfg.L, w.lambdaN);
    if (!(cfg.eta > 0.0) || cfg.eta >= ceiling)
      throw ValidationError("strict mode: eta exceeds the DE-SGLD ceiling " +
                            std::to_string(ceiling));
  } else if (cfg.algorithm == Algorithm::de_sghmc) {
    const SghmcCheck chk = sghmc_parameter_check(cfg.mu, cfg.L, w.lambdaN, cfg.eta, cfg.gamma);
    if (!chk.valid)
      throw ValidationError("strict mode: (eta, gamma) violate the DE-SGHMC conditions");
  }
}

inline Trace run_replica(const SamplerConfig& cfg, const MixingMatrix& w,
                         const AgentModel& model, std::uint64_t seed, std::size_t replica) {
  const std::size_t n = model.agents(), d = model.dim();
  if (w.n() != n) throw ValidationError("run: mixing matrix size does not match agent count");
  SamplerState st = init_state(cfg, n, d, seed, replica);

  Trace tr;
  tr.agents = n;
  tr.dim = d;
  tr.stride = cfg.record_stride == 0 ? 1 : cfg.record_stride;
  const bool keep_momenta = cfg.algorithm == Algorithm::de_sghmc;

  auto record = [&]() {
    tr.ks.push_back(st.k);
    tr.positions.push_back(st.x);
    if (keep_momenta) tr.momenta.push_back(st.v);
  };
  record();
  for (std::size_t k = 0; k < cfg.iterations; ++k) {
    if (cfg.algorithm == Algorithm::de_sghmc)
      desghmc_step(st, w, model, cfg);
    else
      desgld_step(st, w, model, cfg);
    if (st.k % tr.stride == 0) record();
  }
  return tr;
}

// M independent replicas, replica r drawing from streams keyed by
// (seed, r, agent, kind). Replicas may run on several threads; the output is
// ordered by replica index and identical to the sequential result.
inline std::vector<Trace> run(const SamplerConfig& cfg, const MixingMatrix& w,
                              const AgentModel& model, std::size_t replicas,
                              std::uint64_t seed, std::size_t jobs = 1) {
  if (replicas < 1) throw ValidationError("run: need at least one replica");
  validate_strict(cfg, w);
  std::vector<Trace> traces(replicas);
  if (jobs <= 1) {
    for (std::size_t r = 0; r < replicas; ++r)
      traces[r] = run_replica(cfg, w, model, seed, r);
    return traces;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t r = next.fetch_add(1);
      if (r >= replicas) return;
      traces[r] = run_replica(cfg, w, model, seed, r);
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(jobs, replicas); ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  return traces;
}

}  // namespace desamp
