#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "desamp/matrix.hpp"
#include "desamp/rng.hpp"

namespace desamp {

// One agent's local data shard.
struct Shard {
  std::vector<Vector> features;  // rows X_j
  Vector responses;              // y_j

  std::size_t size() const { return features.size(); }
};

struct GaussianPosterior {
  Vector mean;
  DenseMatrix covariance;
};

// Scaling convention for the linear-regression likelihood term. `quadratic`
// is the plain sum of squared residuals with a factor 2 in the gradient;
// `density` carries the 1/(2 xi^2) Gaussian log-density factor, so exp(-f)
// is exactly the closed-form posterior.
enum class LikelihoodScaling { quadratic, density };

// Decomposed target f = sum_i f_i over N agents. Gradient evaluations are
// pure; stochastic gradients draw minibatch indices from the caller's stream.
class AgentModel {
 public:
  virtual ~AgentModel() = default;

  virtual std::size_t agents() const = 0;
  virtual std::size_t dim() const = 0;
  virtual std::size_t shard_size(std::size_t agent) const = 0;

  virtual Vector component_grad(std::size_t agent, const Vector& x) const = 0;
  virtual double component_value(std::size_t agent, const Vector& x) const = 0;

  // Minibatch estimator: (n_i/b) * sum over b with-replacement draws of the
  // per-point likelihood gradient, plus the full regularizer gradient.
  virtual Vector stochastic_grad(std::size_t agent, const Vector& x,
                                 std::size_t batch, RngStream& stream) const = 0;

  Vector full_grad(const Vector& x) const {
    Vector g(dim(), 0.0);
    for (std::size_t i = 0; i < agents(); ++i) axpy(1.0, component_grad(i, x), g);
    return g;
  }

  double full_value(const Vector& x) const {
    double v = 0.0;
    for (std::size_t i = 0; i < agents(); ++i) v += component_value(i, x);
    return v;
  }
};

namespace detail {

inline void check_dim(const Vector& x, std::size_t d, const char* where) {
  if (x.size() != d) throw ValidationError(std::string(where) + ": dimension mismatch");
}

}  // namespace detail

class LinearRegressionModel : public AgentModel {
 public:
  LinearRegressionModel(std::vector<Shard> shards, double lambda, double xi = 1.0,
                        LikelihoodScaling scaling = LikelihoodScaling::density,
                        std::size_t dim_hint = 0)
      : shards_(std::move(shards)), lambda_(lambda), xi_(xi), scaling_(scaling) {
    if (lambda_ <= 0.0) throw ValidationError("linreg: lambda must be positive");
    if (xi_ <= 0.0) throw ValidationError("linreg: xi must be positive");
    dim_ = dim_hint;
    for (const Shard& s : shards_) {
      if (s.features.size() != s.responses.size())
        throw ValidationError("linreg: shard feature/response count mismatch");
      if (!s.features.empty()) dim_ = s.features.front().size();
    }
    if (dim_ == 0) throw ValidationError("linreg: dimension unknown (all shards empty)");
  }

  std::size_t agents() const override { return shards_.size(); }
  std::size_t dim() const override { return dim_; }
  std::size_t shard_size(std::size_t agent) const override { return shards_.at(agent).size(); }
  double lambda() const { return lambda_; }
  double xi() const { return xi_; }
  LikelihoodScaling scaling() const { return scaling_; }
  const std::vector<Shard>& shards() const { return shards_; }

  // Factor multiplying (x^T X - y) X in the per-point likelihood gradient.
  double data_factor() const {
    return scaling_ == LikelihoodScaling::quadratic ? 2.0 : 1.0 / (xi_ * xi_);
  }

  Vector component_grad(std::size_t agent, const Vector& x) const override {
    detail::check_dim(x, dim_, "linreg grad");
    const Shard& s = shards_.at(agent);
    const double c = data_factor();
    Vector g(dim_, 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double r = c * (dot(x, s.features[j]) - s.responses[j]);
      axpy(r, s.features[j], g);
    }
    const double reg = 1.0 / (lambda_ * static_cast<double>(agents()));
    axpy(reg, x, g);
    return g;
  }

  double component_value(std::size_t agent, const Vector& x) const override {
    detail::check_dim(x, dim_, "linreg value");
    const Shard& s = shards_.at(agent);
    const double c = data_factor();
    double v = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double r = s.responses[j] - dot(x, s.features[j]);
      v += 0.5 * c * r * r;
    }
    v += dot(x, x) / (2.0 * lambda_ * static_cast<double>(agents()));
    return v;
  }

  Vector stochastic_grad(std::size_t agent, const Vector& x, std::size_t batch,
                         RngStream& stream) const override {
    detail::check_dim(x, dim_, "linreg stoch grad");
    const Shard& s = shards_.at(agent);
    if (batch == 0) throw ValidationError("linreg: batch size must be >= 1");
    if (s.size() == 0) throw ValidationError("linreg: stochastic gradient on empty shard");
    const double c = data_factor();
    const double scale = static_cast<double>(s.size()) / static_cast<double>(batch);
    Vector g(dim_, 0.0);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t j = stream.next_below(s.size());
      const double r = c * (dot(x, s.features[j]) - s.responses[j]);
      axpy(scale * r, s.features[j], g);
    }
    const double reg = 1.0 / (lambda_ * static_cast<double>(agents()));
    axpy(reg, x, g);
    return g;
  }

  // Minimizer of f_i alone (needed for f_i^* in the theory constants).
  Vector component_minimizer(std::size_t agent) const {
    const Shard& s = shards_.at(agent);
    const double c = data_factor();
    DenseMatrix h(dim_, dim_);
    Vector rhs(dim_, 0.0);
    const double reg = 1.0 / (lambda_ * static_cast<double>(agents()));
    for (std::size_t i = 0; i < dim_; ++i) h(i, i) = reg;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const Vector& xj = s.features[j];
      for (std::size_t a = 0; a < dim_; ++a) {
        for (std::size_t b = 0; b < dim_; ++b) h(a, b) += c * xj[a] * xj[b];
        rhs[a] += c * s.responses[j] * xj[a];
      }
    }
    return spd_solve(h, rhs);
  }

  // Minimizer of f = sum_i f_i (closed form).
  Vector minimizer() const {
    const double c = data_factor();
    DenseMatrix h(dim_, dim_);
    Vector rhs(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) h(i, i) = 1.0 / lambda_;
    for (const Shard& s : shards_)
      for (std::size_t j = 0; j < s.size(); ++j) {
        const Vector& xj = s.features[j];
        for (std::size_t a = 0; a < dim_; ++a) {
          for (std::size_t b = 0; b < dim_; ++b) h(a, b) += c * xj[a] * xj[b];
          rhs[a] += c * s.responses[j] * xj[a];
        }
      }
    return spd_solve(h, rhs);
  }

 private:
  std::vector<Shard> shards_;
  double lambda_;
  double xi_;
  LikelihoodScaling scaling_;
  std::size_t dim_ = 0;
};

namespace detail {

inline double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(t)) without overflow.
inline double log1pexp(double t) {
  if (t > 0.0) return t + std::log1p(std::exp(-t));
  return std::log1p(std::exp(t));
}

}  // namespace detail

class LogisticRegressionModel : public AgentModel {
 public:
  LogisticRegressionModel(std::vector<Shard> shards, double lambda)
      : shards_(std::move(shards)), lambda_(lambda) {
    if (lambda_ <= 0.0) throw ValidationError("logreg: lambda must be positive");
    for (const Shard& s : shards_) {
      if (s.features.size() != s.responses.size())
        throw ValidationError("logreg: shard feature/response count mismatch");
      for (double y : s.responses)
        if (y != 0.0 && y != 1.0)
          throw ValidationError("logreg: labels must be in {0,1}");
      if (!s.features.empty()) dim_ = s.features.front().size();
    }
    if (dim_ == 0) throw ValidationError("logreg: dimension unknown (all shards empty)");
  }

  std::size_t agents() const override { return shards_.size(); }
  std::size_t dim() const override { return dim_; }
  std::size_t shard_size(std::size_t agent) const override { return shards_.at(agent).size(); }
  double lambda() const { return lambda_; }
  const std::vector<Shard>& shards() const { return shards_; }

  Vector component_grad(std::size_t agent, const Vector& x) const override {
    detail::check_dim(x, dim_, "logreg grad");
    const Shard& s = shards_.at(agent);
    Vector g(dim_, 0.0);
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double p = detail::sigmoid(dot(x, s.features[j]));
      axpy(p - s.responses[j], s.features[j], g);
    }
    axpy(1.0 / (lambda_ * static_cast<double>(agents())), x, g);
    return g;
  }

  double component_value(std::size_t agent, const Vector& x) const override {
    detail::check_dim(x, dim_, "logreg value");
    const Shard& s = shards_.at(agent);
    double v = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double t = dot(x, s.features[j]);
      v += detail::log1pexp(t) - s.responses[j] * t;
    }
    v += dot(x, x) / (2.0 * lambda_ * static_cast<double>(agents()));
    return v;
  }

  Vector stochastic_grad(std::size_t agent, const Vector& x, std::size_t batch,
                         RngStream& stream) const override {
    detail::check_dim(x, dim_, "logreg stoch grad");
    const Shard& s = shards_.at(agent);
    if (batch == 0) throw ValidationError("logreg: batch size must be >= 1");
    if (s.size() == 0) throw ValidationError("logreg: stochastic gradient on empty shard");
    const double scale = static_cast<double>(s.size()) / static_cast<double>(batch);
    Vector g(dim_, 0.0);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t j = stream.next_below(s.size());
      const double p = detail::sigmoid(dot(x, s.features[j]));
      axpy(scale * (p - s.responses[j]), s.features[j], g);
    }
    axpy(1.0 / (lambda_ * static_cast<double>(agents())), x, g);
    return g;
  }

 private:
  std::vector<Shard> shards_;
  double lambda_;
  std::size_t dim_ = 0;
};

// Exact Gaussian posterior of Bayesian linear regression over the pooled data:
// V = (X^T X / xi^2 + I/lambda)^-1, m = V X^T y / xi^2.
inline GaussianPosterior linreg_posterior(const std::vector<Shard>& shards, double lambda,
                                          double xi, std::size_t dim_hint = 0) {
  if (lambda <= 0.0) throw ValidationError("linreg_posterior: lambda must be positive");
  if (xi <= 0.0) throw ValidationError("linreg_posterior: xi must be positive");
  std::size_t d = dim_hint;
  for (const Shard& s : shards)
    if (!s.features.empty()) d = s.features.front().size();
  if (d == 0) throw ValidationError("linreg_posterior: dimension unknown");

  DenseMatrix precision(d, d);
  Vector xty(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) precision(i, i) = 1.0 / lambda;
  const double inv_xi2 = 1.0 / (xi * xi);
  for (const Shard& s : shards)
    for (std::size_t j = 0; j < s.size(); ++j) {
      const Vector& xj = s.features[j];
      for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = 0; b < d; ++b) precision(a, b) += inv_xi2 * xj[a] * xj[b];
        xty[a] += inv_xi2 * s.responses[j] * xj[a];
      }
    }
  GaussianPosterior p;
  p.covariance = spd_inverse(precision);
  p.mean = p.covariance.multiply(xty);
  return p;
}

struct ModelConstants {
  double mu = 0.0;      // strong convexity of each f_i (conservative: regularizer only)
  double L = 0.0;       // smoothness of every f_i
  double sigma2 = 0.0;  // per-agent gradient-noise second moment bound
  Vector x_star;        // minimizer of f
};

// Deterministic gradient descent on f to gradient norm <= tol.
inline Vector minimize_full(const AgentModel& model, double L, double tol = 1e-10,
                            std::size_t max_iters = 200000) {
  Vector x(model.dim(), 0.0);
  const double step = 1.0 / std::max(L, 1e-12);
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vector g = model.full_grad(x);
    if (norm2(g) <= tol) break;
    axpy(-step, g, x);
  }
  return x;
}

// Smoothness constant per the explicit Hessian bounds; max over agents.
inline double smoothness_constant(const AgentModel& model) {
  double reg = 0.0;
  double best = 0.0;
  if (const auto* lin = dynamic_cast<const LinearRegressionModel*>(&model)) {
    reg = 1.0 / (lin->lambda() * static_cast<double>(lin->agents()));
    const double c = lin->data_factor();
    for (const Shard& s : lin->shards()) {
      double sum = 0.0;
      for (const Vector& xj : s.features) sum += dot(xj, xj);
      best = std::max(best, c * sum);
    }
  } else if (const auto* log = dynamic_cast<const LogisticRegressionModel*>(&model)) {
    reg = 1.0 / (log->lambda() * static_cast<double>(log->agents()));
    for (const Shard& s : log->shards()) {
      double sum = 0.0;
      for (const Vector& xj : s.features) sum += dot(xj, xj);
      best = std::max(best, 0.25 * sum);
    }
  } else {
    throw ValidationError("smoothness_constant: unknown model family");
  }
  return best + reg;
}

inline Vector logreg_minimizer(const LogisticRegressionModel& model, double tol = 1e-10,
                               std::size_t max_iters = 200);

// Monte Carlo bound on the per-agent gradient-noise second moment over a probe
// grid {x_star, x_star +- e_c, 0}; max over agents and probes, one estimate
// per probe of E||stoch - full||^2.
inline double estimate_sigma2(const AgentModel& model, const Vector& x_star,
                              std::size_t batch, RngStream& stream,
                              std::size_t draws = 10000) {
  const std::size_t d = model.dim();
  std::vector<Vector> probes;
  probes.push_back(x_star);
  probes.emplace_back(d, 0.0);
  for (std::size_t c = 0; c < d; ++c) {
    Vector p = x_star;
    p[c] += 1.0;
    probes.push_back(p);
    p[c] -= 2.0;
    probes.push_back(p);
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < model.agents(); ++i) {
    for (const Vector& p : probes) {
      const Vector full = model.component_grad(i, p);
      double acc = 0.0;
      for (std::size_t r = 0; r < draws; ++r) {
        Vector g = model.stochastic_grad(i, p, batch, stream);
        axpy(-1.0, full, g);
        acc += dot(g, g);
      }
      worst = std::max(worst, acc / static_cast<double>(draws));
    }
  }
  return worst;
}

// Full constant set for the theory module. `batch == 0` means full gradients
// (sigma2 = 0, no RNG consumed).
inline ModelConstants model_constants(const AgentModel& model, std::size_t batch,
                                      RngStream* stream, std::size_t sigma_draws = 10000) {
  ModelConstants c;
  c.L = smoothness_constant(model);
  if (const auto* lin = dynamic_cast<const LinearRegressionModel*>(&model)) {
    c.mu = 1.0 / (lin->lambda() * static_cast<double>(lin->agents()));
    c.x_star = lin->minimizer();
  } else if (const auto* log = dynamic_cast<const LogisticRegressionModel*>(&model)) {
    c.mu = 1.0 / (log->lambda() * static_cast<double>(log->agents()));
    c.x_star = logreg_minimizer(*log);
  } else {
    throw ValidationError("model_constants: unknown model family");
  }
  if (batch > 0) {
    if (stream == nullptr)
      throw ValidationError("model_constants: stream required for sigma2 estimate");
    c.sigma2 = estimate_sigma2(model, c.x_star, batch, *stream, sigma_draws);
  }
  return c;
}

// Newton iteration on the pooled logistic objective; converges to machine
// precision in a few dozen steps for the problem sizes used here.
inline Vector logreg_minimizer(const LogisticRegressionModel& model, double tol,
                               std::size_t max_iters) {
  const std::size_t d = model.dim();
  Vector x(d, 0.0);
  for (std::size_t it = 0; it < max_iters; ++it) {
    Vector g = model.full_grad(x);
    if (norm2(g) <= tol) break;
    DenseMatrix h(d, d);
    for (std::size_t i = 0; i < d; ++i) h(i, i) = 1.0 / model.lambda();
    for (const Shard& s : model.shards())
      for (const Vector& xj : s.features) {
        const double p = detail::sigmoid(dot(x, xj));
        const double w = std::max(p * (1.0 - p), 1e-12);
        for (std::size_t a = 0; a < d; ++a)
          for (std::size_t b = 0; b < d; ++b) h(a, b) += w * xj[a] * xj[b];
      }
    Vector step = spd_solve(h, g);
    // Damped step keeps the iteration stable far from the optimum.
    double t = 1.0;
    const double f0 = model.full_value(x);
    for (int ls = 0; ls < 30; ++ls) {
      Vector cand = x;
      axpy(-t, step, cand);
      if (model.full_value(cand) <= f0) {
        x = cand;
        break;
      }
      t *= 0.5;
    }
  }
  return x;
}

struct SyntheticRegression {
  std::vector<Vector> features;
  Vector responses;
  Vector true_x;
};

// y_j = x^T X_j + delta_j with X_j ~ N(0, I), delta_j ~ N(0, xi^2);
// true x drawn from the prior N(0, lambda I) when not supplied.
inline SyntheticRegression synth_linreg(RngStream& stream, std::size_t n, std::size_t d,
                                        double xi, double lambda,
                                        std::optional<Vector> true_x = std::nullopt) {
  if (n < 1) throw ValidationError("synth_linreg: n must be >= 1");
  SyntheticRegression out;
  if (true_x) {
    detail::check_dim(*true_x, d, "synth_linreg");
    out.true_x = *true_x;
  } else {
    out.true_x = standard_normal_vector(stream, d);
    for (double& v : out.true_x) v *= std::sqrt(lambda);
  }
  out.features.reserve(n);
  out.responses.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector xj = standard_normal_vector(stream, d);
    double y = dot(out.true_x, xj);
    if (xi > 0.0) y += xi * stream.next_normal();
    out.features.push_back(std::move(xj));
    out.responses.push_back(y);
  }
  return out;
}

// X_j ~ N(0, feature_variance I), y_j = 1 iff U(0,1) <= sigmoid(x^T X_j).
inline SyntheticRegression synth_logreg(RngStream& stream, std::size_t n, std::size_t d,
                                        double feature_variance, double lambda,
                                        std::optional<Vector> true_x = std::nullopt) {
  if (n < 1) throw ValidationError("synth_logreg: n must be >= 1");
  SyntheticRegression out;
  if (true_x) {
    detail::check_dim(*true_x, d, "synth_logreg");
    out.true_x = *true_x;
  } else {
    out.true_x = standard_normal_vector(stream, d);
    for (double& v : out.true_x) v *= std::sqrt(lambda);
  }
  const double scale = std::sqrt(feature_variance);
  out.features.reserve(n);
  out.responses.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    Vector xj = standard_normal_vector(stream, d);
    for (double& v : xj) v *= scale;
    const double p = stream.next_uniform();
    out.responses.push_back(p <= detail::sigmoid(dot(out.true_x, xj)) ? 1.0 : 0.0);
    out.features.push_back(std::move(xj));
  }
  return out;
}

}  // namespace desamp
