#pragma once

#include <cmath>
#include <vector>

#include "desamp/conditions.hpp"
#include "desamp/matrix.hpp"
#include "desamp/samplers.hpp"

namespace desamp {

// h(x, y) with h(x,y)(x-y) = x^k - y^k and the continuity convention
// h(y,y) = k y^(k-1).
inline double geometric_ratio(double x, double y, std::size_t k) {
  if (k == 0) return 0.0;
  if (std::abs(x - y) <= 1e-14 * std::max(std::abs(x), std::abs(y)))
    return static_cast<double>(k) * std::pow(y, static_cast<double>(k) - 1.0);
  return (std::pow(x, static_cast<double>(k)) - std::pow(y, static_cast<double>(k))) /
         (x - y);
}

struct Theorem1Inputs {
  double mu = 0.0;
  double L = 0.0;
  double sigma2 = 0.0;
  std::size_t d = 0;
  std::size_t N = 0;
  double gamma_bar = 0.0;
  double lambdaN = 0.0;
  double eta = 0.0;

  double e_x0_sq = 0.0;             // E||x^(0)||^2, stacked N*d vector
  double e_x0_minus_xstar_sq = 0.0; // E||x^(0) - (x_*,...,x_*)||^2, stacked
  double e_xbar0_minus_xstar_sq = 0.0;
  double grad_norm_star_sq = 0.0;   // sum_i ||grad f_i(x_*)||^2
  double sum_f0_gap = 0.0;          // sum_i (f_i(0) - f_i^*)

  void validate() const {
    if (d == 0 || N == 0) throw ValidationError("theorem inputs: d and N must be positive");
    if (!(mu > 0.0) || !(L >= mu)) throw ValidationError("theorem inputs: need L >= mu > 0");
    if (!(gamma_bar >= 0.0) || gamma_bar >= 1.0)
      throw ValidationError("theorem inputs: gamma_bar must lie in [0,1); disconnected graphs are refused");
    if (!(lambdaN > -1.0) || lambdaN > 1.0)
      throw ValidationError("theorem inputs: lambda_N must lie in (-1, 1]");
    if (sigma2 < 0.0) throw ValidationError("theorem inputs: sigma2 must be >= 0");
  }
};

// D^2 of the uniform gradient bound; the C1 constant comes from the
// function-value gap at the origin.
inline double bigD_squared(const Theorem1Inputs& in) {
  in.validate();
  if (!(in.eta > 0.0) || in.eta * in.L >= 1.0 + in.lambdaN)
    throw NumericError("bigD_squared: eta L must stay below 1 + lambda_N");
  const double c1_bar = std::sqrt(2.0 * in.L * std::max(in.sum_f0_gap, 0.0));
  const double c1 = c1_bar * (1.0 + 2.0 * (in.L + in.mu) / in.mu);
  const double n = static_cast<double>(in.N);
  const double dd = static_cast<double>(in.d);
  const double one_minus_g = 1.0 - in.gamma_bar;
  double out = 4.0 * in.L * in.L * in.e_x0_minus_xstar_sq;
  out += 8.0 * in.L * in.L * c1 * c1 * in.eta * in.eta * n / (one_minus_g * one_minus_g);
  out += 2.0 * in.L * in.L * (in.eta * in.sigma2 * n + 2.0 * dd * n) /
         (in.mu * (1.0 + in.lambdaN - in.eta * in.L));
  out += 4.0 * in.grad_norm_star_sq;
  return out;
}

struct BoundValue {
  double average = 0.0;    // W2(L(xbar^(k)), pi)
  double per_agent = 0.0;  // (1/N) sum_i W2(L(x_i^(k)), pi)
  // Term breakdown, shared structure between both bounds.
  double contraction_term = 0.0;
  double network_transient_term = 0.0;
  double asymptotic_term_avg = 0.0;
  double asymptotic_term_agent = 0.0;
};

inline BoundValue theorem1_bound(const Theorem1Inputs& in, std::size_t k) {
  in.validate();
  const double eta_bar = sgld_stepsize_ceiling(in.mu, in.L, in.lambdaN);
  if (!(in.eta > 0.0) || !(in.eta < eta_bar))
    throw ValidationError("theorem1_bound: eta outside (0, eta_bar)");

  const double n = static_cast<double>(in.N);
  const double dd = static_cast<double>(in.d);
  const double g = in.gamma_bar;
  const double g2 = g * g;
  const double half = 1.0 - in.eta * in.L / 2.0;
  const double contraction_rate = 1.0 - in.mu * in.eta * half;
  const double d_sq = bigD_squared(in);

  BoundValue out;
  out.contraction_term = std::pow(1.0 - in.mu * in.eta, static_cast<double>(k)) *
                         (std::sqrt(in.e_xbar0_minus_xstar_sq) +
                          std::sqrt(2.0 * dd / (in.mu * n)));
  out.network_transient_term =
      std::sqrt(g2 * geometric_ratio(contraction_rate, g2, k)) * 2.0 * in.L /
      std::sqrt(n) * std::sqrt(in.e_x0_sq);

  const double lemma3_inner = 4.0 * in.L * in.L * d_sq * in.eta / (n * (1.0 - g) * (1.0 - g)) +
                              4.0 * in.L * in.L * in.sigma2 * in.eta / (1.0 - g2) +
                              8.0 * in.L * in.L * dd / (1.0 - g2);
  const double lemma3_outer = std::sqrt(in.eta / (in.mu * half) +
                                        (1.0 + in.eta * in.L) * (1.0 + in.eta * in.L) /
                                            (in.mu * in.mu * half * half));
  const double e1 = 1.65 * in.L / in.mu * std::sqrt(dd / n) +
                    std::sqrt(in.sigma2) / std::sqrt(in.mu * half * n) +
                    lemma3_outer * std::sqrt(lemma3_inner);
  const double e2 = e1 + 2.0 * std::sqrt(2.0 * dd) / std::sqrt(1.0 - g2);
  const double e3 = 2.0 * std::sqrt(d_sq) / (std::sqrt(n) * (1.0 - g)) +
                    2.0 * std::sqrt(in.sigma2) / std::sqrt(1.0 - g2);

  out.asymptotic_term_avg = std::sqrt(in.eta) * e1;
  out.asymptotic_term_agent = std::sqrt(in.eta) * e2 + in.eta * e3;
  out.average = out.contraction_term + out.network_transient_term + out.asymptotic_term_avg;
  out.per_agent = out.contraction_term +
                  2.0 * std::pow(g, static_cast<double>(k)) / std::sqrt(n) *
                      std::sqrt(in.e_x0_sq) +
                  out.network_transient_term + out.asymptotic_term_agent;
  return out;
}

// Second moment of the Gibbs distribution around the minimizer: 2d/(N mu).
inline double gibbs_second_moment_bound(std::size_t d, std::size_t N, double mu) {
  if (d == 0 || N == 0) throw ValidationError("gibbs_second_moment_bound: d, N must be positive");
  if (!(mu > 0.0)) throw ValidationError("gibbs_second_moment_bound: mu must be positive");
  return 2.0 * static_cast<double>(d) / (static_cast<double>(N) * mu);
}

// Uniform iterate/momentum second-moment bound of Lemma-style form, needed by
// the DE-SGHMC bound.
enum class C5Provenance { empirical, user_supplied };

struct C5Estimate {
  double value = 0.0;
  C5Provenance provenance = C5Provenance::user_supplied;
};

// Monte Carlo sup over recorded k >= 1 of max(E||v^(k)||^2, E||x^(k)||^2),
// inflated by 1.5 to leave headroom for the unobserved iterations.
inline C5Estimate estimate_c5(const std::vector<Trace>& traces) {
  if (traces.size() < 10) throw ValidationError("estimate_c5: need at least 10 replicas");
  const std::size_t recs = traces.front().ks.size();
  if (recs < 100) throw ValidationError("estimate_c5: need at least 100 recorded iterations");
  for (const Trace& t : traces) {
    if (t.ks.size() != recs) throw IntegrityError("estimate_c5: replica record mismatch");
    if (t.momenta.size() != t.positions.size())
      throw ValidationError("estimate_c5: traces carry no momenta");
  }
  double sup = 0.0;
  const double m = static_cast<double>(traces.size());
  for (std::size_t r = 0; r < recs; ++r) {
    if (traces.front().ks[r] == 0) continue;
    double ex = 0.0, ev = 0.0;
    for (const Trace& t : traces) {
      ex += dot(t.positions[r], t.positions[r]);
      ev += dot(t.momenta[r], t.momenta[r]);
    }
    sup = std::max(sup, std::max(ex, ev) / m);
  }
  return {1.5 * sup, C5Provenance::empirical};
}

struct Theorem2Inputs {
  Theorem1Inputs base;  // eta here is the DE-SGHMC stepsize
  double gamma = 0.0;
  C5Estimate c5;
};

inline BoundValue theorem2_bound(const Theorem2Inputs& in, std::size_t k) {
  in.base.validate();
  const SghmcCheck chk =
      sghmc_parameter_check(in.base.mu, in.base.L, in.base.lambdaN, in.base.eta, in.gamma);
  if (!chk.valid)
    throw ValidationError("theorem2_bound: (eta, gamma) violate the step/momentum conditions");
  if (!(in.c5.value >= 0.0)) throw ValidationError("theorem2_bound: c5 estimate required");

  const double eta = in.base.eta;
  const double eta2 = eta * eta;
  const double mu = in.base.mu, L = in.base.L;
  const double n = static_cast<double>(in.base.N);
  const double dd = static_cast<double>(in.base.d);
  const double g = in.base.gamma_bar;
  const double g2 = g * g;
  const double beta = chk.beta;
  const double c5 = in.c5.value;
  const double half = 1.0 - eta2 * L / 2.0;
  if (!(half > 0.0)) throw NumericError("theorem2_bound: eta^2 L must stay below 2");
  const double contraction_rate = 1.0 - mu * eta2 * half;

  BoundValue out;
  out.contraction_term = std::pow(1.0 - mu * eta2, static_cast<double>(k)) *
                         (std::sqrt(in.base.e_xbar0_minus_xstar_sq) +
                          std::sqrt(2.0 * dd / (mu * n)));
  const double ratio = geometric_ratio(contraction_rate, g2, k);
  out.network_transient_term =
      std::sqrt(g2 * ratio) * 2.0 * L / std::sqrt(n) * std::sqrt(in.base.e_x0_sq);

  const double outer = std::sqrt(2.0) * std::sqrt(eta2 / (mu * half) +
                                                  (1.0 + eta2 * L) * (1.0 + eta2 * L) /
                                                      (mu * mu * half * half));
  const double drift = std::sqrt(beta * beta * c5 / (eta2 * eta2 * n) +
                                 2.0 * L * L * c5 / (n * (1.0 - g) * (1.0 - g)));
  const double friction_gap = std::sqrt(1.0 - beta) - 1.0;
  const double damping = std::sqrt(friction_gap * friction_gap / (eta2 * eta2) * dd / n);
  const double e4 = outer * (drift + damping) + 1.65 * L / mu * std::sqrt(dd / n) +
                    std::sqrt(in.base.sigma2) / std::sqrt(mu * half * n);
  const double e5 = e4 + std::sqrt(2.0 * c5) / (std::sqrt(n) * (1.0 - g));

  out.asymptotic_term_avg = eta * e4;
  out.asymptotic_term_agent = eta * e5;
  out.average = out.contraction_term + out.network_transient_term + out.asymptotic_term_avg;
  out.per_agent = out.contraction_term +
                  std::sqrt(2.0) * std::pow(g, static_cast<double>(k)) / std::sqrt(n) *
                      std::sqrt(in.base.e_x0_sq) +
                  std::sqrt(ratio) * 2.0 * L * g / std::sqrt(n) * std::sqrt(in.base.e_x0_sq) +
                  out.asymptotic_term_agent;
  return out;
}

// Right-hand side of the consensus-deviation bound:
// 4 gbar^(2k) E||x0||^2 + 4 D^2 eta^2/(1-gbar)^2
//   + 4 sigma^2 N eta^2/(1-gbar^2) + 8 d N eta/(1-gbar^2).
inline double consensus_deviation_bound(const Theorem1Inputs& in, std::size_t k) {
  in.validate();
  const double d_sq = bigD_squared(in);
  const double g = in.gamma_bar;
  const double n = static_cast<double>(in.N);
  const double dd = static_cast<double>(in.d);
  return 4.0 * std::pow(g, 2.0 * static_cast<double>(k)) * in.e_x0_sq +
         4.0 * d_sq * in.eta * in.eta / ((1.0 - g) * (1.0 - g)) +
         4.0 * in.sigma2 * n * in.eta * in.eta / (1.0 - g * g) +
         8.0 * dd * n * in.eta / (1.0 - g * g);
}

}  // namespace desamp
