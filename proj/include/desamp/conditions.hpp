#pragma once

#include <cmath>

#include "desamp/matrix.hpp"

namespace desamp {

// Largest admissible DE-SGLD stepsize: min((1+lambda_N)/L, 1/(L+mu)).
inline double sgld_stepsize_ceiling(double mu, double L, double lambdaN) {
  if (!(L >= mu) || !(mu > 0.0))
    throw ValidationError("sgld_stepsize_ceiling: need L >= mu > 0");
  if (!(lambdaN > -1.0) || !(lambdaN <= 1.0))
    throw ValidationError("sgld_stepsize_ceiling: lambda_N must lie in (-1, 1]");
  return std::min((1.0 + lambdaN) / L, 1.0 / (L + mu));
}

struct SghmcCheck {
  bool valid = false;
  double beta = 0.0;
  double beta_bar = 0.0;
  double c1 = 0.0;
  bool step_condition = false;      // eta^2 <= (1+lambda_N)/(2(L+mu))
  bool momentum_condition = false;  // 0 <= beta <= beta_bar
};

// DE-SGHMC parameter admissibility. c1 is evaluated at the candidate
// beta = 1 - gamma*eta; the recommended gamma = 1/eta gives beta = 0.
inline SghmcCheck sghmc_parameter_check(double mu, double L, double lambdaN, double eta,
                                        double gamma) {
  if (!(eta > 0.0) || !(gamma > 0.0))
    throw ValidationError("sghmc_parameter_check: eta and gamma must be positive");
  SghmcCheck out;
  out.beta = 1.0 - gamma * eta;
  out.step_condition = eta * eta <= (1.0 + lambdaN) / (2.0 * (L + mu));
  const double eta2 = eta * eta;
  out.c1 = 0.5 * eta2 * mu /
           ((1.0 + out.beta) +
            (1.0 - out.beta) * (eta2 * mu / (1.0 - lambdaN + eta2 * L)));
  out.beta_bar = std::min((1.0 + lambdaN - 4.0 * eta2 * mu) / 4.0,
                          eta * eta2 * std::sqrt(out.c1 * mu * mu * mu * (1.0 + lambdaN) / 64.0));
  out.momentum_condition = out.beta >= 0.0 && out.beta <= out.beta_bar && out.beta < 1.0;
  out.valid = out.step_condition && out.momentum_condition;
  return out;
}

struct StepsizeSchedule {
  double eta = 0.0;
  double k_bar = 0.0;  // smallest admissible iteration budget
  bool within_ceiling = false;
};

// Constant stepsize eta = c log(sqrt(K)) / (mu K) tuned to an iteration
// budget K; requires K >= max(e, a^2/e) with a = c(L+mu)/(2 mu (1+lambda_N)).
inline StepsizeSchedule log_stepsize_schedule(double mu, double L, double lambdaN,
                                              std::size_t K, double c) {
  if (!(c > 1.0)) throw ValidationError("log_stepsize_schedule: c must exceed 1");
  if (!(mu > 0.0)) throw ValidationError("log_stepsize_schedule: mu must be positive");
  const double a = c * (L + mu) / (2.0 * mu * (1.0 + lambdaN));
  const double e = std::exp(1.0);
  StepsizeSchedule s;
  s.k_bar = std::max(e, a * a / e);
  if (static_cast<double>(K) < s.k_bar)
    throw ValidationError("log_stepsize_schedule: K below the admissible minimum " +
                          std::to_string(s.k_bar));
  s.eta = c * std::log(std::sqrt(static_cast<double>(K))) / (mu * static_cast<double>(K));
  s.within_ceiling = s.eta < sgld_stepsize_ceiling(mu, L, lambdaN);
  return s;
}

}  // namespace desamp
