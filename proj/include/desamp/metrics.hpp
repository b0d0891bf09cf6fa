#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "desamp/eigen.hpp"
#include "desamp/matrix.hpp"
#include "desamp/models.hpp"
#include "desamp/samplers.hpp"

namespace desamp {

struct GaussianSummary {
  Vector mean;
  DenseMatrix covariance;
  std::size_t samples = 0;
};

// Sample mean and unbiased covariance (divisor M-1) across replicas.
inline GaussianSummary fit_gaussian(const std::vector<Vector>& samples) {
  const std::size_t m = samples.size();
  if (m == 0) throw ValidationError("fit_gaussian: no samples");
  const std::size_t d = samples.front().size();
  if (m <= d) throw ValidationError("fit_gaussian: need more than d samples");

  GaussianSummary g;
  g.samples = m;
  g.mean.assign(d, 0.0);
  for (const Vector& s : samples) {
    if (s.size() != d) throw ValidationError("fit_gaussian: inconsistent dimensions");
    axpy(1.0, s, g.mean);
  }
  for (double& v : g.mean) v /= static_cast<double>(m);

  g.covariance = DenseMatrix(d, d);
  for (const Vector& s : samples)
    for (std::size_t a = 0; a < d; ++a)
      for (std::size_t b = a; b < d; ++b)
        g.covariance(a, b) += (s[a] - g.mean[a]) * (s[b] - g.mean[b]);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) {
      g.covariance(a, b) /= static_cast<double>(m - 1);
      g.covariance(b, a) = g.covariance(a, b);
    }
  return g;
}

// Gaussian 2-Wasserstein distance:
// W2^2 = ||m_a - m_b||^2 + tr(S_a + S_b - 2 (S_a^1/2 S_b S_a^1/2)^1/2).
inline double w2_gaussian(const Vector& mean_a, const DenseMatrix& cov_a,
                          const Vector& mean_b, const DenseMatrix& cov_b) {
  if (mean_a.size() != mean_b.size() || cov_a.rows() != cov_b.rows())
    throw ValidationError("w2_gaussian: dimension mismatch");
  const std::size_t d = mean_a.size();
  double sq = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    const double diff = mean_a[c] - mean_b[c];
    sq += diff * diff;
  }
  const DenseMatrix root_a = spd_sqrt(cov_a);
  const DenseMatrix inner = root_a.multiply(cov_b).multiply(root_a);
  // Symmetrize; inner is symmetric up to roundoff.
  DenseMatrix sym(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) sym(a, b) = 0.5 * (inner(a, b) + inner(b, a));
  sq += trace(cov_a) + trace(cov_b) - 2.0 * trace(spd_sqrt(sym));
  return std::sqrt(std::max(sq, 0.0));
}

inline double w2_gaussian(const GaussianSummary& a, const GaussianSummary& b) {
  return w2_gaussian(a.mean, a.covariance, b.mean, b.covariance);
}

inline double w2_gaussian(const GaussianSummary& a, const GaussianPosterior& b) {
  return w2_gaussian(a.mean, a.covariance, b.mean, b.covariance);
}

// Curve subject: a single agent's block or the node average.
struct SubjectAgent {
  std::size_t index = 0;
};
struct SubjectAverage {};
using Subject = std::variant<SubjectAgent, SubjectAverage>;

struct CurvePoint {
  std::size_t k = 0;
  double value = 0.0;
  double std_dev = 0.0;  // used by accuracy curves
};

inline Vector subject_block(const Trace& t, std::size_t rec, const Subject& subject) {
  if (std::holds_alternative<SubjectAverage>(subject)) return t.average_block(rec);
  const std::size_t agent = std::get<SubjectAgent>(subject).index;
  if (agent >= t.agents) throw ValidationError("subject agent index out of range");
  return t.agent_block(rec, agent);
}

// Per recorded k: fit a Gaussian over replicas of the subject, then measure
// W2 against the target. With minibatch noise the fit is a Gaussian
// approximation, as in the experiments this mirrors.
inline std::vector<CurvePoint> w2_curve(const std::vector<Trace>& traces,
                                        const GaussianPosterior& target,
                                        const Subject& subject) {
  if (traces.empty()) throw ValidationError("w2_curve: no traces");
  const std::size_t recs = traces.front().ks.size();
  for (const Trace& t : traces)
    if (t.ks.size() != recs || t.ks != traces.front().ks)
      throw IntegrityError("w2_curve: replica record grids differ");

  std::vector<CurvePoint> curve;
  curve.reserve(recs);
  std::vector<Vector> samples(traces.size());
  for (std::size_t r = 0; r < recs; ++r) {
    for (std::size_t m = 0; m < traces.size(); ++m)
      samples[m] = subject_block(traces[m], r, subject);
    const GaussianSummary fit = fit_gaussian(samples);
    curve.push_back({traces.front().ks[r], w2_gaussian(fit, target), 0.0});
  }
  return curve;
}

// sum_i ||x_i^(k) - xbar^(k)||^2 for one replica at a recorded iteration.
inline double consensus_error(const Trace& t, std::size_t k) {
  std::size_t rec = t.ks.size();
  for (std::size_t r = 0; r < t.ks.size(); ++r)
    if (t.ks[r] == k) {
      rec = r;
      break;
    }
  if (rec == t.ks.size()) throw ValidationError("consensus_error: iteration not recorded");
  const Vector avg = t.average_block(rec);
  double err = 0.0;
  for (std::size_t i = 0; i < t.agents; ++i) {
    const Vector block = t.agent_block(rec, i);
    for (std::size_t c = 0; c < t.dim; ++c) {
      const double diff = block[c] - avg[c];
      err += diff * diff;
    }
  }
  return err;
}

inline double mean_consensus_error(const std::vector<Trace>& traces, std::size_t k) {
  double acc = 0.0;
  for (const Trace& t : traces) acc += consensus_error(t, k);
  return acc / static_cast<double>(traces.size());
}

// Classification accuracy of the subject's iterate over a labeled dataset;
// predicts 1 iff sigmoid(x^T X_j) >= 0.5 (ties resolve to class 1).
inline double classification_accuracy(const Vector& x, const std::vector<Vector>& features,
                                      const Vector& labels) {
  if (features.size() != labels.size() || features.empty())
    throw ValidationError("classification_accuracy: bad dataset");
  std::size_t correct = 0;
  for (std::size_t j = 0; j < features.size(); ++j) {
    if (labels[j] != 0.0 && labels[j] != 1.0)
      throw ValidationError("classification_accuracy: labels must be binary");
    const double pred = dot(x, features[j]) >= 0.0 ? 1.0 : 0.0;
    if (pred == labels[j]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(features.size());
}

// Mean and standard deviation of accuracy across replicas, per recorded k.
inline std::vector<CurvePoint> accuracy_curve(const std::vector<Trace>& traces,
                                              const std::vector<Vector>& features,
                                              const Vector& labels, const Subject& subject) {
  if (traces.empty()) throw ValidationError("accuracy_curve: no traces");
  const std::size_t recs = traces.front().ks.size();
  std::vector<CurvePoint> curve;
  curve.reserve(recs);
  for (std::size_t r = 0; r < recs; ++r) {
    double sum = 0.0, sum_sq = 0.0;
    for (const Trace& t : traces) {
      const double acc = classification_accuracy(subject_block(t, r, subject), features, labels);
      sum += acc;
      sum_sq += acc * acc;
    }
    const double m = static_cast<double>(traces.size());
    const double mean = sum / m;
    const double var = std::max(sum_sq / m - mean * mean, 0.0);
    curve.push_back({traces.front().ks[r], mean, std::sqrt(var)});
  }
  return curve;
}

}  // namespace desamp
