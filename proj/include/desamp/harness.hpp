#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "desamp/datasets.hpp"
#include "desamp/io.hpp"
#include "desamp/metrics.hpp"
#include "desamp/models.hpp"
#include "desamp/network.hpp"
#include "desamp/samplers.hpp"
#include "desamp/theory.hpp"

namespace desamp {

// Auxiliary stream ids, outside the replica id space.
inline std::uint64_t aux_stream_id(std::uint64_t tag) {
  return 0xA000000000000000ULL | tag;
}

enum class ModelFamily { linreg, logreg };

struct ExperimentConfig {
  // model
  ModelFamily family = ModelFamily::linreg;
  std::string csv_path;      // empty = synthetic
  CsvSchema csv_schema;
  std::size_t n_points = 0;  // synthetic only
  std::size_t dim = 0;
  double lambda = 10.0;
  double xi = 1.0;
  double feature_variance = 20.0;  // synth logreg
  LikelihoodScaling scaling = LikelihoodScaling::density;
  double test_fraction = 0.0;
  bool standardize = true;  // CSV features
  // network
  TopologyKind topology = TopologyKind::complete;
  std::size_t agents = 1;
  std::vector<std::pair<std::size_t, std::size_t>> custom_edges;
  std::optional<nlohmann::json> custom_w;
  // sampler
  SamplerConfig sampler;
  std::size_t replicas = 1;
  std::uint64_t seed = 0;
  // outputs
  std::string out_dir;
  std::vector<std::string> w2_subjects;        // "average" or "agent:<i>"
  std::vector<std::string> accuracy_subjects;  // same syntax
};

inline Subject parse_subject(const std::string& s) {
  if (s == "average") return SubjectAverage{};
  if (s.rfind("agent:", 0) == 0) return SubjectAgent{std::stoul(s.substr(6))};
  throw ValidationError("unknown subject '" + s + "' (use 'average' or 'agent:<i>')");
}

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  const auto& model = j.at("model");
  const std::string family = model.at("family").get<std::string>();
  if (family == "linreg")
    c.family = ModelFamily::linreg;
  else if (family == "logreg")
    c.family = ModelFamily::logreg;
  else
    throw ValidationError("model.family: expected 'linreg' or 'logreg'");
  c.csv_path = model.value("csv_path", std::string{});
  if (!c.csv_path.empty() && !std::filesystem::exists(c.csv_path))
    throw ValidationError("model.csv_path: file does not exist: " + c.csv_path);
  if (model.contains("schema")) {
    const auto& s = model.at("schema");
    c.csv_schema.label_column = s.value("label_column", std::size_t{0});
    c.csv_schema.positive_label = s.value("positive_label", std::string{});
    c.csv_schema.negative_label = s.value("negative_label", std::string{});
    const std::string delim = s.value("delimiter", std::string{","});
    c.csv_schema.delimiter = delim.empty() ? ',' : delim[0];
    c.csv_schema.has_header = s.value("has_header", false);
    for (const auto& col : s.value("skip_columns", nlohmann::json::array()))
      c.csv_schema.skip_columns.push_back(col.get<std::size_t>());
  }
  c.n_points = model.value("n", std::size_t{0});
  c.dim = model.value("d", std::size_t{0});
  c.lambda = model.value("lambda", 10.0);
  c.xi = model.value("xi", 1.0);
  c.feature_variance = model.value("feature_variance", 20.0);
  c.test_fraction = model.value("test_fraction", 0.0);
  c.standardize = model.value("standardize", true);
  const std::string scaling = model.value("scaling", std::string{"density"});
  if (scaling == "density")
    c.scaling = LikelihoodScaling::density;
  else if (scaling == "quadratic")
    c.scaling = LikelihoodScaling::quadratic;
  else
    throw ValidationError("model.scaling: expected 'density' or 'quadratic'");

  const auto& net = j.at("network");
  const std::string kind = net.at("kind").get<std::string>();
  if (kind == "complete")
    c.topology = TopologyKind::complete;
  else if (kind == "circular")
    c.topology = TopologyKind::circular;
  else if (kind == "disconnected")
    c.topology = TopologyKind::disconnected;
  else if (kind == "custom")
    c.topology = TopologyKind::custom;
  else
    throw ValidationError("network.kind: unknown topology '" + kind + "'");
  c.agents = net.at("n_agents").get<std::size_t>();
  for (const auto& e : net.value("edges", nlohmann::json::array()))
    c.custom_edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  if (net.contains("w")) c.custom_w = net;

  const auto& s = j.at("sampler");
  const std::string algo = s.at("algorithm").get<std::string>();
  if (algo == "de-sgld")
    c.sampler.algorithm = Algorithm::de_sgld;
  else if (algo == "de-sghmc")
    c.sampler.algorithm = Algorithm::de_sghmc;
  else if (algo == "ula")
    c.sampler.algorithm = Algorithm::ula;
  else
    throw ValidationError("sampler.algorithm: unknown algorithm '" + algo + "'");
  c.sampler.eta = s.at("eta").get<double>();
  c.sampler.gamma = s.value("gamma", 0.0);
  if (c.sampler.algorithm == Algorithm::de_sghmc && !(c.sampler.gamma > 0.0))
    throw ValidationError("sampler.gamma: required and positive for de-sghmc");
  c.sampler.batch = s.value("batch", std::size_t{0});
  c.sampler.iterations = s.at("iterations").get<std::size_t>();
  c.sampler.record_stride = s.value("record_stride", std::size_t{1});
  c.sampler.init_std = s.value("init_std", 0.0);
  c.sampler.strict = s.value("strict", false);

  c.replicas = j.value("replicas", std::size_t{1});
  c.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    c.out_dir = o.value("directory", std::string{});
    for (const auto& sub : o.value("w2_curves", nlohmann::json::array()))
      c.w2_subjects.push_back(sub.get<std::string>());
    for (const auto& sub : o.value("accuracy_curves", nlohmann::json::array()))
      c.accuracy_subjects.push_back(sub.get<std::string>());
  }
  return c;
}

// Fully materialized experiment: data, shards, model, mixing matrix.
struct Experiment {
  ExperimentConfig config;
  std::vector<Vector> features;
  Vector labels;
  Vector true_x;
  Partition partition;
  std::shared_ptr<AgentModel> model;
  MixingMatrix mixing;
  std::optional<GaussianPosterior> posterior;  // linreg only
};

inline Experiment build_experiment(const ExperimentConfig& c) {
  Experiment e;
  e.config = c;

  if (c.csv_path.empty()) {
    if (c.n_points == 0 || c.dim == 0)
      throw ValidationError("synthetic data requires model.n and model.d");
    RngStream data_stream(c.seed, aux_stream_id(1));
    if (c.family == ModelFamily::linreg) {
      SyntheticRegression sim = synth_linreg(data_stream, c.n_points, c.dim, c.xi, c.lambda);
      e.features = std::move(sim.features);
      e.labels = std::move(sim.responses);
      e.true_x = std::move(sim.true_x);
    } else {
      SyntheticRegression sim =
          synth_logreg(data_stream, c.n_points, c.dim, c.feature_variance, c.lambda);
      e.features = std::move(sim.features);
      e.labels = std::move(sim.responses);
      e.true_x = std::move(sim.true_x);
    }
  } else {
    TabularDataset ds = load_csv(c.csv_path, c.csv_schema);
    if (c.standardize) ds.standardize();
    e.features = std::move(ds.features);
    e.labels = std::move(ds.labels);
  }

  RngStream part_stream(c.seed, aux_stream_id(2));
  e.partition = split_and_partition(e.features.size(), c.test_fraction, c.agents, part_stream);
  std::vector<Shard> shards = materialize_shards(e.features, e.labels, e.partition);

  if (c.family == ModelFamily::linreg) {
    e.posterior = linreg_posterior(shards, c.lambda, c.xi);
    e.model = std::make_shared<LinearRegressionModel>(std::move(shards), c.lambda, c.xi,
                                                      c.scaling);
  } else {
    e.model = std::make_shared<LogisticRegressionModel>(std::move(shards), c.lambda);
  }

  if (c.custom_w)
    e.mixing = mixing_from_json(*c.custom_w);
  else
    e.mixing = metropolis_weights(make_topology(c.topology, c.agents, c.custom_edges));
  return e;
}

inline nlohmann::json make_manifest(const Experiment& e, const nlohmann::json& config_json,
                                    const ModelConstants& constants) {
  return {
      {"format_version", 1},
      {"config", config_json},
      {"constants",
       {{"mu", constants.mu},
        {"L", constants.L},
        {"sigma2", constants.sigma2},
        {"sigma2_provenance", e.config.sampler.batch == 0 ? "deterministic" : "empirical"},
        {"x_star", constants.x_star}}},
      {"spectrum",
       {{"lambda2", e.mixing.lambda2},
        {"lambdaN", e.mixing.lambdaN},
        {"gamma_bar", e.mixing.gamma_bar},
        {"connected", e.mixing.connected}}},
      {"replicas", e.config.replicas},
      {"seed", e.config.seed},
  };
}

struct SimulationResult {
  std::vector<Trace> traces;
  ModelConstants constants;
  nlohmann::json manifest;
};

inline SimulationResult simulate(const nlohmann::json& config_json, std::size_t jobs = 1) {
  const ExperimentConfig cfg = config_from_json(config_json);
  Experiment e = build_experiment(cfg);

  SamplerConfig sampler = cfg.sampler;
  RngStream sigma_stream(cfg.seed, aux_stream_id(3));
  SimulationResult out;
  out.constants = model_constants(*e.model, sampler.batch, &sigma_stream, 2000);
  sampler.mu = out.constants.mu;
  sampler.L = out.constants.L;

  out.traces = run(sampler, e.mixing, *e.model, cfg.replicas, cfg.seed, jobs);
  out.manifest = make_manifest(e, config_json, out.constants);

  if (!cfg.out_dir.empty()) {
    std::filesystem::create_directories(cfg.out_dir);
    for (std::size_t r = 0; r < out.traces.size(); ++r)
      write_trace_csv(out.traces[r],
                      cfg.out_dir + "/trace_" + std::to_string(r) + ".csv");
    write_json(out.manifest, cfg.out_dir + "/manifest.json");
    for (const std::string& sub : cfg.w2_subjects) {
      if (!e.posterior)
        throw ValidationError("w2 curves require a linear-regression posterior target");
      const auto curve = w2_curve(out.traces, *e.posterior, parse_subject(sub));
      std::string tag = sub;
      for (char& ch : tag)
        if (ch == ':') ch = '_';
      write_curve_csv(curve, sub, cfg.out_dir + "/w2_" + tag + ".csv");
    }
    for (const std::string& sub : cfg.accuracy_subjects) {
      const auto curve = accuracy_curve(out.traces, e.features, e.labels, parse_subject(sub));
      std::string tag = sub;
      for (char& ch : tag)
        if (ch == ':') ch = '_';
      write_curve_csv(curve, sub, cfg.out_dir + "/accuracy_" + tag + ".csv", true);
    }
  }
  return out;
}

// Theorem-1 scalar inputs for a zero-initialized run of the given model on
// the given network. The transient expectations are deterministic under zero
// initialization.
inline Theorem1Inputs make_theorem1_inputs(const AgentModel& model, const MixingMatrix& mixing,
                                           const ModelConstants& constants, double eta) {
  if (!mixing.connected)
    throw ValidationError("bounds refuse disconnected graphs (gamma_bar = 1)");
  Theorem1Inputs in;
  in.mu = constants.mu;
  in.L = constants.L;
  in.sigma2 = constants.sigma2;
  in.d = model.dim();
  in.N = model.agents();
  in.gamma_bar = mixing.gamma_bar;
  in.lambdaN = mixing.lambdaN;
  in.eta = eta;
  const double xstar_sq = dot(constants.x_star, constants.x_star);
  in.e_x0_sq = 0.0;
  in.e_x0_minus_xstar_sq = static_cast<double>(in.N) * xstar_sq;
  in.e_xbar0_minus_xstar_sq = xstar_sq;
  double grad_star_sq = 0.0, gap = 0.0;
  const Vector origin(model.dim(), 0.0);
  for (std::size_t i = 0; i < in.N; ++i) {
    const Vector gi = model.component_grad(i, constants.x_star);
    grad_star_sq += dot(gi, gi);
    double fi_star;
    if (const auto* lin = dynamic_cast<const LinearRegressionModel*>(&model))
      fi_star = lin->component_value(i, lin->component_minimizer(i));
    else
      fi_star = model.component_value(i, constants.x_star);  // loose upper bound on f_i^*
    gap += model.component_value(i, origin) - fi_star;
  }
  in.grad_norm_star_sq = grad_star_sq;
  in.sum_f0_gap = std::max(gap, 0.0);
  return in;
}

// Theorem-1/2 bound curves over a k grid, with the term breakdown.
inline void write_bound_csv(const nlohmann::json& config_json,
                            const std::vector<std::size_t>& k_grid, const std::string& path,
                            std::optional<double> c5_user = std::nullopt) {
  const ExperimentConfig cfg = config_from_json(config_json);
  Experiment e = build_experiment(cfg);

  RngStream sigma_stream(cfg.seed, aux_stream_id(3));
  const ModelConstants constants = model_constants(*e.model, cfg.sampler.batch, &sigma_stream, 2000);
  const Theorem1Inputs in =
      make_theorem1_inputs(*e.model, e.mixing, constants, cfg.sampler.eta);

  std::ofstream out(path);
  if (!out) throw ValidationError("write_bound_csv: cannot open " + path);
  out << "k,avg_bound,per_agent_bound,contraction,network_transient,asymptotic_avg,asymptotic_agent\n";
  for (std::size_t k : k_grid) {
    BoundValue b;
    if (cfg.sampler.algorithm == Algorithm::de_sghmc) {
      Theorem2Inputs in2;
      in2.base = in;
      in2.gamma = cfg.sampler.gamma;
      if (c5_user)
        in2.c5 = {*c5_user, C5Provenance::user_supplied};
      else
        throw ValidationError("theorem-2 bounds need --c5 (or an empirical estimate)");
      b = theorem2_bound(in2, k);
    } else {
      b = theorem1_bound(in, k);
    }
    out << k << ',' << format_double(b.average) << ',' << format_double(b.per_agent) << ','
        << format_double(b.contraction_term) << ',' << format_double(b.network_transient_term)
        << ',' << format_double(b.asymptotic_term_avg) << ','
        << format_double(b.asymptotic_term_agent) << '\n';
  }
}

}  // namespace desamp
