// Command-line front end: simulate / bounds / wasserstein / dataset-prepare.
// Exit codes: 0 success, 2 validation, 3 integrity, 4 numeric failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "desamp/harness.hpp"

namespace fs = std::filesystem;
using namespace desamp;

namespace {

nlohmann::json load_config(const std::string& path) {
  if (!fs::exists(path)) throw ValidationError("config file does not exist: " + path);
  try {
    return read_json(path);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
}

void apply_overrides(nlohmann::json& cfg, const std::optional<std::string>& out,
                     const std::optional<std::uint64_t>& seed, bool strict) {
  if (out) cfg["outputs"]["directory"] = *out;
  if (seed) cfg["seed"] = *seed;
  if (strict) cfg["sampler"]["strict"] = true;
}

int run_simulate(const std::string& config_path, const std::optional<std::string>& out,
                 std::size_t jobs, const std::optional<std::uint64_t>& seed, bool strict) {
  nlohmann::json cfg = load_config(config_path);
  apply_overrides(cfg, out, seed, strict);
  if (!cfg.contains("outputs") || !cfg["outputs"].contains("directory"))
    throw ValidationError("simulate needs outputs.directory (or --out)");
  const SimulationResult res = simulate(cfg, jobs);
  std::cout << "wrote " << res.traces.size() << " trace(s) to "
            << cfg["outputs"]["directory"].get<std::string>() << "\n"
            << "constants: mu=" << format_double(res.constants.mu)
            << " L=" << format_double(res.constants.L)
            << " sigma2=" << format_double(res.constants.sigma2) << "\n";
  if (!cfg["sampler"].value("strict", false)) {
    const ExperimentConfig parsed = config_from_json(cfg);
    Experiment e = build_experiment(parsed);
    if (parsed.sampler.algorithm == Algorithm::de_sgld) {
      const double ceiling =
          sgld_stepsize_ceiling(res.constants.mu, res.constants.L, e.mixing.lambdaN);
      if (parsed.sampler.eta >= ceiling)
        std::cerr << "warning: eta " << format_double(parsed.sampler.eta)
                  << " exceeds the strict-mode ceiling " << format_double(ceiling) << "\n";
    }
  }
  return 0;
}

int run_bounds(const std::string& config_path, const std::string& out, std::size_t kmax,
               std::size_t kstride, std::optional<double> c5,
               const std::optional<std::uint64_t>& seed, bool strict) {
  nlohmann::json cfg = load_config(config_path);
  apply_overrides(cfg, std::nullopt, seed, strict);
  if (kstride == 0) throw ValidationError("--kstride must be positive");
  std::vector<std::size_t> grid;
  for (std::size_t k = 0; k <= kmax; k += kstride) grid.push_back(k);
  write_bound_csv(cfg, grid, out, c5);
  std::cout << "wrote " << grid.size() << " bound rows to " << out << "\n";
  return 0;
}

int run_wasserstein(const std::string& traces_dir, const std::string& subject,
                    const std::string& out) {
  const fs::path manifest_path = fs::path(traces_dir) / "manifest.json";
  if (!fs::exists(manifest_path))
    throw IntegrityError("missing manifest: " + manifest_path.string());
  const nlohmann::json manifest = read_json(manifest_path.string());
  const ExperimentConfig cfg = config_from_json(manifest.at("config"));
  Experiment e = build_experiment(cfg);
  if (!e.posterior)
    throw ValidationError("wasserstein target requires a linear-regression posterior");

  const std::size_t replicas = manifest.at("replicas").get<std::size_t>();
  std::vector<Trace> traces;
  traces.reserve(replicas);
  for (std::size_t r = 0; r < replicas; ++r) {
    const fs::path p = fs::path(traces_dir) / ("trace_" + std::to_string(r) + ".csv");
    if (!fs::exists(p)) throw IntegrityError("missing trace file: " + p.string());
    traces.push_back(read_trace_csv(p.string()));
  }
  const auto curve = w2_curve(traces, *e.posterior, parse_subject(subject));
  write_curve_csv(curve, subject, out);
  std::cout << "wrote " << curve.size() << " curve points to " << out << "\n";
  return 0;
}

int run_dataset_prepare(const std::string& csv_path, const CsvSchema& schema,
                        double test_fraction, std::size_t agents, std::uint64_t seed,
                        const std::string& out_dir, bool standardize) {
  TabularDataset ds = load_csv(csv_path, schema);
  if (standardize) ds.standardize();
  RngStream stream(seed, aux_stream_id(2));
  const Partition p = split_and_partition(ds, test_fraction, agents, stream);

  fs::create_directories(out_dir);
  nlohmann::json shards = nlohmann::json::array();
  for (const auto& shard : p.shards) shards.push_back(shard);
  nlohmann::json manifest = {
      {"source", csv_path},
      {"rows", ds.size()},
      {"dim", ds.dim()},
      {"rejected_rows", ds.rejected_rows},
      {"standardized", standardize},
      {"seed", seed},
      {"test_fraction", test_fraction},
      {"agents", agents},
      {"shards", shards},
      {"test_indices", p.test_indices},
  };
  if (standardize) {
    manifest["column_mean"] = ds.column_mean;
    manifest["column_std"] = ds.column_std;
  }
  write_json(manifest, (fs::path(out_dir) / "partition.json").string());

  std::ofstream data((fs::path(out_dir) / "normalized.csv").string());
  for (std::size_t j = 0; j < ds.size(); ++j) {
    data << format_double(ds.labels[j]);
    for (double v : ds.features[j]) data << ',' << format_double(v);
    data << '\n';
  }
  std::cout << "prepared " << ds.size() << " rows (" << ds.rejected_rows
            << " rejected) into " << agents << " shard(s) at " << out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized Langevin/HMC sampling simulator"};
  app.require_subcommand(1);

  std::string config_path, out, traces_dir, subject = "average", csv_path;
  std::size_t jobs = 1, kmax = 100, kstride = 1, agents = 1;
  std::optional<std::uint64_t> seed_opt;
  std::uint64_t ds_seed = 0;
  bool strict = false, no_standardize = false, has_header = false;
  double test_fraction = 0.0;
  std::optional<double> c5;
  CsvSchema schema;
  std::string delimiter = ",";

  auto* sim = app.add_subcommand("simulate", "run a sampling experiment from a JSON config");
  sim->add_option("--config", config_path, "experiment config JSON")->required();
  sim->add_option("--out", out, "output directory (overrides outputs.directory)");
  sim->add_option("--jobs", jobs, "replica worker threads");
  sim->add_option("--seed", seed_opt, "master seed override");
  sim->add_flag("--strict", strict, "enforce the stepsize/momentum validity ceilings");

  auto* bounds = app.add_subcommand("bounds", "evaluate the theoretical bound curves");
  bounds->add_option("--config", config_path, "experiment config JSON")->required();
  bounds->add_option("--out", out, "output CSV path")->required();
  bounds->add_option("--kmax", kmax, "largest iteration in the grid");
  bounds->add_option("--kstride", kstride, "grid stride");
  bounds->add_option("--c5", c5, "moment bound for the momentum method");
  bounds->add_option("--seed", seed_opt, "master seed override");
  bounds->add_flag("--strict", strict, "enforce validity ceilings");

  auto* w2 = app.add_subcommand("wasserstein", "distance-to-target curve from saved traces");
  w2->add_option("--traces", traces_dir, "directory with trace_*.csv and manifest.json")
      ->required();
  w2->add_option("--subject", subject, "'average' or 'agent:<i>'");
  w2->add_option("--out", out, "output CSV path")->required();

  auto* prep = app.add_subcommand("dataset-prepare", "normalize and partition a CSV dataset");
  prep->add_option("--csv", csv_path, "input CSV")->required();
  prep->add_option("--out", out, "output directory")->required();
  prep->add_option("--label-column", schema.label_column, "label column index");
  prep->add_option("--positive-label", schema.positive_label, "token mapped to 1");
  prep->add_option("--negative-label", schema.negative_label, "token mapped to 0");
  prep->add_option("--delimiter", delimiter, "field delimiter");
  prep->add_flag("--header", has_header, "skip a header row");
  prep->add_option("--skip-columns", schema.skip_columns, "column indices to drop");
  prep->add_option("--test-fraction", test_fraction, "held-out fraction");
  prep->add_option("--agents", agents, "shard count")->required();
  prep->add_option("--seed", ds_seed, "shuffle seed");
  prep->add_flag("--no-standardize", no_standardize, "keep raw feature scales");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sim->parsed()) return run_simulate(config_path, out.empty() ? std::nullopt : std::make_optional(out), jobs, seed_opt, strict);
    if (bounds->parsed()) return run_bounds(config_path, out, kmax, kstride, c5, seed_opt, strict);
    if (w2->parsed()) return run_wasserstein(traces_dir, subject, out);
    if (prep->parsed()) {
      schema.has_header = has_header;
      schema.delimiter = delimiter.empty() ? ',' : delimiter[0];
      return run_dataset_prepare(csv_path, schema, test_fraction, agents, ds_seed, out,
                                 !no_standardize);
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const IntegrityError& e) {
    std::cerr << "integrity error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
