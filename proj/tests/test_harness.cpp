#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "desamp/harness.hpp"

using namespace desamp;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config() {
  return {
      {"model",
       {{"family", "linreg"}, {"n", 60}, {"d", 2}, {"lambda", 10.0}, {"xi", 1.0}}},
      {"network", {{"kind", "complete"}, {"n_agents", 4}}},
      {"sampler", {{"algorithm", "de-sgld"}, {"eta", 0.005}, {"iterations", 20}}},
      {"replicas", 5},
      {"seed", 3},
  };
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

TEST(Io, FormatDoubleRoundTrip) {
  for (double v : {0.0, 1.0, -3.25, 0.1, 1e-300, 6.02e23, 3.141592653589793}) {
    EXPECT_EQ(parse_double_strict(format_double(v)), v);
  }
  EXPECT_THROW(parse_double_strict("1.2x"), IntegrityError);
  EXPECT_THROW(parse_double_strict(""), IntegrityError);
}

TEST(Io, TraceCsvRoundTrip) {
  Trace t;
  t.agents = 2;
  t.dim = 2;
  t.stride = 5;
  t.ks = {0, 5};
  t.positions = {{0.1, -0.2, 0.3, 0.4}, {1.0 / 3.0, 2.0 / 7.0, -1e-12, 5.5}};
  const std::string path = std::string(::testing::TempDir()) + "trace_roundtrip.csv";
  write_trace_csv(t, path);
  const Trace back = read_trace_csv(path);
  EXPECT_EQ(back.ks, t.ks);
  EXPECT_EQ(back.positions, t.positions);
  EXPECT_EQ(back.agents, t.agents);
  EXPECT_EQ(back.dim, t.dim);
  EXPECT_EQ(back.stride, t.stride);
  fs::remove(path);
  EXPECT_THROW(read_trace_csv(path), IntegrityError);
}

TEST(Io, MixingFromJsonBothForms) {
  const nlohmann::json edges = {{"n", 3}, {"edges", {{0, 1}, {1, 2}, {0, 2}}}};
  const MixingMatrix a = mixing_from_json(edges);
  EXPECT_NEAR(a.gamma_bar, 0.0, 1e-12);

  const nlohmann::json w = {{"w", {{0.5, 0.5}, {0.5, 0.5}}}};
  const MixingMatrix b = mixing_from_json(w);
  EXPECT_NEAR(b.lambdaN, 0.0, 1e-12);
  const nlohmann::json bad = {{"w", {{0.9, 0.1}, {0.2, 0.8}}}};
  EXPECT_THROW(mixing_from_json(bad), ValidationError);
}

TEST(Config, ParsesAndValidates) {
  const ExperimentConfig c = config_from_json(small_config());
  EXPECT_EQ(c.family, ModelFamily::linreg);
  EXPECT_EQ(c.agents, 4u);
  EXPECT_EQ(c.sampler.algorithm, Algorithm::de_sgld);
  EXPECT_EQ(c.replicas, 5u);

  nlohmann::json bad = small_config();
  bad["sampler"]["algorithm"] = "nuts";
  EXPECT_THROW(config_from_json(bad), ValidationError);

  nlohmann::json hmc = small_config();
  hmc["sampler"]["algorithm"] = "de-sghmc";
  EXPECT_THROW(config_from_json(hmc), ValidationError);  // gamma missing
  hmc["sampler"]["gamma"] = 3.0;
  EXPECT_NO_THROW(config_from_json(hmc));

  nlohmann::json missing = small_config();
  missing["model"]["csv_path"] = "/no/such/file.csv";
  EXPECT_THROW(config_from_json(missing), ValidationError);

  EXPECT_THROW(parse_subject("agentx"), ValidationError);
}

TEST(Experiment, BuildsConsistentPieces) {
  const Experiment e = build_experiment(config_from_json(small_config()));
  EXPECT_EQ(e.model->agents(), 4u);
  EXPECT_EQ(e.model->dim(), 2u);
  EXPECT_TRUE(e.posterior.has_value());
  EXPECT_EQ(e.features.size(), 60u);
  EXPECT_NEAR(e.mixing.gamma_bar, 0.0, 1e-12);
  std::size_t total = 0;
  for (std::size_t i = 0; i < 4; ++i) total += e.model->shard_size(i);
  EXPECT_EQ(total, 60u);
}

TEST(Simulate, DeterministicOutputBytes) {
  const fs::path dir1 = fs::path(::testing::TempDir()) / "sim_out_1";
  const fs::path dir2 = fs::path(::testing::TempDir()) / "sim_out_2";
  nlohmann::json cfg = small_config();
  cfg["outputs"] = {{"directory", dir1.string()}, {"w2_curves", {"average", "agent:0"}}};
  simulate(cfg, 1);
  cfg["outputs"]["directory"] = dir2.string();
  simulate(cfg, 4);
  for (const char* name : {"trace_0.csv", "trace_4.csv", "w2_average.csv", "w2_agent_0.csv"}) {
    EXPECT_EQ(read_file(dir1 / name), read_file(dir2 / name)) << name;
    EXPECT_FALSE(read_file(dir1 / name).empty());
  }
  // Manifests differ only in the outputs directory field.
  const nlohmann::json m1 = read_json((dir1 / "manifest.json").string());
  const nlohmann::json m2 = read_json((dir2 / "manifest.json").string());
  EXPECT_EQ(m1["constants"], m2["constants"]);
  EXPECT_EQ(m1["spectrum"], m2["spectrum"]);
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST(Simulate, ManifestRoundTrip) {
  const fs::path dir = fs::path(::testing::TempDir()) / "sim_manifest";
  nlohmann::json cfg = small_config();
  cfg["outputs"] = {{"directory", dir.string()}};
  simulate(cfg, 1);
  const nlohmann::json manifest = read_json((dir / "manifest.json").string());
  const std::string trace0 = read_file(dir / "trace_0.csv");
  fs::remove_all(dir);

  // Re-running from the embedded config reproduces identical traces.
  nlohmann::json replay = manifest.at("config");
  replay["outputs"]["directory"] = dir.string();
  simulate(replay, 1);
  EXPECT_EQ(read_file(dir / "trace_0.csv"), trace0);
  fs::remove_all(dir);
}

TEST(Bounds, CsvShapeAndRefusals) {
  const fs::path path = fs::path(::testing::TempDir()) / "bounds.csv";
  write_bound_csv(small_config(), {0, 10, 100}, path.string());
  std::ifstream in(path);
  std::string line;
  std::size_t rows = 0;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("k,avg_bound", 0), 0u);
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  EXPECT_EQ(rows, 3u);
  fs::remove(path);

  nlohmann::json disconnected = small_config();
  disconnected["network"]["kind"] = "disconnected";
  EXPECT_THROW(write_bound_csv(disconnected, {0}, path.string()), ValidationError);
}
