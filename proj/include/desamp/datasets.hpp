#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "desamp/matrix.hpp"
#include "desamp/models.hpp"
#include "desamp/rng.hpp"

namespace desamp {

struct CsvSchema {
  std::size_t label_column = 0;
  std::string positive_label;  // token mapped to 1; empty = parse label as number
  std::string negative_label;  // optional explicit 0-token; other tokens rejected
  char delimiter = ',';
  bool has_header = false;
  std::vector<std::size_t> skip_columns;  // e.g. id columns
};

struct TabularDataset {
  std::vector<Vector> features;
  Vector labels;
  std::vector<std::string> feature_names;
  Vector column_mean;  // empty until standardize()
  Vector column_std;
  std::size_t rejected_rows = 0;

  std::size_t size() const { return features.size(); }
  std::size_t dim() const { return features.empty() ? 0 : features.front().size(); }

  // Center every column; scale columns with nonzero variance to unit std.
  void standardize() {
    const std::size_t n = size(), d = dim();
    if (n == 0) return;
    column_mean.assign(d, 0.0);
    column_std.assign(d, 1.0);
    for (const Vector& row : features)
      for (std::size_t c = 0; c < d; ++c) column_mean[c] += row[c];
    for (double& m : column_mean) m /= static_cast<double>(n);
    Vector var(d, 0.0);
    for (const Vector& row : features)
      for (std::size_t c = 0; c < d; ++c) {
        const double x = row[c] - column_mean[c];
        var[c] += x * x;
      }
    for (std::size_t c = 0; c < d; ++c) {
      const double v = var[c] / static_cast<double>(n);
      if (v > 0.0) column_std[c] = std::sqrt(v);
    }
    for (Vector& row : features)
      for (std::size_t c = 0; c < d; ++c) row[c] = (row[c] - column_mean[c]) / column_std[c];
  }

  void destandardize() {
    if (column_mean.empty()) return;
    for (Vector& row : features)
      for (std::size_t c = 0; c < dim(); ++c) row[c] = row[c] * column_std[c] + column_mean[c];
    column_mean.clear();
    column_std.clear();
  }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.emplace_back();
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* b = s.data();
  const char* e = b + s.size();
  while (b < e && (*b == ' ' || *b == '\t')) ++b;
  while (e > b && (e[-1] == ' ' || e[-1] == '\t' || e[-1] == '\r')) --e;
  if (b == e) return false;
  auto [ptr, ec] = std::from_chars(b, e, out);
  if (ec != std::errc{} || ptr != e) return false;
  return std::isfinite(out);
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace detail

// Parses a delimited file into features + binary/real labels. Malformed rows
// are dropped and counted; more than 10% rejections is a hard error.
inline TabularDataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("load_csv: cannot open " + path);

  TabularDataset ds;
  std::string line;
  std::size_t total_rows = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    const auto fields = detail::split_line(line, schema.delimiter);
    if (first && schema.has_header) {
      first = false;
      for (std::size_t c = 0; c < fields.size(); ++c) {
        if (c == schema.label_column) continue;
        if (std::find(schema.skip_columns.begin(), schema.skip_columns.end(), c) !=
            schema.skip_columns.end())
          continue;
        ds.feature_names.push_back(detail::trim(fields[c]));
      }
      continue;
    }
    first = false;
    ++total_rows;

    if (schema.label_column >= fields.size()) {
      ++ds.rejected_rows;
      continue;
    }
    double label = 0.0;
    const std::string token = detail::trim(fields[schema.label_column]);
    if (!schema.positive_label.empty()) {
      if (token == schema.positive_label)
        label = 1.0;
      else if (schema.negative_label.empty() || token == schema.negative_label)
        label = 0.0;
      else {
        ++ds.rejected_rows;
        continue;
      }
    } else if (!detail::parse_double(token, label)) {
      ++ds.rejected_rows;
      continue;
    }

    Vector row;
    bool ok = true;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (c == schema.label_column) continue;
      if (std::find(schema.skip_columns.begin(), schema.skip_columns.end(), c) !=
          schema.skip_columns.end())
        continue;
      double v;
      if (!detail::parse_double(fields[c], v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok || (ds.size() > 0 && row.size() != ds.dim())) {
      ++ds.rejected_rows;
      continue;
    }
    ds.features.push_back(std::move(row));
    ds.labels.push_back(label);
  }
  if (total_rows == 0) throw ValidationError("load_csv: no data rows in " + path);
  if (10 * ds.rejected_rows > total_rows)
    throw ValidationError("load_csv: more than 10% of rows rejected in " + path);
  return ds;
}

// Disjoint per-agent index lists over the train split; shard sizes differ by
// at most one (round-robin over a seeded shuffle).
struct Partition {
  std::size_t agents = 0;
  std::vector<std::vector<std::size_t>> shards;
  std::vector<std::size_t> test_indices;
};

inline Partition split_and_partition(std::size_t n, double test_fraction, std::size_t agents,
                                     RngStream& stream) {
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw ValidationError("split_and_partition: test fraction must be in [0,1)");
  if (agents < 1) throw ValidationError("split_and_partition: N must be >= 1");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = stream.next_below(i);
    std::swap(order[i - 1], order[j]);
  }
  const std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * n));
  const std::size_t n_train = n - n_test;
  if (agents > n_train)
    throw ValidationError("split_and_partition: more agents than training points");

  Partition p;
  p.agents = agents;
  p.shards.resize(agents);
  for (std::size_t k = 0; k < n_train; ++k) p.shards[k % agents].push_back(order[k]);
  p.test_indices.assign(order.begin() + n_train, order.end());
  return p;
}

inline Partition split_and_partition(const TabularDataset& ds, double test_fraction,
                                     std::size_t agents, RngStream& stream) {
  return split_and_partition(ds.size(), test_fraction, agents, stream);
}

inline std::vector<Shard> materialize_shards(const std::vector<Vector>& features,
                                             const Vector& labels, const Partition& p) {
  std::vector<Shard> shards(p.agents);
  for (std::size_t i = 0; i < p.agents; ++i)
    for (std::size_t idx : p.shards[i]) {
      shards[i].features.push_back(features[idx]);
      shards[i].responses.push_back(labels[idx]);
    }
  return shards;
}

inline std::vector<Shard> materialize_shards(const TabularDataset& ds, const Partition& p) {
  return materialize_shards(ds.features, ds.labels, p);
}

}  // namespace desamp
