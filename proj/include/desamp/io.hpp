#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "desamp/matrix.hpp"
#include "desamp/metrics.hpp"
#include "desamp/network.hpp"
#include "desamp/samplers.hpp"

namespace desamp {

// Shortest decimal representation that round-trips to the same double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw NumericError("format_double: conversion failed");
  return std::string(buf, ptr);
}

inline double parse_double_strict(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw IntegrityError("parse_double_strict: bad float field '" + s + "'");
  return v;
}

// One CSV per replica: k, agent, coordinate index, value.
inline void write_trace_csv(const Trace& t, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("write_trace_csv: cannot open " + path);
  out << "k,agent,coord,value\n";
  for (std::size_t r = 0; r < t.ks.size(); ++r)
    for (std::size_t i = 0; i < t.agents; ++i)
      for (std::size_t c = 0; c < t.dim; ++c)
        out << t.ks[r] << ',' << i << ',' << c << ','
            << format_double(t.positions[r][i * t.dim + c]) << '\n';
}

inline Trace read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("read_trace_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("k,agent,coord,value", 0) != 0)
    throw IntegrityError("read_trace_csv: missing header in " + path);

  Trace t;
  std::size_t last_k = 0;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f0, f1, f2, f3;
    if (!std::getline(ss, f0, ',') || !std::getline(ss, f1, ',') ||
        !std::getline(ss, f2, ',') || !std::getline(ss, f3))
      throw IntegrityError("read_trace_csv: malformed row in " + path);
    const std::size_t k = std::stoull(f0);
    const std::size_t agent = std::stoull(f1);
    const std::size_t coord = std::stoull(f2);
    const double value = parse_double_strict(f3);
    if (first || k != last_k) {
      if (!first && k < last_k) throw IntegrityError("read_trace_csv: iterations not increasing");
      t.ks.push_back(k);
      t.positions.emplace_back();
      last_k = k;
      first = false;
    }
    t.positions.back().push_back(value);
    t.agents = std::max(t.agents, agent + 1);
    t.dim = std::max(t.dim, coord + 1);
  }
  for (const Vector& snap : t.positions)
    if (snap.size() != t.agents * t.dim)
      throw IntegrityError("read_trace_csv: ragged snapshot in " + path);
  if (t.ks.size() >= 2) t.stride = t.ks[1] - t.ks[0];
  return t;
}

inline void write_curve_csv(const std::vector<CurvePoint>& curve, const std::string& subject,
                            const std::string& path, bool with_std = false) {
  std::ofstream out(path);
  if (!out) throw ValidationError("write_curve_csv: cannot open " + path);
  out << (with_std ? "k,subject,value,std\n" : "k,subject,value\n");
  for (const CurvePoint& p : curve) {
    out << p.k << ',' << subject << ',' << format_double(p.value);
    if (with_std) out << ',' << format_double(p.std_dev);
    out << '\n';
  }
}

inline nlohmann::json topology_to_json(const Topology& t) {
  nlohmann::json edges = nlohmann::json::array();
  for (auto [i, j] : t.edges) edges.push_back({i, j});
  return {{"n", t.n}, {"edges", edges}};
}

// Accepts {"n": int, "edges": [[i,j],...]} or {"w": [[...],...]}.
inline MixingMatrix mixing_from_json(const nlohmann::json& j) {
  if (j.contains("w")) {
    const auto& rows = j.at("w");
    const std::size_t n = rows.size();
    DenseMatrix w(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (rows[i].size() != n) throw ValidationError("mixing_from_json: ragged W");
      for (std::size_t c = 0; c < n; ++c) w(i, c) = rows[i][c].get<double>();
    }
    return custom_mixing(std::move(w));
  }
  const std::size_t n = j.at("n").get<std::size_t>();
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (const auto& e : j.value("edges", nlohmann::json::array()))
    edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
  return metropolis_weights(make_topology(TopologyKind::custom, n, edges));
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("write_json: cannot open " + path);
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IntegrityError("read_json: cannot open " + path);
  nlohmann::json j;
  in >> j;
  return j;
}

}  // namespace desamp
