#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bip/curves.hpp"
#include "bip/interpolation.hpp"
#include "bip/measure.hpp"
#include "bip/space.hpp"

// JSON loaders and writers for every on-disk artifact the CLI consumes or
// produces. Loaders throw std::invalid_argument with the offending file and
// field named; everything written here is re-readable by the matching loader.

namespace bip {

using json = nlohmann::json;

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": cannot open file");
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument(path + ": cannot open file for writing");
  out << text;
  if (!out) throw std::invalid_argument(path + ": write failed");
}

namespace detail {

inline std::vector<double> number_array(const json& j, const std::string& where) {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected an array of numbers");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& x : j) {
    if (!x.is_number()) throw std::invalid_argument(where + ": expected an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

inline const json& field(const json& j, const char* name, const std::string& where) {
  if (!j.is_object() || !j.contains(name))
    throw std::invalid_argument(where + ": missing field '" + name + "'");
  return j.at(name);
}

}  // namespace detail

// Space files: {"points": n, "dist": [[...]] or "edges": [[i, j, len], ...],
// "weights": [...], "labels": [...] (optional)}.
inline FiniteMetricMeasureSpace space_from_json(const json& j, const std::string& where = "space") {
  if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
  const json& jp = detail::field(j, "points", where);
  if (!jp.is_number_integer() || jp.get<int>() <= 0)
    throw std::invalid_argument(where + ": field 'points' must be a positive integer");
  const int n = jp.get<int>();
  std::vector<double> weights = detail::number_array(detail::field(j, "weights", where), where + ".weights");
  if (static_cast<int>(weights.size()) != n)
    throw std::invalid_argument(where + ": field 'weights' must have length 'points'");
  std::vector<std::string> labels;
  if (j.contains("labels")) {
    const json& jl = j.at("labels");
    if (!jl.is_array() || static_cast<int>(jl.size()) != n)
      throw std::invalid_argument(where + ": field 'labels' must be an array of length 'points'");
    for (const json& x : jl) {
      if (!x.is_string()) throw std::invalid_argument(where + ": field 'labels' must contain strings");
      labels.push_back(x.get<std::string>());
    }
  }
  if (j.contains("dist") && j.contains("edges"))
    throw std::invalid_argument(where + ": give either 'dist' or 'edges', not both");
  if (j.contains("dist")) {
    const json& jd = j.at("dist");
    if (!jd.is_array() || static_cast<int>(jd.size()) != n)
      throw std::invalid_argument(where + ": field 'dist' must be an n-by-n matrix");
    Matrix d(n, n, 0.0);
    for (int i = 0; i < n; ++i) {
      std::vector<double> row = detail::number_array(jd.at(i), where + ".dist[" + std::to_string(i) + "]");
      if (static_cast<int>(row.size()) != n)
        throw std::invalid_argument(where + ": field 'dist' must be an n-by-n matrix");
      for (int k = 0; k < n; ++k) d(i, k) = row[k];
    }
    return make_space_from_dist(std::move(d), std::move(weights), std::move(labels));
  }
  if (j.contains("edges")) {
    const json& je = j.at("edges");
    if (!je.is_array()) throw std::invalid_argument(where + ": field 'edges' must be an array of [i, j, len]");
    std::vector<Edge> edges;
    for (std::size_t r = 0; r < je.size(); ++r) {
      const json& e = je.at(r);
      const std::string ew = where + ".edges[" + std::to_string(r) + "]";
      if (!e.is_array() || e.size() != 3 || !e.at(0).is_number_integer() || !e.at(1).is_number_integer() ||
          !e.at(2).is_number())
        throw std::invalid_argument(ew + ": expected [i, j, len]");
      edges.push_back({e.at(0).get<int>(), e.at(1).get<int>(), e.at(2).get<double>()});
    }
    return make_space_from_edges(n, std::move(edges), std::move(weights), std::move(labels));
  }
  throw std::invalid_argument(where + ": needs either a 'dist' matrix or an 'edges' list");
}

inline FiniteMetricMeasureSpace load_space(const std::string& path) {
  try {
    return space_from_json(load_json_file(path), "space");
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind(path, 0) == 0) throw;
    throw std::invalid_argument(path + ": " + what);
  }
}

inline json space_to_json(const FiniteMetricMeasureSpace& s) {
  json j;
  j["points"] = s.n;
  j["weights"] = s.weight;
  if (!s.label.empty()) j["labels"] = s.label;
  if (s.has_graph()) {
    json edges = json::array();
    for (const Edge& e : s.edge_list) edges.push_back({e.u, e.v, e.len});
    j["edges"] = std::move(edges);
  } else {
    json rows = json::array();
    for (int i = 0; i < s.n; ++i) {
      json row = json::array();
      for (int k = 0; k < s.n; ++k) row.push_back(s.d(i, k));
      rows.push_back(std::move(row));
    }
    j["dist"] = std::move(rows);
  }
  return j;
}

// Measures and functions are plain JSON arrays of length n.
inline ProbMeasure measure_from_json(const json& j, int n, const std::string& where = "measure") {
  std::vector<double> mass = detail::number_array(j, where);
  if (static_cast<int>(mass.size()) != n)
    throw std::invalid_argument(where + ": length must match the space point count");
  try {
    return make_prob_measure(std::move(mass));
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
}

inline ProbMeasure load_measure(const std::string& path, int n) {
  return measure_from_json(load_json_file(path), n, path);
}

inline json measure_to_json(const ProbMeasure& mu) { return json(mu.mass); }

inline RealFunction function_from_json(const json& j, int n, const std::string& where = "function") {
  RealFunction f;
  f.values = detail::number_array(j, where);
  if (static_cast<int>(f.values.size()) != n)
    throw std::invalid_argument(where + ": length must match the space point count");
  return f;
}

inline RealFunction load_function(const std::string& path, int n) {
  return function_from_json(load_json_file(path), n, path);
}

// Plans: {"curves": [[node indices]], "probs": [...], "T": int, "q": number}.
inline TestPlan plan_from_json(const json& j, const std::string& where = "plan") {
  TestPlan plan;
  const json& jt = detail::field(j, "T", where);
  if (!jt.is_number_integer()) throw std::invalid_argument(where + ": field 'T' must be an integer");
  plan.T = jt.get<int>();
  const json& jq = detail::field(j, "q", where);
  if (!jq.is_number()) throw std::invalid_argument(where + ": field 'q' must be a number");
  plan.q = jq.get<double>();
  const json& jc = detail::field(j, "curves", where);
  if (!jc.is_array()) throw std::invalid_argument(where + ": field 'curves' must be an array of index arrays");
  for (std::size_t k = 0; k < jc.size(); ++k) {
    const json& c = jc.at(k);
    const std::string cw = where + ".curves[" + std::to_string(k) + "]";
    if (!c.is_array()) throw std::invalid_argument(cw + ": expected an array of node indices");
    DiscreteCurve curve;
    for (const json& x : c) {
      if (!x.is_number_integer()) throw std::invalid_argument(cw + ": node indices must be integers");
      curve.nodes.push_back(x.get<int>());
    }
    plan.curves.push_back(std::move(curve));
  }
  plan.probs = detail::number_array(detail::field(j, "probs", where), where + ".probs");
  try {
    check_plan(plan);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(where + ": " + e.what());
  }
  return plan;
}

inline TestPlan load_plan(const std::string& path) { return plan_from_json(load_json_file(path), path); }

inline json plan_to_json(const TestPlan& plan) {
  json j;
  json curves = json::array();
  for (const DiscreteCurve& c : plan.curves) curves.push_back(c.nodes);
  j["curves"] = std::move(curves);
  j["probs"] = plan.probs;
  j["T"] = plan.T;
  j["q"] = plan.q;
  return j;
}

// Endpoint pair files: [{"mu0": [...], "mu1": [...]}, ...].
inline std::vector<std::pair<ProbMeasure, ProbMeasure>> pairs_from_json(const json& j, int n,
                                                                        const std::string& where = "pairs") {
  if (!j.is_array()) throw std::invalid_argument(where + ": expected an array of {mu0, mu1} objects");
  std::vector<std::pair<ProbMeasure, ProbMeasure>> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string pw = where + "[" + std::to_string(k) + "]";
    const json& e = j.at(k);
    out.emplace_back(measure_from_json(detail::field(e, "mu0", pw), n, pw + ".mu0"),
                     measure_from_json(detail::field(e, "mu1", pw), n, pw + ".mu1"));
  }
  if (out.empty()) throw std::invalid_argument(where + ": needs at least one pair");
  return out;
}

inline std::vector<std::pair<ProbMeasure, ProbMeasure>> load_pairs(const std::string& path, int n) {
  return pairs_from_json(load_json_file(path), n, path);
}

// Profiles: {"kind": "cd_infty"|"mcp"|"cd_negative"|"constant"|"sampled",
// "K": ..., "N": ..., "value": ..., "samples": [[D, C], ...]}.
inline ProfileFunction profile_from_json(const json& j, const std::string& where = "profile") {
  const json& jk = detail::field(j, "kind", where);
  if (!jk.is_string()) throw std::invalid_argument(where + ": field 'kind' must be a string");
  const std::string kind = jk.get<std::string>();
  auto number_field = [&](const char* name) {
    const json& x = detail::field(j, name, where);
    if (!x.is_number()) throw std::invalid_argument(where + ": field '" + std::string(name) + "' must be a number");
    return x.get<double>();
  };
  try {
    if (kind == "cd_infty") return profile_cd_infty(number_field("K"));
    if (kind == "mcp") return profile_mcp(number_field("K"), number_field("N"));
    if (kind == "cd_negative") return profile_cd_negative(number_field("K"), number_field("N"));
    if (kind == "constant") return profile_sampled({{0.0, number_field("value")}});
    if (kind == "sampled") {
      const json& js = detail::field(j, "samples", where);
      if (!js.is_array()) throw std::invalid_argument(where + ": field 'samples' must be an array of [D, C]");
      std::vector<std::pair<double, double>> samples;
      for (const json& e : js) {
        if (!e.is_array() || e.size() != 2 || !e.at(0).is_number() || !e.at(1).is_number())
          throw std::invalid_argument(where + ": field 'samples' must be an array of [D, C]");
        samples.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
      }
      return profile_sampled(std::move(samples));
    }
  } catch (const std::invalid_argument& e) {
    const std::string what = e.what();
    if (what.rfind(where, 0) == 0) throw;
    throw std::invalid_argument(where + ": " + what);
  }
  throw std::invalid_argument(where + ": unknown kind '" + kind + "'");
}

// Accepts either inline JSON (starts with '{') or a path to a JSON file.
inline ProfileFunction load_profile(const std::string& text_or_path) {
  if (!text_or_path.empty() && text_or_path.front() == '{') {
    try {
      return profile_from_json(json::parse(text_or_path), "profile");
    } catch (const json::parse_error& e) {
      throw std::invalid_argument(std::string("profile: ") + e.what());
    }
  }
  return profile_from_json(load_json_file(text_or_path), text_or_path);
}

// Embedded subspaces for measured limits: {"indices": [ambient indices],
// "weights": [...] (optional, defaults to the ambient weights)}. The metric is
// inherited from the ambient space, so the embedding is isometric by
// construction.
inline EmbeddedSpace embedded_from_json(const FiniteMetricMeasureSpace& ambient, const json& j,
                                        const std::string& where = "embedding") {
  const json& ji = detail::field(j, "indices", where);
  if (!ji.is_array() || ji.empty())
    throw std::invalid_argument(where + ": field 'indices' must be a nonempty array");
  std::vector<int> idx;
  for (const json& x : ji) {
    if (!x.is_number_integer()) throw std::invalid_argument(where + ": field 'indices' must contain integers");
    const int i = x.get<int>();
    if (i < 0 || i >= ambient.n)
      throw std::invalid_argument(where + ": ambient index " + std::to_string(i) + " out of range");
    idx.push_back(i);
  }
  const int m = static_cast<int>(idx.size());
  std::vector<double> weights;
  if (j.contains("weights")) {
    weights = detail::number_array(j.at("weights"), where + ".weights");
    if (static_cast<int>(weights.size()) != m)
      throw std::invalid_argument(where + ": field 'weights' must match the index count");
  } else {
    for (int i : idx) weights.push_back(ambient.w(i));
  }
  Matrix d(m, m, 0.0);
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b) d(a, b) = ambient.d(idx[a], idx[b]);
  EmbeddedSpace e;
  e.space = make_space_from_dist(std::move(d), std::move(weights));
  e.to_ambient = std::move(idx);
  return e;
}

inline EmbeddedSpace load_embedded(const std::string& path, const FiniteMetricMeasureSpace& ambient) {
  return embedded_from_json(ambient, load_json_file(path), path);
}

}  // namespace bip
