// Copyright 2026 The qtomo Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// JSON forms of density matrices, count records and fit curves.
//
//   density matrix  {"n": 2, "re": [[...], ...], "im": [[...], ...]}  (row-major)
//   count record    {"n": 2, "settings": [{"label": "XZ", "shots": 1000,
//                     "outcomes": [{"label": "01", "count": 250}, ...]}, ...]}
//   fit curve       {"c": [c1, c2, ...]}

#pragma once

#include <fstream>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qtomo/density.hpp"
#include "qtomo/errors.hpp"
#include "qtomo/fit_curve.hpp"
#include "qtomo/measurement.hpp"

namespace qtomo::io {

using Json = nlohmann::json;

namespace detail {

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

inline Json parse_text(const std::string& text, const std::string& origin) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SchemaError(origin, "malformed JSON near line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(path, "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DomainError("cannot write '" + path + "'");
  out << text;
  if (!out) throw DomainError("write failed for '" + path + "'");
}

inline const Json& member(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  return v.get<double>();
}

inline int qubit_count(const Json& doc) {
  const Json& n = member(doc, "n", "");
  if (!n.is_number_integer()) throw SchemaError("n", "expected an integer");
  const auto value = n.get<long long>();
  if (value < 1 || value > kMaxQubits) throw SchemaError("n", "qubit count out of range");
  return static_cast<int>(value);
}

inline Eigen::MatrixXd real_block(const Json& rows, Eigen::Index d, const std::string& path) {
  if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != d) {
    throw SchemaError(path, "expected " + std::to_string(d) + " rows");
  }
  Eigen::MatrixXd out(d, d);
  for (Eigen::Index r = 0; r < d; ++r) {
    const Json& row = rows[static_cast<std::size_t>(r)];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d) {
      throw SchemaError(rp, "expected " + std::to_string(d) + " columns");
    }
    for (Eigen::Index c = 0; c < d; ++c) {
      out(r, c) = number(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
    }
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// density matrices

inline Json to_json(const DensityMatrix& rho) {
  const Eigen::Index d = rho.dim();
  Json re = Json::array();
  Json im = Json::array();
  for (Eigen::Index r = 0; r < d; ++r) {
    Json rr = Json::array();
    Json ii = Json::array();
    for (Eigen::Index c = 0; c < d; ++c) {
      rr.push_back(rho.matrix()(r, c).real());
      ii.push_back(rho.matrix()(r, c).imag());
    }
    re.push_back(std::move(rr));
    im.push_back(std::move(ii));
  }
  return Json{{"n", rho.num_qubits()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline DensityMatrix density_from_json(const Json& doc) {
  const int n = detail::qubit_count(doc);
  const Eigen::Index d = dimension_of(n);
  const Eigen::MatrixXd re = detail::real_block(detail::member(doc, "re", ""), d, "re");
  const Eigen::MatrixXd im = detail::real_block(detail::member(doc, "im", ""), d, "im");
  Matrix m(d, d);
  m.real() = re;
  m.imag() = im;
  return DensityMatrix(n, std::move(m));
}

inline DensityMatrix read_density(const std::string& path) {
  return density_from_json(detail::parse_text(detail::read_file(path), path));
}

inline void write_density(const std::string& path, const DensityMatrix& rho) {
  detail::write_file(path, to_json(rho).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// count records

/// Serializes a record whose settings are cube settings. Outcome labels are
/// the part of each projector label after the setting's "LABEL:" prefix.
inline Json to_json(const CountRecord& cr) {
  const ProjectorSet& ps = cr.projector_set();
  Json settings = Json::array();
  for (std::size_t s = 0; s < ps.settings().size(); ++s) {
    const auto& setting = ps.settings()[s];
    Json outcomes = Json::array();
    for (std::size_t j : setting.projectors) {
      std::string label = ps[j].label;
      const std::string prefix = setting.label + ":";
      if (label.rfind(prefix, 0) == 0) label = label.substr(prefix.size());
      outcomes.push_back({{"label", label}, {"count", cr.counts()(static_cast<Eigen::Index>(j))}});
    }
    settings.push_back({{"label", setting.label}, {"shots", cr.shots()[s]}, {"outcomes", std::move(outcomes)}});
  }
  return Json{{"n", cr.num_qubits()}, {"settings", std::move(settings)}};
}

/// Parses a count record over cube settings. Outcomes missing from a setting
/// are taken as zero counts.
inline CountRecord count_record_from_json(const Json& doc) {
  const int n = detail::qubit_count(doc);
  const Json& settings = detail::member(doc, "settings", "");
  if (!settings.is_array() || settings.empty()) throw SchemaError("settings", "expected a non-empty array");

  std::vector<std::string> labels;
  std::set<std::string> seen;
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const std::string path = "settings[" + std::to_string(s) + "]";
    const Json& label = detail::member(settings[s], "label", path);
    if (!label.is_string()) throw SchemaError(path + ".label", "expected a string");
    const std::string text = label.get<std::string>();
    if (!ProjectorSet::parse_cube_setting(n, text)) throw UnknownProjectorLabel(path + ".label", text);
    std::string canonical = text;
    for (char& c : canonical) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (!seen.insert(canonical).second) throw SchemaError(path + ".label", "duplicate setting '" + text + "'");
    labels.push_back(canonical);
  }
  auto ps = std::make_shared<const ProjectorSet>(ProjectorSet::cube_subset(n, labels));

  RealVector counts = RealVector::Zero(static_cast<Eigen::Index>(ps->size()));
  std::vector<double> shots(settings.size(), 0.0);
  for (std::size_t s = 0; s < settings.size(); ++s) {
    const std::string path = "settings[" + std::to_string(s) + "]";
    shots[s] = detail::number(detail::member(settings[s], "shots", path), path + ".shots");
    if (!(shots[s] > 0.0)) throw SchemaError(path + ".shots", "must be positive");
    const Json& outcomes = detail::member(settings[s], "outcomes", path);
    if (!outcomes.is_array()) throw SchemaError(path + ".outcomes", "expected an array");
    std::set<std::string> outcome_seen;
    double total = 0.0;
    for (std::size_t o = 0; o < outcomes.size(); ++o) {
      const std::string opath = path + ".outcomes[" + std::to_string(o) + "]";
      const Json& olabel = detail::member(outcomes[o], "label", opath);
      if (!olabel.is_string()) throw SchemaError(opath + ".label", "expected a string");
      const std::string text = olabel.get<std::string>();
      const auto j = ps->find(labels[s] + ":" + text);
      if (!j) throw UnknownProjectorLabel(opath + ".label", text);
      if (!outcome_seen.insert(text).second) throw SchemaError(opath + ".label", "duplicate outcome '" + text + "'");
      const double count = detail::number(detail::member(outcomes[o], "count", opath), opath + ".count");
      if (!(count >= 0.0)) throw SchemaError(opath + ".count", "must be non-negative");
      counts(static_cast<Eigen::Index>(*j)) = count;
      total += count;
    }
    if (!(total > 0.0)) throw SchemaError(path + ".outcomes", "setting has no counts");
  }
  return CountRecord(std::move(ps), std::move(counts), std::move(shots));
}

inline CountRecord read_count_record(const std::string& path) {
  return count_record_from_json(detail::parse_text(detail::read_file(path), path));
}

inline void write_count_record(const std::string& path, const CountRecord& cr) {
  detail::write_file(path, to_json(cr).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// fit curves

inline Json to_json(const FitCurve& f) { return Json{{"c", f.coefficients}}; }

inline FitCurve fit_curve_from_json(const Json& doc) {
  const Json& c = detail::member(doc, "c", "");
  if (!c.is_array() || c.empty()) throw SchemaError("c", "expected a non-empty array");
  FitCurve f;
  for (std::size_t k = 0; k < c.size(); ++k) f.coefficients.push_back(detail::number(c[k], "c[" + std::to_string(k) + "]"));
  return f;
}

inline FitCurve read_fit_curve(const std::string& path) {
  return fit_curve_from_json(detail::parse_text(detail::read_file(path), path));
}

inline void write_fit_curve(const std::string& path, const FitCurve& f) {
  detail::write_file(path, to_json(f).dump(2) + "\n");
}

}  // namespace qtomo::io
