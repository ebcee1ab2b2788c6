#include "dscrd/config.hpp"

#include "dscrd/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace dscrd::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& msg) { throw ModelError(field + ": " + msg); }

void check_keys(const json& obj, const std::string& field, const std::set<std::string>& allowed) {
  for (const auto& [k, v] : obj.items())
    if (!allowed.count(k)) fail(field, "unknown key '" + k + "'");
}

const json& require(const json& obj, const std::string& key, const std::string& field) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(field, "missing required key '" + key + "'");
  return *it;
}

Matrix parse_matrix(const json& j, const std::string& field) {
  if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = -1;
  Matrix m;
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    const std::string rf = field + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.empty()) fail(rf, "expected a non-empty array of numbers");
    if (cols < 0) {
      cols = static_cast<Eigen::Index>(row.size());
      m.resize(rows, cols);
    } else if (static_cast<Eigen::Index>(row.size()) != cols) {
      fail(rf, "row has " + std::to_string(row.size()) + " entries, expected " + std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const auto& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) fail(rf + "[" + std::to_string(c) + "]", "expected a number");
      m(r, c) = v.get<double>();
    }
  }
  return m;
}

CovarianceMatrix parse_cov(const json& j, const std::string& field) {
  return CovarianceMatrix(parse_matrix(j, field), field);
}

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string position(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

NetworkSpec parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ModelError("config parse error at " + position(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) fail("config", "top level must be an object");
  check_keys(doc, "config", {"schema", "description", "source_cov", "base", "nodes"});
  const auto& schema = require(doc, "schema", "config");
  if (!schema.is_number_integer() || schema.get<int>() != kSchemaVersion)
    fail("schema", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  if (auto d = doc.find("description"); d != doc.end() && !d->is_string()) fail("description", "expected a string");

  NetworkSpec net{parse_cov(require(doc, "source_cov", "config"), "source_cov"), {}, std::nullopt};
  if (auto b = doc.find("base"); b != doc.end() && !b->is_null()) {
    if (!b->is_object()) fail("base", "expected an object");
    check_keys(*b, "base", {"mixing", "noise_cov"});
    const Matrix mixing = parse_matrix(require(*b, "mixing", "base"), "base.mixing");
    if (mixing.rows() != mixing.cols()) fail("base.mixing", "mixing must be square");
    CovarianceMatrix noise = parse_cov(require(*b, "noise_cov", "base"), "base.noise_cov");
    net.base.emplace(mixing, std::move(noise), kBase);
  }
  const auto& nodes = require(doc, "nodes", "config");
  if (!nodes.is_array()) fail("nodes", "expected an array");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string f = "nodes[" + std::to_string(i) + "]";
    const auto& n = nodes[i];
    if (!n.is_object()) fail(f, "expected an object");
    check_keys(n, f, {"id", "parent", "mixing", "noise_cov", "alpha", "distortion"});
    const auto& id = require(n, "id", f);
    if (!id.is_string()) fail(f + ".id", "expected a string");
    std::string parent = kBase;
    if (auto p = n.find("parent"); p != n.end()) {
      if (!p->is_string()) fail(f + ".parent", "expected a string");
      parent = p->get<std::string>();
    }
    const bool has_alpha = n.contains("alpha"), has_d = n.contains("distortion");
    if (has_alpha == has_d) fail(f, "exactly one of 'alpha' and 'distortion' is required");
    DistortionChoice choice = 1.0;
    if (has_alpha) {
      if (!n["alpha"].is_number()) fail(f + ".alpha", "expected a number");
      choice = n["alpha"].get<double>();
    } else {
      choice = parse_cov(n["distortion"], f + ".distortion");
    }
    net.nodes.push_back(NodeSpec{id.get<std::string>(), parse_matrix(require(n, "mixing", f), f + ".mixing"),
                                 parse_cov(require(n, "noise_cov", f), f + ".noise_cov"), std::move(choice),
                                 std::move(parent)});
  }
  net.validate();
  return net;
}

NetworkSpec load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const NetworkSpec& net) {
  ordered_json doc;
  doc["schema"] = kSchemaVersion;
  doc["source_cov"] = matrix_json(net.source_cov.matrix());
  if (net.base) doc["base"] = {{"mixing", matrix_json(net.base->mixing)}, {"noise_cov", matrix_json(net.base->noise_cov)}};
  ordered_json nodes = ordered_json::array();
  for (const auto& n : net.nodes) {
    ordered_json o;
    o["id"] = n.id;
    o["parent"] = n.parent;
    o["mixing"] = matrix_json(n.mixing);
    o["noise_cov"] = matrix_json(n.noise_cov.matrix());
    if (const auto* a = std::get_if<double>(&n.distortion))
      o["alpha"] = *a;
    else
      o["distortion"] = matrix_json(std::get<CovarianceMatrix>(n.distortion).matrix());
    nodes.push_back(std::move(o));
  }
  doc["nodes"] = std::move(nodes);
  return doc.dump(2) + "\n";
}

}  // namespace dscrd::cli
