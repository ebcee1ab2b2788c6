#pragma once

#include "dscrd/coding_scheme.hpp"
#include "dscrd/covariance.hpp"
#include "dscrd/observation.hpp"
#include "dscrd/rate_distortion.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace dscrd {

inline const std::string kBase = "BASE";

// Either a point on the distortion family or an explicit matrix.
using DistortionChoice = std::variant<double, CovarianceMatrix>;

struct NodeSpec {
  std::string id;
  Matrix mixing;
  CovarianceMatrix noise_cov;
  DistortionChoice distortion;
  std::string parent = kBase;
};

struct NetworkSpec {
  CovarianceMatrix source_cov;
  std::vector<NodeSpec> nodes;
  std::optional<LinearObservation> base;  // base-station measurement, if any

  // Throws ModelError on inconsistent dimensions, singular or non-square
  // mixing, duplicate ids, orphans and cycles.
  void validate() const;
  const NodeSpec& node(const std::string& id) const;
  std::vector<std::string> children_of(const std::string& id) const;
};

struct NodeReport {
  std::string id;
  std::string parent;
  std::vector<std::string> children;
  LinearObservation statistic;
  RdContext ctx;
  DistortionTarget target;
  double rate_bits = 0.0;
  std::optional<SchemeSpec> scheme;  // present for strict targets

  Validity validity() const { return target.validity; }
  const CovarianceMatrix& D() const { return target.D; }
};

struct NetworkReport {
  std::vector<NodeReport> nodes;  // topological order
  double sum_rate_bits = 0.0;

  const NodeReport& node(const std::string& id) const;
};

// Children before parents; ties broken lexicographically by id.
std::vector<std::string> topo_order(const NetworkSpec& net);

NetworkReport evaluate(const NetworkSpec& net, double loewner_tol = kPsdTol);

struct SweepRow {
  double alpha = 0.0;
  CovarianceMatrix D;
  double rate_bits = 0.0;
};

// Rate of one node along the distortion family, all other nodes held at
// their configured targets.
std::vector<SweepRow> sweep(const NetworkSpec& net, const std::string& node_id, const std::vector<double>& alpha_grid,
                            double loewner_tol = kPsdTol);

}  // namespace dscrd
