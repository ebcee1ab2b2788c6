#include "dscrd/network.hpp"

#include "dscrd/errors.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace dscrd {

const NodeSpec& NetworkSpec::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  throw ModelError("unknown node '" + id + "'");
}

std::vector<std::string> NetworkSpec::children_of(const std::string& id) const {
  std::vector<std::string> out;
  for (const auto& n : nodes)
    if (n.parent == id) out.push_back(n.id);
  std::sort(out.begin(), out.end());
  return out;
}

void NetworkSpec::validate() const {
  const Eigen::Index dim = source_cov.dim();
  if (!source_cov.full_rank()) throw ModelError("source_cov: source covariance must be full rank");
  if (nodes.empty()) throw ModelError("network has no nodes");
  std::set<std::string> ids;
  for (const auto& n : nodes) {
    if (n.id.empty()) throw ModelError("node with empty id");
    if (n.id == kBase) throw ModelError("node id '" + kBase + "' is reserved");
    if (!ids.insert(n.id).second) throw ModelError("duplicate node id '" + n.id + "'");
  }
  for (const auto& n : nodes) {
    const std::string where = "node '" + n.id + "': ";
    if (n.mixing.rows() != n.mixing.cols())
      throw ModelError(where + "mixing must be square (got " + std::to_string(n.mixing.rows()) + "x" +
                       std::to_string(n.mixing.cols()) + ")");
    if (n.mixing.rows() != dim) throw ModelError(where + "mixing dimension does not match source_cov");
    if (n.noise_cov.dim() != dim) throw ModelError(where + "noise_cov dimension does not match source_cov");
    if (!n.noise_cov.full_rank()) throw ModelError(where + "noise_cov is not full rank");
    const double rc = rcond_general(n.mixing);
    if (!(rc > kMixingRcondFloor)) {
      std::ostringstream os;
      os << where << "mixing is singular (rcond " << rc << ")";
      throw ModelError(os.str());
    }
    if (const auto* a = std::get_if<double>(&n.distortion)) {
      if (!(*a > 0.0 && *a <= 1.0)) throw ModelError(where + "alpha must lie in (0, 1]");
    } else if (std::get<CovarianceMatrix>(n.distortion).dim() != dim) {
      throw ModelError(where + "distortion dimension does not match source_cov");
    }
    if (n.parent != kBase && !ids.count(n.parent))
      throw ModelError(where + "parent '" + n.parent + "' does not exist (orphan)");
  }
  if (base) {
    if (base->source_dim() != dim) throw ModelError("base: mixing does not match the source dimension");
    if (!base->square()) throw ModelError("base: mixing must be square");
  }
  (void)topo_order(*this);
}

std::vector<std::string> topo_order(const NetworkSpec& net) {
  std::map<std::string, std::size_t> pending;  // id -> unprocessed children
  std::map<std::string, std::string> parent;
  for (const auto& n : net.nodes) {
    pending.emplace(n.id, 0);
    parent[n.id] = n.parent;
  }
  for (const auto& n : net.nodes) {
    if (n.parent == kBase) continue;
    auto it = pending.find(n.parent);
    if (it == pending.end()) throw ModelError("node '" + n.id + "': parent '" + n.parent + "' does not exist (orphan)");
    ++it->second;
  }
  std::set<std::string> ready;
  for (const auto& [id, k] : pending)
    if (k == 0) ready.insert(id);
  std::vector<std::string> order;
  while (!ready.empty()) {
    const std::string id = *ready.begin();
    ready.erase(ready.begin());
    order.push_back(id);
    const auto& p = parent[id];
    if (p != kBase && --pending[p] == 0) ready.insert(p);
  }
  if (order.size() != net.nodes.size()) {
    std::string stuck;
    for (const auto& [id, k] : pending)
      if (std::find(order.begin(), order.end(), id) == order.end()) stuck += (stuck.empty() ? "" : ", ") + id;
    throw ModelError("topology contains a cycle through {" + stuck + "}");
  }
  return order;
}

const NodeReport& NetworkReport::node(const std::string& id) const {
  for (const auto& n : nodes)
    if (n.id == id) return n;
  throw ModelError("no report for node '" + id + "'");
}

namespace {

std::optional<LinearObservation> side_for(const NetworkSpec& net, const NodeSpec& n) {
  if (n.parent == kBase) {
    if (!net.base) return std::nullopt;
    return LinearObservation(net.base->mixing, net.base->noise_cov, kBase);
  }
  const auto& p = net.node(n.parent);
  return LinearObservation(p.mixing, p.noise_cov, p.id);
}

}  // namespace

NetworkReport evaluate(const NetworkSpec& net, double loewner_tol) {
  net.validate();
  NetworkReport report;
  std::map<std::string, CovarianceMatrix> resolved;
  for (const auto& id : topo_order(net)) {
    const NodeSpec& n = net.node(id);
    const auto kids = net.children_of(id);
    std::vector<BackwardChannel> channels;
    for (const auto& k : kids) {
      try {
        channels.push_back(backward_channel(net.source_cov, resolved.at(k), k, loewner_tol));
      } catch (const ModelError& e) {
        throw ModelError("node '" + id + "': child " + e.what());
      }
    }
    const LinearObservation own(n.mixing, n.noise_cov, id);
    LinearObservation stat = node_statistic(own, channels, net.source_cov, "T_" + id);
    RdContext ctx = build_context(net.source_cov, stat, side_for(net, n), loewner_tol);
    const CovarianceMatrix D = std::holds_alternative<double>(n.distortion)
                                   ? distortion_family(ctx, std::get<double>(n.distortion))
                                   : std::get<CovarianceMatrix>(n.distortion);
    DistortionTarget target = classify(ctx, D);
    if (target.validity == Validity::Infeasible)
      throw InfeasibleTargetError("node '" + id + "': " + target.violation());
    const double rate = rd_rate(ctx, D);
    std::optional<SchemeSpec> scheme;
    if (target.validity == Validity::Strict) scheme = design_scheme(ctx, D);
    resolved.emplace(id, D);
    report.sum_rate_bits += rate;
    report.nodes.push_back(
        NodeReport{id, n.parent, kids, std::move(stat), std::move(ctx), std::move(target), rate, std::move(scheme)});
  }
  return report;
}

std::vector<SweepRow> sweep(const NetworkSpec& net, const std::string& node_id, const std::vector<double>& alpha_grid,
                            double loewner_tol) {
  (void)net.node(node_id);
  for (double a : alpha_grid)
    if (!(a > 0.0 && a <= 1.0)) throw ModelError("sweep: alpha grid must lie in (0, 1]");
  const NetworkReport rep = evaluate(net, loewner_tol);
  const RdContext& ctx = rep.node(node_id).ctx;
  std::vector<SweepRow> rows;
  for (double a : alpha_grid) {
    CovarianceMatrix D = distortion_family(ctx, a);
    const double r = rd_rate(ctx, D);
    rows.push_back({a, std::move(D), r});
  }
  return rows;
}

}  // namespace dscrd
