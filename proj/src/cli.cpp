#include "dscrd/cli.hpp"

#include "dscrd/config.hpp"
#include "dscrd/errors.hpp"
#include "dscrd/philox.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dscrd::cli {

using nlohmann::ordered_json;

namespace {

constexpr const char* kBaselineLabel = "extension: baseline without decoder side information";

ordered_json matrix_json(const Matrix& m) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

ordered_json header(const char* command) {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["command"] = command;
  return j;
}

ordered_json node_json(const NodeReport& n) {
  ordered_json o;
  o["id"] = n.id;
  o["parent"] = n.parent;
  o["children"] = n.children;
  o["statistic"] = {{"mixing", matrix_json(n.statistic.mixing)}, {"noise_cov", matrix_json(n.statistic.noise_cov)}};
  o["has_side_information"] = n.ctx.has_side();
  o["cond_cov_side"] = matrix_json(n.ctx.cond_side);
  o["cond_cov_stat_side"] = matrix_json(n.ctx.cond_stat_side);
  o["distortion"] = matrix_json(n.D());
  o["validity"] = to_string(n.validity());
  o["rate_bits"] = n.rate_bits;
  o["scheme_attached"] = n.scheme.has_value();
  if (n.scheme)
    o["scheme"] = {{"U", matrix_json(n.scheme->U)}, {"C", matrix_json(n.scheme->C)},
                   {"nu_cov", matrix_json(n.scheme->nu_cov)}};
  return o;
}

std::string dump(const ordered_json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::optional<Command> parse_command(const std::string& name) {
  if (name == "validate") return Command::Validate;
  if (name == "rate") return Command::Rate;
  if (name == "sweep") return Command::Sweep;
  if (name == "simulate") return Command::Simulate;
  if (name == "compare") return Command::Compare;
  return std::nullopt;
}

std::string validate_report(const NetworkSpec& net, Format fmt) {
  const auto order = topo_order(net);
  auto distortion_text = [](const NodeSpec& n) {
    return std::holds_alternative<double>(n.distortion) ? "alpha=" + num(std::get<double>(n.distortion))
                                                        : std::string("explicit");
  };
  if (fmt == Format::Csv) {
    std::string out = "node,parent,children,distortion\n";
    for (const auto& id : order) {
      const auto& n = net.node(id);
      std::string kids;
      for (const auto& k : net.children_of(id)) kids += (kids.empty() ? "" : ";") + k;
      out += csv_field(id) + "," + csv_field(n.parent) + "," + csv_field(kids) + "," + distortion_text(n) + "\n";
    }
    return out;
  }
  ordered_json j = header("validate");
  j["source_dim"] = net.source_cov.dim();
  j["source_cov"] = matrix_json(net.source_cov);
  j["base_measurement"] = net.base.has_value();
  j["topo_order"] = order;
  ordered_json nodes = ordered_json::array();
  for (const auto& id : order) {
    const auto& n = net.node(id);
    ordered_json o;
    o["id"] = id;
    o["parent"] = n.parent;
    o["children"] = net.children_of(id);
    o["distortion"] = distortion_text(n);
    if (const auto* d = std::get_if<CovarianceMatrix>(&n.distortion)) o["distortion_matrix"] = matrix_json(*d);
    nodes.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  return dump(j);
}

std::string rate_report(const NetworkReport& rep, Format fmt) {
  if (fmt == Format::Csv) {
    std::string out = "node,parent,validity,rate_bits\n";
    for (const auto& n : rep.nodes)
      out += csv_field(n.id) + "," + csv_field(n.parent) + "," + to_string(n.validity()) + "," + num(n.rate_bits) +
             "\n";
    out += "SUM,,," + num(rep.sum_rate_bits) + "\n";
    return out;
  }
  ordered_json j = header("rate");
  j["units"] = "bits per source vector";
  ordered_json nodes = ordered_json::array();
  for (const auto& n : rep.nodes) nodes.push_back(node_json(n));
  j["nodes"] = std::move(nodes);
  j["sum_rate_bits"] = rep.sum_rate_bits;
  return dump(j);
}

namespace {

struct Baseline {
  Validity validity;
  std::optional<double> rate;
};

Baseline baseline(const NodeReport& n, double tol) {
  const RdContext bare = build_context(n.ctx.source_cov, n.ctx.statistic, std::nullopt, tol);
  const auto t = classify(bare, n.D());
  if (t.validity == Validity::Infeasible) return {t.validity, std::nullopt};
  return {t.validity, rd_rate(bare, n.D())};
}

}  // namespace

std::string compare_report(const NetworkReport& rep, Format fmt, double loewner_tol) {
  if (fmt == Format::Csv) {
    std::string out = "node,validity,rate_bits,baseline_no_side_validity,baseline_no_side_rate_bits\n";
    for (const auto& n : rep.nodes) {
      const auto b = baseline(n, loewner_tol);
      out += csv_field(n.id) + "," + to_string(n.validity()) + "," + num(n.rate_bits) + "," + to_string(b.validity) +
             "," + (b.rate ? num(*b.rate) : std::string()) + "\n";
    }
    return out;
  }
  ordered_json j = header("compare");
  j["units"] = "bits per source vector";
  j["baseline_label"] = kBaselineLabel;
  ordered_json nodes = ordered_json::array();
  double baseline_sum = 0.0;
  bool baseline_complete = true;
  for (const auto& n : rep.nodes) {
    const auto b = baseline(n, loewner_tol);
    ordered_json o;
    o["id"] = n.id;
    o["validity"] = to_string(n.validity());
    o["rate_bits"] = n.rate_bits;
    ordered_json bj;
    bj["label"] = kBaselineLabel;
    bj["validity"] = to_string(b.validity);
    bj["rate_bits"] = b.rate ? ordered_json(*b.rate) : ordered_json(nullptr);
    o["baseline_no_side"] = std::move(bj);
    if (b.rate)
      baseline_sum += *b.rate;
    else
      baseline_complete = false;
    nodes.push_back(std::move(o));
  }
  j["nodes"] = std::move(nodes);
  j["sum_rate_bits"] = rep.sum_rate_bits;
  j["baseline_no_side_sum_rate_bits"] = baseline_complete ? ordered_json(baseline_sum) : ordered_json(nullptr);
  return dump(j);
}

std::string sweep_report(const std::string& node, const std::vector<SweepRow>& rows, Format fmt) {
  if (fmt == Format::Csv) {
    std::string out = "alpha,rate_bits";
    if (!rows.empty()) {
      const auto n = rows.front().D.dim();
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) out += ",d_" + std::to_string(r) + "_" + std::to_string(c);
    }
    out += "\n";
    for (const auto& row : rows) {
      out += num(row.alpha) + "," + num(row.rate_bits);
      const Matrix& D = row.D;
      for (Eigen::Index r = 0; r < D.rows(); ++r)
        for (Eigen::Index c = 0; c < D.cols(); ++c) out += "," + num(D(r, c));
      out += "\n";
    }
    return out;
  }
  ordered_json j = header("sweep");
  j["node"] = node;
  ordered_json arr = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json o;
    o["alpha"] = row.alpha;
    o["rate_bits"] = row.rate_bits;
    o["distortion"] = matrix_json(row.D);
    arr.push_back(std::move(o));
  }
  j["rows"] = std::move(arr);
  return dump(j);
}

namespace {

std::uint64_t node_seed(std::uint64_t seed, const std::string& id) { return seed ^ mc::stream_id("node:" + id); }

mc::SimConfig sim_config(const NetworkSpec& net, const NetworkReport& rep, const NodeReport& n, const RunConfig& cfg) {
  const auto& spec = net.node(n.id);
  std::vector<BackwardChannel> children;
  for (const auto& k : n.children) children.push_back(backward_channel(net.source_cov, rep.node(k).D(), k, cfg.loewner_tol));
  return mc::SimConfig{node_seed(cfg.seed, n.id), cfg.sample_count,
                       mc::SimInstance{net.source_cov, LinearObservation(spec.mixing, spec.noise_cov, n.id),
                                       std::move(children), n.ctx.side, n.scheme}};
}

}  // namespace

SimulationOutcome simulate_report(const NetworkSpec& net, const NetworkReport& rep, const RunConfig& cfg) {
  SimulationOutcome res;
  ordered_json j = header("simulate");
  j["seed"] = cfg.seed;
  j["samples"] = cfg.sample_count;
  j["pass_sigma"] = cfg.match_tol;
  j["fail_sigma"] = std::max(mc::kFailSigma, cfg.match_tol);
  std::string csv = "node,quantity,row,col,closed_form,empirical,std_error,max_sigma,status\n";
  ordered_json nodes = ordered_json::array();
  for (const auto& n : rep.nodes) {
    const auto comps = mc::consistency_suite(sim_config(net, rep, n, cfg), cfg.match_tol);
    ordered_json arr = ordered_json::array();
    for (const auto& c : comps) {
      res.worst_sigma = std::max(res.worst_sigma, c.max_sigma);
      if (c.status == mc::MatchStatus::Fail) res.hard_failure = true;
      ordered_json o;
      o["quantity"] = c.quantity;
      o["closed_form"] = matrix_json(c.closed_form);
      o["empirical"] = matrix_json(c.empirical);
      o["std_error"] = matrix_json(c.std_error);
      o["max_sigma"] = c.max_sigma;
      o["status"] = mc::to_string(c.status);
      arr.push_back(std::move(o));
      for (Eigen::Index r = 0; r < c.closed_form.rows(); ++r)
        for (Eigen::Index k = 0; k < c.closed_form.cols(); ++k)
          csv += csv_field(n.id) + "," + csv_field(c.quantity) + "," + std::to_string(r) + "," + std::to_string(k) +
                 "," + num(c.closed_form(r, k)) + "," + num(c.empirical(r, k)) + "," + num(c.std_error(r, k)) + "," +
                 num(c.max_sigma) + "," + mc::to_string(c.status) + "\n";
    }
    nodes.push_back({{"id", n.id}, {"comparisons", std::move(arr)}});
  }
  j["nodes"] = std::move(nodes);
  j["worst_sigma"] = res.worst_sigma;
  j["status"] = res.hard_failure ? "fail" : "ok";
  res.report = cfg.format == Format::Csv ? csv : dump(j);
  if (cfg.export_path) {
    std::ofstream bin(*cfg.export_path, std::ios::binary);
    if (!bin) throw ModelError("cannot open export file '" + *cfg.export_path + "'");
    // Export covers the node nearest the base station.
    mc::export_binary(mc::simulate(sim_config(net, rep, rep.nodes.back(), cfg)), bin);
  }
  return res;
}

int run(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  try {
    const NetworkSpec net = load_config(cfg.config_path);
    std::string text;
    int status = kExitOk;
    switch (cfg.command) {
      case Command::Validate:
        text = validate_report(net, cfg.format);
        break;
      case Command::Rate:
        text = rate_report(evaluate(net, cfg.loewner_tol), cfg.format);
        break;
      case Command::Compare:
        text = compare_report(evaluate(net, cfg.loewner_tol), cfg.format, cfg.loewner_tol);
        break;
      case Command::Sweep: {
        const auto order = topo_order(net);
        const std::string node = cfg.node.value_or(order.back());
        std::vector<double> grid = cfg.alpha_grid;
        if (grid.empty())
          for (int i = 1; i <= 50; ++i) grid.push_back(i / 50.0);
        text = sweep_report(node, sweep(net, node, grid, cfg.loewner_tol), cfg.format);
        break;
      }
      case Command::Simulate: {
        if (cfg.sample_count < 100) throw ModelError("simulate: --samples must be at least 100");
        const auto rep = evaluate(net, cfg.loewner_tol);
        const auto outcome = simulate_report(net, rep, cfg);
        text = outcome.report;
        if (outcome.hard_failure) {
          err << "Monte Carlo mismatch beyond " << std::max(mc::kFailSigma, cfg.match_tol)
              << " standard errors (worst " << outcome.worst_sigma << ")\n";
          status = kExitMonteCarlo;
        }
        break;
      }
    }
    if (cfg.output_path) {
      std::ofstream f(*cfg.output_path, std::ios::binary);
      if (!f) throw ModelError("cannot open output file '" + *cfg.output_path + "'");
      f << text;
    } else {
      out << text;
    }
    return status;
  } catch (const InfeasibleTargetError& e) {
    err << "infeasible distortion target: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const MonteCarloMismatchError& e) {
    err << e.what() << "\n";
    return kExitMonteCarlo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitModelError;
  }
}

}  // namespace dscrd::cli
