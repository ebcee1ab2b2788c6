#include "dscrd/cli.hpp"
#include "dscrd/coding_scheme.hpp"
#include "dscrd/config.hpp"
#include "dscrd/errors.hpp"
#include "dscrd/mc_oracle.hpp"
#include "dscrd/network.hpp"
#include "dscrd/rate_distortion.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace dscrd;

namespace {

CovarianceMatrix cov(const Matrix& m, const char* name = "covariance") { return CovarianceMatrix(m, name); }

std::vector<BackwardChannel> channels(const Matrix& source_cov, const std::vector<Matrix>& child_D) {
  const auto S = cov(source_cov, "source_cov");
  std::vector<BackwardChannel> out;
  for (std::size_t i = 0; i < child_D.size(); ++i)
    out.push_back(backward_channel(S, cov(child_D[i], "D"), "xhat" + std::to_string(i)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_dscrd, m) {
  m.doc() = "Rate-distortion evaluation for multi-hop Gaussian sensor trees";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  auto model = py::register_exception<ModelError>(m, "ModelError", base.ptr());
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError", model.ptr());
  py::register_exception<InfeasibleTargetError>(m, "InfeasibleTargetError", base.ptr());
  py::register_exception<MonteCarloMismatchError>(m, "MonteCarloMismatchError", base.ptr());

  py::class_<LinearObservation>(m, "Observation")
      .def(py::init([](const Matrix& mixing, const Matrix& noise_cov, const std::string& label) {
             return LinearObservation(mixing, cov(noise_cov, "noise_cov"), label);
           }),
           py::arg("mixing"), py::arg("noise_cov"), py::arg("label") = "y")
      .def_property_readonly("mixing", [](const LinearObservation& o) { return o.mixing; })
      .def_property_readonly("noise_cov", [](const LinearObservation& o) { return o.noise_cov.matrix(); })
      .def_readonly("label", &LinearObservation::label)
      .def("__repr__", [](const LinearObservation& o) {
        return "<Observation '" + o.label + "' " + std::to_string(o.obs_dim()) + "x" +
               std::to_string(o.source_dim()) + ">";
      });

  m.def("fuse", &fuse, py::arg("observations"), "Sufficient statistic of independent observations");

  m.def(
      "backward_channel",
      [](const Matrix& source_cov, const Matrix& D) {
        const auto bc = backward_channel(cov(source_cov, "source_cov"), cov(D, "D"));
        return py::make_tuple(bc.H, bc.eta_cov.matrix());
      },
      py::arg("source_cov"), py::arg("D"), "Returns (H, eta_cov) of the decoded estimate");

  m.def(
      "node_statistic",
      [](const Matrix& source_cov, const LinearObservation& own, const std::vector<Matrix>& child_D) {
        return node_statistic(own, channels(source_cov, child_D), cov(source_cov, "source_cov"));
      },
      py::arg("source_cov"), py::arg("own"), py::arg("child_D") = std::vector<Matrix>{});

  py::class_<RdContext>(m, "Context")
      .def_property_readonly("cond_side", [](const RdContext& c) { return c.cond_side.matrix(); })
      .def_property_readonly("cond_stat_side", [](const RdContext& c) { return c.cond_stat_side.matrix(); })
      .def_property_readonly("stat_cond_side", [](const RdContext& c) { return c.stat_cond_side.matrix(); })
      .def_property_readonly("has_side", &RdContext::has_side)
      .def("classify", [](const RdContext& c, const Matrix& D) { return to_string(classify(c, cov(D, "D")).validity); })
      .def("rate", [](const RdContext& c, const Matrix& D) { return rd_rate(c, cov(D, "D")); }, py::arg("D"),
           "Minimum rate in bits")
      .def("baseline_rate_no_side",
           [](const RdContext& c, const Matrix& D) { return baseline_rate_no_side(c, cov(D, "D")); }, py::arg("D"))
      .def("distortion", [](const RdContext& c, double a) { return distortion_family(c, a).matrix(); },
           py::arg("alpha"));

  m.def(
      "build_context",
      [](const Matrix& source_cov, const LinearObservation& statistic, const std::optional<LinearObservation>& side,
         double tol) { return build_context(cov(source_cov, "source_cov"), statistic, side, tol); },
      py::arg("source_cov"), py::arg("statistic"), py::arg("side") = py::none(), py::arg("loewner_tol") = kPsdTol);

  py::class_<SchemeSpec>(m, "Scheme")
      .def_property_readonly("U", [](const SchemeSpec& s) { return s.U; })
      .def_property_readonly("C", [](const SchemeSpec& s) { return s.C; })
      .def_property_readonly("nu_cov", [](const SchemeSpec& s) { return s.nu_cov.matrix(); })
      .def_property_readonly("eigenvalues", [](const SchemeSpec& s) { return s.eigenvalues; })
      .def("achieved_rate", &achieved_rate)
      .def("achieved_distortion", [](const SchemeSpec& s) { return achieved_distortion(s).matrix(); });

  m.def(
      "design_scheme", [](const RdContext& c, const Matrix& D) { return design_scheme(c, cov(D, "D")); },
      py::arg("context"), py::arg("D"));

  m.def(
      "appendix_c_matrix",
      [](const Matrix& source_cov, const LinearObservation& t, const LinearObservation& side) {
        const auto r = appendix_c_matrix(cov(source_cov, "source_cov"), t, side);
        py::dict d;
        d["C"] = r.C;
        d["C_chain"] = r.C_chain;
        d["route_gap"] = r.route_gap;
        d["rcond"] = r.rcond;
        d["det"] = r.det;
        return d;
      },
      py::arg("source_cov"), py::arg("statistic"), py::arg("side"));

  py::class_<NetworkSpec>(m, "Network")
      .def_property_readonly("node_ids",
                             [](const NetworkSpec& n) {
                               std::vector<std::string> ids;
                               for (const auto& s : n.nodes) ids.push_back(s.id);
                               return ids;
                             })
      .def("topo_order", &topo_order)
      .def("to_json", &cli::serialize_config);

  m.def("load_config", &cli::load_config, py::arg("path"));
  m.def("parse_config", &cli::parse_config, py::arg("text"));

  py::class_<NodeReport>(m, "NodeReport")
      .def_readonly("id", &NodeReport::id)
      .def_readonly("parent", &NodeReport::parent)
      .def_readonly("children", &NodeReport::children)
      .def_readonly("rate_bits", &NodeReport::rate_bits)
      .def_readonly("statistic", &NodeReport::statistic)
      .def_readonly("context", &NodeReport::ctx)
      .def_property_readonly("validity", [](const NodeReport& r) { return to_string(r.validity()); })
      .def_property_readonly("D", [](const NodeReport& r) { return r.D().matrix(); });

  py::class_<NetworkReport>(m, "NetworkReport")
      .def_readonly("nodes", &NetworkReport::nodes)
      .def_readonly("sum_rate_bits", &NetworkReport::sum_rate_bits)
      .def("node", &NetworkReport::node, py::arg("id"), py::return_value_policy::reference_internal);

  m.def("evaluate", &evaluate, py::arg("network"), py::arg("loewner_tol") = kPsdTol);

  m.def(
      "sweep",
      [](const NetworkSpec& net, const std::string& node, const std::vector<double>& grid) {
        std::vector<std::pair<double, double>> rows;
        for (const auto& r : sweep(net, node, grid)) rows.emplace_back(r.alpha, r.rate_bits);
        return rows;
      },
      py::arg("network"), py::arg("node"), py::arg("alphas"), "List of (alpha, rate_bits)");

  m.def(
      "simulate",
      [](const Matrix& source_cov, const LinearObservation& own, const std::vector<Matrix>& child_D,
         const std::optional<LinearObservation>& side, std::uint64_t seed, std::size_t samples) {
        mc::SimConfig cfg{seed, samples, {cov(source_cov, "source_cov"), own, channels(source_cov, child_D), side, {}}};
        mc::SampleBatch batch;
        {
          py::gil_scoped_release release;
          batch = mc::simulate(cfg);
        }
        py::dict d;
        for (const auto& name : batch.order) d[py::str(name)] = batch.at(name);
        return d;
      },
      py::arg("source_cov"), py::arg("own"), py::arg("child_D") = std::vector<Matrix>{}, py::arg("side") = py::none(),
      py::arg("seed") = 42, py::arg("samples") = 100000, "Sample matrices, one column per draw");

  m.def(
      "run",
      [](const std::string& command, const std::string& config, const std::string& format, std::uint64_t seed,
         std::size_t samples) {
        const auto c = cli::parse_command(command);
        if (!c) throw ModelError("unknown command '" + command + "'");
        cli::RunConfig cfg;
        cfg.command = *c;
        cfg.config_path = config;
        cfg.format = format == "csv" ? cli::Format::Csv : cli::Format::Json;
        cfg.seed = seed;
        cfg.sample_count = samples;
        std::ostringstream out, err;
        const int code = cli::run(cfg, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("format") = "json", py::arg("seed") = 42,
      py::arg("samples") = 1'000'000, "Runs one CLI command; returns (exit_code, report, diagnostics)");
}
