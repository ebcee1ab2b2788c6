#include "dscrd/cli.hpp"
#include "dscrd/config.hpp"
#include "dscrd/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dscrd;
using namespace dscrd::cli;

namespace {

std::string fixture(const std::string& name) { return std::string(DSCRD_FIXTURES) + "/" + name; }

struct Result {
  int code;
  std::string out, err;
};

Result run_cmd(RunConfig cfg) {
  std::ostringstream out, err;
  const int code = run(cfg, out, err);
  return {code, out.str(), err.str()};
}

RunConfig make(Command c, const std::string& file, Format f = Format::Json) {
  RunConfig cfg;
  cfg.command = c;
  cfg.config_path = fixture(file);
  cfg.format = f;
  return cfg;
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string l; std::getline(is, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("parse_command") {
  CHECK(parse_command("rate") == Command::Rate);
  CHECK(parse_command("simulate") == Command::Simulate);
  CHECK_FALSE(parse_command("plot").has_value());
}

TEST_CASE("config: round trip is bit-exact") {
  for (const char* f : {"relay2.json", "chain3.json", "minimal.json", "vector2.json"}) {
    const auto a = load_config(fixture(f));
    const auto text = serialize_config(a);
    const auto b = parse_config(text);
    CHECK(serialize_config(b) == text);
    CHECK(a.source_cov.matrix() == b.source_cov.matrix());
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
      CHECK(a.nodes[i].mixing == b.nodes[i].mixing);
      CHECK(a.nodes[i].noise_cov.matrix() == b.nodes[i].noise_cov.matrix());
      CHECK(a.nodes[i].parent == b.nodes[i].parent);
      CHECK(a.nodes[i].distortion.index() == b.nodes[i].distortion.index());
    }
    CHECK(a.base.has_value() == b.base.has_value());
  }
}

TEST_CASE("config: diagnostics name the field or position") {
  auto msg = [](const std::string& text) {
    try {
      (void)parse_config(text);
    } catch (const ModelError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg(R"({"schema":1,"source_cov":[[1.0]],"nodes":[{"id":"a","mixing":[[1]],"noise_cov":[[1, 2]],"alpha":0.5}]})")
            .find("nodes[0].noise_cov") != std::string::npos);
  CHECK(msg("{\"schema\":1,\n \"source_cov\": [[1.0]] oops}").find("line 2") != std::string::npos);
  CHECK(msg(R"({"schema":2,"source_cov":[[1.0]],"nodes":[]})").find("schema") != std::string::npos);
  CHECK(msg(R"({"schema":1,"source_cov":[[1.0]],"nodes":[],"extra":1})").find("extra") != std::string::npos);
  CHECK(msg(R"({"schema":1,"source_cov":[[1.0]],"nodes":[{"id":"a","mixing":[[1]],"noise_cov":[[1]]}]})")
            .find("alpha") != std::string::npos);
  CHECK(msg(R"({"schema":1,"source_cov":[[1.0, 0.2],[0.201, 1.0]],"nodes":[]})").find("source_cov") !=
        std::string::npos);
}

TEST_CASE("rate: scalar relay fixture") {
  const auto r = run_cmd(make(Command::Rate, "relay2.json"));
  REQUIRE(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema"] == 1);
  bool found = false;
  for (const auto& n : j["nodes"])
    if (n["id"] == "j") {
      found = true;
      CHECK(std::abs(n["rate_bits"].get<double>() - 0.7925) < 1e-4);
    }
  CHECK(found);
}

TEST_CASE("sweep: four-point grid in CSV") {
  auto cfg = make(Command::Sweep, "relay2.json", Format::Csv);
  cfg.alpha_grid = {0.25, 0.5, 0.75, 1.0};
  const auto r = run_cmd(cfg);
  REQUIRE(r.code == kExitOk);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 5);
  CHECK(ls[0] == "alpha,rate_bits,d_0_0");
  auto field = [](const std::string& l, int k) {
    std::istringstream is(l);
    std::string f;
    for (int i = 0; i <= k; ++i) std::getline(is, f, ',');
    return f;
  };
  CHECK(field(ls.back(), 1) == "0");
  // Interior rows: floor 0.2, ceiling 0.5.
  for (int r = 1; r <= 3; ++r) {
    const double a = std::stod(field(ls[r], 0)), d = 0.2 + a * 0.3;
    CHECK(std::stod(field(ls[r], 2)) == doctest::Approx(d).epsilon(1e-12));
    CHECK(std::stod(field(ls[r], 1)) == doctest::Approx(0.5 * std::log2(0.3 / (d - 0.2))).epsilon(1e-12));
  }
}

TEST_CASE("exit codes") {
  CHECK(run_cmd(make(Command::Validate, "chain3.json")).code == kExitOk);
  CHECK(run_cmd(make(Command::Compare, "vector2.json", Format::Csv)).code == kExitOk);
  const auto asym = run_cmd(make(Command::Rate, "asymmetric.json"));
  CHECK(asym.code == kExitModelError);
  CHECK(asym.err.find("source_cov") != std::string::npos);
  CHECK(run_cmd(make(Command::Rate, "cycle.json")).code == kExitModelError);
  CHECK(run_cmd(make(Command::Rate, "missing.json")).code == kExitModelError);
  const auto inf = run_cmd(make(Command::Rate, "infeasible.json"));
  CHECK(inf.code == kExitInfeasible);
  CHECK(inf.out.empty());
  auto small = make(Command::Simulate, "relay2.json");
  small.sample_count = 10;
  CHECK(run_cmd(small).code == kExitModelError);
}

TEST_CASE("simulate: default seed and sample count pass") {
  const auto r = run_cmd(make(Command::Simulate, "relay2.json"));
  CHECK(r.code == kExitOk);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["worst_sigma"].get<double>() <= 3.0);
}

TEST_CASE("reports are deterministic and files match stdout") {
  for (auto cmd : {Command::Validate, Command::Rate, Command::Compare, Command::Sweep}) {
    for (auto fmt : {Format::Json, Format::Csv}) {
      const auto a = run_cmd(make(cmd, "vector2.json", fmt));
      const auto b = run_cmd(make(cmd, "vector2.json", fmt));
      CHECK(a.code == kExitOk);
      CHECK(a.out == b.out);
    }
  }
  auto sim = make(Command::Simulate, "vector2.json");
  sim.sample_count = 20000;
  CHECK(run_cmd(sim).out == run_cmd(sim).out);

  const auto path = (std::filesystem::temp_directory_path() / "dscrd_cli_test.json").string();
  auto to_file = make(Command::Rate, "chain3.json");
  to_file.output_path = path;
  const auto r = run_cmd(to_file);
  CHECK(r.out.empty());
  std::ifstream f(path, std::ios::binary);
  const std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CHECK(content == run_cmd(make(Command::Rate, "chain3.json")).out);
  std::filesystem::remove(path);
}

TEST_CASE("simulate: binary export") {
  const auto path = (std::filesystem::temp_directory_path() / "dscrd_samples.bin").string();
  auto cfg = make(Command::Simulate, "relay2.json");
  cfg.sample_count = 1000;
  cfg.export_path = path;
  REQUIRE(run_cmd(cfg).code == kExitOk);
  std::ifstream f(path, std::ios::binary);
  std::string header;
  std::getline(f, header);
  CHECK(header.rfind("dscrd-samples 1", 0) == 0);
  CHECK(header.find("cols=1000") != std::string::npos);
  std::filesystem::remove(path);
}
