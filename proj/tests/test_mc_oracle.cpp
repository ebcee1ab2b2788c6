#include "dscrd/errors.hpp"
#include "dscrd/mc_oracle.hpp"
#include "dscrd/philox.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <cstring>
#include <sstream>

using namespace dscrd;
using namespace dscrd::testing;

namespace {

mc::SimInstance relay_instance(bool with_scheme) {
  const auto S = scalar_cov(1.0);
  mc::SimInstance in{S, LinearObservation(scalar(1.0), scalar_cov(1.0), "y"),
                     {backward_channel(S, scalar_cov(1.0 / 3.0), "i")},
                     LinearObservation(scalar(1.0), scalar_cov(1.0), "side"),
                     std::nullopt};
  if (with_scheme) {
    const auto ctx = build_context(S, node_statistic(in.own, in.children, S), in.side);
    in.scheme = design_scheme(ctx, scalar_cov(0.3));
  }
  return in;
}

mc::SimInstance random_instance(std::mt19937_64& rng, Eigen::Index n, int children) {
  const auto node = random_node(rng, n, children);
  mc::SimInstance in{node.source, node.own, {}, node.side, std::nullopt};
  for (std::size_t i = 0; i < node.child_D.size(); ++i)
    in.children.push_back(backward_channel(node.source, node.child_D[i], "c" + std::to_string(i)));
  const auto ctx = build_context(node.source, node_statistic(in.own, in.children, node.source), in.side);
  in.scheme = design_scheme(ctx, distortion_family(ctx, 0.5));
  return in;
}

}  // namespace

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using mc::Philox4x32;
  CHECK(Philox4x32::block({0, 0, 0, 0}, {0, 0}) ==
        std::array<std::uint32_t, 4>{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        std::array<std::uint32_t, 4>{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        std::array<std::uint32_t, 4>{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
  CHECK(mc::stream_id("x") != mc::stream_id("noise:y"));
}

TEST_CASE("simulate: determinism and stream separation") {
  mc::SimConfig cfg{7, 40000, relay_instance(true)};
  const auto a = mc::simulate(cfg), b = mc::simulate(cfg);
  REQUIRE(a.order == b.order);
  for (const auto& name : a.order) CHECK(a.at(name) == b.at(name));

  // Dropping the side measurement and scheme leaves every other draw untouched.
  auto bare = cfg;
  bare.instance.side.reset();
  bare.instance.scheme.reset();
  const auto c = mc::simulate(bare);
  CHECK(c.at("x") == a.at("x"));
  CHECK(c.at("y") == a.at("y"));
  CHECK(c.at("T") == a.at("T"));
  CHECK_THROWS_AS(c.at("side"), ModelError);

  auto other = cfg;
  other.seed = 8;
  CHECK(mc::simulate(other).at("x") != a.at("x"));
}

TEST_CASE("simulate: derived variables follow the model equations") {
  std::mt19937_64 rng(67);
  const auto in = random_instance(rng, 3, 2);
  const auto batch = mc::simulate(mc::SimConfig{3, 20000, in});
  const auto w = node_statistic_weights(in.own, in.children);
  Matrix T = w[0] * batch.at("y");
  for (std::size_t i = 0; i < in.children.size(); ++i) T += w[i + 1] * batch.at("xhat:" + in.children[i].label);
  CHECK(rel_err(T, batch.at("T")) < 1e-12);
  CHECK(batch.sample_count() == 20000);

  const Vector mean = batch.at("x").rowwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() < 4.0 * std::sqrt(in.source_cov.norm()) / std::sqrt(20000.0));
}

TEST_CASE("simulate: input validation") {
  mc::SimConfig cfg{1, 1, relay_instance(false)};
  CHECK_THROWS_AS(mc::simulate(cfg), ModelError);
  cfg.sample_count = 100;
  cfg.instance.children.push_back(cfg.instance.children.front());
  CHECK_THROWS_AS(mc::simulate(cfg), ModelError);
}

TEST_CASE("empirical estimators: trivial cases") {
  const auto batch = mc::simulate(mc::SimConfig{5, 50000, relay_instance(true)});
  const auto plain = mc::empirical_conditional_cov(batch, "x", {});
  const Matrix& X = batch.at("x");
  CHECK(rel_err(plain.cov.matrix(), X * X.transpose() / static_cast<double>(X.cols())) < 1e-12);
  CHECK(max_abs(mc::empirical_conditional_cov(batch, "x", {"x", "side"}).cov.matrix()) < 1e-9);

  // Independent a, b.
  mc::SampleBatch ind;
  std::mt19937_64 rng(71);
  std::normal_distribution<double> g;
  Matrix A(2, 50000), B(1, 50000);
  for (Eigen::Index i = 0; i < A.size(); ++i) A(i) = g(rng);
  for (Eigen::Index i = 0; i < B.size(); ++i) B(i) = g(rng);
  ind.order = {"a", "b"};
  ind.vars = {{"a", A}, {"b", B}};
  const auto r = mc::empirical_rate(ind, "a", "b", {});
  CHECK(std::abs(r.bits) <= 3.0 * r.std_error);
}

TEST_CASE("compare: status thresholds") {
  const Matrix c = scalar(1.0), se = scalar(0.1);
  CHECK(mc::compare("q", c, scalar(1.25), se).status == mc::MatchStatus::Pass);
  CHECK(mc::compare("q", c, scalar(1.4), se).status == mc::MatchStatus::Warn);
  CHECK(mc::compare("q", c, scalar(1.6), se).status == mc::MatchStatus::Fail);
  CHECK(mc::compare("q", c, scalar(1.6), se).max_sigma == doctest::Approx(6.0));
  CHECK(mc::compare("q", c, scalar(1.4), se, 5.0).status == mc::MatchStatus::Pass);
  CHECK(mc::compare("q", c, scalar(1.0), scalar(0.0)).status == mc::MatchStatus::Pass);
  CHECK_THROWS_AS(mc::compare("q", c, Matrix::Zero(2, 2), se), ModelError);
}

TEST_CASE("consistency suite on randomized instances") {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 4; ++trial) {
    const auto in = random_instance(rng, 1 + trial, 1 + trial % 3);
    for (const auto& c : mc::consistency_suite(mc::SimConfig{42, 200000, in})) {
      INFO(c.quantity << " sigma=" << c.max_sigma);
      CHECK(c.status != mc::MatchStatus::Fail);
    }
  }
}

TEST_CASE("convergence order of the empirical source covariance") {
  // RMS error over repeated seeds at each sample count, then a log-log fit.
  std::mt19937_64 rng(79);
  const auto in = random_instance(rng, 2, 1);
  const std::array<std::size_t, 3> sizes{10000, 100000, 1000000};
  const int reps = 12;
  std::array<double, 3> lx{}, ly{};
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    double sq = 0.0;
    for (int r = 0; r < reps; ++r) {
      mc::SimInstance bare = in;
      bare.scheme.reset();
      bare.side.reset();
      const auto batch = mc::simulate(mc::SimConfig{static_cast<std::uint64_t>(1000 + r), sizes[s], bare});
      const Matrix& X = batch.at("x");
      const Matrix err = X * X.transpose() / static_cast<double>(X.cols()) - in.source_cov.matrix();
      sq += err.squaredNorm();
    }
    lx[s] = std::log(static_cast<double>(sizes[s]));
    ly[s] = 0.5 * std::log(sq / reps);
  }
  const double mx = (lx[0] + lx[1] + lx[2]) / 3.0, my = (ly[0] + ly[1] + ly[2]) / 3.0;
  double num = 0.0, den = 0.0;
  for (int i = 0; i < 3; ++i) {
    num += (lx[i] - mx) * (ly[i] - my);
    den += (lx[i] - mx) * (lx[i] - mx);
  }
  const double slope = num / den;
  INFO("slope " << slope);
  CHECK(std::abs(slope + 0.5) <= 0.15);
}

TEST_CASE("export_binary layout") {
  const auto batch = mc::simulate(mc::SimConfig{1, 100, relay_instance(true)});
  std::ostringstream os;
  mc::export_binary(batch, os);
  const std::string s = os.str();
  const auto nl = s.find('\n');
  REQUIRE(nl != std::string::npos);
  const std::string header = s.substr(0, nl);
  CHECK(header.rfind("dscrd-samples 1 rows=", 0) == 0);
  CHECK(header.find("cols=100") != std::string::npos);
  CHECK(header.find("labels=x[0],y[0],xhat:i[0],T[0],side[0],u[0]") != std::string::npos);
  CHECK(s.size() - nl - 1 == 6 * 100 * sizeof(double));
  double first;
  std::memcpy(&first, s.data() + nl + 1, sizeof(double));
  CHECK(first == batch.at("x")(0, 0));
}
