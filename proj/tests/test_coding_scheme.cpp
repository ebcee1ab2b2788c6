#include "dscrd/coding_scheme.hpp"
#include "dscrd/errors.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

using namespace dscrd;
using namespace dscrd::testing;

namespace {

RdContext relay() {
  return build_context(scalar_cov(1.0), LinearObservation(scalar(3.0), scalar_cov(3.0), "T"),
                       LinearObservation(scalar(1.0), scalar_cov(1.0), "y"));
}

RdContext random_ctx(std::mt19937_64& rng, Eigen::Index n) {
  const auto node = random_node(rng, n, 1 + static_cast<int>(rng() % 3));
  std::vector<BackwardChannel> ch;
  for (std::size_t i = 0; i < node.child_D.size(); ++i)
    ch.push_back(backward_channel(node.source, node.child_D[i], "c" + std::to_string(i)));
  return build_context(node.source, node_statistic(node.own, ch, node.source), node.side);
}

}  // namespace

TEST_CASE("design_scheme: scalar relay at D = 0.3") {
  const auto ctx = relay();
  const auto s = design_scheme(ctx, scalar_cov(0.3));
  // P = 0.3, Q = 0.2, R = 0.1.
  CHECK(s.nu_cov.matrix()(0, 0) == doctest::Approx(0.15).epsilon(1e-13));
  CHECK(s.U(0, 0) == 1.0);
  CHECK(achieved_rate(s) == doctest::Approx(rd_rate(ctx, scalar_cov(0.3))).epsilon(1e-12));
  CHECK(achieved_rate(s) == doctest::Approx(0.79248125).epsilon(1e-8));
  CHECK(achieved_distortion(s).matrix()(0, 0) == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(scheme_joint(s).has("u"));
}

TEST_CASE("design_scheme: preconditions") {
  const auto ctx = relay();
  CHECK_THROWS_AS(design_scheme(ctx, scalar_cov(0.5)), InfeasibleTargetError);
  CHECK_THROWS_AS(design_scheme(ctx, scalar_cov(0.1)), InfeasibleTargetError);
  CHECK_THROWS_AS(design_scheme(ctx, scalar_cov(0.3), scalar(2.0)), ModelError);
}

TEST_CASE("achieved rate vanishes near the ceiling") {
  const auto ctx = relay();
  const auto s = design_scheme(ctx, distortion_family(ctx, 1.0 - 1e-6));
  CHECK(achieved_rate(s) < 1e-3);
}

TEST_CASE("diagonal two-dimensional case") {
  Matrix nt = Matrix::Zero(2, 2), ny = Matrix::Zero(2, 2);
  nt.diagonal() << 0.5, 2.0;
  ny.diagonal() << 1.0, 0.25;
  const auto ctx = build_context(CovarianceMatrix::identity(2),
                                 LinearObservation(Matrix::Identity(2, 2), CovarianceMatrix(nt), "T"),
                                 LinearObservation(Matrix::Identity(2, 2), CovarianceMatrix(ny), "y"));
  const auto D = distortion_family(ctx, 0.5);
  const auto s = design_scheme(ctx, D);
  CHECK(max_abs(achieved_distortion(s).matrix() - D.matrix()) <= 1e-9);
  // Independent coordinates: rates add.
  double expected = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double ceil = posterior_var(1.0, {1.0 / ny(k, k)});
    const double fl = posterior_var(1.0, {1.0 / ny(k, k), 1.0 / nt(k, k)});
    expected += 0.5 * std::log2((ceil - fl) / (D.matrix()(k, k) - fl));
  }
  CHECK(achieved_rate(s) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("property: achievability matches the converse") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 200; ++trial) {
    const auto ctx = random_ctx(rng, 1 + trial % 4);
    for (double a : {0.1, 0.5, 0.9}) {
      const auto D = distortion_family(ctx, a);
      const auto s = design_scheme(ctx, D);
      CHECK(std::abs(achieved_rate(s) - rd_rate(ctx, D)) <= 1e-9);
      const auto ad = achieved_distortion(s);
      CHECK(max_abs(ad.matrix() - D.matrix()) <= 1e-9 * D.norm());
      CHECK(s.nu_asymmetry <= kNuAsymmetryTol);
      CHECK(s.nu_cov.min_eigenvalue() > 0.0);
      const auto dp = loewner_cmp(ctx.cond_stat_side.matrix(), ad.matrix(), 1e-9);
      CHECK((dp == LoewnerOrder::Less || dp == LoewnerOrder::LessOrEqual || dp == LoewnerOrder::Equal));
    }
  }
}

TEST_CASE("property: eigenbasis convention is immaterial") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const auto ctx = random_ctx(rng, n);
    const auto D = distortion_family(ctx, 0.3 + 0.4 * (trial % 2));
    const auto base = design_scheme(ctx, D);
    // Reverse the rows and flip the sign of every other one.
    Matrix alt(n, n);
    for (Eigen::Index i = 0; i < n; ++i) alt.row(i) = (i % 2 ? -1.0 : 1.0) * base.U.row(n - 1 - i);
    const auto other = design_scheme(ctx, D, alt);
    CHECK(std::abs(achieved_rate(other) - achieved_rate(base)) <= 1e-9);
    CHECK(rel_err(achieved_distortion(other).matrix(), achieved_distortion(base).matrix()) <= 1e-9);
  }
}

TEST_CASE("default eigenvector convention") {
  std::mt19937_64 rng(61);
  const auto ctx = random_ctx(rng, 3);
  const auto s = design_scheme(ctx, distortion_family(ctx, 0.5));
  for (Eigen::Index i = 0; i + 1 < s.eigenvalues.size(); ++i) CHECK(s.eigenvalues(i) <= s.eigenvalues(i + 1));
  for (Eigen::Index i = 0; i < s.U.rows(); ++i) {
    Eigen::Index k;
    s.U.row(i).cwiseAbs().maxCoeff(&k);
    CHECK(s.U(i, k) > 0.0);
  }
  CHECK(max_abs(s.U * s.U.transpose() - Matrix::Identity(3, 3)) < 1e-12);
}
