#include "dscrd/mc_oracle.hpp"

#include "dscrd/errors.hpp"
#include "dscrd/philox.hpp"
#include "dscrd/rate_distortion.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace dscrd::mc {

const Matrix& SampleBatch::at(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw ModelError("sample batch has no variable '" + name + "'");
  return it->second;
}

std::size_t SampleBatch::sample_count() const {
  return vars.empty() ? 0 : static_cast<std::size_t>(vars.begin()->second.cols());
}

namespace {

// F with F F^T = cov. Cholesky for PD input, eigen square root otherwise
// (a child estimate at D = Sigma_x has zero noise).
Matrix sampling_factor(const CovarianceMatrix& cov) {
  if (cov.full_rank()) {
    Eigen::LLT<Matrix> llt(cov.matrix());
    if (llt.info() == Eigen::Success) return llt.matrixL();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(cov.matrix());
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// Standard normals for columns [c0, c0 + m) of a d-dimensional variable.
Matrix normals(std::uint64_t seed, const std::string& stream, Eigen::Index d, std::size_t c0, std::size_t m) {
  const NormalStream ns(seed, stream_id(stream));
  Matrix z(d, static_cast<Eigen::Index>(m));
  double* out = z.data();  // column-major: element (r, c) at c * d + r
  const std::uint64_t begin = static_cast<std::uint64_t>(c0) * static_cast<std::uint64_t>(d);
  const std::uint64_t end = begin + static_cast<std::uint64_t>(m) * static_cast<std::uint64_t>(d);
  std::uint64_t g = begin;
  while (g < end) {
    const auto p = ns.pair(g / 2);
    if (g % 2 == 0) {
      out[g - begin] = p[0];
      if (g + 1 < end) out[g + 1 - begin] = p[1];
      g += 2;
    } else {
      out[g - begin] = p[1];
      g += 1;
    }
  }
  return z;
}

std::string xhat_name(const BackwardChannel& c) { return "xhat:" + c.label; }

}  // namespace

void validate(const SimConfig& config) {
  const auto& in = config.instance;
  if (config.sample_count < 2) throw ModelError("simulate: sample_count must be at least 2");
  if (!in.source_cov.full_rank()) throw ModelError("simulate: source covariance must be full rank");
  const Eigen::Index n = in.source_cov.dim();
  if (in.own.source_dim() != n || !in.own.square())
    throw ModelError("simulate: own measurement must be square over the source");
  std::set<std::string> labels;
  for (const auto& c : in.children) {
    if (c.H.rows() != n || c.H.cols() != n) throw ModelError("simulate: child '" + c.label + "' has wrong dimension");
    if (!labels.insert(c.label).second) throw ModelError("simulate: duplicate child label '" + c.label + "'");
  }
  if (in.side && in.side->source_dim() != n) throw ModelError("simulate: side observation has wrong dimension");
  if (in.scheme) {
    const auto stat = node_statistic(in.own, in.children, in.source_cov);
    const double scale = std::max(max_abs(stat.mixing), 1e-300);
    if (max_abs(in.scheme->ctx.statistic.mixing - stat.mixing) > 1e-9 * scale)
      throw ModelError("simulate: attached scheme was designed for a different node statistic");
    if (in.scheme->ctx.has_side() != in.side.has_value())
      throw ModelError("simulate: attached scheme disagrees about side information");
  }
}

SampleBatch simulate(const SimConfig& config) {
  validate(config);
  const auto& in = config.instance;
  const std::size_t N = config.sample_count;
  const Eigen::Index n = in.source_cov.dim();
  const auto Ncols = static_cast<Eigen::Index>(N);

  const Matrix Fx = sampling_factor(in.source_cov);
  const Matrix Fy = sampling_factor(in.own.noise_cov);
  std::vector<Matrix> Feta;
  for (const auto& c : in.children) Feta.push_back(sampling_factor(c.eta_cov));
  const auto weights = node_statistic_weights(in.own, in.children);
  std::optional<Matrix> Fside, Fnu, UC;
  if (in.side) Fside = sampling_factor(in.side->noise_cov);
  if (in.scheme) {
    Fnu = sampling_factor(in.scheme->nu_cov);
    UC = in.scheme->U * in.scheme->C;
  }

  SampleBatch batch;
  auto add = [&](const std::string& name, Eigen::Index d) {
    batch.order.push_back(name);
    batch.vars.emplace(name, Matrix(d, Ncols));
  };
  add("x", n);
  add("y", in.own.obs_dim());
  for (const auto& c : in.children) add(xhat_name(c), n);
  add("T", n);
  if (in.side) add("side", in.side->obs_dim());
  if (in.scheme) add("u", n);

  const std::uint64_t seed = config.seed;
  const std::size_t chunks = (N + kChunkColumns - 1) / kChunkColumns;
  auto run_chunk = [&](std::size_t c) {
    const std::size_t c0 = c * kChunkColumns;
    const std::size_t m = std::min(kChunkColumns, N - c0);
    const auto col = static_cast<Eigen::Index>(c0);
    const auto width = static_cast<Eigen::Index>(m);
    const Matrix X = Fx * normals(seed, "x", n, c0, m);
    const Matrix Y = in.own.mixing * X + Fy * normals(seed, "noise:y", in.own.obs_dim(), c0, m);
    Matrix T = weights[0] * Y;
    batch.vars.at("x").middleCols(col, width) = X;
    batch.vars.at("y").middleCols(col, width) = Y;
    for (std::size_t i = 0; i < in.children.size(); ++i) {
      const auto& ch = in.children[i];
      const Matrix Xh = ch.H * X + Feta[i] * normals(seed, "noise:" + xhat_name(ch), n, c0, m);
      T += weights[i + 1] * Xh;
      batch.vars.at(xhat_name(ch)).middleCols(col, width) = Xh;
    }
    batch.vars.at("T").middleCols(col, width) = T;
    if (in.side)
      batch.vars.at("side").middleCols(col, width) =
          in.side->mixing * X + *Fside * normals(seed, "noise:side", in.side->obs_dim(), c0, m);
    if (in.scheme) batch.vars.at("u").middleCols(col, width) = *UC * T + *Fnu * normals(seed, "noise:u", n, c0, m);
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(std::thread::hardware_concurrency(), chunks));
  if (workers == 1) {
    for (std::size_t c = 0; c < chunks; ++c) run_chunk(c);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < chunks; c += workers) run_chunk(c);
      });
    for (auto& t : pool) t.join();
  }
  return batch;
}

namespace {

// Stacked samples of the named variables and their row offsets.
Matrix stack(const SampleBatch& batch, const std::vector<std::string>& names) {
  Eigen::Index rows = 0;
  for (const auto& v : names) rows += batch.at(v).rows();
  const auto cols = static_cast<Eigen::Index>(batch.sample_count());
  Matrix Z(rows, cols);
  Eigen::Index r = 0;
  for (const auto& v : names) {
    const auto& M = batch.at(v);
    Z.middleRows(r, M.rows()) = M;
    r += M.rows();
  }
  return Z;
}

// Delete-one-group jackknife over contiguous column groups. `estimate` maps
// a normalized second-moment matrix to a result matrix.
template <typename F>
std::pair<Matrix, Matrix> jackknife(const Matrix& Z, F estimate) {
  const Eigen::Index N = Z.cols();
  const int g = kJackknifeGroups;
  std::vector<Matrix> grams;
  std::vector<double> counts;
  Matrix total = Matrix::Zero(Z.rows(), Z.rows());
  for (int i = 0; i < g; ++i) {
    const Eigen::Index b = N * i / g, e = N * (i + 1) / g;
    Matrix G = Matrix::Zero(Z.rows(), Z.rows());
    G.selfadjointView<Eigen::Lower>().rankUpdate(Z.middleCols(b, e - b));
    G = G.selfadjointView<Eigen::Lower>();
    total += G;
    grams.push_back(std::move(G));
    counts.push_back(static_cast<double>(e - b));
  }
  const Matrix full = estimate(Matrix(total / static_cast<double>(N)));
  std::vector<Matrix> loo;
  Matrix mean = Matrix::Zero(full.rows(), full.cols());
  for (int i = 0; i < g; ++i) {
    loo.push_back(estimate(Matrix((total - grams[i]) / (static_cast<double>(N) - counts[i]))));
    mean += loo.back();
  }
  mean /= g;
  Matrix var = Matrix::Zero(full.rows(), full.cols());
  for (const auto& l : loo) var += (l - mean).cwiseAbs2();
  var *= static_cast<double>(g - 1) / g;
  return {full, var.cwiseSqrt()};
}

Matrix schur(const Matrix& S, Eigen::Index t) {
  const Eigen::Index k = S.rows() - t;
  if (k == 0) return S.topLeftCorner(t, t);
  const Matrix Sgt = S.bottomLeftCorner(k, t);
  return S.topLeftCorner(t, t) - Sgt.transpose() * spd_solve(S.bottomRightCorner(k, k), Sgt, "empirical conditioning block");
}

void check_sample_size(const SampleBatch& batch, const std::vector<std::string>& given) {
  Eigen::Index gd = 0;
  for (const auto& v : given) gd += batch.at(v).rows();
  if (static_cast<Eigen::Index>(batch.sample_count()) <= 10 * gd)
    throw ModelError("empirical estimate needs more than 10 samples per conditioning dimension");
  if (batch.sample_count() < static_cast<std::size_t>(2 * kJackknifeGroups))
    throw ModelError("empirical estimate needs at least 20 samples");
}

}  // namespace

EmpiricalCov empirical_conditional_cov(const SampleBatch& batch, const std::string& target,
                                       const std::vector<std::string>& given) {
  check_sample_size(batch, given);
  std::vector<std::string> names{target};
  names.insert(names.end(), given.begin(), given.end());
  const Eigen::Index t = batch.at(target).rows();
  auto [value, se] = jackknife(stack(batch, names), [t](const Matrix& S) { return schur(S, t); });
  const double scale = max_abs(batch.at(target).rowwise().squaredNorm()) / static_cast<double>(batch.sample_count());
  return {CovarianceMatrix::symmetrized(value, "empirical conditional covariance of " + target, scale), se};
}

EmpiricalRate empirical_rate(const SampleBatch& batch, const std::string& a, const std::string& b,
                             const std::vector<std::string>& given) {
  auto with_b = given;
  with_b.push_back(b);
  check_sample_size(batch, with_b);
  const Eigen::Index da = batch.at(a).rows(), db = batch.at(b).rows();
  std::vector<std::string> names{a, b};
  names.insert(names.end(), given.begin(), given.end());
  auto estimate = [da, db](const Matrix& S) {
    // Outer: a given `given` (drop the b rows/cols). Inner: a given (b, given).
    const Eigen::Index k = S.rows();
    std::vector<Eigen::Index> outer_idx;
    for (Eigen::Index i = 0; i < k; ++i)
      if (i < da || i >= da + db) outer_idx.push_back(i);
    const Matrix outer = schur(S(outer_idx, outer_idx), da);
    const Matrix inner = schur(S, da);
    Matrix r(1, 1);
    r(0, 0) = nats_to_bits(0.5 * (spd_logdet(outer, "empirical outer covariance") -
                                  spd_logdet(inner, "empirical inner covariance")));
    return r;
  };
  auto [value, se] = jackknife(stack(batch, names), estimate);
  return {value(0, 0), se(0, 0)};
}

const char* to_string(MatchStatus s) {
  switch (s) {
    case MatchStatus::Pass: return "pass";
    case MatchStatus::Warn: return "warn";
    case MatchStatus::Fail: return "fail";
  }
  return "?";
}

Comparison compare(const std::string& quantity, const Matrix& closed_form, const Matrix& empirical,
                   const Matrix& std_error, double pass_sigma) {
  if (closed_form.rows() != empirical.rows() || closed_form.cols() != empirical.cols())
    throw ModelError("compare: shape mismatch for " + quantity);
  Comparison c{quantity, closed_form, empirical, std_error};
  for (Eigen::Index i = 0; i < closed_form.size(); ++i) {
    const double diff = std::abs(empirical(i) - closed_form(i));
    const double se = std_error(i);
    const double sigma = se > 0.0 ? diff / se : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
    c.max_sigma = std::max(c.max_sigma, sigma);
  }
  c.status = c.max_sigma <= pass_sigma ? MatchStatus::Pass
             : c.max_sigma <= std::max(kFailSigma, pass_sigma) ? MatchStatus::Warn
                                                               : MatchStatus::Fail;
  return c;
}

std::vector<Comparison> consistency_suite(const SimConfig& config, double pass_sigma) {
  const auto& in = config.instance;
  const auto stat = node_statistic(in.own, in.children, in.source_cov);
  const RdContext ctx = build_context(in.source_cov, stat, in.side);
  const SampleBatch batch = simulate(config);

  std::vector<std::string> side;
  if (in.side) side.push_back("side");
  auto stat_side = side;
  stat_side.insert(stat_side.begin(), "T");
  std::vector<std::string> raw_side{"y"};
  for (const auto& c : in.children)
    if (c.eta_cov.full_rank()) raw_side.push_back(xhat_name(c));
  raw_side.insert(raw_side.end(), side.begin(), side.end());

  std::vector<Comparison> out;
  auto add_cov = [&](const std::string& q, const Matrix& closed, const std::vector<std::string>& given) {
    const auto e = empirical_conditional_cov(batch, "x", given);
    out.push_back(compare(q, closed, e.cov.matrix(), e.std_error, pass_sigma));
  };
  add_cov("Sigma_x", in.source_cov.matrix(), {});
  if (in.side) add_cov("Sigma_x|side", ctx.cond_side.matrix(), side);
  add_cov("Sigma_x|T,side", ctx.cond_stat_side.matrix(), stat_side);
  add_cov("Sigma_x|raw,side", ctx.cond_stat_side.matrix(), raw_side);
  if (in.scheme) {
    const auto r = empirical_rate(batch, "T", "u", side);
    Matrix closed(1, 1), emp(1, 1), se(1, 1);
    closed(0, 0) = rd_rate(ctx, in.scheme->D);
    emp(0, 0) = r.bits;
    se(0, 0) = r.std_error;
    out.push_back(compare("I(T;u|side) bits", closed, emp, se, pass_sigma));
    auto u_side = side;
    u_side.insert(u_side.begin(), "u");
    add_cov("Sigma_x|u,side", in.scheme->D.matrix(), u_side);
  }
  return out;
}

void export_binary(const SampleBatch& batch, std::ostream& out) {
  Eigen::Index rows = 0;
  std::string labels;
  for (const auto& v : batch.order) {
    const auto& M = batch.at(v);
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      labels += (labels.empty() ? "" : ",") + v + "[" + std::to_string(r) + "]";
      ++rows;
    }
  }
  const std::size_t N = batch.sample_count();
  out << "dscrd-samples 1 rows=" << rows << " cols=" << N << " labels=" << labels << "\n";
  std::vector<char> buf(N * sizeof(double));
  for (const auto& v : batch.order) {
    const auto& M = batch.at(v);
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (std::size_t c = 0; c < N; ++c) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(M(r, static_cast<Eigen::Index>(c)));
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        std::memcpy(buf.data() + c * sizeof(double), &bits, sizeof(double));
      }
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
  }
}

}  // namespace dscrd::mc
