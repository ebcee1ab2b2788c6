#pragma once

#include "dscrd/coding_scheme.hpp"
#include "dscrd/covariance.hpp"
#include "dscrd/observation.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dscrd::mc {

// One node of the generative model: source, own measurement, children's
// decoded estimates, the decoder's side information and optionally the test
// channel applied to the node statistic.
struct SimInstance {
  CovarianceMatrix source_cov;
  LinearObservation own;
  std::vector<BackwardChannel> children;
  std::optional<LinearObservation> side;
  std::optional<SchemeSpec> scheme;
};

struct SimConfig {
  std::uint64_t seed = 42;
  std::size_t sample_count = 1'000'000;
  SimInstance instance;
};

inline constexpr std::size_t kChunkColumns = 1 << 14;
inline constexpr int kJackknifeGroups = 10;

// Sample matrices, one column per draw. Variables: "x", "y", "xhat:<label>"
// per child, "T", and when configured "side" and "u".
struct SampleBatch {
  std::vector<std::string> order;
  std::map<std::string, Matrix> vars;

  const Matrix& at(const std::string& name) const;
  std::size_t sample_count() const;
};

void validate(const SimConfig& config);

SampleBatch simulate(const SimConfig& config);

struct EmpiricalCov {
  CovarianceMatrix cov;
  Matrix std_error;  // jackknife, entrywise
};

struct EmpiricalRate {
  double bits = 0.0;
  double std_error = 0.0;
};

// Residual second moment of `target` after least-squares regression on
// `given` (the model is zero-mean, so no centering).
EmpiricalCov empirical_conditional_cov(const SampleBatch& batch, const std::string& target,
                                       const std::vector<std::string>& given);

// Plug-in Gaussian estimate of I(a; b | given) in bits.
EmpiricalRate empirical_rate(const SampleBatch& batch, const std::string& a, const std::string& b,
                             const std::vector<std::string>& given);

enum class MatchStatus { Pass, Warn, Fail };

const char* to_string(MatchStatus s);

struct Comparison {
  std::string quantity;
  Matrix closed_form;
  Matrix empirical;
  Matrix std_error;
  double max_sigma = 0.0;  // max entrywise |empirical - closed| / se
  MatchStatus status = MatchStatus::Pass;
};

inline constexpr double kPassSigma = 3.0;
inline constexpr double kFailSigma = 5.0;

Comparison compare(const std::string& quantity, const Matrix& closed_form, const Matrix& empirical,
                   const Matrix& std_error, double pass_sigma = kPassSigma);

// Simulates the instance and checks every closed form the toolkit derives
// for it: source covariance, conditional covariances with and without the
// node statistic, and (with a scheme) the coding rate and reconstruction
// error covariance.
std::vector<Comparison> consistency_suite(const SimConfig& config, double pass_sigma = kPassSigma);

// Little-endian float64, row-major: one row per scalar component. Preceded by
// a single text line "dscrd-samples 1 rows=R cols=N labels=a[0],a[1],...".
void export_binary(const SampleBatch& batch, std::ostream& out);

}  // namespace dscrd::mc
