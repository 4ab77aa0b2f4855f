// Ground truth for the generators.
//
// exact_oracle() computes the exact law of a plan's row sampler by feeding it
// every possible sequence of Bernoulli outcomes, weighting each sequence by
// the product of the probabilities the sampler asked for. It runs the same
// sampler code as generation, so it checks the constructions themselves, not
// a re-derivation of them.
//
// The empirical side accumulates binary co-occurrence counts from packed
// 64-row column words, which keeps m = 100, n = 10^6 checks cheap.

#ifndef CORRBIN_VERIFY_HPP
#define CORRBIN_VERIFY_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "corrbin/core.hpp"
#include "corrbin/generators.hpp"

namespace corrbin {

struct ExactMoments {
  std::vector<double> mean;
  Matrix corr;
  /// pmf[x] for outcome bit pattern x, bit i holding X_{i+1}.
  std::vector<double> pmf;
};

/// Largest number of Bernoulli draws per row the oracle will enumerate.
inline constexpr std::uint64_t kOracleMaxDraws = 24;

class OracleSizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

ExactMoments exact_oracle(const GenerationPlan& plan);

/// Target correlation matrix of a spec.
Matrix materialize_correlation(const CorrelationSpec& spec, std::size_t m);

class DegenerateColumnError : public std::runtime_error {
 public:
  explicit DegenerateColumnError(std::vector<std::size_t> columns);
  const std::vector<std::size_t>& columns() const { return columns_; }

 private:
  std::vector<std::size_t> columns_;
};

struct EmpiricalMoments {
  std::size_t n = 0;
  std::vector<double> mean;
  Matrix corr;
};

/// Streaming sample mean and Pearson correlation of binary rows.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::size_t m);

  void add_row(std::span<const std::uint8_t> row);
  std::size_t count() const { return n_; }
  std::size_t dimension() const { return m_; }

  /// Throws DegenerateColumnError if any column is constant or n < 2.
  EmpiricalMoments moments();

 private:
  void flush();

  std::size_t m_;
  std::size_t n_ = 0;
  std::size_t pending_ = 0;
  std::vector<std::uint64_t> words_;  // one word per column, bit r = pending row r
  std::vector<std::uint64_t> ones_;
  std::vector<std::uint64_t> both_;  // upper triangle, row-major over i < j
};

EmpiricalMoments empirical_moments(const SampleMatrix& samples);

struct MomentErrors {
  double mean_l2 = 0.0;
  double corr_frobenius = 0.0;
  std::size_t n = 0;
};

MomentErrors moment_errors(const EmpiricalMoments& observed, const MarginalVector& p, const Matrix& target);
MomentErrors moment_errors(const SampleMatrix& samples, const MarginalVector& p, const CorrelationSpec& spec);

/// Size-n scale of the errors under sampling noise alone:
/// mean: sqrt(sum p_i (1 - p_i) / n), corr: sqrt(m (m - 1) / n).
MomentErrors clt_envelope(const MarginalVector& p, std::size_t n);

struct ConvergencePoint {
  std::size_t n = 0;
  double mean_l2 = 0.0;         // averaged over seeds
  double corr_frobenius = 0.0;  // averaged over seeds
  double median_mean_l2 = 0.0;
  double median_corr_frobenius = 0.0;
  MomentErrors envelope;
};

/// Errors along a sample-size ladder. For each seed the ladder points are
/// nested prefixes of one stream of rows (row r drawn from for_row(seed, r)).
std::vector<ConvergencePoint> run_convergence(const GenerationPlan& plan, std::span<const std::size_t> ladder,
                                              std::span<const std::uint64_t> seeds);

/// Default ladder {10^3, 10^4, 10^5, 10^6} truncated at n_max.
std::vector<std::size_t> default_ladder(std::size_t n_max);

}  // namespace corrbin

#endif  // CORRBIN_VERIFY_HPP
