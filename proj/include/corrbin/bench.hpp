// Timing harness: per-row sampling cost as a function of dimension, and the
// log-log slope of that curve.

#ifndef CORRBIN_BENCH_HPP
#define CORRBIN_BENCH_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "corrbin/core.hpp"

namespace corrbin {

struct ScalingResult {
  Algorithm algorithm = Algorithm::Exchangeable;
  std::vector<std::size_t> dims;
  std::vector<double> times;         // median seconds per row
  std::vector<double> mean_times;    // mean seconds per row
  std::vector<double> derive_times;  // seconds for one derivation
  std::vector<std::size_t> rows_per_rep;
  std::size_t reps = 0;
  double slope = 0.0;
  double r2 = 0.0;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

/// Least-squares fit of log(y) on log(x).
LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct ScalingOptions {
  std::size_t reps = 10;
  std::size_t warmup = 2;
  /// Each timed repetition draws at least this many Bernoulli variables
  /// (whole rows), so small dimensions are timed over several rows.
  std::size_t min_draws_per_rep = 2'000'000;
  std::uint64_t seed = 0;
};

using MarginalProfile = std::function<MarginalVector(std::size_t m)>;
using SpecProfile = std::function<CorrelationSpec(std::size_t m)>;

ScalingResult run_scaling(Algorithm alg, const MarginalProfile& p_profile, const SpecProfile& spec_profile,
                          const std::vector<std::size_t>& dims, const ScalingOptions& options = {});

/// Columns: algorithm, m, median_seconds, reps, mean_seconds, derive_seconds.
/// Throws std::invalid_argument on an empty result and std::runtime_error on IO failure.
void emit_scaling_csv(const ScalingResult& result, const std::string& path);

}  // namespace corrbin

#endif  // CORRBIN_BENCH_HPP
