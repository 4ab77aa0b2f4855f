#include "corrbin/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "corrbin/generators.hpp"

namespace corrbin {

namespace {

using Clock = std::chrono::steady_clock;

// Consumes sampled values so the timed loop cannot be optimized away.
std::atomic<std::uint64_t> g_sink{0};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_loglog: need two or more matching points");
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("fit_loglog: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

ScalingResult run_scaling(Algorithm alg, const MarginalProfile& p_profile, const SpecProfile& spec_profile,
                          const std::vector<std::size_t>& dims, const ScalingOptions& options) {
  if (dims.empty()) throw std::invalid_argument("run_scaling: no dimensions given");
  if (!std::is_sorted(dims.begin(), dims.end()) || std::adjacent_find(dims.begin(), dims.end()) != dims.end()) {
    throw std::invalid_argument("run_scaling: dimensions must be strictly increasing");
  }
  if (options.reps == 0) throw std::invalid_argument("run_scaling: reps must be positive");

  ScalingResult res;
  res.algorithm = alg;
  res.dims = dims;
  res.reps = options.reps;
  for (const std::size_t m : dims) {
    const MarginalVector p = p_profile(m);
    const CorrelationSpec spec = spec_profile(m);
    auto t0 = Clock::now();
    const GenerationPlan plan = make_plan(p, spec, alg);  // throws when infeasible at this m
    res.derive_times.push_back(seconds_since(t0));

    const std::size_t rows = std::max<std::size_t>(1, options.min_draws_per_rep / plan.draws_per_row());
    res.rows_per_rep.push_back(rows);
    std::vector<std::uint8_t> row(m), scratch;
    std::vector<double> samples;
    std::uint64_t sink = 0;
    for (std::size_t rep = 0; rep < options.warmup + options.reps; ++rep) {
      RandomStream stream(options.seed + rep);
      t0 = Clock::now();
      for (std::size_t r = 0; r < rows; ++r) {
        sample_row(plan, stream, row, scratch);
        sink += row[r % m];
      }
      const double per_row = seconds_since(t0) / static_cast<double>(rows);
      if (rep >= options.warmup) samples.push_back(per_row);
    }
    g_sink.fetch_add(sink, std::memory_order_relaxed);

    std::sort(samples.begin(), samples.end());
    const std::size_t h = samples.size() / 2;
    res.times.push_back(samples.size() % 2 ? samples[h] : 0.5 * (samples[h - 1] + samples[h]));
    res.mean_times.push_back(std::accumulate(samples.begin(), samples.end(), 0.0) / samples.size());
  }
  if (dims.size() >= 2) {
    std::vector<double> x(dims.begin(), dims.end());
    const LogLogFit fit = fit_loglog(x, res.times);
    res.slope = fit.slope;
    res.r2 = fit.r2;
  }
  return res;
}

void emit_scaling_csv(const ScalingResult& result, const std::string& path) {
  if (result.dims.empty() || result.times.size() != result.dims.size()) {
    throw std::invalid_argument("emit_scaling_csv: result has no data rows");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("emit_scaling_csv: cannot open " + path);
  out << "algorithm,m,median_seconds,reps,mean_seconds,derive_seconds\n";
  out << std::setprecision(17);
  for (std::size_t i = 0; i < result.dims.size(); ++i) {
    out << algorithm_number(result.algorithm) << ',' << result.dims[i] << ',' << result.times[i] << ','
        << result.reps << ',' << result.mean_times[i] << ',' << result.derive_times[i] << '\n';
  }
  if (!out) throw std::runtime_error("emit_scaling_csv: write failed for " + path);
}

}  // namespace corrbin
