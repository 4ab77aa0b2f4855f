#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "corrbin/bench.hpp"
#include "corrbin/generators.hpp"

using namespace corrbin;

namespace {

MarginalVector half(std::size_t m) { return MarginalVector(std::vector<double>(m, 0.5)); }
CorrelationSpec exch(std::size_t) { return Exchangeable{0.5}; }

}  // namespace

TEST_CASE("log-log fit recovers power laws") {
  const std::vector<double> x{10, 100, 1000, 10000};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 * v * v);
  const LogLogFit fit = fit_loglog(x, y);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(fit.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(fit.r2 == doctest::Approx(1.0).epsilon(1e-12));

  const LogLogFit flat = fit_loglog({1, 2, 4}, {5, 5, 5});
  CHECK(flat.slope == doctest::Approx(0.0));
  CHECK(flat.r2 == 1.0);

  CHECK_THROWS_AS(fit_loglog({1}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog({1, 2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(fit_loglog({1, 0}, {1, 2}), std::invalid_argument);
}

TEST_CASE("scaling run records every dimension") {
  ScalingOptions opts;
  opts.reps = 3;
  opts.warmup = 1;
  opts.min_draws_per_rep = 20000;
  const ScalingResult res = run_scaling(Algorithm::Exchangeable, half, exch, {100, 1000, 10000}, opts);
  CHECK(res.dims == std::vector<std::size_t>{100, 1000, 10000});
  REQUIRE(res.times.size() == 3);
  CHECK(res.mean_times.size() == 3);
  CHECK(res.derive_times.size() == 3);
  CHECK(res.rows_per_rep == std::vector<std::size_t>{99, 9, 1});
  CHECK(res.reps == 3);
  for (double t : res.times) CHECK(t > 0.0);
  CHECK(res.times[2] > res.times[0]);
  CHECK(res.slope > 0.5);

  CHECK_THROWS_AS(run_scaling(Algorithm::Exchangeable, half, exch, {}, opts), std::invalid_argument);
  CHECK_THROWS_AS(run_scaling(Algorithm::Exchangeable, half, exch, {100, 100}, opts), std::invalid_argument);
  CHECK_THROWS_AS(run_scaling(Algorithm::Exchangeable, half, exch, {1000, 100}, opts), std::invalid_argument);
  opts.reps = 0;
  CHECK_THROWS_AS(run_scaling(Algorithm::Exchangeable, half, exch, {100}, opts), std::invalid_argument);
}

TEST_CASE("scaling run propagates infeasible profiles") {
  ScalingOptions opts;
  opts.reps = 1;
  opts.warmup = 0;
  opts.min_draws_per_rep = 1000;
  auto bad = [](std::size_t m) -> CorrelationSpec { return OneDependent{std::vector<double>(m - 1, 0.45)}; };
  CHECK_THROWS_AS(run_scaling(Algorithm::OneDepThinned, half, bad, {10}, opts), FeasibilityError);
}

TEST_CASE("scaling csv") {
  ScalingResult res;
  res.algorithm = Algorithm::DecayingProduct;
  res.dims = {10, 20};
  res.times = {1.5e-6, 3.25e-6};
  res.mean_times = {1.6e-6, 3.5e-6};
  res.derive_times = {1e-7, 2e-7};
  res.reps = 4;
  const auto path = std::filesystem::temp_directory_path() / "corrbin_bench_test.csv";
  emit_scaling_csv(res, path.string());
  std::ifstream in(path);
  std::string header, row1, row2, extra;
  std::getline(in, header);
  std::getline(in, row1);
  std::getline(in, row2);
  CHECK(header == "algorithm,m,median_seconds,reps,mean_seconds,derive_seconds");
  CHECK(row1.rfind("2,10,", 0) == 0);
  CHECK(row2.rfind("2,20,", 0) == 0);
  std::istringstream fields(row2);
  std::string f;
  std::vector<std::string> cols;
  while (std::getline(fields, f, ',')) cols.push_back(f);
  REQUIRE(cols.size() == 6);
  CHECK(std::stod(cols[2]) == 3.25e-6);
  CHECK(cols[3] == "4");
  CHECK_FALSE(std::getline(in, extra));
  std::filesystem::remove(path);

  CHECK_THROWS_AS(emit_scaling_csv(ScalingResult{}, path.string()), std::invalid_argument);
  CHECK_THROWS_AS(emit_scaling_csv(res, "/nonexistent-dir/x/y.csv"), std::runtime_error);
}
