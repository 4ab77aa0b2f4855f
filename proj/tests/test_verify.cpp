#include <doctest.h>

#include <cmath>
#include <numeric>

#include "corrbin/verify.hpp"

using namespace corrbin;

namespace {

void check_exact(const GenerationPlan& plan, double tol = 1e-12) {
  const ExactMoments ex = exact_oracle(plan);
  const Matrix target = materialize_correlation(plan.spec, plan.m());
  CHECK(std::accumulate(ex.pmf.begin(), ex.pmf.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 0; i < plan.m(); ++i) {
    CHECK(std::abs(ex.mean[i] - plan.p[i]) <= tol);
    for (std::size_t j = 0; j < plan.m(); ++j) CHECK(std::abs(ex.corr(i, j) - target(i, j)) <= tol);
  }
}

Matrix example5() {
  Matrix r = Matrix::identity(3);
  r(0, 1) = r(1, 0) = 0.3;
  r(1, 2) = r(2, 1) = 0.2;
  r(0, 2) = r(2, 0) = 0.1;
  return r;
}

}  // namespace

TEST_CASE("exact oracle on the five worked examples") {
  const MarginalVector p1({0.1, 0.2, 0.3});
  const MarginalVector p3({0.8, 0.82, 0.83});
  check_exact(make_plan(p1, Exchangeable{0.3}));
  check_exact(make_plan(p1, DecayingProduct{{0.2, 0.5}}));
  check_exact(make_plan(p3, OneDependent{{0.3, 0.5}}, Algorithm::OneDepProduct));
  check_exact(make_plan(p3, OneDependent{{0.3, 0.5}}, Algorithm::OneDepThinned));
  check_exact(make_plan(MarginalVector({0.6, 0.7, 0.8}), General{example5()}));

  const ExactMoments dec = exact_oracle(make_plan(p1, DecayingProduct{{0.2, 0.5}}));
  CHECK(std::abs(dec.corr(0, 2) - 0.1) < 1e-12);
  const ExactMoments one = exact_oracle(make_plan(p3, OneDependent{{0.3, 0.5}}, Algorithm::OneDepProduct));
  CHECK(std::abs(one.corr(0, 2)) < 1e-12);
}

TEST_CASE("zero correlations give independent coordinates") {
  const MarginalVector p({0.15, 0.5, 0.7});
  const std::vector<CorrelationSpec> specs = {Exchangeable{0.0}, DecayingProduct{{0.0, 0.0}}, OneDependent{{0.0, 0.0}},
                                              KDependent{{{0.0, 0.0}, {0.0}}}};
  auto independent_pmf = [&](std::size_t x) {
    double w = 1.0;
    for (std::size_t i = 0; i < 3; ++i) w *= (x >> i) & 1U ? p[i] : 1.0 - p[i];
    return w;
  };
  auto check_pmf = [&](const GenerationPlan& plan) {
    const ExactMoments ex = exact_oracle(plan);
    for (std::size_t x = 0; x < 8; ++x) CHECK(std::abs(ex.pmf[x] - independent_pmf(x)) < 1e-15);
  };
  check_pmf(make_plan(p, specs[0]));
  check_pmf(make_plan(p, specs[1]));
  check_pmf(make_plan(p, specs[2], Algorithm::OneDepProduct));
  check_pmf(make_plan(p, specs[2], Algorithm::OneDepThinned));
  check_pmf(make_plan(p, specs[3]));
}

TEST_CASE("oracle refuses lattices above its cap") {
  const GenerationPlan plan = make_plan(MarginalVector(std::vector<double>(12, 0.5)), Exchangeable{0.1});
  CHECK(plan.draws_per_row() == 25);
  CHECK_THROWS_AS(exact_oracle(plan), OracleSizeError);
}

TEST_CASE("materialized correlation matrices") {
  const Matrix ex = materialize_correlation(Exchangeable{0.3}, 3);
  CHECK(ex(0, 1) == 0.3);
  CHECK(ex(2, 0) == 0.3);
  CHECK(ex(1, 1) == 1.0);
  const Matrix dec = materialize_correlation(DecayingProduct{{0.2, 0.5}}, 3);
  CHECK(std::abs(dec(0, 2) - 0.1) < 1e-15);
  const Matrix one = materialize_correlation(OneDependent{{0.3, 0.5}}, 3);
  CHECK(one(0, 1) == 0.3);
  CHECK(one(1, 2) == 0.5);
  CHECK(one(0, 2) == 0.0);
  CHECK(materialize_correlation(General{example5()}, 3) == example5());
  CHECK_THROWS_AS(materialize_correlation(General{example5()}, 4), std::invalid_argument);
  CHECK_THROWS_AS(materialize_correlation(OneDependent{{0.3}}, 4), std::invalid_argument);
}

TEST_CASE("accumulator matches a direct computation") {
  const GenerationPlan plan = make_plan(MarginalVector({0.3, 0.6, 0.5, 0.7, 0.4}), Exchangeable{0.2});
  const SampleMatrix s = generate(plan, 1001, 5);
  const EmpiricalMoments em = empirical_moments(s);
  const std::size_t m = s.m;
  std::vector<double> mean(m, 0.0);
  for (std::size_t r = 0; r < s.n; ++r) {
    for (std::size_t i = 0; i < m; ++i) mean[i] += s(r, i);
  }
  for (auto& x : mean) x /= static_cast<double>(s.n);
  for (std::size_t i = 0; i < m; ++i) {
    CHECK(em.mean[i] == doctest::Approx(mean[i]).epsilon(1e-14));
    for (std::size_t j = 0; j < m; ++j) {
      double cov = 0.0;
      for (std::size_t r = 0; r < s.n; ++r) cov += (s(r, i) - mean[i]) * (s(r, j) - mean[j]);
      cov /= static_cast<double>(s.n);
      const double expected = cov / std::sqrt(mean[i] * (1 - mean[i]) * mean[j] * (1 - mean[j]));
      CHECK(em.corr(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  CHECK(em.n == 1001);
}

TEST_CASE("constant columns are reported") {
  MomentAccumulator acc(3);
  const std::vector<std::uint8_t> a{1, 0, 1}, b{1, 1, 0};
  acc.add_row(a);
  acc.add_row(b);
  try {
    acc.moments();
    FAIL("expected DegenerateColumnError");
  } catch (const DegenerateColumnError& e) {
    CHECK(e.columns() == std::vector<std::size_t>{0});
  }
  MomentAccumulator single(2);
  single.add_row(std::vector<std::uint8_t>{1, 0});
  CHECK_THROWS_AS(single.moments(), DegenerateColumnError);
  CHECK_THROWS_AS(single.add_row(std::vector<std::uint8_t>{1}), std::invalid_argument);
}

TEST_CASE("sample means stay within five standard errors") {
  const MarginalVector p({0.1, 0.2, 0.3});
  const SampleMatrix s = generate(make_plan(p, Exchangeable{0.3}), 1000000, 3);
  const EmpiricalMoments em = empirical_moments(s);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(em.mean[i] - p[i]) < 5.0 * std::sqrt(p[i] * (1 - p[i]) / 1e6));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) CHECK(std::abs(em.corr(i, j) - 0.3) < 5.0 / std::sqrt(1e6));
  }
}

TEST_CASE("far-apart coordinates of 1-dependent samples are uncorrelated") {
  const MarginalVector p({0.8, 0.82, 0.83, 0.81});
  for (Algorithm alg : {Algorithm::OneDepProduct, Algorithm::OneDepThinned}) {
    const SampleMatrix s = generate(make_plan(p, OneDependent{{0.2, 0.2, 0.2}}, alg), 1000000, 11);
    const EmpiricalMoments em = empirical_moments(s);
    CHECK(std::abs(em.corr(0, 2)) < 5e-3);
    CHECK(std::abs(em.corr(1, 3)) < 5e-3);
    CHECK(std::abs(em.corr(0, 3)) < 5e-3);
  }
}

TEST_CASE("consecutive rows are independent") {
  const GenerationPlan plan = make_plan(MarginalVector({0.4, 0.5, 0.45}), DecayingProduct{{0.6, 0.6}});
  const std::size_t n = 1000000;
  const SampleMatrix s = generate(plan, n + 1, 21);
  MomentAccumulator acc(6);
  std::vector<std::uint8_t> pair(6);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 3; ++c) {
      pair[c] = s(r, c);
      pair[3 + c] = s(r + 1, c);
    }
    acc.add_row(pair);
  }
  const EmpiricalMoments em = acc.moments();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 3; j < 6; ++j) CHECK(std::abs(em.corr(i, j)) < 5.0 / std::sqrt(static_cast<double>(n)));
  }
}

TEST_CASE("general AR matrix agrees with the decaying-product generator") {
  const MarginalVector p({0.7, 0.75, 0.8, 0.72});
  const double rho = 0.2;
  Matrix r = Matrix::identity(4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = i + 1; j < 4; ++j) r(i, j) = r(j, i) = std::pow(rho, static_cast<double>(j - i));
  }
  const std::size_t n = 1000000;
  const EmpiricalMoments a = empirical_moments(generate(make_plan(p, General{r}), n, 1));
  const EmpiricalMoments b = empirical_moments(generate(make_plan(p, DecayingProduct{{rho, rho, rho}}), n, 2));
  const double se = std::sqrt(2.0 / static_cast<double>(n));
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::abs(a.mean[i] - b.mean[i]) < 5.0 * se);
    for (std::size_t j = i + 1; j < 4; ++j) CHECK(std::abs(a.corr(i, j) - b.corr(i, j)) < 5.0 * se * 2.0);
  }
}

TEST_CASE("convergence ladder") {
  CHECK(default_ladder(999).empty());
  CHECK(default_ladder(1000) == std::vector<std::size_t>{1000});
  CHECK(default_ladder(50000) == std::vector<std::size_t>{1000, 10000});
  CHECK(default_ladder(100000000) == std::vector<std::size_t>{1000, 10000, 100000, 1000000});

  const GenerationPlan plan = make_plan(MarginalVector({0.5, 0.6, 0.7, 0.55}), Exchangeable{0.2});
  const std::vector<std::size_t> ladder{1000, 10000, 100000};
  const std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  const auto pts = run_convergence(plan, ladder, seeds);
  REQUIRE(pts.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(pts[k].n == ladder[k]);
    CHECK(pts[k].mean_l2 < 5.0 * pts[k].envelope.mean_l2);
    CHECK(pts[k].corr_frobenius < 5.0 * pts[k].envelope.corr_frobenius);
  }
  CHECK(pts[2].mean_l2 < pts[0].mean_l2);
  CHECK(pts[2].corr_frobenius < pts[0].corr_frobenius);

  // The first ladder point of a seed is the same rows as generate(plan, 1000, seed).
  const MomentErrors direct = moment_errors(generate(plan, 1000, 0), plan.p, plan.spec);
  const auto first = run_convergence(plan, std::vector<std::size_t>{1000}, std::vector<std::uint64_t>{0});
  CHECK(first[0].mean_l2 == doctest::Approx(direct.mean_l2).epsilon(1e-14));
  CHECK(first[0].corr_frobenius == doctest::Approx(direct.corr_frobenius).epsilon(1e-14));

  CHECK_THROWS_AS(run_convergence(plan, std::vector<std::size_t>{}, seeds), std::invalid_argument);
  CHECK_THROWS_AS(run_convergence(plan, std::vector<std::size_t>{100, 10}, seeds), std::invalid_argument);
}

TEST_CASE("clt envelope") {
  const MomentErrors e = clt_envelope(MarginalVector({0.5, 0.5, 0.5, 0.5}), 100);
  CHECK(e.mean_l2 == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(e.corr_frobenius == doctest::Approx(std::sqrt(12.0) / 10.0).epsilon(1e-15));
  CHECK(e.n == 100);
}
