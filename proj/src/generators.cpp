#include "corrbin/generators.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace corrbin {

namespace {

/// x if it is a probability, the nearest bound if within kProbabilityEps of
/// [0,1], nothing otherwise.
std::optional<double> as_probability(double x) {
  if (x >= 0.0 && x <= 1.0) return x;
  if (x < 0.0 && x >= -kProbabilityEps) return 0.0;
  if (x > 1.0 && x <= 1.0 + kProbabilityEps) return 1.0;
  return std::nullopt;
}

Violation parameter_violation(std::string name, std::size_t i, double value) {
  return Violation{Violation::Kind::Parameter, i, i, value, Interval{0.0, 1.0}, std::move(name)};
}

FeasibilityReport inapplicable(Algorithm alg, std::vector<Violation> v, std::string notes) {
  FeasibilityReport rep;
  rep.verdict = Verdict::AlgorithmInapplicable;
  rep.checked_algorithm = alg;
  rep.violations = std::move(v);
  rep.notes = std::move(notes);
  return rep;
}

FeasibilityReport feasible(Algorithm alg) {
  FeasibilityReport rep;
  rep.checked_algorithm = alg;
  rep.notes = "all derived parameters lie in [0,1]";
  return rep;
}

using Outcome = std::pair<std::optional<DerivedParams>, FeasibilityReport>;

Outcome derive_exchangeable_impl(const MarginalVector& p, double rho) {
  const Algorithm alg = Algorithm::Exchangeable;
  const std::size_t m = p.size();
  const double root_pq = std::sqrt(p.min() * p.max());
  const double gamma = root_pq / (root_pq + std::sqrt((1.0 - p.min()) * (1.0 - p.max())));
  ExchangeableParams q;
  q.gamma = gamma;
  q.alpha.resize(m);
  q.beta.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double raw_alpha = std::sqrt(rho * p[i] * (1.0 - p[i]) / (gamma * (1.0 - gamma)));
    const auto alpha = as_probability(raw_alpha);
    if (!alpha) return {std::nullopt, inapplicable(alg, {parameter_violation("alpha_i", i, raw_alpha)}, "alpha_i > 1")};
    q.alpha[i] = *alpha;
    if (std::abs(1.0 - *alpha) <= kProbabilityEps) {
      // X_i = Z; Y_i is never used.
      q.alpha[i] = 1.0;
      q.beta[i] = 0.0;
      continue;
    }
    const double raw_beta = (p[i] - *alpha * gamma) / (1.0 - *alpha);
    const auto beta = as_probability(raw_beta);
    if (!beta) return {std::nullopt, inapplicable(alg, {parameter_violation("beta_i", i, raw_beta)}, "beta_i outside [0,1]")};
    q.beta[i] = *beta;
  }
  return {DerivedParams{std::move(q)}, feasible(alg)};
}

Outcome derive_decaying_impl(const MarginalVector& p, const std::vector<double>& rho) {
  const Algorithm alg = Algorithm::DecayingProduct;
  const std::size_t m = p.size();
  DecayingParams q;
  q.alpha.assign(m, 0.0);
  q.beta.assign(m, 0.0);
  q.beta[0] = p[0];
  for (std::size_t i = 1; i < m; ++i) {
    const double raw_alpha = rho[i - 1] * std::sqrt(p[i] * (1.0 - p[i]) / (p[i - 1] * (1.0 - p[i - 1])));
    const auto alpha = as_probability(raw_alpha);
    if (!alpha) return {std::nullopt, inapplicable(alg, {parameter_violation("alpha_i", i, raw_alpha)}, "alpha_i > 1")};
    if (std::abs(1.0 - *alpha) <= kProbabilityEps) {
      // X_i = X_{i-1}.
      q.alpha[i] = 1.0;
      q.beta[i] = 0.0;
      continue;
    }
    q.alpha[i] = *alpha;
    const double raw_beta = (p[i] - *alpha * p[i - 1]) / (1.0 - *alpha);
    const auto beta = as_probability(raw_beta);
    if (!beta) return {std::nullopt, inapplicable(alg, {parameter_violation("beta_i", i, raw_beta)}, "beta_i outside [0,1]")};
    q.beta[i] = *beta;
  }
  return {DerivedParams{std::move(q)}, feasible(alg)};
}

Outcome derive_one_dep_m1_impl(const MarginalVector& p, const std::vector<double>& rho) {
  const Algorithm alg = Algorithm::OneDepProduct;
  const std::size_t m = p.size();
  OneDepM1Params q;
  q.alpha.assign(m, 0.0);
  q.beta.assign(m + 1, 1.0);
  // beta[i] is beta_i (1-based); alpha[i] is alpha_{i+1}.
  for (std::size_t i = 1; i < m; ++i) {
    const double a = p[i - 1], b = p[i];
    const double s = std::sqrt(a * b);
    q.beta[i] = s / (s + rho[i - 1] * std::sqrt((1.0 - a) * (1.0 - b)));
  }
  std::vector<Violation> bad;
  for (std::size_t i = 0; i + 1 < m; ++i) {
    const double raw = p[i] / (q.beta[i + 1] * q.beta[i]);
    if (const auto alpha = as_probability(raw)) {
      q.alpha[i] = *alpha;
      continue;
    }
    if (i >= 1) {
      // alpha_i <= 1 is the coupled bound on (rho_{i-1}, rho_i).
      const double upper = alg3_bound_coeffs(p, i).max_next(rho[i - 1]);
      bad.push_back(Violation{Violation::Kind::Correlation, i, i + 1, rho[i], Interval{0.0, upper}, "r_ij"});
    } else {
      bad.push_back(parameter_violation("alpha_i", i, raw));
    }
    break;
  }
  if (bad.empty()) {
    const double tail = std::sqrt(p[m - 1] / q.beta[m - 1]);
    const auto t = as_probability(tail);
    if (!t) {
      bad.push_back(parameter_violation("alpha_m", m - 1, tail));
    } else {
      q.alpha[m - 1] = *t;
      q.beta[m] = *t;
    }
  }
  if (!bad.empty()) {
    return {std::nullopt,
            inapplicable(alg, std::move(bad), "product-form 1-dependent construction needs every alpha_i <= 1")};
  }
  return {DerivedParams{std::move(q)}, feasible(alg)};
}

Outcome derive_one_dep_m2_impl(const MarginalVector& p, const std::vector<double>& rho) {
  const Algorithm alg = Algorithm::OneDepThinned;
  const std::size_t m = p.size();
  OneDepM2Params q;
  q.p_max = p.max();
  q.alpha.resize(m);
  for (std::size_t i = 0; i < m; ++i) q.alpha[i] = std::min(1.0, p[i] / q.p_max);
  q.rho_prime.resize(m - 1);
  for (std::size_t i = 0; i + 1 < m; ++i) {
    q.rho_prime[i] = rho[i] * std::sqrt((1.0 - p[i]) * (1.0 - p[i + 1])) /
                     (std::sqrt(q.alpha[i] * q.alpha[i + 1]) * (1.0 - q.p_max));
  }
  q.r.assign(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    const double prev = q.r[i - 1];
    const double raw = prev < 1.0 ? q.rho_prime[i - 1] / (1.0 - prev) : std::numeric_limits<double>::infinity();
    if (const auto r = as_probability(raw)) {
      q.r[i] = *r;
      continue;
    }
    // r_i <= 1 bounds rho_{i-1} given r_{i-1}.
    const double a = p[i - 1], b = p[i];
    const double upper = std::sqrt(a * b / ((1.0 - a) * (1.0 - b))) * (1.0 - q.p_max) / q.p_max * (1.0 - prev);
    return {std::nullopt,
            inapplicable(alg, {Violation{Violation::Kind::Correlation, i - 1, i, rho[i - 1], Interval{0.0, std::max(0.0, upper)}, "r_ij"}},
                         "thinned 1-dependent construction needs every mixing probability r_i <= 1 (r_" +
                             std::to_string(i + 1) + " = " + std::to_string(raw) + ")")};
  }
  return {DerivedParams{std::move(q)}, feasible(alg)};
}

Outcome derive_k_dep_impl(const MarginalVector& p, const CorrelationSpec& spec) {
  const Algorithm alg = Algorithm::KDependent;
  const std::size_t m = p.size();
  const KDependent bands = to_bands(m, spec);
  KDepParams q;
  q.k = bands.k();
  q.m = m;
  q.beta.assign(q.k * m, 1.0);
  // Padded marginals p_{m+1..m+K} = p_m; padded correlations are zero, so
  // those beta's are exactly 1.
  auto pad = [&](std::size_t j) { return p[std::min(j, m - 1)]; };
  for (std::size_t l = 1; l <= q.k; ++l) {
    const auto& band = bands.bands[l - 1];
    for (std::size_t j = 0; j < m; ++j) {
      const double rho = j < band.size() ? band[j] : 0.0;
      const double a = p[j], b = pad(j + l);
      const double ab = a * b;
      q.beta[(l - 1) * m + j] = ab / (ab + rho * std::sqrt(ab * (1.0 - a) * (1.0 - b)));
    }
  }
  q.alpha.resize(m);
  q.k_prime.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    q.k_prime[i] = std::min(i, q.k);
    double denom = 1.0;
    for (std::size_t l = 0; l < q.k; ++l) denom *= q.beta[l * m + i];
    for (std::size_t l = 1; l <= q.k_prime[i]; ++l) denom *= q.beta[(l - 1) * m + (i - l)];
    const double raw = p[i] / denom;
    const auto alpha = as_probability(raw);
    if (!alpha) {
      return {std::nullopt, inapplicable(alg, {parameter_violation("alpha_i", i, raw)},
                                         "K-dependent construction needs every alpha_i <= 1")};
    }
    q.alpha[i] = *alpha;
  }
  return {DerivedParams{std::move(q)}, feasible(alg)};
}

template <class T>
T unwrap(Outcome&& out) {
  if (!out.first) throw FeasibilityError(std::move(out.second));
  return std::get<T>(std::move(*out.first));
}

void require_prentice(const MarginalVector& p, const CorrelationSpec& spec, Algorithm alg) {
  FeasibilityReport rep = check_prentice(p, spec);
  if (!rep.feasible()) {
    rep.checked_algorithm = alg;
    throw FeasibilityError(std::move(rep));
  }
}

}  // namespace

std::uint64_t GenerationPlan::draws_per_row() const {
  const std::uint64_t mm = m();
  switch (algorithm) {
    case Algorithm::Exchangeable:
      return 2 * mm + 1;
    case Algorithm::DecayingProduct:
      return 2 * mm - 1;
    case Algorithm::OneDepProduct:
      return 2 * mm;
    case Algorithm::OneDepThinned:
      return 3 * mm - 1;
    case Algorithm::KDependent:
      return (std::get<KDepParams>(params).k + 1) * mm;
  }
  return 0;
}

KDependent to_bands(std::size_t m, const CorrelationSpec& spec) {
  KDependent out;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, KDependent>) {
          out = s;
        } else if constexpr (std::is_same_v<T, OneDependent>) {
          out.bands.push_back(s.rho);
        } else {
          out.bands.resize(m > 0 ? m - 1 : 0);
          for (std::size_t l = 1; l < m; ++l) {
            auto& band = out.bands[l - 1];
            band.resize(m - l);
            for (std::size_t j = 0; j + l < m; ++j) {
              if constexpr (std::is_same_v<T, Exchangeable>) {
                band[j] = s.rho;
              } else if constexpr (std::is_same_v<T, DecayingProduct>) {
                band[j] = l == 1 ? s.rho[j] : out.bands[l - 2][j] * s.rho[j + l - 1];
              } else {
                band[j] = s.r(j, j + l);
              }
            }
          }
        }
      },
      spec);
  return out;
}

std::pair<std::optional<DerivedParams>, FeasibilityReport> try_derive(const MarginalVector& p,
                                                                     const CorrelationSpec& spec, Algorithm alg) {
  if (!supports(alg, spec)) {
    throw std::invalid_argument("algorithm " + std::string(algorithm_name(alg)) + " cannot realize a " +
                                std::string(structure_name(spec)) + " structure");
  }
  FeasibilityReport prentice = check_prentice(p, spec);
  if (!prentice.feasible()) {
    prentice.checked_algorithm = alg;
    return {std::nullopt, std::move(prentice)};
  }
  switch (alg) {
    case Algorithm::Exchangeable:
      return derive_exchangeable_impl(p, std::get<Exchangeable>(spec).rho);
    case Algorithm::DecayingProduct:
      return derive_decaying_impl(p, std::get<DecayingProduct>(spec).rho);
    case Algorithm::OneDepProduct:
      return derive_one_dep_m1_impl(p, std::get<OneDependent>(spec).rho);
    case Algorithm::OneDepThinned:
      return derive_one_dep_m2_impl(p, std::get<OneDependent>(spec).rho);
    case Algorithm::KDependent:
      return derive_k_dep_impl(p, spec);
  }
  throw std::invalid_argument("unknown algorithm");
}

ExchangeableParams derive_exchangeable(const MarginalVector& p, double rho) {
  const CorrelationSpec spec = Exchangeable{rho};
  require_prentice(p, spec, Algorithm::Exchangeable);
  return unwrap<ExchangeableParams>(derive_exchangeable_impl(p, rho));
}

DecayingParams derive_decaying(const MarginalVector& p, const std::vector<double>& rho) {
  const CorrelationSpec spec = DecayingProduct{rho};
  require_prentice(p, spec, Algorithm::DecayingProduct);
  return unwrap<DecayingParams>(derive_decaying_impl(p, rho));
}

OneDepM1Params derive_one_dep_m1(const MarginalVector& p, const std::vector<double>& rho) {
  const CorrelationSpec spec = OneDependent{rho};
  require_prentice(p, spec, Algorithm::OneDepProduct);
  return unwrap<OneDepM1Params>(derive_one_dep_m1_impl(p, rho));
}

OneDepM2Params derive_one_dep_m2(const MarginalVector& p, const std::vector<double>& rho) {
  const CorrelationSpec spec = OneDependent{rho};
  require_prentice(p, spec, Algorithm::OneDepThinned);
  return unwrap<OneDepM2Params>(derive_one_dep_m2_impl(p, rho));
}

KDepParams derive_k_dep(const MarginalVector& p, const CorrelationSpec& spec) {
  require_prentice(p, spec, Algorithm::KDependent);
  return unwrap<KDepParams>(derive_k_dep_impl(p, spec));
}

GenerationPlan dispatch_one_dep(const MarginalVector& p, const std::vector<double>& rho) {
  const CorrelationSpec spec = OneDependent{rho};
  auto thinned = try_derive(p, spec, Algorithm::OneDepThinned);
  if (thinned.first) return GenerationPlan{Algorithm::OneDepThinned, std::move(*thinned.first), p, spec};
  if (thinned.second.verdict == Verdict::PrenticeViolated) throw FeasibilityError(std::move(thinned.second));

  auto product = try_derive(p, spec, Algorithm::OneDepProduct);
  if (product.first) return GenerationPlan{Algorithm::OneDepProduct, std::move(*product.first), p, spec};

  FeasibilityReport rep = std::move(product.second);
  rep.checked_algorithm.reset();
  rep.violations.insert(rep.violations.begin(), thinned.second.violations.begin(), thinned.second.violations.end());
  rep.notes = "neither 1-dependent construction applies: " + thinned.second.notes + "; " + rep.notes;
  if (p.size() >= 2) {
    rep.hints["rho_max_alg3_equal"] = rho_max_alg3_equal(p);
    rep.hints["rho_max_alg4_equal"] = rho_max_alg4_equal(p.size());
  }
  throw FeasibilityError(std::move(rep));
}

Algorithm default_algorithm(const CorrelationSpec& spec) {
  switch (spec.index()) {
    case 0:
      return Algorithm::Exchangeable;
    case 1:
      return Algorithm::DecayingProduct;
    case 2:
      return Algorithm::OneDepThinned;
    default:
      return Algorithm::KDependent;
  }
}

GenerationPlan make_plan(const MarginalVector& p, const CorrelationSpec& spec, std::optional<Algorithm> alg) {
  if (!alg && std::holds_alternative<OneDependent>(spec)) {
    validate(p, spec);
    return dispatch_one_dep(p, std::get<OneDependent>(spec).rho);
  }
  const Algorithm chosen = alg.value_or(default_algorithm(spec));
  auto out = try_derive(p, spec, chosen);
  if (!out.first) throw FeasibilityError(std::move(out.second));
  return GenerationPlan{chosen, std::move(*out.first), p, spec};
}

void for_each_row(const GenerationPlan& plan, std::uint64_t seed, std::size_t first, std::size_t count,
                  const std::function<void(std::size_t, std::span<const std::uint8_t>)>& fn) {
  std::vector<std::uint8_t> row(plan.m());
  std::vector<std::uint8_t> scratch;
  for (std::size_t r = first; r < first + count; ++r) {
    RandomStream stream = RandomStream::for_row(seed, r);
    sample_row(plan, stream, row, scratch);
    fn(r, row);
  }
}

SampleMatrix generate(const GenerationPlan& plan, std::size_t n, std::uint64_t seed, unsigned threads) {
  if (n == 0) throw std::invalid_argument("generate: n must be at least 1");
  SampleMatrix out;
  out.n = n;
  out.m = plan.m();
  out.seed = seed;
  out.algorithm = plan.algorithm;
  out.spec_digest = spec_digest(plan.p, plan.spec, plan.algorithm);
  out.data.resize(n * out.m);

  auto fill = [&](std::size_t begin, std::size_t end) {
    std::vector<std::uint8_t> scratch;
    for (std::size_t r = begin; r < end; ++r) {
      RandomStream stream = RandomStream::for_row(seed, r);
      sample_row(plan, stream, std::span<std::uint8_t>(out.data.data() + r * out.m, out.m), scratch);
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(threads, 1, n);
  if (workers == 1) {
    fill(0, n);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back(fill, begin, end);
  }
  for (auto& t : pool) t.join();
  return out;
}

SampleMatrix generate(const MarginalVector& p, const CorrelationSpec& spec, std::optional<Algorithm> alg,
                      std::size_t n, std::uint64_t seed, unsigned threads) {
  if (n == 0) throw std::invalid_argument("generate: n must be at least 1");
  return generate(make_plan(p, spec, alg), n, seed, threads);
}

}  // namespace corrbin
