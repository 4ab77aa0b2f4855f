// The five constructions for correlated binary vectors.
//
// Each construction is split into a pure derivation (marginals + correlation
// spec -> intermediate Bernoulli parameters) that runs once, and a row sampler
// that consumes draws from any source with `bool bernoulli(double)`. The
// samplers are templates so the exact oracle in verify.hpp can drive the very
// same code with enumerated outcomes instead of random ones.
//
// Draws per row, in order:
//   Exchangeable     Z, then (U_i, Y_i) for i = 1..m                   2m + 1
//   DecayingProduct  X_1, then (U_i, Y_i) for i = 2..m                 2m - 1
//   OneDepProduct    (U_i, Y_i) for i = 1..m                           2m
//   OneDepThinned    Y_1, (U_i, Y_i) for i = 2..m, then A_1..A_m       3m - 1
//   KDependent       Y_{lj} for l = 1..K, j = 1..m, then U_1..U_m      (K + 1) m

#ifndef CORRBIN_GENERATORS_HPP
#define CORRBIN_GENERATORS_HPP

#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "corrbin/constraints.hpp"
#include "corrbin/core.hpp"
#include "corrbin/random_stream.hpp"

namespace corrbin {

template <class S>
concept BernoulliSource = requires(S s, double q) {
  { s.bernoulli(q) } -> std::convertible_to<bool>;
};

/// gamma = P(Z = 1); alpha_i = P(U_i = 1); beta_i = P(Y_i = 1).
struct ExchangeableParams {
  double gamma = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// Entry 0 describes X_1 ~ Bern(beta[0] = p_1) with alpha[0] = 0.
struct DecayingParams {
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// alpha has m entries; beta has m + 1 entries beta_0..beta_m with beta_0 = 1.
struct OneDepM1Params {
  std::vector<double> alpha;
  std::vector<double> beta;
};

/// alpha_i = p_i / p_max thinning probabilities, rho_prime the base-chain
/// correlations, r the mixing probabilities with r[0] = 0.
struct OneDepM2Params {
  std::vector<double> alpha;
  std::vector<double> rho_prime;
  std::vector<double> r;
  double p_max = 0.0;
};

/// beta is K x m row-major: beta[(l-1) * m + (j-1)] = P(Y_lj = 1).
/// k_prime[i-1] = min(i-1, K) counts the lagged factors of X_i.
struct KDepParams {
  std::size_t k = 0;
  std::size_t m = 0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<std::size_t> k_prime;

  double beta_at(std::size_t l, std::size_t j) const { return beta[(l - 1) * m + (j - 1)]; }
};

using DerivedParams = std::variant<ExchangeableParams, DecayingParams, OneDepM1Params, OneDepM2Params, KDepParams>;

struct GenerationPlan {
  Algorithm algorithm = Algorithm::Exchangeable;
  DerivedParams params;
  MarginalVector p;
  CorrelationSpec spec;

  std::size_t m() const { return p.size(); }
  /// Bernoulli draws consumed by one row.
  std::uint64_t draws_per_row() const;
};

// Derivations. Each validates the inputs, checks the Prentice bounds and
// throws FeasibilityError when a derived parameter falls outside [0,1] by
// more than kProbabilityEps (values inside that margin are clamped).

ExchangeableParams derive_exchangeable(const MarginalVector& p, double rho);
DecayingParams derive_decaying(const MarginalVector& p, const std::vector<double>& rho);
OneDepM1Params derive_one_dep_m1(const MarginalVector& p, const std::vector<double>& rho);
OneDepM2Params derive_one_dep_m2(const MarginalVector& p, const std::vector<double>& rho);
/// Accepts any structure; it is first rewritten as bands (K = m-1 unless the
/// spec is one-dependent or k-dependent).
KDepParams derive_k_dep(const MarginalVector& p, const CorrelationSpec& spec);

/// Band form of any spec: band l holds corr(X_j, X_{j+l}) for j = 1..m-l.
KDependent to_bands(std::size_t m, const CorrelationSpec& spec);

/// Non-throwing derivation: params on success, the report either way.
std::pair<std::optional<DerivedParams>, FeasibilityReport> try_derive(const MarginalVector& p,
                                                                     const CorrelationSpec& spec, Algorithm alg);

/// Thinned construction first, product construction as fallback.
GenerationPlan dispatch_one_dep(const MarginalVector& p, const std::vector<double>& rho);

/// Default construction for a structure.
Algorithm default_algorithm(const CorrelationSpec& spec);

/// Derivation for a forced algorithm, or the structure default (with the
/// 1-dependent dispatcher) when `alg` is empty.
GenerationPlan make_plan(const MarginalVector& p, const CorrelationSpec& spec,
                         std::optional<Algorithm> alg = std::nullopt);

// Row samplers.

template <BernoulliSource S>
void sample_exchangeable(const ExchangeableParams& q, S& src, std::span<std::uint8_t> out) {
  const bool z = src.bernoulli(q.gamma);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool u = src.bernoulli(q.alpha[i]);
    const bool y = src.bernoulli(q.beta[i]);
    out[i] = u ? z : y;
  }
}

template <BernoulliSource S>
void sample_decaying(const DecayingParams& q, S& src, std::span<std::uint8_t> out) {
  bool prev = src.bernoulli(q.beta[0]);
  out[0] = prev;
  for (std::size_t i = 1; i < out.size(); ++i) {
    const bool u = src.bernoulli(q.alpha[i]);
    const bool y = src.bernoulli(q.beta[i]);
    prev = u ? prev : y;
    out[i] = prev;
  }
}

template <BernoulliSource S>
void sample_one_dep_m1(const OneDepM1Params& q, S& src, std::span<std::uint8_t> out) {
  bool y_prev = true;  // Y_0 = 1
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool u = src.bernoulli(q.alpha[i]);
    const bool y = src.bernoulli(q.beta[i + 1]);
    out[i] = u && y && y_prev;
    y_prev = y;
  }
}

template <BernoulliSource S>
void sample_one_dep_m2(const OneDepM2Params& q, S& src, std::span<std::uint8_t> out) {
  bool y_prev = src.bernoulli(q.p_max);
  out[0] = y_prev;  // W_1 = Y_1
  for (std::size_t i = 1; i < out.size(); ++i) {
    const bool u = src.bernoulli(q.r[i]);
    const bool y = src.bernoulli(q.p_max);
    out[i] = u ? y_prev : y;
    y_prev = y;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool a = src.bernoulli(q.alpha[i]);
    out[i] = a && out[i];
  }
}

/// `scratch` is resized to K * m bytes.
template <BernoulliSource S>
void sample_k_dep(const KDepParams& q, S& src, std::span<std::uint8_t> out, std::vector<std::uint8_t>& scratch) {
  const std::size_t m = q.m;
  scratch.resize(q.k * m);
  for (std::size_t idx = 0; idx < q.k * m; ++idx) scratch[idx] = src.bernoulli(q.beta[idx]);
  for (std::size_t i = 0; i < m; ++i) {
    bool x = src.bernoulli(q.alpha[i]);
    for (std::size_t l = 0; l < q.k && x; ++l) x = scratch[l * m + i];
    // lagged factors Y_{l, i-l} for l = 1..K'_i
    for (std::size_t l = 1; l <= q.k_prime[i] && x; ++l) x = scratch[(l - 1) * m + (i - l)];
    out[i] = x;
  }
}

/// Dispatches on the plan's parameter variant. `scratch` is only used by the K-dependent sampler.
template <BernoulliSource S>
void sample_row(const GenerationPlan& plan, S& src, std::span<std::uint8_t> out, std::vector<std::uint8_t>& scratch) {
  std::visit(
      [&](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, ExchangeableParams>) {
          sample_exchangeable(q, src, out);
        } else if constexpr (std::is_same_v<T, DecayingParams>) {
          sample_decaying(q, src, out);
        } else if constexpr (std::is_same_v<T, OneDepM1Params>) {
          sample_one_dep_m1(q, src, out);
        } else if constexpr (std::is_same_v<T, OneDepM2Params>) {
          sample_one_dep_m2(q, src, out);
        } else {
          sample_k_dep(q, src, out, scratch);
        }
      },
      plan.params);
}

/// Calls fn(row_index, row) for rows [first, first + count), each drawn from
/// RandomStream::for_row(seed, row_index).
void for_each_row(const GenerationPlan& plan, std::uint64_t seed, std::size_t first, std::size_t count,
                  const std::function<void(std::size_t, std::span<const std::uint8_t>)>& fn);

/// n rows from one plan. Rows are split across `threads` workers; the output
/// is byte-identical for every thread count.
SampleMatrix generate(const GenerationPlan& plan, std::size_t n, std::uint64_t seed, unsigned threads = 1);

SampleMatrix generate(const MarginalVector& p, const CorrelationSpec& spec, std::optional<Algorithm> alg,
                      std::size_t n, std::uint64_t seed, unsigned threads = 1);

}  // namespace corrbin

#endif  // CORRBIN_GENERATORS_HPP
