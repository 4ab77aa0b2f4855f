// Domain types shared by every corrbin module.
//
// A generation problem is a pair (MarginalVector, CorrelationSpec) plus the id
// of the construction used to realize it. Everything here is immutable after
// construction and validated on entry.

#ifndef CORRBIN_CORE_HPP
#define CORRBIN_CORE_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace corrbin {

/// Marginal probabilities p_1..p_m, each strictly inside (0,1).
class MarginalVector {
 public:
  explicit MarginalVector(std::vector<double> p);

  std::size_t size() const { return p_.size(); }
  double operator[](std::size_t i) const { return p_[i]; }
  std::span<const double> values() const { return p_; }
  double min() const { return min_; }
  double max() const { return max_; }

  friend bool operator==(const MarginalVector&, const MarginalVector&) = default;

 private:
  std::vector<double> p_;
  double min_ = 0.0;
  double max_ = 0.0;
};

/// Dense row-major square matrix.
class Matrix {
 public:
  Matrix() = default;
  explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), a_(n * n, fill) {}

  static Matrix identity(std::size_t n);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }
  std::span<const double> data() const { return a_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> a_;
};

// Correlation structures. Indices in comments are 1-based to match the usual
// notation; storage is 0-based.

/// Every off-diagonal correlation equals rho.
struct Exchangeable {
  double rho = 0.0;
};

/// corr(X_j, X_k) = rho_j * ... * rho_{k-1}; rho has length m-1.
struct DecayingProduct {
  std::vector<double> rho;
};

/// corr(X_i, X_{i+1}) = rho_i, zero beyond the first off-diagonal.
struct OneDependent {
  std::vector<double> rho;
};

/// bands[i-1][j-1] = corr(X_j, X_{j+i}) for i = 1..K; band i has m-i entries.
struct KDependent {
  std::vector<std::vector<double>> bands;
  std::size_t k() const { return bands.size(); }
};

/// Arbitrary non-negative correlation matrix (symmetric, unit diagonal).
struct General {
  Matrix r;
};

using CorrelationSpec = std::variant<Exchangeable, DecayingProduct, OneDependent, KDependent, General>;

std::string_view structure_name(const CorrelationSpec& spec);

/// The five constructions.
enum class Algorithm : int {
  Exchangeable = 1,     // shared-source mixture
  DecayingProduct = 2,  // Markov mixture
  OneDepProduct = 3,    // 1-dependent, triple-product form
  OneDepThinned = 4,    // 1-dependent, thinned moving average
  KDependent = 5,       // banded product form (general matrix when K = m-1)
};

std::string_view algorithm_name(Algorithm alg);
int algorithm_number(Algorithm alg);
/// Accepts "1".."5", "alg1".."alg5" and the names returned by algorithm_name.
std::optional<Algorithm> parse_algorithm(std::string_view text);

/// Whether `alg` can realize the structure of `spec` at all (ignoring values).
bool supports(Algorithm alg, const CorrelationSpec& spec);

/// Structural validation: lengths, ranges, symmetry. Throws std::invalid_argument.
void validate(const MarginalVector& p, const CorrelationSpec& spec);

/// Tolerance for treating a derived probability just outside [0,1] as rounding noise.
inline constexpr double kProbabilityEps = 1e-12;

/// Stable 64-bit digest of (p, spec, alg) rendered as 16 lowercase hex digits.
std::string spec_digest(const MarginalVector& p, const CorrelationSpec& spec, Algorithm alg);

/// n x m binary sample, row-major, one byte per entry.
struct SampleMatrix {
  std::size_t n = 0;
  std::size_t m = 0;
  std::uint64_t seed = 0;
  Algorithm algorithm = Algorithm::Exchangeable;
  std::string spec_digest;
  std::vector<std::uint8_t> data;

  std::span<const std::uint8_t> row(std::size_t r) const { return {data.data() + r * m, m}; }
  std::uint8_t operator()(std::size_t r, std::size_t c) const { return data[r * m + c]; }
};

}  // namespace corrbin

#endif  // CORRBIN_CORE_HPP
