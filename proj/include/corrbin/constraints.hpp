// Feasibility mathematics: pairwise Prentice bounds, positive-definiteness,
// per-construction applicability conditions and maximal-correlation solvers.
//
// Everything here is a pure function of its inputs.

#ifndef CORRBIN_CONSTRAINTS_HPP
#define CORRBIN_CONSTRAINTS_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "corrbin/core.hpp"

namespace corrbin {

enum class Verdict { Feasible, PrenticeViolated, NotPositiveDefinite, AlgorithmInapplicable };

std::string_view verdict_name(Verdict v);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// One failed check. Indices are 0-based.
///
/// Correlation violations name the pair (i, j) and give the admissible range
/// of r_ij; parameter violations name a derived probability (alpha_i, r_i, ...)
/// whose admissible range is [0,1]; pivot violations give the failing pivot of
/// the triangular factorization.
struct Violation {
  enum class Kind { Correlation, Parameter, Pivot };
  Kind kind = Kind::Correlation;
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
  Interval admissible;
  std::string parameter;  // "r_ij", "alpha_i", "beta_i", "r_i", "pivot"
};

struct FeasibilityReport {
  Verdict verdict = Verdict::Feasible;
  std::vector<Violation> violations;
  std::optional<Algorithm> checked_algorithm;
  std::string notes;
  /// Named bounds that help the caller repair the input (e.g. rho_max_alg3_equal).
  std::map<std::string, double> hints;
  /// True when more violations existed than were listed.
  bool truncated = false;

  bool feasible() const { return verdict == Verdict::Feasible; }
};

/// Violations listed per report before truncating.
inline constexpr std::size_t kMaxReportedViolations = 64;

/// Thrown by derivation and generation when a spec cannot be realized.
class FeasibilityError : public std::runtime_error {
 public:
  explicit FeasibilityError(FeasibilityReport report);
  const FeasibilityReport& report() const { return report_; }

 private:
  FeasibilityReport report_;
};

/// Upper Prentice bound on a non-negative correlation between Bern(a) and Bern(b).
double prentice_upper(double a, double b);

/// Checks 0 <= r_ij <= prentice_upper(p_i, p_j) for every specified nonzero correlation.
///
/// For decaying-product specs only adjacent pairs are examined: the bound is
/// exp(-|L_i - L_j| / 2) with L the log-odds, so adjacent feasibility implies
/// feasibility of every product by the triangle inequality.
FeasibilityReport check_prentice(const MarginalVector& p, const CorrelationSpec& spec);

struct JointCells {
  double p11 = 0.0;
  double p10 = 0.0;
  double p01 = 0.0;
  double p00 = 0.0;
};

/// The 2x2 joint law implied by marginals and a correlation. Negative cells are returned as-is.
JointCells joint_cell_probabilities(double pi, double pj, double r);

/// Pivots at or below this value reject a matrix as not positive definite.
inline constexpr double kPivotTolerance = 1e-10;

/// Cholesky-style LDL^T test; every pivot must exceed kPivotTolerance.
bool is_positive_definite(const Matrix& r);

/// Positive-definiteness of the correlation matrix implied by `spec`, using
/// the cheapest exact route for the structure (closed form, banded or dense).
FeasibilityReport check_positive_definite(std::size_t m, const CorrelationSpec& spec);

/// Prentice, then positive definiteness.
FeasibilityReport check_feasibility(const MarginalVector& p, const CorrelationSpec& spec);

/// c_m = 2 sin(pi (m-1) / (2 (m+1))) for the equal-rho 1-dependent matrix.
double one_dep_pd_constant(std::size_t m);

/// (-1/c_m, 1/c_m) intersected with the correlation domain (-1, 1).
Interval pd_bound_1dep_equal(std::size_t m);

/// Coefficients of the product-form 1-dependent applicability inequality
///   a rho_{i-1} rho_i + b1 rho_{i-1} + b2 rho_i <= c
/// at interior index i (0-based, 1 <= i <= m-2).
struct QuadraticBoundCoeffs {
  double a = 0.0;
  double b1 = 0.0;
  double b2 = 0.0;
  double c = 0.0;

  /// Largest rho_i allowed given rho_{i-1}; clipped below at 0.
  double max_next(double rho_prev) const;
  /// Positive root of a x^2 + (b1 + b2) x - c, the equal-rho bound.
  double equal_rho_root() const;
};

QuadraticBoundCoeffs alg3_bound_coeffs(const MarginalVector& p, std::size_t i);

/// Largest common rho the product-form 1-dependent construction accepts
/// (minimum of the per-index equal-rho roots; Prentice bound when m = 2).
double rho_max_alg3_equal(const MarginalVector& p);

struct RSequence {
  std::vector<double> r;  // r_1..r_m (0-based storage), r[0] = 0
  bool feasible = true;
  /// First index whose r fell outside [0,1] (0-based), if any.
  std::optional<std::size_t> first_bad;
};

/// Mixing probabilities of the thinned moving-average construction:
///   r_1 = 0,  r_i = rho_{i-1} / (1 - r_{i-1}) * sqrt(q_{i-1} q_i / (p_{i-1} p_i)) * p_max / (1 - p_max).
/// Entries after a bad index are NaN.
RSequence alg4_r_sequence(const MarginalVector& p, const std::vector<double>& rho);

/// Largest common rho for which the equal-marginal recursion r_i = rho / (1 - r_{i-1})
/// stays in [0,1] through i = m. Found by bisection; 1 for m = 2.
double rho_max_alg4_equal(std::size_t m);

/// Runs the derivation of `alg` and reports whether every parameter lands in [0,1].
/// Throws std::invalid_argument when `alg` cannot realize the structure of `spec`.
FeasibilityReport check_applicability(const MarginalVector& p, const CorrelationSpec& spec, Algorithm alg);

}  // namespace corrbin

#endif  // CORRBIN_CONSTRAINTS_HPP
