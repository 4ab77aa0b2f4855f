#include "corrbin/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "corrbin/generators.hpp"

namespace corrbin {

namespace {

void add_violation(FeasibilityReport& rep, Violation v) {
  if (rep.violations.size() < kMaxReportedViolations) {
    rep.violations.push_back(std::move(v));
  } else {
    rep.truncated = true;
  }
}

Violation correlation_violation(std::size_t i, std::size_t j, double value, double upper) {
  return Violation{Violation::Kind::Correlation, i, j, value, Interval{0.0, upper}, "r_ij"};
}

void check_pair(FeasibilityReport& rep, const MarginalVector& p, std::size_t i, std::size_t j, double r) {
  if (r == 0.0) return;
  const double upper = prentice_upper(p[i], p[j]);
  if (r > upper) add_violation(rep, correlation_violation(i, j, r, upper));
}

void finish_prentice(FeasibilityReport& rep) {
  if (rep.violations.empty()) {
    rep.verdict = Verdict::Feasible;
    rep.notes = "all specified correlations satisfy the Prentice bounds";
  } else {
    rep.verdict = Verdict::PrenticeViolated;
    rep.notes = "correlation outside its Prentice interval [0, min(sqrt(p_i q_j / (p_j q_i)), sqrt(p_j q_i / (p_i q_j)))]";
  }
}

double log_odds(double x) { return std::log(x) - std::log1p(-x); }

// LDL^T on a symmetric band of half-width `w` given by entry(i, j) for j <= i, i - j <= w.
template <class Entry>
std::optional<std::pair<std::size_t, double>> banded_ldl_failure(std::size_t m, std::size_t w, Entry entry) {
  // l(i, i-d) stored at row i, slot d-1; d[i] the pivots.
  std::vector<double> l(m * std::max<std::size_t>(w, 1), 0.0);
  std::vector<double> d(m, 0.0);
  auto L = [&](std::size_t i, std::size_t j) -> double& { return l[i * w + (i - j - 1)]; };
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t lo = i > w ? i - w : 0;
    for (std::size_t j = lo; j < i; ++j) {
      double s = entry(i, j);
      const std::size_t klo = std::max(lo, j > w ? j - w : 0);
      for (std::size_t k = klo; k < j; ++k) s -= L(i, k) * L(j, k) * d[k];
      L(i, j) = s / d[j];
    }
    double piv = entry(i, i);
    for (std::size_t k = lo; k < i; ++k) piv -= L(i, k) * L(i, k) * d[k];
    if (!(piv > kPivotTolerance)) return std::make_pair(i, piv);
    d[i] = piv;
  }
  return std::nullopt;
}

}  // namespace

std::string_view verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Feasible:
      return "Feasible";
    case Verdict::PrenticeViolated:
      return "PrenticeViolated";
    case Verdict::NotPositiveDefinite:
      return "NotPositiveDefinite";
    case Verdict::AlgorithmInapplicable:
      return "AlgorithmInapplicable";
  }
  return "Unknown";
}

FeasibilityError::FeasibilityError(FeasibilityReport report)
    : std::runtime_error(std::string(verdict_name(report.verdict)) + ": " + report.notes), report_(std::move(report)) {}

double prentice_upper(double a, double b) {
  if (!(a > 0.0 && a < 1.0 && b > 0.0 && b < 1.0)) {
    throw std::domain_error("prentice_upper: marginals must lie strictly inside (0,1)");
  }
  if (a == b) return 1.0;
  const double ratio = (a * (1.0 - b)) / (b * (1.0 - a));
  return std::sqrt(std::min(ratio, 1.0 / ratio));
}

FeasibilityReport check_prentice(const MarginalVector& p, const CorrelationSpec& spec) {
  validate(p, spec);
  FeasibilityReport rep;
  const std::size_t m = p.size();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Exchangeable>) {
          if (s.rho == 0.0 || m < 2) return;
          // The tightest pairs are the ones furthest apart in log-odds.
          if (s.rho <= prentice_upper(p.min(), p.max())) return;
          std::vector<std::size_t> order(m);
          std::iota(order.begin(), order.end(), 0);
          std::vector<double> lo(m);
          for (std::size_t i = 0; i < m; ++i) lo[i] = log_odds(p[i]);
          std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return lo[x] < lo[y]; });
          for (std::size_t a = 0; a < m && !rep.truncated; ++a) {
            bool any = false;
            for (std::size_t b = m; b-- > a + 1;) {
              const std::size_t i = std::min(order[a], order[b]);
              const std::size_t j = std::max(order[a], order[b]);
              const double upper = prentice_upper(p[i], p[j]);
              if (s.rho <= upper) break;
              any = true;
              add_violation(rep, correlation_violation(i, j, s.rho, upper));
              if (rep.truncated) break;
            }
            if (!any) break;
          }
        } else if constexpr (std::is_same_v<T, DecayingProduct> || std::is_same_v<T, OneDependent>) {
          for (std::size_t i = 0; i + 1 < m; ++i) check_pair(rep, p, i, i + 1, s.rho[i]);
        } else if constexpr (std::is_same_v<T, KDependent>) {
          for (std::size_t l = 0; l < s.k(); ++l) {
            for (std::size_t j = 0; j < s.bands[l].size(); ++j) check_pair(rep, p, j, j + l + 1, s.bands[l][j]);
          }
        } else {
          for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = i + 1; j < m; ++j) check_pair(rep, p, i, j, s.r(i, j));
          }
        }
      },
      spec);
  finish_prentice(rep);
  return rep;
}

JointCells joint_cell_probabilities(double pi, double pj, double r) {
  JointCells c;
  c.p11 = pi * pj + r * std::sqrt(pi * pj * (1.0 - pi) * (1.0 - pj));
  c.p10 = pi - c.p11;
  c.p01 = pj - c.p11;
  c.p00 = 1.0 - c.p11 - c.p10 - c.p01;
  return c;
}

bool is_positive_definite(const Matrix& r) {
  const std::size_t m = r.size();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      if (std::abs(r(i, j) - r(j, i)) > 1e-12) throw std::invalid_argument("is_positive_definite: matrix not symmetric");
    }
  }
  if (m == 0) throw std::invalid_argument("is_positive_definite: empty matrix");
  // Dense LDL^T: the band routine with full width.
  const auto fail = banded_ldl_failure(m, m, [&](std::size_t i, std::size_t j) { return r(i, j); });
  return !fail.has_value();
}

FeasibilityReport check_positive_definite(std::size_t m, const CorrelationSpec& spec) {
  FeasibilityReport rep;
  auto pivot_failure = [&](std::size_t i, double piv) {
    rep.violations.push_back(Violation{Violation::Kind::Pivot, i, i, piv, Interval{kPivotTolerance, 1.0}, "pivot"});
  };
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Exchangeable>) {
          // Eigenvalues 1 - rho (multiplicity m-1) and 1 + (m-1) rho.
          if (m >= 2 && !(1.0 - s.rho > kPivotTolerance)) pivot_failure(1, 1.0 - s.rho);
        } else if constexpr (std::is_same_v<T, DecayingProduct>) {
          // Markov structure: the LDL^T pivots are 1 - rho_l^2.
          for (std::size_t l = 0; l < s.rho.size(); ++l) {
            const double piv = 1.0 - s.rho[l] * s.rho[l];
            if (!(piv > kPivotTolerance)) {
              pivot_failure(l + 1, piv);
              break;
            }
          }
        } else if constexpr (std::is_same_v<T, OneDependent> || std::is_same_v<T, KDependent>) {
          const KDependent bands = to_bands(m, s);
          const auto fail = banded_ldl_failure(m, bands.k(), [&](std::size_t i, std::size_t j) {
            return i == j ? 1.0 : bands.bands[i - j - 1][j];
          });
          if (fail) pivot_failure(fail->first, fail->second);
        } else {
          const auto fail = banded_ldl_failure(m, m, [&](std::size_t i, std::size_t j) { return s.r(i, j); });
          if (fail) pivot_failure(fail->first, fail->second);
        }
      },
      spec);
  rep.verdict = rep.violations.empty() ? Verdict::Feasible : Verdict::NotPositiveDefinite;
  rep.notes = rep.violations.empty() ? "correlation matrix is positive definite"
                                     : "correlation matrix is not positive definite";
  return rep;
}

FeasibilityReport check_feasibility(const MarginalVector& p, const CorrelationSpec& spec) {
  FeasibilityReport rep = check_prentice(p, spec);
  if (!rep.feasible()) return rep;
  return check_positive_definite(p.size(), spec);
}

double one_dep_pd_constant(std::size_t m) {
  if (m < 2) throw std::invalid_argument("one_dep_pd_constant: m must be at least 2");
  const double md = static_cast<double>(m);
  return 2.0 * std::sin(std::numbers::pi * (md - 1.0) / (2.0 * (md + 1.0)));
}

Interval pd_bound_1dep_equal(std::size_t m) {
  const double b = std::min(1.0, 1.0 / one_dep_pd_constant(m));
  return Interval{-b, b};
}

double QuadraticBoundCoeffs::max_next(double rho_prev) const {
  return std::max(0.0, (c - b1 * rho_prev) / (a * rho_prev + b2));
}

double QuadraticBoundCoeffs::equal_rho_root() const {
  const double b = b1 + b2;
  // Stable form of (-b + sqrt(b^2 + 4ac)) / (2a).
  return 2.0 * c / (b + std::sqrt(b * b + 4.0 * a * c));
}

QuadraticBoundCoeffs alg3_bound_coeffs(const MarginalVector& p, std::size_t i) {
  if (i < 1 || i + 1 >= p.size()) throw std::out_of_range("alg3_bound_coeffs: index must be interior");
  const double pa = p[i - 1], pb = p[i], pc = p[i + 1];
  const double qa = 1.0 - pa, qb = 1.0 - pb, qc = 1.0 - pc;
  return QuadraticBoundCoeffs{std::sqrt(qa * qb * qc), std::sqrt(qa * pb * pc), std::sqrt(pa * pb * qc),
                              std::sqrt(pa * qb * pc)};
}

double rho_max_alg3_equal(const MarginalVector& p) {
  const std::size_t m = p.size();
  if (m < 2) throw std::invalid_argument("rho_max_alg3_equal: need m >= 2");
  if (m == 2) return prentice_upper(p[0], p[1]);
  double best = 1.0;
  for (std::size_t i = 1; i + 1 < m; ++i) best = std::min(best, alg3_bound_coeffs(p, i).equal_rho_root());
  return best;
}

RSequence alg4_r_sequence(const MarginalVector& p, const std::vector<double>& rho) {
  const std::size_t m = p.size();
  if (rho.size() + 1 != m) throw std::invalid_argument("alg4_r_sequence: rho must have m-1 entries");
  const double pmax = p.max();
  const double scale = pmax / (1.0 - pmax);
  RSequence out;
  out.r.assign(m, std::numeric_limits<double>::quiet_NaN());
  out.r[0] = 0.0;
  for (std::size_t i = 1; i < m; ++i) {
    const double prev = out.r[i - 1];
    if (prev >= 1.0) {
      out.feasible = false;
      out.first_bad = i;
      break;
    }
    const double ratio = std::sqrt((1.0 - p[i - 1]) * (1.0 - p[i]) / (p[i - 1] * p[i]));
    double r = rho[i - 1] / (1.0 - prev) * ratio * scale;
    if (r > 1.0 && r <= 1.0 + kProbabilityEps) r = 1.0;
    if (!(r >= 0.0 && r <= 1.0)) {
      out.feasible = false;
      out.first_bad = i;
      break;
    }
    out.r[i] = r;
  }
  return out;
}

double rho_max_alg4_equal(std::size_t m) {
  if (m < 2) throw std::invalid_argument("rho_max_alg4_equal: need m >= 2");
  if (m == 2) return 1.0;
  // Equal marginals reduce the recursion to r_i = rho / (1 - r_{i-1}).
  auto stays_valid = [m](double rho) {
    double r = 0.0;
    for (std::size_t i = 2; i <= m; ++i) {
      if (r >= 1.0) return false;
      r = rho / (1.0 - r);
      if (r > 1.0) return false;
    }
    return true;
  };
  double lo = 0.25, hi = 0.5;
  if (stays_valid(hi)) return hi;
  for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
    const double mid = 0.5 * (lo + hi);
    (stays_valid(mid) ? lo : hi) = mid;
  }
  return lo;
}

FeasibilityReport check_applicability(const MarginalVector& p, const CorrelationSpec& spec, Algorithm alg) {
  return try_derive(p, spec, alg).second;
}

}  // namespace corrbin
