#include "corrbin/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace corrbin {

namespace {

// Replays a fixed outcome pattern: draw k returns bit k and multiplies the
// path weight by the probability of that outcome.
class ReplaySource {
 public:
  explicit ReplaySource(std::uint64_t bits) : bits_(bits) {}

  bool bernoulli(double q) {
    const bool b = (bits_ >> k_++) & 1U;
    weight_ *= b ? q : 1.0 - q;
    return b;
  }
  double weight() const { return weight_; }

 private:
  std::uint64_t bits_;
  unsigned k_ = 0;
  double weight_ = 1.0;
};

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

}  // namespace

ExactMoments exact_oracle(const GenerationPlan& plan) {
  const std::uint64_t draws = plan.draws_per_row();
  if (draws > kOracleMaxDraws) {
    throw OracleSizeError("exact_oracle: " + std::to_string(draws) + " draws per row exceeds the 2^" +
                          std::to_string(kOracleMaxDraws) + " lattice cap");
  }
  const std::size_t m = plan.m();
  ExactMoments out;
  out.pmf.assign(std::size_t{1} << m, 0.0);
  std::vector<std::uint8_t> row(m);
  std::vector<std::uint8_t> scratch;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << draws); ++bits) {
    ReplaySource src(bits);
    sample_row(plan, src, row, scratch);
    if (src.weight() == 0.0) continue;
    std::size_t x = 0;
    for (std::size_t i = 0; i < m; ++i) x |= std::size_t{row[i]} << i;
    out.pmf[x] += src.weight();
  }

  out.mean.assign(m, 0.0);
  Matrix joint(m);  // P(X_i = 1, X_j = 1)
  for (std::size_t x = 0; x < out.pmf.size(); ++x) {
    const double w = out.pmf[x];
    if (w == 0.0) continue;
    for (std::size_t i = 0; i < m; ++i) {
      if (!((x >> i) & 1U)) continue;
      out.mean[i] += w;
      for (std::size_t j = i; j < m; ++j) {
        if ((x >> j) & 1U) joint(i, j) += w;
      }
    }
  }
  out.corr = Matrix::identity(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double cov = joint(i, j) - out.mean[i] * out.mean[j];
      const double sd = std::sqrt(out.mean[i] * (1.0 - out.mean[i]) * out.mean[j] * (1.0 - out.mean[j]));
      out.corr(i, j) = out.corr(j, i) = cov / sd;
    }
  }
  return out;
}

Matrix materialize_correlation(const CorrelationSpec& spec, std::size_t m) {
  Matrix r = Matrix::identity(m);
  if (const auto* g = std::get_if<General>(&spec)) {
    if (g->r.size() != m) throw std::invalid_argument("materialize_correlation: dimension mismatch");
    return g->r;
  }
  if (const auto* e = std::get_if<Exchangeable>(&spec)) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (i != j) r(i, j) = e->rho;
      }
    }
    return r;
  }
  if (const auto* d = std::get_if<DecayingProduct>(&spec)) {
    if (d->rho.size() + 1 != m) throw std::invalid_argument("materialize_correlation: dimension mismatch");
    for (std::size_t i = 0; i < m; ++i) {
      double prod = 1.0;
      for (std::size_t j = i + 1; j < m; ++j) {
        prod *= d->rho[j - 1];
        r(i, j) = r(j, i) = prod;
      }
    }
    return r;
  }
  const std::size_t expected_first = std::holds_alternative<OneDependent>(spec)
                                         ? std::get<OneDependent>(spec).rho.size()
                                         : std::get<KDependent>(spec).bands.front().size();
  if (expected_first + 1 != m) throw std::invalid_argument("materialize_correlation: dimension mismatch");
  const KDependent bands = to_bands(m, spec);
  for (std::size_t l = 1; l <= bands.k(); ++l) {
    for (std::size_t j = 0; j + l < m; ++j) r(j, j + l) = r(j + l, j) = bands.bands[l - 1][j];
  }
  return r;
}

DegenerateColumnError::DegenerateColumnError(std::vector<std::size_t> columns)
    : std::runtime_error([&] {
        std::string s = "constant sample columns (correlation undefined):";
        for (auto c : columns) s += " x" + std::to_string(c + 1);
        return s;
      }()),
      columns_(std::move(columns)) {}

MomentAccumulator::MomentAccumulator(std::size_t m)
    : m_(m), words_(m, 0), ones_(m, 0), both_(m * (m > 0 ? m - 1 : 0) / 2, 0) {}

void MomentAccumulator::add_row(std::span<const std::uint8_t> row) {
  if (row.size() != m_) throw std::invalid_argument("MomentAccumulator: row length mismatch");
  for (std::size_t i = 0; i < m_; ++i) words_[i] |= std::uint64_t{row[i] != 0} << pending_;
  ++n_;
  if (++pending_ == 64) flush();
}

void MomentAccumulator::flush() {
  if (pending_ == 0) return;
  std::size_t k = 0;
  for (std::size_t i = 0; i < m_; ++i) {
    const std::uint64_t wi = words_[i];
    ones_[i] += std::popcount(wi);
    if (wi == 0) {
      k += m_ - i - 1;
      continue;
    }
    for (std::size_t j = i + 1; j < m_; ++j, ++k) both_[k] += std::popcount(wi & words_[j]);
  }
  std::fill(words_.begin(), words_.end(), 0);
  pending_ = 0;
}

EmpiricalMoments MomentAccumulator::moments() {
  flush();
  std::vector<std::size_t> constant;
  for (std::size_t i = 0; i < m_; ++i) {
    if (n_ < 2 || ones_[i] == 0 || ones_[i] == n_) constant.push_back(i);
  }
  if (!constant.empty()) throw DegenerateColumnError(std::move(constant));
  EmpiricalMoments out;
  out.n = n_;
  const double n = static_cast<double>(n_);
  out.mean.resize(m_);
  for (std::size_t i = 0; i < m_; ++i) out.mean[i] = static_cast<double>(ones_[i]) / n;
  out.corr = Matrix::identity(m_);
  std::size_t k = 0;
  for (std::size_t i = 0; i < m_; ++i) {
    for (std::size_t j = i + 1; j < m_; ++j, ++k) {
      const double mi = out.mean[i], mj = out.mean[j];
      const double cov = static_cast<double>(both_[k]) / n - mi * mj;
      out.corr(i, j) = out.corr(j, i) = cov / std::sqrt(mi * (1.0 - mi) * mj * (1.0 - mj));
    }
  }
  return out;
}

EmpiricalMoments empirical_moments(const SampleMatrix& samples) {
  MomentAccumulator acc(samples.m);
  for (std::size_t r = 0; r < samples.n; ++r) acc.add_row(samples.row(r));
  return acc.moments();
}

MomentErrors moment_errors(const EmpiricalMoments& observed, const MarginalVector& p, const Matrix& target) {
  const std::size_t m = p.size();
  if (observed.mean.size() != m || target.size() != m) throw std::invalid_argument("moment_errors: dimension mismatch");
  MomentErrors e;
  e.n = observed.n;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) s += (observed.mean[i] - p[i]) * (observed.mean[i] - p[i]);
  e.mean_l2 = std::sqrt(s);
  s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = observed.corr(i, j) - target(i, j);
      s += d * d;
    }
  }
  e.corr_frobenius = std::sqrt(s);
  return e;
}

MomentErrors moment_errors(const SampleMatrix& samples, const MarginalVector& p, const CorrelationSpec& spec) {
  return moment_errors(empirical_moments(samples), p, materialize_correlation(spec, p.size()));
}

MomentErrors clt_envelope(const MarginalVector& p, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double m = static_cast<double>(p.size());
  double var = 0.0;
  for (double x : p.values()) var += x * (1.0 - x);
  return MomentErrors{std::sqrt(var / nn), std::sqrt(m * (m - 1.0) / nn), n};
}

std::vector<ConvergencePoint> run_convergence(const GenerationPlan& plan, std::span<const std::size_t> ladder,
                                              std::span<const std::uint64_t> seeds) {
  if (ladder.empty() || seeds.empty()) throw std::invalid_argument("run_convergence: empty ladder or seed list");
  if (!std::is_sorted(ladder.begin(), ladder.end())) throw std::invalid_argument("run_convergence: ladder must be increasing");
  const Matrix target = materialize_correlation(plan.spec, plan.m());
  std::vector<std::vector<MomentErrors>> per_point(ladder.size());
  for (const std::uint64_t seed : seeds) {
    MomentAccumulator acc(plan.m());
    std::size_t done = 0;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
      for_each_row(plan, seed, done, ladder[k] - done, [&](std::size_t, std::span<const std::uint8_t> row) { acc.add_row(row); });
      done = ladder[k];
      per_point[k].push_back(moment_errors(acc.moments(), plan.p, target));
    }
  }
  std::vector<ConvergencePoint> out;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    ConvergencePoint pt;
    pt.n = ladder[k];
    std::vector<double> mean_err, corr_err;
    for (const auto& e : per_point[k]) {
      mean_err.push_back(e.mean_l2);
      corr_err.push_back(e.corr_frobenius);
    }
    const double s = static_cast<double>(seeds.size());
    pt.mean_l2 = std::accumulate(mean_err.begin(), mean_err.end(), 0.0) / s;
    pt.corr_frobenius = std::accumulate(corr_err.begin(), corr_err.end(), 0.0) / s;
    pt.median_mean_l2 = median(mean_err);
    pt.median_corr_frobenius = median(corr_err);
    pt.envelope = clt_envelope(plan.p, pt.n);
    out.push_back(pt);
  }
  return out;
}

std::vector<std::size_t> default_ladder(std::size_t n_max) {
  std::vector<std::size_t> out;
  for (std::size_t n = 1000; n <= 1000000 && n <= n_max; n *= 10) out.push_back(n);
  return out;
}

}  // namespace corrbin
