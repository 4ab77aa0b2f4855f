#include "corrbin/core.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

namespace corrbin {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool is_correlation(double r) { return std::isfinite(r) && r >= 0.0 && r < 1.0; }

void check_vector(std::span<const double> rho, std::size_t expected, const char* label) {
  require(rho.size() == expected, std::string(label) + ": expected " + std::to_string(expected) +
                                      " correlations, got " + std::to_string(rho.size()));
  for (std::size_t i = 0; i < rho.size(); ++i) {
    require(is_correlation(rho[i]), std::string(label) + ": correlation " + std::to_string(i + 1) +
                                        " must lie in [0,1)");
  }
}

// FNV-1a over an explicit little-endian encoding.
class Fnv1a {
 public:
  void byte(std::uint8_t b) {
    h_ ^= b;
    h_ *= 0x100000001b3ULL;
  }
  void u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) byte(static_cast<std::uint8_t>(v >> (8 * k)));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void doubles(std::span<const double> v) {
    u64(v.size());
    for (double x : v) f64(x);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

MarginalVector::MarginalVector(std::vector<double> p) : p_(std::move(p)) {
  require(!p_.empty(), "marginal vector must have at least one entry");
  for (std::size_t i = 0; i < p_.size(); ++i) {
    require(std::isfinite(p_[i]) && p_[i] > 0.0 && p_[i] < 1.0,
            "marginal p_" + std::to_string(i + 1) + " must lie strictly inside (0,1)");
  }
  const auto [lo, hi] = std::minmax_element(p_.begin(), p_.end());
  min_ = *lo;
  max_ = *hi;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string_view structure_name(const CorrelationSpec& spec) {
  static constexpr std::array<std::string_view, 5> names = {"exchangeable", "decaying-product", "one-dependent",
                                                            "k-dependent", "general"};
  return names[spec.index()];
}

std::string_view algorithm_name(Algorithm alg) {
  switch (alg) {
    case Algorithm::Exchangeable:
      return "exchangeable";
    case Algorithm::DecayingProduct:
      return "decaying-product";
    case Algorithm::OneDepProduct:
      return "one-dep-product";
    case Algorithm::OneDepThinned:
      return "one-dep-thinned";
    case Algorithm::KDependent:
      return "k-dependent";
  }
  return "unknown";
}

int algorithm_number(Algorithm alg) { return static_cast<int>(alg); }

std::optional<Algorithm> parse_algorithm(std::string_view text) {
  if (text.starts_with("alg")) text.remove_prefix(3);
  if (text.size() == 1 && text[0] >= '1' && text[0] <= '5') return static_cast<Algorithm>(text[0] - '0');
  for (int k = 1; k <= 5; ++k) {
    if (text == algorithm_name(static_cast<Algorithm>(k))) return static_cast<Algorithm>(k);
  }
  return std::nullopt;
}

bool supports(Algorithm alg, const CorrelationSpec& spec) {
  switch (alg) {
    case Algorithm::Exchangeable:
      return std::holds_alternative<Exchangeable>(spec);
    case Algorithm::DecayingProduct:
      return std::holds_alternative<DecayingProduct>(spec);
    case Algorithm::OneDepProduct:
    case Algorithm::OneDepThinned:
      return std::holds_alternative<OneDependent>(spec);
    case Algorithm::KDependent:
      return true;  // every structure can be written as bands
  }
  return false;
}

void validate(const MarginalVector& p, const CorrelationSpec& spec) {
  const std::size_t m = p.size();
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Exchangeable>) {
          require(is_correlation(s.rho), "exchangeable: rho must lie in [0,1)");
        } else if constexpr (std::is_same_v<T, DecayingProduct>) {
          check_vector(s.rho, m - 1, "decaying-product");
        } else if constexpr (std::is_same_v<T, OneDependent>) {
          check_vector(s.rho, m - 1, "one-dependent");
        } else if constexpr (std::is_same_v<T, KDependent>) {
          require(s.k() >= 1, "k-dependent: need at least one band");
          require(s.k() <= m - 1, "k-dependent: K must not exceed m-1");
          for (std::size_t i = 0; i < s.k(); ++i) {
            check_vector(s.bands[i], m - (i + 1), ("k-dependent band " + std::to_string(i + 1)).c_str());
          }
        } else {
          require(s.r.size() == m, "general: matrix dimension does not match the marginals");
          for (std::size_t i = 0; i < m; ++i) {
            require(s.r(i, i) == 1.0, "general: diagonal must be 1");
            for (std::size_t j = i + 1; j < m; ++j) {
              require(std::abs(s.r(i, j) - s.r(j, i)) <= 1e-12, "general: matrix must be symmetric");
              require(is_correlation(s.r(i, j)), "general: off-diagonal entries must lie in [0,1)");
            }
          }
        }
      },
      spec);
}

std::string spec_digest(const MarginalVector& p, const CorrelationSpec& spec, Algorithm alg) {
  Fnv1a h;
  h.byte(static_cast<std::uint8_t>(algorithm_number(alg)));
  h.doubles(p.values());
  h.byte(static_cast<std::uint8_t>(spec.index()));
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Exchangeable>) {
          h.f64(s.rho);
        } else if constexpr (std::is_same_v<T, DecayingProduct> || std::is_same_v<T, OneDependent>) {
          h.doubles(s.rho);
        } else if constexpr (std::is_same_v<T, KDependent>) {
          h.u64(s.k());
          for (const auto& band : s.bands) h.doubles(band);
        } else {
          h.doubles(s.r.data());
        }
      },
      spec);
  std::ostringstream out;
  out << std::hex;
  out.width(16);
  out.fill('0');
  out << h.value();
  return out.str();
}

}  // namespace corrbin
