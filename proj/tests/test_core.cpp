#include <doctest.h>

#include <cmath>
#include <limits>

#include "corrbin/core.hpp"
#include "corrbin/random_stream.hpp"

using namespace corrbin;

TEST_CASE("marginal vector accepts the open unit interval only") {
  CHECK_NOTHROW(MarginalVector({0.1, 0.5, 0.999}));
  CHECK_THROWS_AS(MarginalVector({}), std::invalid_argument);
  CHECK_THROWS_AS(MarginalVector({0.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(MarginalVector({0.5, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(MarginalVector({std::nan("")}), std::invalid_argument);
  const MarginalVector p({0.3, 0.1, 0.7});
  CHECK(p.min() == 0.1);
  CHECK(p.max() == 0.7);
  CHECK(p.size() == 3);
}

TEST_CASE("algorithm names round trip") {
  for (int k = 1; k <= 5; ++k) {
    const auto alg = static_cast<Algorithm>(k);
    CHECK(parse_algorithm(algorithm_name(alg)) == alg);
    CHECK(parse_algorithm(std::to_string(k)) == alg);
    CHECK(parse_algorithm("alg" + std::to_string(k)) == alg);
    CHECK(algorithm_number(alg) == k);
  }
  CHECK_FALSE(parse_algorithm("6").has_value());
  CHECK_FALSE(parse_algorithm("").has_value());
}

TEST_CASE("supports matches structure to construction") {
  const CorrelationSpec ex = Exchangeable{0.3};
  const CorrelationSpec one = OneDependent{{0.3, 0.5}};
  CHECK(supports(Algorithm::Exchangeable, ex));
  CHECK_FALSE(supports(Algorithm::Exchangeable, one));
  CHECK(supports(Algorithm::OneDepProduct, one));
  CHECK(supports(Algorithm::OneDepThinned, one));
  CHECK_FALSE(supports(Algorithm::DecayingProduct, one));
  CHECK(supports(Algorithm::KDependent, ex));
  CHECK(supports(Algorithm::KDependent, one));
}

TEST_CASE("validate checks lengths and ranges") {
  const MarginalVector p({0.1, 0.2, 0.3});
  CHECK_NOTHROW(validate(p, Exchangeable{0.3}));
  CHECK_THROWS_AS(validate(p, Exchangeable{1.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate(p, Exchangeable{-0.1}), std::invalid_argument);
  CHECK_NOTHROW(validate(p, DecayingProduct{{0.2, 0.5}}));
  CHECK_THROWS_AS(validate(p, DecayingProduct{{0.2}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(p, OneDependent{{0.2, 0.5, 0.1}}), std::invalid_argument);
  CHECK_NOTHROW(validate(p, KDependent{{{0.2, 0.3}, {0.1}}}));
  CHECK_THROWS_AS(validate(p, KDependent{{}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(p, KDependent{{{0.2, 0.3}, {0.1}, {}}}), std::invalid_argument);
  CHECK_THROWS_AS(validate(p, KDependent{{{0.2, 0.3}, {0.1, 0.1}}}), std::invalid_argument);

  Matrix r = Matrix::identity(3);
  r(0, 1) = r(1, 0) = 0.2;
  CHECK_NOTHROW(validate(p, General{r}));
  r(0, 1) = 0.3;
  CHECK_THROWS_AS(validate(p, General{r}), std::invalid_argument);
  r(0, 1) = 0.2 + 1e-13;
  CHECK_NOTHROW(validate(p, General{r}));
  CHECK_THROWS_AS(validate(p, General{Matrix::identity(2)}), std::invalid_argument);
  Matrix neg = Matrix::identity(3);
  neg(0, 2) = neg(2, 0) = -0.1;
  CHECK_THROWS_AS(validate(p, General{neg}), std::invalid_argument);
}

TEST_CASE("spec digest is stable and sensitive") {
  const MarginalVector p({0.1, 0.2, 0.3});
  // Reference values from an independent FNV-1a implementation of the same encoding.
  CHECK(spec_digest(p, Exchangeable{0.3}, Algorithm::Exchangeable) == "3f9ed9f5ad79d1b1");
  CHECK(spec_digest(p, DecayingProduct{{0.2, 0.5}}, Algorithm::DecayingProduct) == "f2c7b30e3d480317");
  CHECK(spec_digest(p, Exchangeable{0.3}, Algorithm::KDependent) !=
        spec_digest(p, Exchangeable{0.3}, Algorithm::Exchangeable));
  CHECK(spec_digest(p, Exchangeable{0.3}, Algorithm::Exchangeable) !=
        spec_digest(p, Exchangeable{std::nextafter(0.3, 1.0)}, Algorithm::Exchangeable));
}

TEST_CASE("random stream matches the reference generator") {
  RandomStream s0(0);
  CHECK(s0.next_u64() == 0x99ec5f36cb75f2b4ULL);
  CHECK(s0.next_u64() == 0xbf6e1f784956452aULL);
  CHECK(s0.next_u64() == 0x1a5f849d4933e6e0ULL);
  RandomStream s42(42);
  CHECK(s42.next_u64() == 0x15780b2e0c2ec716ULL);
  CHECK(s42.next_u64() == 0x6104d9866d113a7eULL);
  RandomStream row = RandomStream::for_row(7, 3);
  CHECK(row.next_u64() == 0xd0ea68c108ec9a94ULL);
  CHECK(row.seed() == 7);
}

TEST_CASE("bernoulli counts draws and respects the endpoints") {
  RandomStream s(11);
  int ones = 0;
  for (int i = 0; i < 1000; ++i) {
    CHECK_FALSE(s.bernoulli(0.0));
    CHECK(s.bernoulli(1.0));
    ones += s.bernoulli(0.5);
  }
  CHECK(s.draws() == 3000);
  CHECK(ones > 400);
  CHECK(ones < 600);
  for (int i = 0; i < 1000; ++i) {
    const double u = s.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("matrix identity") {
  const Matrix i3 = Matrix::identity(3);
  CHECK(i3.size() == 3);
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t b = 0; b < 3; ++b) CHECK(i3(a, b) == (a == b ? 1.0 : 0.0));
  }
}
