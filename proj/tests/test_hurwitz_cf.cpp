#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "eds/hurwitz_cf.hpp"

using namespace eds;

namespace {

std::mt19937_64 rng(777001u);

KElem random_elem(int D, long long bound) {
  std::uniform_int_distribution<long long> d(-bound, bound);
  for (;;) {
    QuadInt den(D, d(rng), d(rng));
    if (den.is_zero()) continue;
    QuadInt num(D, d(rng), d(rng));
    return KElem::reduce(num, den);
  }
}

// z = a0 + h_{d1} o ... o h_{dl}(0) via exact field arithmetic
KElem reconstruct(const CFExpansion& e, int D) {
  KElem w = KElem::from_int(QuadInt::zero(D));
  for (auto it = e.digits.rbegin(); it != e.digits.rend(); ++it)
    w = (w + *it).inverse();
  return w + e.a0;
}

}  // namespace

TEST_CASE("gauss_step: pinned examples") {
  // z = 1/sqrt(-2) = -(1/2) w: 1/z = w exactly
  KElem z = KElem::reduce(QuadInt::one(2), QuadInt::omega(2));
  auto [d1, n1] = gauss_step(z);
  CHECK(d1 == QuadInt::omega(2));
  CHECK(n1.is_zero());

  // z = 1/2: 1/z = 2
  auto [d2, n2] = gauss_step(KElem::reduce(QuadInt::one(2), QuadInt(2, 2, 0)));
  CHECK(d2 == QuadInt(2, 2, 0));
  CHECK(n2.is_zero());

  // z = 2/5: digit 3, next -1/2
  auto [d3, n3] = gauss_step(KElem::reduce(QuadInt(2, 2, 0), QuadInt(2, 5, 0)));
  CHECK(d3 == QuadInt(2, 3, 0));
  CHECK(n3 == KElem::reduce(QuadInt(2, -1, 0), QuadInt(2, 2, 0)));

  CHECK_THROWS_AS(gauss_step(KElem()), std::domain_error);
  // z = 2 is outside I_D
  CHECK_THROWS_AS(gauss_step(KElem::from_int(QuadInt(2, 2, 0))), std::domain_error);
}

TEST_CASE("cf_expand: pinned examples") {
  CFExpansion z0 = cf_expand(KElem());
  CHECK(z0.a0.is_zero());
  CHECK(z0.length() == 0);

  CFExpansion e1 = cf_expand(KElem::reduce(QuadInt::one(2), QuadInt::omega(2)));
  CHECK(e1.a0.is_zero());
  REQUIRE(e1.length() == 1);
  CHECK(e1.digits[0] == QuadInt::omega(2));

  CFExpansion e2 = cf_expand(KElem::reduce(QuadInt(2, 2, 0), QuadInt(2, 5, 0)));
  CHECK(e2.a0.is_zero());
  REQUIRE(e2.length() == 2);
  CHECK(e2.digits[0] == QuadInt(2, 3, 0));
  CHECK(e2.digits[1] == QuadInt(2, -2, 0));
}

TEST_CASE("cf_expand: reconstruction, digit norms, determinant identity") {
  double worst_ratio = 0;
  for (int D : {2, 7, 11}) {
    for (int i = 0; i < 10000; ++i) {
      KElem z = random_elem(D, 400);
      CFExpansion e = cf_expand(z);
      for (const QuadInt& d : e.digits) CHECK(norm(d) >= 2);
      CHECK(reconstruct(e, D) == z);

      auto conv = convergents(e.a0, e.digits);
      // determinant identity p_n q_{n-1} - p_{n-1} q_n = (-1)^{n+1}, exact
      for (size_t n = 1; n < conv.size(); ++n) {
        QuadInt det = conv[n].first * conv[n - 1].second - conv[n - 1].first * conv[n].second;
        QuadInt expect = (n % 2 == 1) ? QuadInt::one(D) : -QuadInt::one(D);
        CHECK(det == expect);
      }
      // final convergent reproduces z up to one unit
      auto& [p, q] = conv.back();
      CHECK(KElem::reduce(p, q) == z);
      CHECK(euclid_gcd(p.is_zero() && q.is_zero() ? QuadInt::one(D) : p, q).is_unit());

      if (e.length() > 0) {
        double l = static_cast<double>(e.length());
        double logn = std::log(std::max(2.0, static_cast<double>(z.height_sq())));
        worst_ratio = std::max(worst_ratio, l / logn);
      }
    }
  }
  // no pinned constant for the length bound; report the observed growth rate
  MESSAGE("observed max ell / log(norm den) = ", worst_ratio);
  CHECK(worst_ratio < 20.0);
}

TEST_CASE("continuant basics") {
  std::vector<QuadInt> empty;
  CHECK(continuant(2, empty) == QuadInt::one(2));
  std::vector<QuadInt> one{QuadInt(2, 5, 1)};
  CHECK(continuant(2, one) == QuadInt(2, 5, 1));
  std::vector<QuadInt> two{QuadInt(2, 3, 0), QuadInt(2, -2, 0)};
  CHECK(continuant(2, two) == QuadInt(2, -5, 0));  // 3*(-2) + 1
}

TEST_CASE("convergents: pinned examples") {
  std::vector<QuadInt> empty;
  auto c0 = convergents(QuadInt(2, 4, 1), empty);
  REQUIRE(c0.size() == 1);
  CHECK(c0[0].first == QuadInt(2, 4, 1));
  CHECK(c0[0].second == QuadInt::one(2));

  std::vector<QuadInt> ds{QuadInt(2, 3, 0), QuadInt(2, -2, 0)};
  auto c = convergents(QuadInt::zero(2), ds);
  REQUIRE(c.size() == 3);
  CHECK(c[1].second == QuadInt(2, 3, 0));
  CHECK(c[2].second == QuadInt(2, -5, 0));
  CHECK(KElem::reduce(c[2].first, c[2].second) ==
        KElem::reduce(QuadInt(2, 2, 0), QuadInt(2, 5, 0)));
}

TEST_CASE("reversed_tail_ratios") {
  // single digit: both ratios are 1/alpha
  std::vector<QuadInt> one{QuadInt(2, 0, 2)};
  auto [r1, r2] = reversed_tail_ratios(2, one);
  CHECK(r1 == KElem::reduce(QuadInt::one(2), QuadInt(2, 0, 2)));
  CHECK(r1 == r2);

  // digits [3, -2]: ratios 2/5 and -3/5
  std::vector<QuadInt> ds{QuadInt(2, 3, 0), QuadInt(2, -2, 0)};
  auto [s1, s2] = reversed_tail_ratios(2, ds);
  CHECK(s1 == KElem::reduce(QuadInt(2, 2, 0), QuadInt(2, 5, 0)));
  CHECK(s2 == KElem::reduce(QuadInt(2, -3, 0), QuadInt(2, 5, 0)));

  std::vector<QuadInt> empty;
  CHECK_THROWS_AS(reversed_tail_ratios(2, empty), std::invalid_argument);
}

TEST_CASE("palindrome identity for continuants") {
  std::mt19937_64 local(42);
  std::uniform_int_distribution<long long> d(-6, 6);
  for (int D : {2, 7, 11}) {
    for (int i = 0; i < 500; ++i) {
      std::vector<QuadInt> a;
      int len = 1 + int(local() % 6);
      for (int k = 0; k < len; ++k) {
        QuadInt x(D, d(local), d(local));
        if (norm(x) < 2) x = QuadInt(D, 2, 1);
        a.push_back(x);
      }
      std::vector<QuadInt> rev(a.rbegin(), a.rend());
      CHECK(continuant(D, a) == continuant(D, rev));
    }
  }
}
