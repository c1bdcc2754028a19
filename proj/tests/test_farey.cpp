#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <mutex>
#include <set>
#include <string>

#include "eds/farey.hpp"

using namespace eds;

namespace {

// Independent brute-force oracle: scan a generous square coordinate box for
// both denominators and numerators, test membership with rationals, reduce,
// and deduplicate by the canonical string form.
std::set<std::string> farey_oracle(int D, long long X, bool include_zero) {
  std::set<std::string> out;
  long long cb = 1;
  while (cb * cb <= 4 * X) ++cb;  // coordinate bound, intentionally generous
  for (long long bu = -cb; bu <= cb; ++bu) {
    for (long long bv = -cb; bv <= cb; ++bv) {
      QuadInt b(D, bu, bv);
      if (b.is_zero()) continue;
      BigInt nb = norm(b);
      if (nb >= X) continue;
      for (long long au = -cb; au <= cb; ++au) {
        for (long long av = -cb; av <= cb; ++av) {
          QuadInt a(D, au, av);
          QuadInt t = a * b.conj();
          DomainPoint p(D, BigRat(t.u(), nb), BigRat(t.v(), nb));
          if (!domain_membership(p, Domain::I)) continue;
          KElem z = KElem::reduce(a, b);
          if (static_cast<BigInt>(z.height_sq()) >= X) continue;
          if (!include_zero && z.is_zero()) continue;
          out.insert(z.to_string());
        }
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("enumerate_denominators: pinned examples") {
  auto d1 = enumerate_denominators(2, 2);
  REQUIRE(d1.size() == 1);
  CHECK(d1[0] == QuadInt::one(2));

  auto d2 = enumerate_denominators(2, 3);
  REQUIRE(d2.size() == 2);
  CHECK(d2[0] == QuadInt::one(2));
  CHECK(d2[1] == QuadInt::omega(2));

  auto d3 = enumerate_denominators(7, 2);
  REQUIRE(d3.size() == 1);
  CHECK(d3[0] == QuadInt::one(7));

  // exactly one representative per unit orbit, sorted by (norm, u, v)
  for (int D : {2, 7, 11}) {
    auto ds = enumerate_denominators(D, 200);
    std::set<std::string> seen;
    BigInt last_norm = 0;
    for (const QuadInt& b : ds) {
      CHECK((b.u() > 0 || (b.u() == 0 && b.v() > 0)));
      CHECK(norm(b) >= last_norm);
      last_norm = norm(b);
      CHECK(seen.insert(b.to_string()).second);
      CHECK(seen.find((-b).to_string()) == seen.end());
    }
  }
}

TEST_CASE("enumerate_farey: pinned examples") {
  std::set<std::string> got;
  enumerate_farey(FareyQuery{2, 2, true}, [&](const KElem& z) { got.insert(z.to_string()); });
  CHECK(got == std::set<std::string>{"0/1"});

  got.clear();
  enumerate_farey(FareyQuery{2, 3, true}, [&](const KElem& z) { got.insert(z.to_string()); });
  CHECK(got.size() == 3);
  CHECK(got.count("0/1") == 1);
  CHECK(got.count(KElem::reduce(QuadInt::one(2), QuadInt::omega(2)).to_string()) == 1);
  CHECK(got.count(KElem::reduce(-QuadInt::one(2), QuadInt::omega(2)).to_string()) == 1);
}

TEST_CASE("enumerate_farey agrees with the brute-force oracle") {
  for (int D : {2, 7, 11}) {
    for (long long X : {2, 5, 17, 30}) {
      auto expect = farey_oracle(D, X, true);
      std::set<std::string> got;
      uint64_t emitted = 0;
      enumerate_farey(FareyQuery{D, X, true}, [&](const KElem& z) {
        ++emitted;
        CHECK(domain_membership(z.to_point(), Domain::I));
        got.insert(z.to_string());
      });
      CHECK(emitted == got.size());  // no duplicates
      REQUIRE(got == expect);
      CHECK(count_farey(FareyQuery{D, X, true}) == got.size());
    }
  }
}

TEST_CASE("include_zero flag removes exactly the origin") {
  uint64_t with = count_farey(FareyQuery{2, 50, true});
  uint64_t without = count_farey(FareyQuery{2, 50, false});
  CHECK(with == without + 1);
}

TEST_CASE("quadratic growth of the count") {
  double c1 = double(count_farey(FareyQuery{2, 200, true}));
  double c2 = double(count_farey(FareyQuery{2, 400, true}));
  CHECK(c2 / c1 > 3.3);
  CHECK(c2 / c1 < 4.7);
}

TEST_CASE("parallel enumeration matches serial output") {
  FareyQuery q{7, 300, true};
  std::vector<std::string> serial;
  enumerate_farey(q, [&](const KElem& z) { serial.push_back(z.to_string()); });

  std::mutex mu;
  std::vector<std::string> parallel;
  for_each_farey_parallel(q, 4, [&](int, const QuadInt& a, const QuadInt& b) {
    KElem z = KElem::reduce(a, b);
    std::lock_guard lock(mu);
    parallel.push_back(z.to_string());
  });
  std::sort(serial.begin(), serial.end());
  std::sort(parallel.begin(), parallel.end());
  REQUIRE(serial == parallel);
}

TEST_CASE("no duplicates at scale") {
  std::set<std::string> seen;
  uint64_t n = 0;
  enumerate_farey(FareyQuery{2, 300, true}, [&](const KElem& z) {
    ++n;
    CHECK(seen.insert(z.to_string()).second);
  });
  CHECK(n == seen.size());
  CHECK(n > 10000);
}
