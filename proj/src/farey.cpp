#include "eds/farey.hpp"

#include <algorithm>
#include <thread>

namespace eds {

namespace {

BigInt isqrt(const BigInt& n) {
  if (n < 0) throw std::invalid_argument("isqrt of negative");
  return boost::multiprecision::sqrt(n);
}

// Exact membership of a/b in closed I_D via the integer coordinates of
// a * conj(b); avoids building rationals in the enumeration loop.
bool quotient_in_closed_domain(const QuadInt& a, const QuadInt& b, const BigInt& nb) {
  QuadInt t = a * b.conj();
  const BigInt& p = t.u();
  const BigInt& q = t.v();
  if (a.D() == 2) {
    // |p/nb| <= 1/2 and |q/nb| <= 1/2
    return 2 * abs(p) <= nb && 2 * abs(q) <= nb;
  }
  const int D = a.D();
  BigInt f1 = 2 * p + q;
  BigInt f2 = 4 * p + 2 * (D + 1) * q;
  BigInt f3 = 4 * p - 2 * (D - 1) * q;
  BigInt c2 = (D + 1) * nb;
  return abs(f1) <= nb && abs(f2) <= c2 && abs(f3) <= c2;
}

}  // namespace

std::vector<QuadInt> enumerate_denominators(int D, long long X) {
  RingSpec::get(D);
  if (X < 1) throw std::invalid_argument("enumerate_denominators: X must be >= 1");
  std::vector<QuadInt> out;
  const BigInt bound = X;  // norm < X
  if (D == 2) {
    BigInt umax = isqrt(bound);
    for (BigInt u = 0; u <= umax; ++u) {
      BigInt rem = bound - u * u;
      BigInt vmax = isqrt(rem / 2);
      for (BigInt v = -vmax; v <= vmax; ++v) {
        if (u == 0 && v <= 0) continue;  // canonical orbit representative
        QuadInt x(D, u, v);
        if (x.norm() < bound) out.push_back(x);
      }
    }
  } else {
    // norm = ((2u+v)^2 + D v^2) / 4 < X
    BigInt vmax = isqrt(4 * bound / D) + 1;
    for (BigInt v = -vmax; v <= vmax; ++v) {
      BigInt rem = 4 * bound - D * v * v;
      if (rem <= 0) continue;
      BigInt smax = isqrt(rem);  // |2u+v| <= smax
      BigInt ulo = (-smax - v - 1) / 2 - 1, uhi = (smax - v) / 2 + 1;
      for (BigInt u = ulo; u <= uhi; ++u) {
        if (!(u > 0 || (u == 0 && v > 0))) continue;
        QuadInt x(D, u, v);
        BigInt n = x.norm();
        if (n >= 1 && n < bound) out.push_back(x);
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const QuadInt& a, const QuadInt& b) {
    BigInt na = a.norm(), nb = b.norm();
    if (na != nb) return na < nb;
    if (a.u() != b.u()) return a.u() < b.u();
    return a.v() < b.v();
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void farey_numerators(const QuadInt& b, const std::function<void(const QuadInt&)>& fn,
                      bool include_zero) {
  const int D = b.D();
  const BigInt nb = b.norm();
  // Bounding box from |a|^2 <= norm(b) * R_D^2 with
  // R_2^2 = 3/4, R_7^2 = 4/7, R_11^2 = 9/11.
  BigInt na_bound;  // floor(norm(b) * R_D^2)
  switch (D) {
    case 2: na_bound = 3 * nb / 4; break;
    case 7: na_bound = 4 * nb / 7; break;
    default: na_bound = 9 * nb / 11; break;
  }
  auto visit = [&](const QuadInt& a) {
    if (a.is_zero()) {
      if (include_zero && b.is_unit()) fn(a);
      return;
    }
    if (!quotient_in_closed_domain(a, b, nb)) return;
    if (!euclid_gcd(a, b).is_unit()) return;
    fn(a);
  };
  if (D == 2) {
    BigInt umax = isqrt(na_bound);
    BigInt vmax = isqrt(na_bound / 2);
    for (BigInt v = -vmax; v <= vmax; ++v)
      for (BigInt u = -umax; u <= umax; ++u) visit(QuadInt(D, u, v));
  } else {
    BigInt vmax = isqrt(4 * na_bound / D) + 1;
    for (BigInt v = -vmax; v <= vmax; ++v) {
      BigInt rem = 4 * na_bound - D * v * v;
      if (rem < 0) continue;
      BigInt smax = isqrt(rem);
      BigInt ulo = (-smax - v) / 2 - 1, uhi = (smax - v) / 2 + 1;
      for (BigInt u = ulo; u <= uhi; ++u) visit(QuadInt(D, u, v));
    }
  }
}

void enumerate_farey(const FareyQuery& q, const std::function<void(const KElem&)>& fn) {
  for (const QuadInt& b : enumerate_denominators(q.D, q.X)) {
    farey_numerators(
        b,
        [&](const QuadInt& a) { fn(KElem::reduce(a, b)); },
        q.include_zero);
  }
}

uint64_t count_farey(const FareyQuery& q) {
  uint64_t n = 0;
  for (const QuadInt& b : enumerate_denominators(q.D, q.X))
    farey_numerators(b, [&](const QuadInt&) { ++n; }, q.include_zero);
  return n;
}

void for_each_farey_parallel(
    const FareyQuery& q, int threads,
    const std::function<void(int, const QuadInt&, const QuadInt&)>& fn) {
  auto dens = enumerate_denominators(q.D, q.X);
  if (threads < 1) threads = 1;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&, w]() {
      for (size_t i = w; i < dens.size(); i += threads)
        farey_numerators(dens[i], [&](const QuadInt& a) { fn(w, a, dens[i]); },
                         q.include_zero);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace eds
