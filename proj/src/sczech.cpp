#include "eds/sczech.hpp"

#include <numeric>
#include <stdexcept>

namespace eds {

namespace {

BigRat imd_coords(int D, const BigRat& y) {
  if (D == 2) return 2 * y;
  return y;
}

// The bracket of the continued-fraction formula for a nonempty digit list.
BigRat dtilde_from_digits(int D, std::span<const QuadInt> digits) {
  auto [r1, r2] = reversed_tail_ratios(D, digits);
  const bool odd = digits.size() % 2 == 1;  // sign (-1)^{n+1}
  KElem bracket = odd ? (r1 + r2) : (r1 - r2);
  QuadInt alt = QuadInt::zero(D);
  int sign = 1;
  for (const QuadInt& d : digits) {
    alt = sign > 0 ? alt + d : alt - d;
    sign = -sign;
  }
  return imd(bracket + alt);
}

}  // namespace

BigRat imd(const QuadInt& x) { return imd_coords(x.D(), BigRat(x.v())); }

BigRat imd(const KElem& x) {
  return imd_coords(x.D(), x.to_point().im_scaled());
}

BigRat sczech_tilde(const QuadInt& a, const QuadInt& c) {
  if (c.is_zero()) throw std::invalid_argument("sczech_tilde: c = 0");
  KElem z = KElem::reduce(a, c);
  if (z.is_integer()) return BigRat(0);  // empty residue sum
  CFExpansion e = cf_expand(z);
  return dtilde_from_digits(z.D(), e.digits);
}

BigRat cost_S(const KElem& z) {
  CFExpansion e = cf_expand(z);
  BigRat s(0);
  int sign = 1;
  for (const QuadInt& d : e.digits) {
    if (sign > 0)
      s += imd(d);
    else
      s -= imd(d);
    sign = -sign;
  }
  return s;
}

BigRat reciprocity_defect(const QuadInt& a, const QuadInt& c) {
  if (a.is_zero() || c.is_zero())
    throw std::invalid_argument("reciprocity_defect: zero input");
  if (!euclid_gcd(a, c).is_unit())
    throw std::invalid_argument("reciprocity_defect: inputs not coprime");
  BigRat lhs = sczech_tilde(a, c) + sczech_tilde(c, a);
  KElem cross = KElem::reduce(a, c) + KElem::reduce(c, a) +
                KElem::reduce(QuadInt::one(a.D()), a * c);
  return lhs - imd(cross);
}

SczechSample sczech_sample(const KElem& z) {
  SczechSample s;
  s.z = z;
  s.height_sq = z.height_sq();
  CFExpansion e = cf_expand(z);
  s.ell = static_cast<long long>(e.length());
  BigRat cost(0);
  int sign = 1;
  for (const QuadInt& d : e.digits) {
    if (sign > 0)
      cost += imd(d);
    else
      cost -= imd(d);
    sign = -sign;
  }
  s.S = cost;
  s.Dtilde = e.digits.empty() ? BigRat(0) : dtilde_from_digits(z.D(), e.digits);
  return s;
}

BigRat classical_dedekind(long long h, long long k) {
  if (k < 1) throw std::invalid_argument("classical_dedekind: k must be positive");
  if (std::gcd(h, k) != 1)
    throw std::invalid_argument("classical_dedekind: gcd(h,k) != 1");
  // s(h,k) = sum_l ((l/k))((hl/k)) with ((x)) = x - floor(x) - 1/2 off Z.
  // Accumulate 4k^2 * s as an integer: terms (2l - k)(2m - k) with
  // m = hl mod k, skipping m = 0.
  BigInt acc = 0;
  long long hm = ((h % k) + k) % k;
  long long m = 0;
  for (long long l = 1; l < k; ++l) {
    m += hm;
    if (m >= k) m -= k;
    if (m == 0) continue;
    acc += BigInt(2 * l - k) * BigInt(2 * m - k);
  }
  return BigRat(acc, BigInt(4) * k * k);
}

BigRat classical_dedekind_recursive(long long h, long long k) {
  if (k < 1) throw std::invalid_argument("classical_dedekind_recursive: k must be positive");
  if (std::gcd(h, k) != 1)
    throw std::invalid_argument("classical_dedekind_recursive: gcd(h,k) != 1");
  // Peel with s(h,k) = (h^2 + k^2 + 1)/(12hk) - 1/4 - s(k mod h, h),
  // using s(h+k,k) = s(h,k) and s(-h,k) = -s(h,k).
  BigRat acc(0);
  int outer_sign = 1;
  h = ((h % k) + k) % k;
  while (h > 1) {
    BigRat rec = BigRat(BigInt(h) * h + BigInt(k) * k + 1, BigInt(12) * h * k) - BigRat(1, 4);
    acc += outer_sign > 0 ? rec : -rec;
    outer_sign = -outer_sign;
    long long nk = h;
    h = k % h;
    k = nk;
  }
  if (h == 1) {
    BigRat base = BigRat(BigInt(k) * k + 2, BigInt(12) * k) - BigRat(1, 4);
    acc += outer_sign > 0 ? base : -base;
  }
  return acc;
}

}  // namespace eds
