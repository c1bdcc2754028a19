#include "eds/hurwitz_cf.hpp"

#include <stdexcept>

namespace eds {

std::pair<QuadInt, KElem> gauss_step(const KElem& z) {
  if (z.is_zero()) throw std::domain_error("gauss_step: z = 0");
  if (!domain_membership(z.to_point(), Domain::I))
    throw std::domain_error("gauss_step: z outside I_D");
  KElem w = z.inverse();
  QuadInt digit = nearest_integer(w.to_point());
  return {digit, w - digit};
}

CFExpansion cf_expand(const KElem& z) {
  // Integer-only iteration on raw (num, den) pairs: the iterates stay
  // reduced automatically since gcd(den - k*num, num) = gcd(num, den).
  const int D = z.D();
  CFExpansion e;
  {
    QuadInt t = z.num() * z.den().conj();
    e.a0 = nearest_integer_frac(D, t.u(), t.v(), z.height_sq());
  }
  QuadInt num = z.num() - e.a0 * z.den();
  QuadInt den = z.den();
  BigInt den_norm = den.norm();
  while (!num.is_zero()) {
    BigInt num_norm = num.norm();
    if (num_norm >= den_norm)
      throw std::logic_error("cf_expand: denominator norm did not decrease");
    // invert: 1/(num/den) = den/num, then subtract the digit
    QuadInt t = den * num.conj();
    QuadInt digit = nearest_integer_frac(D, t.u(), t.v(), num_norm);
    if (digit.norm() < 2)
      throw std::logic_error("cf_expand: digit of norm < 2 (convention drift)");
    QuadInt next_num = den - digit * num;
    den = num;
    den_norm = num_norm;
    num = next_num;
    e.digits.push_back(digit);
  }
  return e;
}

QuadInt continuant(int D, std::span<const QuadInt> a) {
  QuadInt pm2 = QuadInt::one(D);   // P() = 1
  QuadInt pm1 = QuadInt::zero(D);  // sentinel so P(a0) = a0
  bool first = true;
  for (const QuadInt& x : a) {
    if (first) {
      pm1 = x;
      first = false;
      continue;
    }
    QuadInt p = pm1 * x + pm2;
    pm2 = pm1;
    pm1 = p;
  }
  return first ? pm2 : pm1;
}

std::vector<std::pair<QuadInt, QuadInt>> convergents(
    const QuadInt& a0, std::span<const QuadInt> digits) {
  const int D = a0.D();
  std::vector<std::pair<QuadInt, QuadInt>> out;
  out.reserve(digits.size() + 1);
  QuadInt p_prev = QuadInt::one(D), q_prev = QuadInt::zero(D);
  QuadInt p = a0, q = QuadInt::one(D);
  out.emplace_back(p, q);
  for (const QuadInt& d : digits) {
    QuadInt pn = p * d + p_prev;
    QuadInt qn = q * d + q_prev;
    p_prev = p;
    q_prev = q;
    p = pn;
    q = qn;
    out.emplace_back(p, q);
  }
  return out;
}

std::pair<KElem, KElem> reversed_tail_ratios(int D, std::span<const QuadInt> digits) {
  if (digits.empty())
    throw std::invalid_argument("reversed_tail_ratios: empty digit list");
  std::vector<QuadInt> rev(digits.rbegin(), digits.rend());

  QuadInt q_fwd = continuant(D, digits);
  QuadInt q_rev = continuant(D, rev);
  if (q_fwd != q_rev)
    throw std::logic_error("reversed_tail_ratios: palindrome identity violated");
  if (q_fwd.is_zero())
    throw std::logic_error("reversed_tail_ratios: vanishing continuant");

  std::vector<QuadInt> with0;
  with0.reserve(digits.size() + 1);
  with0.push_back(QuadInt::zero(D));
  with0.insert(with0.end(), digits.begin(), digits.end());
  QuadInt p_fwd = continuant(D, with0);

  with0.resize(1);
  with0.insert(with0.end(), rev.begin(), rev.end());
  QuadInt p_rev = continuant(D, with0);

  return {KElem::reduce(p_fwd, q_fwd), KElem::reduce(p_rev, q_rev)};
}

}  // namespace eds
