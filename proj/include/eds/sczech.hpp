#pragma once

#include "eds/hurwitz_cf.hpp"
#include "eds/quad_ring.hpp"

// Exact evaluation of normalized elliptic Dedekind sums over Q(sqrt(-D)),
// the alternating digit cost S, reciprocity defects, and the classical
// rational Dedekind sum for contrast experiments.

namespace eds {

// imd(x) = (2/sqrt(D)) * Im(x), always rational:
// 2*v for x = u + v*sqrt(-2), and v for x = u + v*omega.
BigRat imd(const QuadInt& x);
BigRat imd(const KElem& x);

// Normalized elliptic sum of a/c, evaluated through the continued-fraction
// formula: imd of
//   P(0,a_1..a_n)/P(a_1..a_n) + (-1)^{n+1} P(0,a_n..a_1)/P(a_n..a_1)
//   + a_1 - a_2 + ... + (-1)^{n+1} a_n.
// Zero when c is a unit. Throws on c = 0.
BigRat sczech_tilde(const QuadInt& a, const QuadInt& c);

// S(z) = sum_j (-1)^{j+1} imd(alpha_j) over the digits of z. Even integer
// for D = 2, integer for D = 7, 11 (returned as an exact rational).
BigRat cost_S(const KElem& z);

// sczech_tilde(a,c) + sczech_tilde(c,a) - imd(a/c + c/a + 1/(ac));
// identically zero for coprime nonzero a, c.
BigRat reciprocity_defect(const QuadInt& a, const QuadInt& c);

// Everything the distribution experiments need from one point, computed
// with a single expansion.
struct SczechSample {
  KElem z;
  BigInt height_sq;
  long long ell = 0;
  BigRat S;
  BigRat Dtilde;
};
SczechSample sczech_sample(const KElem& z);

// Classical Dedekind sum s(h,k) as the sawtooth sum, O(k) time.
// Requires gcd(h,k) = 1, k >= 1.
BigRat classical_dedekind(long long h, long long k);

// Same value through the reciprocity-based Euclidean recursion, O(log k).
BigRat classical_dedekind_recursive(long long h, long long k);

}  // namespace eds
