#pragma once

#include <span>
#include <utility>
#include <vector>

#include "eds/quad_ring.hpp"

// The Hurwitz continued-fraction algorithm on exact field elements:
// digit extraction by the complex Gauss map, convergents through the
// continuant recursion, and the structural identities used downstream.

namespace eds {

// a0 is the lattice part (z - a0 lies in Itilde_D); the digits are the
// partial quotients of the remaining point. Every digit has norm >= 2.
struct CFExpansion {
  QuadInt a0;
  std::vector<QuadInt> digits;

  size_t length() const { return digits.size(); }
};

// One application of the Hurwitz map to z in I_D \ {0}:
// digit = [1/z], next = 1/z - digit. The denominator norm of next is
// strictly smaller than that of z.
std::pair<QuadInt, KElem> gauss_step(const KElem& z);

// Full terminating expansion; total on K (a0 absorbs points outside I_D).
CFExpansion cf_expand(const KElem& z);

// Continuant P(a_0, ..., a_n): P() = 1, P(a_0) = a_0,
// P(a_0..a_m) = P(a_0..a_{m-1}) a_m + P(a_0..a_{m-2}).
QuadInt continuant(int D, std::span<const QuadInt> a);

// Convergents (p_n, q_n) for n = 0..len(digits), where
// p_n = P(a0, d_1..d_n) and q_n = P(d_1..d_n).
std::vector<std::pair<QuadInt, QuadInt>> convergents(
    const QuadInt& a0, std::span<const QuadInt> digits);

// The two ratio terms P(0,a_1..a_n)/P(a_1..a_n) and P(0,a_n..a_1)/P(a_n..a_1)
// as exact field elements; checks the palindrome identity
// P(a_1..a_n) = P(a_n..a_1) along the way. Requires a nonempty digit list.
std::pair<KElem, KElem> reversed_tail_ratios(int D, std::span<const QuadInt> digits);

}  // namespace eds
