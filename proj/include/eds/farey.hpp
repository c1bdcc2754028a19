#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "eds/quad_ring.hpp"

// Enumeration of the Farey sets: all field elements a/b in the closed
// domain I_D with reduced canonical form and 1 <= norm(b) < X, each exactly
// once. Streaming, partitioned by denominator for parallel runs.

namespace eds {

struct FareyQuery {
  int D = 2;
  long long X = 2;           // bound on norm(b), exclusive
  bool include_zero = true;  // keep z = 0 (the b = 1, a = 0 point)
};

// All denominators b with 1 <= norm(b) < X, one per unit orbit, in
// (norm, u, v) lexicographic order.
std::vector<QuadInt> enumerate_denominators(int D, long long X);

// Visit every numerator a coprime to b with a/b in closed I_D;
// a/b is already in lowest terms.
void farey_numerators(const QuadInt& b, const std::function<void(const QuadInt&)>& fn,
                      bool include_zero = true);

// Serial enumeration in deterministic order.
void enumerate_farey(const FareyQuery& q, const std::function<void(const KElem&)>& fn);

// Streaming count, O(1) memory.
uint64_t count_farey(const FareyQuery& q);

// Parallel driver: denominators are dealt round-robin to `threads` workers;
// each worker calls fn(worker_id, a, b) for its share. Aggregation done by
// the caller must be associative and commutative (or merged per worker).
void for_each_farey_parallel(
    const FareyQuery& q, int threads,
    const std::function<void(int, const QuadInt&, const QuadInt&)>& fn);

}  // namespace eds
