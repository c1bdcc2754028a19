#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

// Exact arithmetic in the rings of integers of Q(sqrt(-D)), D in {2, 7, 11},
// and in the field itself. Elements are stored in the integral basis
//   D = 2:      u + v*w,  w = sqrt(-2)
//   D = 7, 11:  u + v*w,  w = (1 + sqrt(-D)) / 2
// All predicates on the fundamental domains are decided with integer or
// rational inequalities; no floating point enters this layer.

namespace eds {

using BigInt = boost::multiprecision::cpp_int;
using BigRat = boost::multiprecision::cpp_rational;

enum class BasisKind { rectangular, hexagonal };

struct RingSpec {
  int D;
  BasisKind basis_kind;

  // Only D in {2, 7, 11} is accepted; everything else throws.
  static const RingSpec& get(int D);
  static bool valid(int D) { return D == 2 || D == 7 || D == 11; }
};

class QuadInt {
 public:
  QuadInt() : d_(2), u_(0), v_(0) {}
  QuadInt(int D, BigInt u, BigInt v);
  QuadInt(int D, long long u, long long v) : QuadInt(D, BigInt(u), BigInt(v)) {}

  static QuadInt zero(int D) { return QuadInt(D, 0, 0); }
  static QuadInt one(int D) { return QuadInt(D, 1, 0); }
  static QuadInt omega(int D) { return QuadInt(D, 0, 1); }  // the basis element w

  int D() const { return d_; }
  const BigInt& u() const { return u_; }
  const BigInt& v() const { return v_; }

  bool is_zero() const { return u_ == 0 && v_ == 0; }
  bool is_unit() const;  // norm 1, i.e. +-1 for these rings

  QuadInt operator-() const { return QuadInt(d_, -u_, -v_); }
  QuadInt operator+(const QuadInt& o) const;
  QuadInt operator-(const QuadInt& o) const;
  QuadInt operator*(const QuadInt& o) const;
  QuadInt& operator+=(const QuadInt& o) { return *this = *this + o; }
  QuadInt& operator-=(const QuadInt& o) { return *this = *this - o; }
  QuadInt& operator*=(const QuadInt& o) { return *this = *this * o; }

  bool operator==(const QuadInt& o) const { return d_ == o.d_ && u_ == o.u_ && v_ == o.v_; }
  bool operator!=(const QuadInt& o) const { return !(*this == o); }

  QuadInt conj() const;
  BigInt norm() const;

  // Quotient if o divides *this exactly, nullopt otherwise.
  std::optional<QuadInt> divides_exactly(const QuadInt& o) const;

  // Representative of the unit orbit {+x, -x} with first nonzero coordinate
  // positive; zero maps to zero.
  QuadInt canonical_unit_rep() const;

  // Textual form "u+v*w" (see README for the grammar).
  std::string to_string() const;
  static QuadInt parse(int D, const std::string& text);

 private:
  int d_;
  BigInt u_, v_;
  void check_ring(const QuadInt& o) const;
};

BigInt norm(const QuadInt& x);
QuadInt conj(const QuadInt& x);

// A point of Q(sqrt(-D)) (or of the ambient plane) in exact basis
// coordinates: z = x + y*w. Cartesian parts: Re z and Im z as a rational
// multiple of sqrt(2) (D=2) resp. sqrt(D)/2 (D=7,11).
struct DomainPoint {
  int D;
  BigRat x, y;

  DomainPoint(int D_, BigRat x_, BigRat y_);

  BigRat re() const;         // Re z, exact
  BigRat im_scaled() const;  // Im z / sqrt(2)  (D=2)  or  Im z / (sqrt(D)/2)
};

enum class Domain { I, Itilde };

// Exact membership of z in the closed domain I_D or its half-open version
// Itilde_D (boundary pieces covered by the lattice translates removed).
bool domain_membership(const DomainPoint& z, Domain which);

// The unique alpha with z - alpha in Itilde_D.
QuadInt nearest_integer(const DomainPoint& z);

// Same, for z = w/den given by the integer coordinates (pu, pv) of
// w * conj(den) and n = norm(den) > 0. Integer arithmetic only.
QuadInt nearest_integer_frac(int D, const BigInt& pu, const BigInt& pv, const BigInt& n);

// gcd by the Euclidean division chain; canonical under unit normalization.
// Throws if both arguments are zero.
QuadInt euclid_gcd(QuadInt a, QuadInt b);

// A reduced, canonical element of K = Q(sqrt(-D)).
class KElem {
 public:
  KElem() : num_(QuadInt::zero(2)), den_(QuadInt::one(2)) {}

  // num/den in lowest terms with canonical denominator; den must be nonzero.
  static KElem reduce(const QuadInt& num, const QuadInt& den);
  // Trusted constructor for callers that already guarantee gcd(num, den) is
  // a unit and den is canonical (e.g. the Farey enumerator).
  static KElem from_reduced(QuadInt num, QuadInt den);
  static KElem from_int(const QuadInt& n) { return reduce(n, QuadInt::one(n.D())); }
  static KElem from_point(const DomainPoint& p);

  int D() const { return num_.D(); }
  const QuadInt& num() const { return num_; }
  const QuadInt& den() const { return den_; }
  bool is_zero() const { return num_.is_zero(); }
  bool is_integer() const { return den_.is_unit(); }
  BigInt height_sq() const { return den_.norm(); }

  DomainPoint to_point() const;

  KElem operator-() const;
  KElem operator+(const KElem& o) const;
  KElem operator-(const KElem& o) const;
  KElem operator+(const QuadInt& n) const;
  KElem operator-(const QuadInt& n) const;
  KElem inverse() const;  // throws on zero
  KElem conj() const;

  bool operator==(const KElem& o) const { return num_ == o.num_ && den_ == o.den_; }
  bool operator!=(const KElem& o) const { return !(*this == o); }

  std::string to_string() const;  // "num/den"
  static KElem parse(int D, const std::string& text);

 private:
  QuadInt num_, den_;
};

}  // namespace eds
