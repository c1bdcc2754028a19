#include "eds/quad_ring.hpp"

#include <array>
#include <sstream>

namespace eds {

namespace {

const RingSpec kRing2{2, BasisKind::rectangular};
const RingSpec kRing7{7, BasisKind::hexagonal};
const RingSpec kRing11{11, BasisKind::hexagonal};

BigInt floor_div(const BigInt& p, const BigInt& q) {
  // floor(p/q) for q > 0
  BigInt r = p / q;
  if (p % q != 0 && p < 0) --r;
  return r;
}

}  // namespace

const RingSpec& RingSpec::get(int D) {
  switch (D) {
    case 2: return kRing2;
    case 7: return kRing7;
    case 11: return kRing11;
    default:
      throw std::invalid_argument("RingSpec: D must be one of {2, 7, 11}, got " +
                                  std::to_string(D));
  }
}

QuadInt::QuadInt(int D, BigInt u, BigInt v) : d_(D), u_(std::move(u)), v_(std::move(v)) {
  RingSpec::get(D);
}

void QuadInt::check_ring(const QuadInt& o) const {
  if (d_ != o.d_)
    throw std::invalid_argument("QuadInt: ring mismatch (D=" + std::to_string(d_) +
                                " vs D=" + std::to_string(o.d_) + ")");
}

bool QuadInt::is_unit() const { return norm() == 1; }

QuadInt QuadInt::operator+(const QuadInt& o) const {
  check_ring(o);
  return QuadInt(d_, u_ + o.u_, v_ + o.v_);
}

QuadInt QuadInt::operator-(const QuadInt& o) const {
  check_ring(o);
  return QuadInt(d_, u_ - o.u_, v_ - o.v_);
}

QuadInt QuadInt::operator*(const QuadInt& o) const {
  check_ring(o);
  if (d_ == 2) {
    // w^2 = -2
    return QuadInt(d_, u_ * o.u_ - 2 * (v_ * o.v_), u_ * o.v_ + v_ * o.u_);
  }
  // w^2 = w - c with c = (D+1)/4
  const int c = (d_ + 1) / 4;
  BigInt vv = v_ * o.v_;
  return QuadInt(d_, u_ * o.u_ - c * vv, u_ * o.v_ + v_ * o.u_ + vv);
}

QuadInt QuadInt::conj() const {
  if (d_ == 2) return QuadInt(d_, u_, -v_);
  // conj(w) = 1 - w
  return QuadInt(d_, u_ + v_, -v_);
}

BigInt QuadInt::norm() const {
  if (d_ == 2) return u_ * u_ + 2 * (v_ * v_);
  const int c = (d_ + 1) / 4;
  return u_ * u_ + u_ * v_ + c * (v_ * v_);
}

std::optional<QuadInt> QuadInt::divides_exactly(const QuadInt& o) const {
  check_ring(o);
  if (o.is_zero()) {
    if (is_zero()) return QuadInt::zero(d_);
    return std::nullopt;
  }
  QuadInt t = *this * o.conj();
  BigInt n = o.norm();
  if (t.u_ % n != 0 || t.v_ % n != 0) return std::nullopt;
  return QuadInt(d_, t.u_ / n, t.v_ / n);
}

QuadInt QuadInt::canonical_unit_rep() const {
  if (u_ > 0 || (u_ == 0 && v_ > 0)) return *this;
  if (is_zero()) return *this;
  return -*this;
}

std::string QuadInt::to_string() const {
  std::ostringstream os;
  if (v_ == 0) {
    os << u_;
  } else if (v_ > 0) {
    os << u_ << "+" << v_ << "*w";
  } else {
    os << u_ << "-" << -v_ << "*w";
  }
  return os.str();
}

QuadInt QuadInt::parse(int D, const std::string& text) {
  RingSpec::get(D);
  std::string s;
  for (char c : text)
    if (!isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw std::invalid_argument("QuadInt::parse: empty input");

  // Split into at most two signed terms; a term is "<int>", "<int>*w",
  // "<int>w", "w" or "-w".
  std::vector<std::string> terms;
  size_t start = 0;
  for (size_t i = 1; i < s.size(); ++i) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != '+' && s[i - 1] != '-' &&
        s[i - 1] != '*') {
      terms.push_back(s.substr(start, i - start));
      start = i;
    }
  }
  terms.push_back(s.substr(start));
  if (terms.size() > 2) throw std::invalid_argument("QuadInt::parse: too many terms in '" + text + "'");

  BigInt u = 0, v = 0;
  for (auto& term : terms) {
    bool has_w = !term.empty() && term.back() == 'w';
    std::string body = term;
    if (has_w) {
      body.pop_back();
      if (!body.empty() && body.back() == '*') body.pop_back();
      if (body.empty() || body == "+") body = "1";
      else if (body == "-") body = "-1";
    }
    if (!body.empty() && body.front() == '+') body.erase(body.begin());
    if (body.empty()) throw std::invalid_argument("QuadInt::parse: bad term '" + term + "'");
    BigInt val;
    try {
      val = BigInt(body);
    } catch (...) {
      throw std::invalid_argument("QuadInt::parse: bad term '" + term + "'");
    }
    (has_w ? v : u) += val;
  }
  return QuadInt(D, u, v);
}

BigInt norm(const QuadInt& x) { return x.norm(); }
QuadInt conj(const QuadInt& x) { return x.conj(); }

DomainPoint::DomainPoint(int D_, BigRat x_, BigRat y_)
    : D(D_), x(std::move(x_)), y(std::move(y_)) {
  RingSpec::get(D_);
}

BigRat DomainPoint::re() const {
  if (D == 2) return x;
  return x + y / 2;
}

BigRat DomainPoint::im_scaled() const { return y; }

bool domain_membership(const DomainPoint& z, Domain which) {
  const bool open = (which == Domain::Itilde);
  if (z.D == 2) {
    // I_2: |x| <= 1/2, |Im z| <= 1/sqrt(2), i.e. |y| <= 1/2 in basis units.
    // Itilde_2 removes the edges covered by I_2 + 1 and I_2 + w.
    const BigRat h(1, 2);
    if (z.x < -h || z.y < -h) return false;
    if (open) return z.x < h && z.y < h;
    return z.x <= h && z.y <= h;
  }
  // Hexagon, z = p + q*w: the three inequality families, cleared of radicals:
  //   |2p + q|            <= 1        (|Re z| <= 1/2)
  //   |4p + 2(D+1) q|     <= D+1      (|Im z + Re z / sqrt(D)| <= (D+1)/(4 sqrt D))
  //   |4p - 2(D-1) q|     <= D+1      (|Im z - Re z / sqrt(D)| <= (D+1)/(4 sqrt D))
  // Itilde removes the edges covered by translates by 1, w and 1 - w:
  // these are f1 = +1, f2 = +(D+1), f3 = +(D+1).
  const int D = z.D;
  BigRat f1 = 2 * z.x + z.y;
  BigRat f2 = 4 * z.x + 2 * (D + 1) * z.y;
  BigRat f3 = 4 * z.x - 2 * (D - 1) * z.y;
  const BigRat c1(1), c2(D + 1);
  if (f1 < -c1 || f2 < -c2 || f3 < -c2) return false;
  if (open) return f1 < c1 && f2 < c2 && f3 < c2;
  return f1 <= c1 && f2 <= c2 && f3 <= c2;
}

QuadInt nearest_integer_frac(int D, const BigInt& pu, const BigInt& pv, const BigInt& n) {
  if (D == 2) {
    // Itilde_2 is the half-open box [-1/2,1/2) x [-1/2,1/2) in basis
    // coordinates, so rounding is coordinate-wise: floor(p/n + 1/2).
    return QuadInt(2, floor_div(2 * pu + n, 2 * n), floor_div(2 * pv + n, 2 * n));
  }
  // Hexagonal case: test the <= 9 lattice points around the coordinate-wise
  // rounding against the exact Itilde predicate. Exactly one must match.
  BigInt m0 = floor_div(2 * pu + n, 2 * n);
  BigInt n0 = floor_div(2 * pv + n, 2 * n);
  const BigInt c2 = (D + 1) * n;
  std::optional<QuadInt> hit;
  for (int dm = -1; dm <= 1; ++dm) {
    for (int dn = -1; dn <= 1; ++dn) {
      BigInt m = m0 + dm, k = n0 + dn;
      BigInt rp = pu - m * n, rq = pv - k * n;
      BigInt f1 = 2 * rp + rq;
      BigInt f2 = 4 * rp + 2 * (D + 1) * rq;
      BigInt f3 = 4 * rp - 2 * (D - 1) * rq;
      if (f1 >= -n && f1 < n && f2 >= -c2 && f2 < c2 && f3 >= -c2 && f3 < c2) {
        if (hit)
          throw std::logic_error("nearest_integer: non-unique representative");
        hit = QuadInt(D, m, k);
      }
    }
  }
  if (!hit) throw std::logic_error("nearest_integer: no representative found");
  return *hit;
}

QuadInt nearest_integer(const DomainPoint& z) {
  BigInt qx = boost::multiprecision::denominator(z.x);
  BigInt qy = boost::multiprecision::denominator(z.y);
  BigInt g = boost::multiprecision::gcd(qx, qy);
  BigInt l = qx / g * qy;
  return nearest_integer_frac(z.D, boost::multiprecision::numerator(z.x) * (l / qx),
                              boost::multiprecision::numerator(z.y) * (l / qy), l);
}

QuadInt euclid_gcd(QuadInt a, QuadInt b) {
  if (a.is_zero() && b.is_zero())
    throw std::invalid_argument("euclid_gcd: both arguments zero");
  if (a.D() != b.D())
    throw std::invalid_argument("euclid_gcd: ring mismatch");
  // Division chain with nearest-integer quotients; remainder norms decrease
  // strictly since the residual lies in Itilde_D where |z| < 1.
  while (!b.is_zero()) {
    BigInt n = b.norm();
    QuadInt t = a * b.conj();
    QuadInt k = nearest_integer_frac(a.D(), t.u(), t.v(), n);
    QuadInt r = a - k * b;
    a = b;
    b = r;
  }
  return a.canonical_unit_rep();
}

KElem KElem::reduce(const QuadInt& num, const QuadInt& den) {
  if (den.is_zero()) throw std::invalid_argument("KElem: zero denominator");
  KElem r;
  if (num.is_zero()) {
    r.num_ = QuadInt::zero(num.D());
    r.den_ = QuadInt::one(num.D());
    return r;
  }
  QuadInt g = euclid_gcd(num, den);
  QuadInt n = *num.divides_exactly(g);
  QuadInt d = *den.divides_exactly(g);
  if (!(d.u() > 0 || (d.u() == 0 && d.v() > 0))) {
    n = -n;
    d = -d;
  }
  r.num_ = n;
  r.den_ = d;
  return r;
}

KElem KElem::from_reduced(QuadInt num, QuadInt den) {
  if (den.is_zero()) throw std::invalid_argument("KElem: zero denominator");
  if (num.is_zero()) {
    KElem r;
    r.num_ = QuadInt::zero(num.D());
    r.den_ = QuadInt::one(num.D());
    return r;
  }
  KElem r;
  r.num_ = std::move(num);
  r.den_ = std::move(den);
  return r;
}

KElem KElem::from_point(const DomainPoint& p) {
  BigInt qx = boost::multiprecision::denominator(p.x);
  BigInt qy = boost::multiprecision::denominator(p.y);
  BigInt g = boost::multiprecision::gcd(qx, qy);
  BigInt l = qx / g * qy;
  QuadInt num(p.D, boost::multiprecision::numerator(p.x) * (l / qx),
              boost::multiprecision::numerator(p.y) * (l / qy));
  QuadInt den(p.D, l, BigInt(0));
  return reduce(num, den);
}

DomainPoint KElem::to_point() const {
  QuadInt t = num_ * den_.conj();
  BigInt n = den_.norm();
  return DomainPoint(D(), BigRat(t.u(), n), BigRat(t.v(), n));
}

KElem KElem::operator-() const {
  KElem r;
  r.num_ = -num_;
  r.den_ = den_;
  return r;
}

KElem KElem::operator+(const KElem& o) const {
  return reduce(num_ * o.den_ + o.num_ * den_, den_ * o.den_);
}

KElem KElem::operator-(const KElem& o) const {
  return reduce(num_ * o.den_ - o.num_ * den_, den_ * o.den_);
}

KElem KElem::operator+(const QuadInt& n) const {
  KElem r;
  r.num_ = num_ + n * den_;
  r.den_ = den_;
  return r;
}

KElem KElem::operator-(const QuadInt& n) const { return *this + (-n); }

KElem KElem::inverse() const {
  if (is_zero()) throw std::domain_error("KElem: inverse of zero");
  QuadInt n = den_, d = num_;
  if (!(d.u() > 0 || (d.u() == 0 && d.v() > 0))) {
    n = -n;
    d = -d;
  }
  KElem r;
  r.num_ = n;
  r.den_ = d;
  return r;
}

KElem KElem::conj() const { return reduce(num_.conj(), den_.conj()); }

std::string KElem::to_string() const {
  return num_.to_string() + "/" + den_.to_string();
}

KElem KElem::parse(int D, const std::string& text) {
  auto slash = text.find('/');
  if (slash == std::string::npos)
    return from_int(QuadInt::parse(D, text));
  return reduce(QuadInt::parse(D, text.substr(0, slash)),
                QuadInt::parse(D, text.substr(slash + 1)));
}

}  // namespace eds
