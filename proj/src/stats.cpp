#include "eds/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "eds/sczech.hpp"

namespace eds {

namespace {
constexpr double kPi = std::numbers::pi;
}

void ExactMoments::add(const BigRat& x) {
  BigInt p = boost::multiprecision::numerator(x);
  BigInt q = boost::multiprecision::denominator(x);
  Bucket& b = buckets_[q];
  BigInt p2 = p * p;
  b.s1 += p;
  b.s2 += p2;
  b.s3 += p2 * p;
  b.s4 += p2 * p2;
  b.sabs += abs(p);
  ++b.n;
  ++count_;
}

void ExactMoments::merge(const ExactMoments& o) {
  for (auto& [q, ob] : o.buckets_) {
    Bucket& b = buckets_[q];
    b.s1 += ob.s1;
    b.s2 += ob.s2;
    b.s3 += ob.s3;
    b.s4 += ob.s4;
    b.sabs += ob.sabs;
    b.n += ob.n;
  }
  count_ += o.count_;
}

Moments ExactMoments::finalize() const {
  Moments m;
  m.count = count_;
  if (count_ == 0) return m;
  // common denominator over all buckets
  BigInt L = 1;
  for (auto& [q, b] : buckets_) L = boost::multiprecision::lcm(L, q);
  BigInt S1 = 0, S2 = 0, S3 = 0, S4 = 0, SA = 0;
  for (auto& [q, b] : buckets_) {
    BigInt f = L / q;
    BigInt f2 = f * f;
    S1 += b.s1 * f;
    S2 += b.s2 * f2;
    S3 += b.s3 * f2 * f;
    S4 += b.s4 * f2 * f2;
    SA += b.sabs * f;
  }
  const BigInt N(count_);
  BigRat mu(S1, L * N);
  BigRat m2 = BigRat(S2, L * L * N) - mu * mu;
  BigRat m3 = BigRat(S3, L * L * L * N) - 3 * mu * BigRat(S2, L * L * N) + 2 * mu * mu * mu;
  BigRat m4 = BigRat(S4, L * L * L * L * N) - 4 * mu * BigRat(S3, L * L * L * N) +
              6 * mu * mu * BigRat(S2, L * L * N) - 3 * mu * mu * mu * mu;
  m.mean = static_cast<double>(mu);
  m.var = static_cast<double>(m2);
  m.mean_abs = static_cast<double>(BigRat(SA, L * N));
  double sd = std::sqrt(m.var);
  m.skewness = sd > 0 ? static_cast<double>(m3) / (sd * sd * sd) : 0.0;
  m.excess_kurtosis = m.var > 0 ? static_cast<double>(m4) / (m.var * m.var) - 3.0 : 0.0;
  return m;
}

Moments moments(const std::vector<double>& values) {
  Moments m;
  m.count = values.size();
  if (values.empty()) return m;
  long double s1 = 0, s2 = 0, s3 = 0, s4 = 0, sa = 0;
  for (double x : values) {
    long double lx = x;
    long double x2 = lx * lx;
    s1 += lx;
    s2 += x2;
    s3 += x2 * lx;
    s4 += x2 * x2;
    sa += std::abs(lx);
  }
  long double n = values.size();
  long double mu = s1 / n;
  long double m2 = s2 / n - mu * mu;
  long double m3 = s3 / n - 3 * mu * (s2 / n) + 2 * mu * mu * mu;
  long double m4 = s4 / n - 4 * mu * (s3 / n) + 6 * mu * mu * (s2 / n) - 3 * mu * mu * mu * mu;
  m.mean = static_cast<double>(mu);
  m.var = static_cast<double>(m2);
  m.mean_abs = static_cast<double>(sa / n);
  double sd = std::sqrt(m.var);
  m.skewness = sd > 0 ? static_cast<double>(m3 / (m2 * std::sqrt(m2))) : 0.0;
  m.excess_kurtosis = m.var > 0 ? static_cast<double>(m4 / (m2 * m2)) - 3.0 : 0.0;
  return m;
}

Standardized standardize(const std::vector<double>& values) {
  if (values.size() < 2) throw std::domain_error("standardize: need at least 2 samples");
  Moments m = moments(values);
  if (m.var <= 0) throw std::domain_error("standardize: zero variance");
  Standardized out;
  out.mean = m.mean;
  out.stddev = std::sqrt(m.var);
  out.values.resize(values.size());
  for (size_t i = 0; i < values.size(); ++i)
    out.values[i] = (values[i] - out.mean) / out.stddev;
  return out;
}

double gaussian_cdf(double x, double mu, double sigma) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

double cauchy_cdf(double x, double x0, double gamma) {
  return 0.5 + std::atan((x - x0) / gamma) / kPi;
}

double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0;
  for (size_t i = 0; i < sample.size(); ++i) {
    double f = cdf(sample[i]);
    d = std::max(d, std::abs(f - (i + 1) / n));
    d = std::max(d, std::abs(f - i / n));
  }
  return d;
}

std::vector<std::complex<double>> char_fn(const SHistogram& h,
                                          const std::vector<double>& tgrid) {
  std::vector<std::complex<double>> out(tgrid.size());
  for (size_t i = 0; i < tgrid.size(); ++i) {
    std::complex<double> acc = 0;
    for (auto& [s, c] : h.counts) acc += double(c) * std::polar(1.0, tgrid[i] * double(s));
    out[i] = h.total ? acc / double(h.total) : 0.0;
  }
  return out;
}

std::map<long long, std::complex<double>> dirichlet_coeffs(const HeightSpectrum& hs, double t) {
  std::map<long long, std::complex<double>> out;
  for (auto& [h2, sh] : hs.by_height) {
    std::complex<double> acc = 0;
    for (auto& [s, c] : sh.counts) acc += double(c) * std::polar(1.0, t * double(s));
    out[h2] = acc;
  }
  return out;
}

LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("linear_fit: need matching samples, >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  double vx = sxx - sx * sx / n;
  double vy = syy - sy * sy / n;
  double cxy = sxy - sx * sy / n;
  LinFit f;
  f.slope = cxy / vx;
  f.intercept = (sy - f.slope * sx) / n;
  f.r2 = vy > 0 ? (cxy * cxy) / (vx * vy) : 1.0;
  return f;
}

Histogram histogram_fd(std::vector<double> values, size_t max_bins) {
  Histogram h;
  if (values.empty()) return h;
  std::sort(values.begin(), values.end());
  h.total = values.size();
  double q1 = values[values.size() / 4];
  double q3 = values[(values.size() * 3) / 4];
  double iqr = q3 - q1;
  double width = 2.0 * iqr / std::cbrt(double(values.size()));
  if (width <= 0) width = 1.0;
  double lo = values.front(), hi = values.back();
  size_t nbins = std::max<size_t>(1, static_cast<size_t>(std::ceil((hi - lo) / width)));
  nbins = std::min<size_t>(nbins, max_bins);
  h.lo = lo;
  h.width = (hi - lo) / double(nbins);
  if (h.width <= 0) h.width = 1.0;
  h.bins.assign(nbins, 0);
  for (double v : values) {
    size_t b = std::min(nbins - 1, static_cast<size_t>((v - lo) / h.width));
    ++h.bins[b];
  }
  return h;
}

VardiReport vardi_contrast(long long Q) {
  if (Q < 2 || Q > 5000) throw std::invalid_argument("vardi_contrast: Q must be in [2, 5000]");
  VardiReport rep;
  rep.Q = Q;
  std::vector<double> y;
  const double logQ = std::log(double(Q));
  for (long long k = 1; k <= Q; ++k) {
    for (long long h = 0; h <= k; ++h) {
      if (std::gcd(h, k) != 1) continue;
      if (k == 1 && h > 1) continue;
      double s = static_cast<double>(classical_dedekind_recursive(h, k));
      y.push_back(2.0 * kPi * s / logQ);
    }
  }
  rep.count = y.size();
  rep.ks_cauchy = ks_distance(y, [](double x) { return cauchy_cdf(x); });

  Moments m = moments(y);
  rep.excess_kurtosis = m.excess_kurtosis;
  std::vector<double> sorted = y;
  std::sort(sorted.begin(), sorted.end());
  rep.median = sorted[sorted.size() / 2];

  // best Gaussian over a location/scale grid: moment fit, robust fit, and
  // scale multiples around each
  double mad = 0;
  {
    std::vector<double> dev(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i) dev[i] = std::abs(sorted[i] - rep.median);
    std::nth_element(dev.begin(), dev.begin() + dev.size() / 2, dev.end());
    mad = dev[dev.size() / 2];
  }
  double best = 1e300;
  std::vector<double> mus{m.mean, rep.median};
  std::vector<double> sigmas;
  double s_mom = std::sqrt(std::max(m.var, 1e-12));
  double s_rob = 1.4826 * std::max(mad, 1e-12);
  for (double base : {s_mom, s_rob})
    for (double f : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0}) sigmas.push_back(base * f);
  for (double mu : mus)
    for (double sg : sigmas)
      best = std::min(best, ks_distance(y, [mu, sg](double x) { return gaussian_cdf(x, mu, sg); }));
  rep.ks_gauss_best = best;
  return rep;
}

}  // namespace eds
