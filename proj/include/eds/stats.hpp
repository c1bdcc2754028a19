#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "eds/quad_ring.hpp"

// Distributional analysis of the sum statistics: exact-rational moment
// accumulation, standardization, Kolmogorov-Smirnov distances, empirical
// characteristic functions, Dirichlet coefficients and the classical
// Cauchy-contrast experiment.

namespace eds {

struct Moments {
  double mean = 0, var = 0, skewness = 0, excess_kurtosis = 0, mean_abs = 0;
  uint64_t count = 0;
};

// Exact accumulation of sum x^k, k = 1..4, and sum |x|, bucketed by the
// (canonical) denominator of each rational sample so the final reduction
// runs over few distinct denominators.
class ExactMoments {
 public:
  void add(const BigRat& x);
  void merge(const ExactMoments& o);
  uint64_t count() const { return count_; }
  Moments finalize() const;  // population-normalized central moments

 private:
  struct Bucket {
    BigInt s1, s2, s3, s4, sabs;
    uint64_t n = 0;
  };
  std::map<BigInt, Bucket> buckets_;
  uint64_t count_ = 0;
};

// Streaming double-precision version (long double power sums).
Moments moments(const std::vector<double>& values);

struct Standardized {
  std::vector<double> values;  // mean 0, population variance 1
  double mean = 0, stddev = 0;
};
// Throws std::domain_error on zero variance or count < 2.
Standardized standardize(const std::vector<double>& values);

double gaussian_cdf(double x, double mu = 0, double sigma = 1);
double cauchy_cdf(double x, double x0 = 0, double gamma = 1);

// sup |F_emp - cdf|; sorts a copy of the sample.
double ks_distance(std::vector<double> sample, const std::function<double(double)>& cdf);

// Integer histogram of S values (S is an integer for every D).
struct SHistogram {
  std::map<long long, uint64_t> counts;
  uint64_t total = 0;
  void add(long long s, uint64_t n = 1) {
    counts[s] += n;
    total += n;
  }
  void merge(const SHistogram& o) {
    for (auto& [k, v] : o.counts) counts[k] += v;
    total += o.total;
  }
};

// chi(t) = (1/N) sum e^{itS} on a grid of t values.
std::vector<std::complex<double>> char_fn(const SHistogram& h, const std::vector<double>& tgrid);

// Per-height S histograms: height_sq -> (S -> count).
struct HeightSpectrum {
  std::map<long long, SHistogram> by_height;
  void add(long long h2, long long s) { by_height[h2].add(s); }
  void merge(const HeightSpectrum& o) {
    for (auto& [h, sh] : o.by_height) by_height[h].merge(sh);
  }
};

// a_{n,t} = sum over height^2 = n of e^{itS}.
std::map<long long, std::complex<double>> dirichlet_coeffs(const HeightSpectrum& hs, double t);

struct LinFit {
  double slope = 0, intercept = 0, r2 = 0;
};
LinFit linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Freedman-Diaconis histogram; bin edges are lo + i*width.
struct Histogram {
  double lo = 0, width = 0;
  std::vector<uint64_t> bins;
  uint64_t total = 0;
};
Histogram histogram_fd(std::vector<double> values, size_t max_bins = 100000);

// Classical Dedekind sums over Omega_Q = {h/k in [0,1], k <= Q}:
// y = 2 pi s(h,k) / log Q against the standard Cauchy and against the best
// of a family of Gaussian fits.
struct VardiReport {
  long long Q = 0;
  uint64_t count = 0;
  double ks_cauchy = 0;
  double ks_gauss_best = 0;
  double excess_kurtosis = 0;
  double median = 0;
};
VardiReport vardi_contrast(long long Q);

}  // namespace eds
