#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <vector>

#include "eds/quad_ring.hpp"

// Numerical ergodic-theory engine for the system (I_D, G): domain geometry,
// branch-image volumes, level-set coefficient sums, Ulam discretization of
// the (possibly twisted) transfer operator, its leading eigenvalue and
// invariant density, and the implicit root s0(t).

namespace eds {

struct NonConvergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// (psi_R, psi_I) of z in I_D \ {0}: psi_R = Re [1/z], psi_I the integer
// imaginary level of the digit [1/z].
struct PsiLevels {
  BigRat psi_R;
  BigInt psi_I;
};
PsiLevels psi_levels(const DomainPoint& z);

// ---------------------------------------------------------------- geometry

struct DomainGeom {
  int D;
  double xmax, ymax;  // bounding box [-xmax,xmax] x [-ymax,ymax], Cartesian
  double area;        // sqrt(2), sqrt(7)/2, sqrt(11)/2

  bool contains(double x, double y) const;
  static DomainGeom get(int D);
};

// Floating-point lattice rounding and one Gauss-map step.
struct LatticeRounder {
  int D;
  double im_unit;  // sqrt(2) for D=2, sqrt(D)/2 otherwise

  explicit LatticeRounder(int D_);
  // digit [x + iy] in basis coordinates
  void round(double x, double y, long long& u, long long& v) const;
  std::complex<double> embed(long long u, long long v) const;
  double norm(long long u, long long v) const;
  // (2/sqrt(D)) Im(u + v*w): 2v for D=2, v otherwise
  long long imd_int(long long u, long long v) const { return D == 2 ? 2 * v : v; }
};

struct StepResult {
  std::complex<double> next;
  long long du, dv;  // digit coordinates
};
StepResult gauss_step_f(const LatticeRounder& r, std::complex<double> z);
StepResult gauss_step_f(int D, std::complex<double> z);

// -------------------------------------------------------------- quadrature

// integral over I_D of |z + alpha|^{-4} dx dy
struct BranchVolume {
  double value;
  double rel_err;  // achieved Richardson estimate
};
BranchVolume branch_image_volume(int D, std::complex<double> alpha, double target = 1e-9);
BranchVolume branch_image_volume(const QuadInt& alpha, double target = 1e-9);

// --------------------------------------------------- level-set coefficients

// D = 2: sum over |r| <= R of (r^2 + 2n^2)^{-2} against pi/(4 sqrt2 n^3).
// D = 7, 11: the two split sums (|2r+n| >= nD resp. <= nD, ties going to
// the inner sum) against the closed forms
//   (4 pi - 8 atan sqrt(D))/D^{3/2} - 8/(D(D+1))   and
//   8/(D(D+1)) + 8 atan(sqrt(D))/D^{3/2},
// both scaled by n^{-3}.
struct LevelSumResult {
  double sum = 0;          // full truncated sum
  double comparator = 0;   // closed form / n^3 (total)
  double split_outer = 0, split_inner = 0;
  double coeff_outer = 0, coeff_inner = 0;  // closed-form coefficients
  double abs_dev_scaled = 0;  // max over splits of |n^3 * split - coeff|
  double rel_dev = 0;         // |sum - comparator| / comparator
};
LevelSumResult level_sum(int D, long long n, long long R);

// ------------------------------------------------------------------- Ulam

struct UlamOptions {
  int grid = 128;
  double cutoff = 400;       // digits with norm(alpha) > cutoff are escape
  int samples_per_cell = 600;
  uint64_t seed = 1;
  int threads = 1;
};

struct UlamGrid {
  int D = 2;
  int g = 0;
  DomainGeom geom{};
  double dx = 0, dy = 0;
  std::vector<int32_t> cell_of_box;   // g*g -> active cell index or -1
  std::vector<int32_t> box_of_cell;   // active cell -> box linear index
  std::vector<double> inside_frac;    // sampled fraction of the box inside I_D

  int active() const { return static_cast<int>(box_of_cell.size()); }
  int locate(double x, double y) const;          // active index or -1
  void box_center(int cell, double& x, double& y) const;
  int mirrored(int cell, bool neg_x, bool neg_y) const;  // -1 if inactive
};

// Row-stochastic one-step Ulam matrix; samples whose digit exceeds the
// cutoff are excluded from the row and reported as escape.
struct UlamOperator {
  UlamGrid grid;
  UlamOptions opt;
  std::vector<int64_t> row_ptr;
  std::vector<int32_t> col;
  std::vector<double> val;
  std::vector<double> row_escape;  // escaped fraction of the row's samples
  double escape_mass = 0;          // Lebesgue-weighted escape fraction
};
UlamOperator ulam_build(int D, const UlamOptions& opt);

// Invariant-density estimate: nonnegative cell masses summing to 1.
struct DensityEstimate {
  std::vector<double> mass;
  double value(const UlamGrid& grid, int cell) const;  // density w.r.t. Lebesgue
};

struct EigenResult {
  std::complex<double> lambda;
  DensityEstimate density;  // |left eigenvector| normalized to total mass 1
  int iterations = 0;
  bool converged = false;
};
EigenResult leading_eigen(const UlamOperator& op, double tol = 1e-10, int max_iter = 50000);

// Two-step sample cache for the twisted family: per retained sample the
// destination cell under G^2, the imd values of the two digits and
// log T(z) = 4 log|z G(z)|. The CSR sparsity pattern is fixed once.
struct TwoStepCache {
  UlamGrid grid;
  UlamOptions opt;
  struct Sample {
    int32_t dst;
    int16_t imd1, imd2;
    float logT;
  };
  std::vector<int64_t> sample_ptr;  // per source cell
  std::vector<Sample> samples;
  std::vector<int32_t> entry;       // sample -> index into col/values
  std::vector<int64_t> row_ptr;
  std::vector<int32_t> col;
  double escape_mass = 0;
};
TwoStepCache two_step_cache(int D, const UlamOptions& opt);

// K_{s,t} discretized on the cached samples: per-sample weight
// exp(i t Psi) T^{s-1} with Psi = imd1 - imd2.
struct TwistedOperator {
  const TwoStepCache* cache;
  double s, t;
  std::vector<std::complex<double>> val;
};
TwistedOperator ulam_twisted(const TwoStepCache& cache, double s, double t);
EigenResult leading_eigen(const TwistedOperator& op, double tol = 1e-12, int max_iter = 20000);

// A = integral of log(1/T) d(mu); positive (T < 1 on I_D). The leading
// eigenvalue satisfies d lambda / ds (1,0) = -A.
double a_constant(const TwoStepCache& cache, const DensityEstimate& density);

// integral of (e^{i t Psi} - 1) d(mu), and the single-digit variant with
// Psi replaced by imd of the first digit alone.
std::complex<double> osc_integral(const TwoStepCache& cache, const DensityEstimate& density,
                                  double t, bool single_psi = false);

// Root of Re lambda(s, t) = 1 by a bracketed secant iteration; |Im lambda|
// is monitored and the result flagged when it exceeds im_tol (the exact
// eigenvalue is real by the z -> -z symmetry; the imaginary part only
// carries sampling noise).
struct S0Result {
  double s0;
  double max_im_lambda;
  bool flagged;
  int evals;
};
S0Result s0_solve(const TwoStepCache& cache, double t, double s_tol = 1e-6,
                  double im_tol = 1e-2);

// mu-mass of the level sets {psi_I = n} for |n| <= nmax via a deterministic
// midpoint subgrid per cell; key nmax+1 collects everything beyond.
std::map<long long, double> mu_level_histogram(const UlamGrid& grid,
                                               const DensityEstimate& density,
                                               long long nmax, int subgrid = 48);
double mu_level(const UlamGrid& grid, const DensityEstimate& density, long long n,
                int subgrid = 48);

// L1 defects of the density under z -> -z and z -> conj z.
struct SymmetryDefect {
  double neg_l1;
  double conj_l1;
};
SymmetryDefect density_symmetry_defect(const UlamGrid& grid, const DensityEstimate& density);

}  // namespace eds
