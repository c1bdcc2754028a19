#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "eds/dynamics.hpp"

using namespace eds;

namespace {
constexpr double kPi = std::numbers::pi;

UlamOptions small_opts(int grid = 48, int samples = 400, uint64_t seed = 11) {
  UlamOptions o;
  o.grid = grid;
  o.samples_per_cell = samples;
  o.seed = seed;
  o.cutoff = 400;
  o.threads = 1;
  return o;
}
}  // namespace

TEST_CASE("psi_levels: pinned examples") {
  // z = 1/sqrt(-2): [1/z] = sqrt(-2), levels (0, 1)
  DomainPoint z1(2, BigRat(0), BigRat(-1, 2));
  PsiLevels p1 = psi_levels(z1);
  CHECK(p1.psi_R == BigRat(0));
  CHECK(p1.psi_I == 1);

  // z = 2/5: [5/2] = 3: levels (3, 0)
  PsiLevels p2 = psi_levels(DomainPoint(2, BigRat(2, 5), BigRat(0)));
  CHECK(p2.psi_R == BigRat(3));
  CHECK(p2.psi_I == 0);

  // D=7: z = 1/omega = conj(omega)/2 = (1 - omega)/2: [1/z] = omega
  PsiLevels p3 = psi_levels(DomainPoint(7, BigRat(1, 2), BigRat(-1, 2)));
  CHECK(p3.psi_I == 1);
  CHECK(p3.psi_R == BigRat(1, 2));

  CHECK_THROWS_AS(psi_levels(DomainPoint(2, BigRat(0), BigRat(0))), std::domain_error);
  CHECK_THROWS_AS(psi_levels(DomainPoint(2, BigRat(7), BigRat(0))), std::domain_error);
}

TEST_CASE("float Gauss map agrees with the exact one on random points") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<long long> num(-999, 999);
  for (int D : {2, 7, 11}) {
    LatticeRounder rounder(D);
    int checked = 0;
    for (int i = 0; i < 2000; ++i) {
      DomainPoint z(D, BigRat(num(rng), 2048), BigRat(num(rng), 2048));
      if (!domain_membership(z, Domain::I)) continue;
      KElem k = KElem::from_point(z);
      if (k.is_zero()) continue;
      QuadInt exact_digit = nearest_integer(k.inverse().to_point());
      double x = static_cast<double>(BigRat(z.re()));
      double y = static_cast<double>(z.im_scaled()) * rounder.im_unit;
      StepResult st = gauss_step_f(D, {x, y});
      // tie points (1/z exactly on a rounding boundary) may go either way in
      // floating point; skip them
      DomainPoint inv = k.inverse().to_point();
      double p = static_cast<double>(BigRat(inv.x - BigRat(exact_digit.u())));
      double q = static_cast<double>(BigRat(inv.y - BigRat(exact_digit.v())));
      double slack;
      if (D == 2) {
        slack = std::min(std::abs(std::abs(p) - 0.5), std::abs(std::abs(q) - 0.5));
      } else {
        slack = std::min({std::abs(std::abs(2 * p + q) - 1.0),
                          std::abs(std::abs(4 * p + 2 * (D + 1) * q) - (D + 1.0)),
                          std::abs(std::abs(4 * p - 2 * (D - 1) * q) - (D + 1.0))});
      }
      if (slack < 1e-9) continue;
      CHECK(st.du == static_cast<long long>(exact_digit.u()));
      CHECK(st.dv == static_cast<long long>(exact_digit.v()));
      ++checked;
    }
    CHECK(checked > 500);
  }
}

TEST_CASE("branch_image_volume: symmetries and the |alpha|^-4 limit") {
  for (int D : {2, 7, 11}) {
    LatticeRounder r(D);
    double area = DomainGeom::get(D).area;

    // alpha and -alpha, alpha and conj(alpha) give equal volumes
    QuadInt a(D, 3, 2);
    double v1 = branch_image_volume(a).value;
    CHECK(branch_image_volume(-a).value == doctest::Approx(v1).epsilon(1e-9));
    CHECK(branch_image_volume(a.conj()).value == doctest::Approx(v1).epsilon(1e-9));

    // large |alpha|: value * norm^2 -> vol(I_D)
    double big = 120.0;  // norm 14400
    BranchVolume bv = branch_image_volume(D, {big, 0.0});
    CHECK(bv.value * big * big * big * big == doctest::Approx(area).epsilon(2e-3));
    CHECK(bv.rel_err < 1e-8);
  }
}

TEST_CASE("branch_image_volume: quadrature accuracy target") {
  // norm(alpha) = 4: the target is 1e-8 relative
  BranchVolume v = branch_image_volume(2, {2.0, 0.0});
  CHECK(v.rel_err < 1e-8);
  CHECK_THROWS_AS(branch_image_volume(2, {1.0, 0.0}), std::invalid_argument);
}

TEST_CASE("level_sum: D=2 closed form") {
  LevelSumResult r = level_sum(2, 10, 1000000);
  CHECK(r.comparator == doctest::Approx(kPi / (4 * std::sqrt(2.0) * 1000)).epsilon(1e-12));
  CHECK(r.rel_dev < 1e-3);
  // doubling n scales the comparator by 1/8
  LevelSumResult r2 = level_sum(2, 20, 1000000);
  CHECK(r2.comparator == doctest::Approx(r.comparator / 8).epsilon(1e-12));
}

TEST_CASE("level_sum: D=7,11 split sums against quadrature oracle") {
  for (int D : {7, 11}) {
    const long long n = 10;
    LevelSumResult r = level_sum(D, n, 2000000);
    // independent oracle: midpoint-corrected quadrature of (u^2 + D/4)^{-2}
    // between the actual cut points of the integer split
    auto integrand = [&](double u) {
      double t = u * u + D / 4.0;
      return 1.0 / (t * t);
    };
    auto simpson = [&](double a, double b) {
      const int N = 20000;
      double h = (b - a) / N, s = integrand(a) + integrand(b);
      for (int i = 1; i < N; ++i) s += integrand(a + i * h) * (i % 2 ? 4 : 2);
      return s * h / 3;
    };
    // inner sum keeps |2r+n| <= nD: integer r in [(-nD-n)/2, (nD-n)/2];
    // the continuum cut sits half a step beyond the last included integer
    double r_hi = std::floor((n * D - n) / 2.0);
    double r_lo = std::ceil((-n * D - n) / 2.0);
    double u_hi = (r_hi + 0.5 + n / 2.0) / n;
    double u_lo = (r_lo - 0.5 + n / 2.0) / n;
    double inner_oracle = simpson(u_lo, u_hi) / (n * n * n);
    double outer_oracle = (simpson(-60, u_lo) + simpson(u_hi, 60)) / (n * n * n);
    CHECK(r.split_inner == doctest::Approx(inner_oracle).epsilon(1e-3));
    CHECK(r.split_outer == doctest::Approx(outer_oracle).epsilon(1e-3));
    // closed forms on the n^3-normalized scale
    CHECK(std::abs(n * n * n * r.split_inner - r.coeff_inner) < 1e-3);
    CHECK(std::abs(n * n * n * r.split_outer - r.coeff_outer) < 1e-3);
  }
}

TEST_CASE("ulam_build: stochastic rows, escape accounting") {
  for (int D : {2, 7}) {
    UlamOperator op = ulam_build(D, small_opts());
    // renormalized rows sum to 1 exactly (up to fp) unless empty
    for (int i = 0; i < op.grid.active(); ++i) {
      double s = 0;
      for (int64_t k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k) s += op.val[k];
      if (op.row_ptr[i + 1] > op.row_ptr[i]) CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
    // escape bounded by the |alpha|^-4 tail: sum_{norm > A} norm^-2; the
    // conditioning also drops the preimage of the hole, hence one extra
    // factor of ~2 on top of density slack
    double bound = 0;
    LatticeRounder r(D);
    for (long long u = -60; u <= 60; ++u)
      for (long long v = -60; v <= 60; ++v) {
        double nrm = r.norm(u, v);
        if (nrm > op.opt.cutoff && nrm < 3000) bound += 1.0 / (nrm * nrm);
      }
    CHECK(op.escape_mass < 6 * bound + 1e-3);
    CHECK(op.escape_mass > 0);
  }
}

TEST_CASE("ulam escape mass scales like 1/cutoff") {
  UlamOptions o1 = small_opts(48, 600);
  o1.cutoff = 100;
  UlamOptions o2 = o1;
  o2.cutoff = 200;
  double e1 = ulam_build(2, o1).escape_mass;
  double e2 = ulam_build(2, o2).escape_mass;
  CHECK(e1 / e2 > 1.4);
  CHECK(e1 / e2 < 2.9);
}

TEST_CASE("ulam Monte-Carlo variance halves when samples double") {
  // variance of a fixed matrix entry across seeds, N vs 2N
  const int grid = 24;
  auto entry = [&](int samples, uint64_t seed) {
    UlamOptions o = small_opts(grid, samples, seed);
    UlamOperator op = ulam_build(2, o);
    int cell = op.grid.locate(0.31, 0.22);
    REQUIRE(cell >= 0);
    StepResult st = gauss_step_f(2, {0.31, 0.22});
    int dst = op.grid.locate(st.next.real(), st.next.imag());
    for (int64_t k = op.row_ptr[cell]; k < op.row_ptr[cell + 1]; ++k)
      if (op.col[k] == dst) return op.val[k];
    return 0.0;
  };
  auto variance = [&](int samples) {
    std::vector<double> xs;
    for (uint64_t s = 1; s <= 12; ++s) xs.push_back(entry(samples, s * 7919));
    double m = 0, v = 0;
    for (double x : xs) m += x;
    m /= xs.size();
    for (double x : xs) v += (x - m) * (x - m);
    return v / xs.size();
  };
  double v1 = variance(200), v2 = variance(400);
  CHECK(v1 / v2 > 1.2);
  CHECK(v1 / v2 < 4.0);
}

TEST_CASE("leading_eigen at (1,0): lambda = 1, symmetric density, mass preserved") {
  UlamOperator op = ulam_build(2, small_opts(64, 500, 3));
  EigenResult e = leading_eigen(op);
  CHECK(e.converged);
  CHECK(e.lambda.real() == doctest::Approx(1.0).epsilon(1e-6));
  double mass = 0;
  for (double m : e.density.mass) {
    CHECK(m >= 0);
    mass += m;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
  SymmetryDefect d = density_symmetry_defect(op.grid, e.density);
  CHECK(d.neg_l1 < 0.05);
  CHECK(d.conj_l1 < 0.05);
}

TEST_CASE("two-step cache: lambda(1,0) = 1 and lambda decreasing in s") {
  TwoStepCache cache = two_step_cache(2, small_opts(48, 500, 5));
  EigenResult base = leading_eigen(ulam_twisted(cache, 1.0, 0.0));
  CHECK(base.lambda.real() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(std::abs(base.lambda.imag()) < 1e-9);

  double prev = 1e9;
  for (double s : {0.92, 0.96, 1.0, 1.04, 1.08}) {
    double lam = leading_eigen(ulam_twisted(cache, s, 0.0)).lambda.real();
    CHECK(lam < prev);
    CHECK(lam > 0);
    prev = lam;
  }
}

TEST_CASE("a_constant is positive and matches the s-derivative of lambda") {
  TwoStepCache cache = two_step_cache(2, small_opts(64, 700, 5));
  EigenResult base = leading_eigen(ulam_twisted(cache, 1.0, 0.0));
  double A = a_constant(cache, base.density);
  CHECK(A > 0);
  const double h = 0.02;
  double lp = leading_eigen(ulam_twisted(cache, 1 + h, 0.0)).lambda.real();
  double lm = leading_eigen(ulam_twisted(cache, 1 - h, 0.0)).lambda.real();
  double fd = (lp - lm) / (2 * h);
  CHECK(fd < 0);
  CHECK(std::abs(-fd - A) / A < 0.08);
}

TEST_CASE("twisted eigenvalue: lambda(1,t) matches 1 - osc deficit") {
  TwoStepCache cache = two_step_cache(2, small_opts(64, 700, 5));
  EigenResult base = leading_eigen(ulam_twisted(cache, 1.0, 0.0));
  double t = 0.15;
  EigenResult tw = leading_eigen(ulam_twisted(cache, 1.0, t));
  std::complex<double> osc = osc_integral(cache, base.density, t);
  CHECK(osc_integral(cache, base.density, 0.0) == std::complex<double>(0, 0));
  CHECK(osc.real() < 0);
  double prediction = 1.0 + osc.real();
  CHECK(std::abs(tw.lambda.real() - prediction) < 0.35 * std::abs(osc.real()));
}

TEST_CASE("s0_solve: t = 0 gives exactly 1, t != 0 dips below") {
  TwoStepCache cache = two_step_cache(2, small_opts(48, 500, 5));
  S0Result at0 = s0_solve(cache, 0.0);
  CHECK(at0.s0 == 1.0);
  S0Result at = s0_solve(cache, 0.15);
  CHECK(at.s0 < 1.0);
  CHECK(at.s0 > 0.9);
  CHECK_FALSE(at.flagged);
  S0Result neg = s0_solve(cache, -0.15);
  CHECK(std::abs(neg.s0 - at.s0) < 2e-4);
}

TEST_CASE("mu_level histogram: partition of unity and symmetry") {
  UlamOperator op = ulam_build(2, small_opts(64, 500, 3));
  EigenResult e = leading_eigen(op);
  auto hist = mu_level_histogram(op.grid, e.density, 40, 32);
  double total = 0;
  for (auto& [n, v] : hist) total += v;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  // mu(V_n) ~ mu(V_-n)
  for (long long n : {2, 3, 5}) {
    double p = hist.count(n) ? hist.at(n) : 0;
    double m = hist.count(-n) ? hist.at(-n) : 0;
    REQUIRE(p > 0);
    REQUIRE(m > 0);
    CHECK(p / m > 0.8);
    CHECK(p / m < 1.25);
  }
}

TEST_CASE("hexagonal domains: eigensolver sanity for D = 7 and 11") {
  for (int D : {7, 11}) {
    UlamOperator op = ulam_build(D, small_opts(48, 300, 17));
    EigenResult e = leading_eigen(op);
    CHECK(e.lambda.real() == doctest::Approx(1.0).epsilon(1e-6));
    double mass = 0;
    for (double m : e.density.mass) mass += m;
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    SymmetryDefect d = density_symmetry_defect(op.grid, e.density);
    CHECK(d.neg_l1 < 0.08);
    CHECK(d.conj_l1 < 0.08);
    // level masses behave for moderate n
    auto h = mu_level_histogram(op.grid, e.density, 8, 32);
    double p3 = h.count(3) ? h.at(3) : 0, m3 = h.count(-3) ? h.at(-3) : 0;
    REQUIRE(p3 > 0);
    CHECK(p3 / m3 > 0.8);
    CHECK(p3 / m3 < 1.25);
  }
}

TEST_CASE("grid validation") {
  UlamOptions bad = small_opts(14);
  CHECK_THROWS_AS(ulam_build(2, bad), std::invalid_argument);
  UlamOptions odd = small_opts(33);
  CHECK_THROWS_AS(ulam_build(2, odd), std::invalid_argument);
  UlamOptions lowcut = small_opts();
  lowcut.cutoff = 10;
  CHECK_THROWS_AS(ulam_build(2, lowcut), std::invalid_argument);
}
