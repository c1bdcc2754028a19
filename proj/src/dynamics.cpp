#include "eds/dynamics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <numeric>
#include <thread>

namespace eds {

namespace {

constexpr double kPi = std::numbers::pi;

// ------------------------------------------------------------------ RNG

struct SplitMix64 {
  uint64_t state;
  explicit SplitMix64(uint64_t s) : state(s) {}
  uint64_t next() {
    uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  double u01() { return (next() >> 11) * 0x1.0p-53; }
};

uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  SplitMix64 s(seed ^ (0x632be59bd9b4e019ULL * (stream + 1)));
  s.next();
  return s.next();
}

// --------------------------------------------------- Gauss-Legendre nodes

struct GaussRule {
  std::vector<double> x, w;  // on [-1, 1]
};

GaussRule gauss_rule(int n) {
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton iteration from the Chebyshev estimate
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    for (int it2 = 0; it2 < 100; ++it2) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    r.x[n - 1 - i] = x;
    r.w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

// Horizontal slab with linearly interpolated x-limits.
struct Slab {
  double y0, y1;
  double xl0, xl1;  // left limit at y0, y1
  double xr0, xr1;  // right limit at y0, y1
};

std::vector<Slab> domain_slabs(int D) {
  if (D == 2) {
    double ym = 1.0 / std::sqrt(2.0);
    return {{-ym, ym, -0.5, -0.5, 0.5, 0.5}};
  }
  double sD = std::sqrt(double(D));
  double yt = (D + 1) / (4.0 * sD);  // apex height
  double yr = (D - 1) / (4.0 * sD);  // corner height
  double c = (D + 1) / 4.0;
  // apexes have slanted limits x = +-(c - sD |y|), linear in y
  double w_t = c - sD * yt;  // half-width at the apex (= 0)
  double w_r = c - sD * yr;  // half-width at the corner (= 1/2)
  return {
      {-yt, -yr, -w_t, -w_r, w_t, w_r},
      {-yr, yr, -0.5, -0.5, 0.5, 0.5},
      {yr, yt, -w_r, -w_t, w_r, w_t},
  };
}

template <typename F>
double integrate_domain(int D, F&& f, int panels, int order) {
  const GaussRule g = gauss_rule(order);
  auto slabs = domain_slabs(D);
  double total = 0;
  for (const Slab& s : slabs) {
    for (int py = 0; py < panels; ++py) {
      double ya = s.y0 + (s.y1 - s.y0) * py / panels;
      double yb = s.y0 + (s.y1 - s.y0) * (py + 1) / panels;
      for (int iy = 0; iy < order; ++iy) {
        double y = 0.5 * (ya + yb) + 0.5 * (yb - ya) * g.x[iy];
        double wy = 0.5 * (yb - ya) * g.w[iy];
        double ty = (y - s.y0) / (s.y1 - s.y0);
        double xl = s.xl0 + (s.xl1 - s.xl0) * ty;
        double xr = s.xr0 + (s.xr1 - s.xr0) * ty;
        if (xr <= xl) continue;
        for (int px = 0; px < panels; ++px) {
          double xa = xl + (xr - xl) * px / panels;
          double xb = xl + (xr - xl) * (px + 1) / panels;
          for (int ix = 0; ix < order; ++ix) {
            double x = 0.5 * (xa + xb) + 0.5 * (xb - xa) * g.x[ix];
            double wx = 0.5 * (xb - xa) * g.w[ix];
            total += wy * wx * f(x, y);
          }
        }
      }
    }
  }
  return total;
}

}  // namespace

// ----------------------------------------------------------- psi_levels

PsiLevels psi_levels(const DomainPoint& z) {
  if (!domain_membership(z, Domain::I))
    throw std::domain_error("psi_levels: z outside I_D");
  KElem k = KElem::from_point(z);
  if (k.is_zero()) throw std::domain_error("psi_levels: z = 0");
  QuadInt digit = nearest_integer(k.inverse().to_point());
  PsiLevels out;
  out.psi_I = digit.v();
  if (z.D == 2)
    out.psi_R = BigRat(digit.u());
  else
    out.psi_R = BigRat(digit.u()) + BigRat(digit.v(), 2);
  return out;
}

// ------------------------------------------------------------- geometry

DomainGeom DomainGeom::get(int D) {
  RingSpec::get(D);
  DomainGeom g;
  g.D = D;
  g.xmax = 0.5;
  if (D == 2) {
    g.ymax = 1.0 / std::sqrt(2.0);
    g.area = std::sqrt(2.0);
  } else {
    g.ymax = (D + 1) / (4.0 * std::sqrt(double(D)));
    g.area = std::sqrt(double(D)) / 2.0;
  }
  return g;
}

bool DomainGeom::contains(double x, double y) const {
  if (std::abs(x) > xmax) return false;
  if (D == 2) return std::abs(y) <= ymax;
  double sD = std::sqrt(double(D));
  double c = (D + 1) / (4.0 * sD);
  return std::abs(y + x / sD) <= c && std::abs(y - x / sD) <= c;
}

LatticeRounder::LatticeRounder(int D_) : D(D_) {
  RingSpec::get(D_);
  im_unit = D == 2 ? std::sqrt(2.0) : std::sqrt(double(D)) / 2.0;
}

void LatticeRounder::round(double x, double y, long long& u, long long& v) const {
  double q = y / im_unit;
  if (!(std::abs(x) < 1e15) || !(std::abs(q) < 1e15)) {
    // far outside any digit of interest; clamp so callers see a huge norm
    u = x > 0 ? (1LL << 50) : -(1LL << 50);
    v = q > 0 ? (1LL << 50) : -(1LL << 50);
    return;
  }
  if (D == 2) {
    u = static_cast<long long>(std::floor(x + 0.5));
    v = static_cast<long long>(std::floor(q + 0.5));
    return;
  }
  // hexagonal: candidates around the coordinate-wise rounding, scored by
  // the half-open membership of the residual
  double p = x - q / 2;
  long long u0 = static_cast<long long>(std::floor(p + 0.5));
  long long v0 = static_cast<long long>(std::floor(q + 0.5));
  const double c2 = D + 1;
  double best = 1e300;
  long long bu = u0, bv = v0;
  for (long long dm = -1; dm <= 1; ++dm) {
    for (long long dn = -1; dn <= 1; ++dn) {
      long long uu = u0 + dm, vv = v0 + dn;
      double rp = p - uu, rq = q - vv;
      double f1 = 2 * rp + rq;
      double f2 = 4 * rp + 2 * (D + 1) * rq;
      double f3 = 4 * rp - 2 * (D - 1) * rq;
      if (f1 >= -1 && f1 < 1 && f2 >= -c2 && f2 < c2 && f3 >= -c2 && f3 < c2) {
        u = uu;
        v = vv;
        return;
      }
      double d2 = rp * rp + rq * rq;
      if (d2 < best) {
        best = d2;
        bu = uu;
        bv = vv;
      }
    }
  }
  // numerically on a removed boundary: fall back to the nearest candidate
  u = bu;
  v = bv;
}

std::complex<double> LatticeRounder::embed(long long u, long long v) const {
  if (D == 2) return {double(u), v * im_unit};
  return {u + v / 2.0, v * im_unit};
}

double LatticeRounder::norm(long long u, long long v) const {
  if (D == 2) return double(u) * u + 2.0 * v * v;
  return double(u) * u + double(u) * v + (D + 1) / 4.0 * double(v) * v;
}

StepResult gauss_step_f(const LatticeRounder& r, std::complex<double> z) {
  std::complex<double> w = 1.0 / z;
  StepResult out;
  r.round(w.real(), w.imag(), out.du, out.dv);
  out.next = w - r.embed(out.du, out.dv);
  return out;
}

StepResult gauss_step_f(int D, std::complex<double> z) {
  return gauss_step_f(LatticeRounder(D), z);
}

// ------------------------------------------------------------ quadrature

BranchVolume branch_image_volume(int D, std::complex<double> alpha, double target) {
  double a = std::abs(alpha);
  if (a * a < 2.0 - 1e-12)
    throw std::invalid_argument("branch_image_volume: norm(alpha) must be >= 2");
  auto f = [&](double x, double y) {
    double dx = x + alpha.real(), dy = y + alpha.imag();
    double r2 = dx * dx + dy * dy;
    return 1.0 / (r2 * r2);
  };
  int panels = a < 3 ? 8 : (a < 10 ? 4 : 2);
  double prev = integrate_domain(D, f, panels, 16);
  BranchVolume out{prev, 1.0};
  for (int round = 0; round < 5; ++round) {
    panels *= 2;
    double cur = integrate_domain(D, f, panels, 16);
    out.rel_err = std::abs(cur - prev) / std::max(std::abs(cur), 1e-300);
    out.value = cur;
    if (out.rel_err < target) return out;
    prev = cur;
  }
  return out;  // caller can inspect rel_err for non-convergence
}

BranchVolume branch_image_volume(const QuadInt& alpha, double target) {
  LatticeRounder r(alpha.D());
  return branch_image_volume(
      alpha.D(),
      r.embed(static_cast<long long>(alpha.u()), static_cast<long long>(alpha.v())),
      target);
}

// ---------------------------------------------------- level-set coefficients

LevelSumResult level_sum(int D, long long n, long long R) {
  if (n < 1) throw std::invalid_argument("level_sum: n must be >= 1");
  LevelSumResult res;
  const double n3 = double(n) * n * n;
  if (D == 2) {
    double s = 1.0 / (2.0 * n * n) / (2.0 * n * n);  // r = 0 term
    for (long long r = 1; r <= R; ++r) {
      double t = double(r) * r + 2.0 * n * n;
      s += 2.0 / (t * t);
    }
    res.sum = s;
    res.comparator = kPi / (4.0 * std::sqrt(2.0) * n3);
    res.rel_dev = std::abs(s - res.comparator) / res.comparator;
    res.abs_dev_scaled = std::abs(n3 * s - n3 * res.comparator);
    return res;
  }
  double sD = std::sqrt(double(D));
  res.coeff_outer = (4 * kPi - 8 * std::atan(sD)) / (sD * sD * sD) - 8.0 / (D * (D + 1.0));
  res.coeff_inner = 8.0 / (D * (D + 1.0)) + 8.0 * std::atan(sD) / (sD * sD * sD);
  double inner = 0, outer = 0;
  for (long long r = -R; r <= R; ++r) {
    double t = (r + n / 2.0) * (r + n / 2.0) + n * n * D / 4.0;
    double term = 1.0 / (t * t);
    if (std::llabs(2 * r + n) <= n * D)
      inner += term;
    else
      outer += term;
  }
  res.split_inner = inner;
  res.split_outer = outer;
  res.sum = inner + outer;
  res.comparator = (res.coeff_inner + res.coeff_outer) / n3;
  res.rel_dev = std::abs(res.sum - res.comparator) / res.comparator;
  res.abs_dev_scaled = std::max(std::abs(n3 * inner - res.coeff_inner),
                                std::abs(n3 * outer - res.coeff_outer));
  return res;
}

// ------------------------------------------------------------------- grid

int UlamGrid::locate(double x, double y) const {
  int ix = static_cast<int>(std::floor((x + geom.xmax) / dx));
  int iy = static_cast<int>(std::floor((y + geom.ymax) / dy));
  if (ix < 0 || ix >= g || iy < 0 || iy >= g) return -1;
  return cell_of_box[static_cast<size_t>(iy) * g + ix];
}

void UlamGrid::box_center(int cell, double& x, double& y) const {
  int box = box_of_cell[cell];
  int ix = box % g, iy = box / g;
  x = -geom.xmax + (ix + 0.5) * dx;
  y = -geom.ymax + (iy + 0.5) * dy;
}

int UlamGrid::mirrored(int cell, bool neg_x, bool neg_y) const {
  int box = box_of_cell[cell];
  int ix = box % g, iy = box / g;
  if (neg_x) ix = g - 1 - ix;
  if (neg_y) iy = g - 1 - iy;
  return cell_of_box[static_cast<size_t>(iy) * g + ix];
}

namespace {

UlamGrid make_grid(int D, int g) {
  if (g < 16) throw std::invalid_argument("ulam grid must be >= 16");
  if (g % 2) throw std::invalid_argument("ulam grid must be even");
  UlamGrid gr;
  gr.D = D;
  gr.g = g;
  gr.geom = DomainGeom::get(D);
  gr.dx = 2 * gr.geom.xmax / g;
  gr.dy = 2 * gr.geom.ymax / g;
  gr.cell_of_box.assign(static_cast<size_t>(g) * g, -1);
  // a box is active if any probe point lies inside I_D
  const int probe = 8;
  for (int iy = 0; iy < g; ++iy) {
    for (int ix = 0; ix < g; ++ix) {
      bool any = false;
      for (int a = 0; a < probe && !any; ++a)
        for (int b = 0; b < probe && !any; ++b) {
          double x = -gr.geom.xmax + (ix + (a + 0.5) / probe) * gr.dx;
          double y = -gr.geom.ymax + (iy + (b + 0.5) / probe) * gr.dy;
          any = gr.geom.contains(x, y);
        }
      if (any) {
        gr.cell_of_box[static_cast<size_t>(iy) * g + ix] =
            static_cast<int32_t>(gr.box_of_cell.size());
        gr.box_of_cell.push_back(static_cast<int32_t>(iy) * g + ix);
      }
    }
  }
  gr.inside_frac.assign(gr.box_of_cell.size(), 0.0);
  return gr;
}

template <typename CellFn>
void parallel_cells(int n, int threads, CellFn&& fn) {
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= n) return;
        fn(i);
      }
    });
  for (auto& t : pool) t.join();
}

}  // namespace

// ------------------------------------------------------------- ulam_build

namespace {

// Conditioning on never escaping: samples whose target row ended up with no
// retained samples are dropped too, iterated to a fixpoint so that every
// retained transition lands in a live row. Returns the live flags.
std::vector<char> prune_dead_targets(std::vector<std::vector<int32_t>>& hits) {
  const int n = static_cast<int>(hits.size());
  std::vector<char> live(n);
  for (int i = 0; i < n; ++i) live[i] = !hits[i].empty();
  for (;;) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (!live[i]) continue;
      auto& h = hits[i];
      h.erase(std::remove_if(h.begin(), h.end(), [&](int32_t d) { return !live[d]; }),
              h.end());
      if (h.empty()) {
        live[i] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return live;
}

}  // namespace

UlamOperator ulam_build(int D, const UlamOptions& opt) {
  if (opt.cutoff < 20 || opt.cutoff > 1e8)
    throw std::invalid_argument("ulam cutoff must be in [20, 1e8]");
  UlamOperator op;
  op.grid = make_grid(D, opt.grid);
  op.opt = opt;
  const UlamGrid& gr = op.grid;
  const int n = gr.active();
  const LatticeRounder rounder(D);

  std::vector<std::vector<int32_t>> hits(n);
  std::vector<double> inside(n, 0.0);
  std::vector<long long> accepted_count(n, 0);

  int strata = std::max(2, static_cast<int>(std::lround(std::sqrt(double(opt.samples_per_cell)))));
  parallel_cells(n, opt.threads, [&](int cell) {
    SplitMix64 rng(mix_seed(opt.seed, static_cast<uint64_t>(gr.box_of_cell[cell])));
    int box = gr.box_of_cell[cell];
    int ix = box % gr.g, iy = box / gr.g;
    double x0 = -gr.geom.xmax + ix * gr.dx;
    double y0 = -gr.geom.ymax + iy * gr.dy;
    long long attempts = 0, accepted = 0;
    auto& h = hits[cell];
    h.reserve(static_cast<size_t>(strata) * strata);
    for (int a = 0; a < strata; ++a) {
      for (int b = 0; b < strata; ++b) {
        double x = x0 + (a + rng.u01()) * gr.dx / strata;
        double y = y0 + (b + rng.u01()) * gr.dy / strata;
        ++attempts;
        if (!gr.geom.contains(x, y)) continue;
        ++accepted;
        StepResult st = gauss_step_f(rounder, {x, y});
        if (rounder.norm(st.du, st.dv) > opt.cutoff) continue;  // escape
        int dst = gr.locate(st.next.real(), st.next.imag());
        if (dst < 0) continue;  // float fuzz at the domain boundary
        h.push_back(dst);
      }
    }
    inside[cell] = attempts ? double(accepted) / attempts : 0.0;
    accepted_count[cell] = accepted;
  });

  prune_dead_targets(hits);

  op.row_ptr.assign(n + 1, 0);
  double esc_num = 0, esc_den = 0;
  op.row_escape.resize(n);
  for (int i = 0; i < n; ++i) {
    std::sort(hits[i].begin(), hits[i].end());
    op.grid.inside_frac[i] = inside[i];
    op.row_escape[i] =
        accepted_count[i]
            ? double(accepted_count[i] - static_cast<long long>(hits[i].size())) /
                  double(accepted_count[i])
            : 0.0;
    esc_num += inside[i] * op.row_escape[i];
    esc_den += inside[i];
    int64_t distinct = 0;
    for (size_t k = 0; k < hits[i].size(); ++k)
      if (k == 0 || hits[i][k] != hits[i][k - 1]) ++distinct;
    op.row_ptr[i + 1] = op.row_ptr[i] + distinct;
  }
  op.escape_mass = esc_den > 0 ? esc_num / esc_den : 0.0;
  op.col.resize(op.row_ptr[n]);
  op.val.resize(op.row_ptr[n]);
  for (int i = 0; i < n; ++i) {
    int64_t e = op.row_ptr[i] - 1;
    double denom = hits[i].empty() ? 1.0 : double(hits[i].size());
    for (size_t k = 0; k < hits[i].size(); ++k) {
      if (k == 0 || hits[i][k] != hits[i][k - 1]) {
        ++e;
        op.col[e] = hits[i][k];
        op.val[e] = 0.0;
      }
      op.val[e] += 1.0 / denom;
    }
  }
  return op;
}

double DensityEstimate::value(const UlamGrid& grid, int cell) const {
  double area = grid.dx * grid.dy * grid.inside_frac[cell];
  return area > 0 ? mass[cell] / area : 0.0;
}

// ------------------------------------------------------------ eigensolvers

EigenResult leading_eigen(const UlamOperator& op, double tol, int max_iter) {
  const int n = op.grid.active();
  EigenResult res;
  std::vector<double> v(n), w(n);
  for (int i = 0; i < n; ++i) v[i] = op.grid.inside_frac[i];
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  for (double& x : v) x /= s;
  double lam_prev = 0;
  for (int it = 0; it < max_iter; ++it) {
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      double m = v[i];
      if (m == 0) continue;
      for (int64_t k = op.row_ptr[i]; k < op.row_ptr[i + 1]; ++k)
        w[op.col[k]] += m * op.val[k];
    }
    double num = 0, den = 0;
    for (int i = 0; i < n; ++i) {
      num += w[i] * v[i];
      den += v[i] * v[i];
    }
    double lam = num / den;
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    double vdelta = 0;
    for (int i = 0; i < n; ++i) {
      double nv = w[i] / total;
      vdelta += std::abs(nv - v[i]);
      v[i] = nv;
    }
    res.iterations = it + 1;
    res.lambda = lam;
    if (it > 4 && std::abs(lam - lam_prev) < tol && vdelta < 1e-11) {
      res.converged = true;
      break;
    }
    lam_prev = lam;
  }
  if (!res.converged)
    throw NonConvergence("leading_eigen: power iteration did not converge after " +
                         std::to_string(max_iter) + " iterations");
  res.density.mass = std::move(v);
  return res;
}

// ---------------------------------------------------------- two-step cache

TwoStepCache two_step_cache(int D, const UlamOptions& opt) {
  if (opt.cutoff < 20 || opt.cutoff > 1e8)
    throw std::invalid_argument("ulam cutoff must be in [20, 1e8]");
  TwoStepCache c;
  c.grid = make_grid(D, opt.grid);
  c.opt = opt;
  const UlamGrid& gr = c.grid;
  const int n = gr.active();
  const LatticeRounder rounder(D);

  struct CellOut {
    std::vector<TwoStepCache::Sample> samples;
    double inside = 0;
    long long accepted = 0;
  };
  std::vector<CellOut> outs(n);
  int strata = std::max(2, static_cast<int>(std::lround(std::sqrt(double(opt.samples_per_cell)))));

  parallel_cells(n, opt.threads, [&](int cell) {
    SplitMix64 rng(mix_seed(opt.seed * 0x9e3779b9u + 1, static_cast<uint64_t>(gr.box_of_cell[cell])));
    int box = gr.box_of_cell[cell];
    int ix = box % gr.g, iy = box / gr.g;
    double x0 = -gr.geom.xmax + ix * gr.dx;
    double y0 = -gr.geom.ymax + iy * gr.dy;
    long long attempts = 0, accepted = 0;
    CellOut& out = outs[cell];
    out.samples.reserve(static_cast<size_t>(strata) * strata);
    for (int a = 0; a < strata; ++a) {
      for (int b = 0; b < strata; ++b) {
        double x = x0 + (a + rng.u01()) * gr.dx / strata;
        double y = y0 + (b + rng.u01()) * gr.dy / strata;
        ++attempts;
        if (!gr.geom.contains(x, y)) continue;
        ++accepted;
        std::complex<double> z{x, y};
        StepResult s1 = gauss_step_f(rounder, z);
        if (rounder.norm(s1.du, s1.dv) > opt.cutoff || s1.next == 0.0) continue;
        StepResult s2 = gauss_step_f(rounder, s1.next);
        if (rounder.norm(s2.du, s2.dv) > opt.cutoff) continue;
        int dst = gr.locate(s2.next.real(), s2.next.imag());
        if (dst < 0) continue;
        TwoStepCache::Sample sm;
        sm.dst = dst;
        sm.imd1 = static_cast<int16_t>(rounder.imd_int(s1.du, s1.dv));
        sm.imd2 = static_cast<int16_t>(rounder.imd_int(s2.du, s2.dv));
        sm.logT = static_cast<float>(4.0 * std::log(std::abs(z) * std::abs(s1.next)));
        out.samples.push_back(sm);
      }
    }
    out.inside = attempts ? double(accepted) / attempts : 0.0;
    out.accepted = accepted;
  });

  // drop samples that land in rows with no retained samples, to a fixpoint
  {
    std::vector<char> live(n);
    for (int i = 0; i < n; ++i) live[i] = !outs[i].samples.empty();
    for (;;) {
      bool changed = false;
      for (int i = 0; i < n; ++i) {
        if (!live[i]) continue;
        auto& s = outs[i].samples;
        s.erase(std::remove_if(s.begin(), s.end(),
                               [&](const TwoStepCache::Sample& sm) { return !live[sm.dst]; }),
                s.end());
        if (s.empty()) {
          live[i] = 0;
          changed = true;
        }
      }
      if (!changed) break;
    }
  }
  for (int i = 0; i < n; ++i)
    std::sort(outs[i].samples.begin(), outs[i].samples.end(),
              [](const TwoStepCache::Sample& a, const TwoStepCache::Sample& b) {
                return a.dst < b.dst;
              });

  c.sample_ptr.assign(n + 1, 0);
  c.row_ptr.assign(n + 1, 0);
  double esc_num = 0, esc_den = 0;
  for (int i = 0; i < n; ++i) {
    c.grid.inside_frac[i] = outs[i].inside;
    double esc_frac = outs[i].accepted > 0
                          ? double(outs[i].accepted -
                                   static_cast<long long>(outs[i].samples.size())) /
                                double(outs[i].accepted)
                          : 0.0;
    esc_num += outs[i].inside * esc_frac;
    esc_den += outs[i].inside;
    c.sample_ptr[i + 1] = c.sample_ptr[i] + static_cast<int64_t>(outs[i].samples.size());
    int64_t distinct = 0;
    for (size_t k = 0; k < outs[i].samples.size(); ++k)
      if (k == 0 || outs[i].samples[k].dst != outs[i].samples[k - 1].dst) ++distinct;
    c.row_ptr[i + 1] = c.row_ptr[i] + distinct;
  }
  c.escape_mass = esc_den > 0 ? esc_num / esc_den : 0.0;
  c.samples.resize(c.sample_ptr[n]);
  c.entry.resize(c.sample_ptr[n]);
  c.col.resize(c.row_ptr[n]);
  for (int i = 0; i < n; ++i) {
    int64_t sbase = c.sample_ptr[i];
    int64_t ebase = c.row_ptr[i];
    int64_t e = ebase - 1;
    for (size_t k = 0; k < outs[i].samples.size(); ++k) {
      const auto& sm = outs[i].samples[k];
      c.samples[sbase + k] = sm;
      if (k == 0 || sm.dst != outs[i].samples[k - 1].dst) {
        ++e;
        c.col[e] = sm.dst;
      }
      c.entry[sbase + k] = static_cast<int32_t>(e - ebase);
    }
  }
  return c;
}

TwistedOperator ulam_twisted(const TwoStepCache& cache, double s, double t) {
  if (std::abs(s - 1.0) > 0.35)
    throw std::invalid_argument("ulam_twisted: |s - 1| too large");
  TwistedOperator op{&cache, s, t, {}};
  const int n = cache.grid.active();
  op.val.assign(cache.col.size(), {0.0, 0.0});
  for (int i = 0; i < n; ++i) {
    int64_t s0 = cache.sample_ptr[i], s1 = cache.sample_ptr[i + 1];
    if (s1 == s0) continue;
    int64_t ebase = cache.row_ptr[i];
    double inv = 1.0 / double(s1 - s0);
    for (int64_t k = s0; k < s1; ++k) {
      const auto& sm = cache.samples[k];
      double mag = (s == 1.0) ? 1.0 : std::exp((s - 1.0) * double(sm.logT));
      double phase = t * double(sm.imd1 - sm.imd2);
      std::complex<double> w = (t == 0.0)
                                   ? std::complex<double>(mag, 0.0)
                                   : std::polar(mag, phase);
      op.val[ebase + cache.entry[k]] += w * inv;
    }
  }
  return op;
}

EigenResult leading_eigen(const TwistedOperator& op, double tol, int max_iter) {
  const TwoStepCache& c = *op.cache;
  const int n = c.grid.active();
  EigenResult res;
  std::vector<std::complex<double>> v(n), w(n);
  for (int i = 0; i < n; ++i) v[i] = c.grid.inside_frac[i];
  double s0 = 0;
  for (auto& x : v) s0 += std::abs(x);
  for (auto& x : v) x /= s0;
  std::complex<double> lam_prev = 0;
  for (int it = 0; it < max_iter; ++it) {
    std::fill(w.begin(), w.end(), std::complex<double>(0, 0));
    for (int i = 0; i < n; ++i) {
      std::complex<double> m = v[i];
      if (m == 0.0) continue;
      for (int64_t k = c.row_ptr[i]; k < c.row_ptr[i + 1]; ++k)
        w[c.col[k]] += m * op.val[k];
    }
    std::complex<double> num = 0;
    double den = 0;
    for (int i = 0; i < n; ++i) {
      num += w[i] * std::conj(v[i]);
      den += std::norm(v[i]);
    }
    std::complex<double> lam = num / den;
    double nrm = 0;
    for (auto& x : w) nrm += std::norm(x);
    nrm = std::sqrt(nrm);
    for (int i = 0; i < n; ++i) v[i] = w[i] / nrm;
    res.iterations = it + 1;
    if (it > 4 && std::abs(lam - lam_prev) < tol * std::max(1.0, std::abs(lam))) {
      res.converged = true;
      res.lambda = lam;
      break;
    }
    lam_prev = lam;
    res.lambda = lam;
  }
  if (!res.converged)
    throw NonConvergence("leading_eigen: power iteration did not converge");
  res.density.mass.resize(n);
  double total = 0;
  for (int i = 0; i < n; ++i) total += std::abs(v[i]);
  for (int i = 0; i < n; ++i) res.density.mass[i] = std::abs(v[i]) / total;
  return res;
}

// ----------------------------------------------------- spectral quantities

double a_constant(const TwoStepCache& cache, const DensityEstimate& density) {
  const int n = cache.grid.active();
  double acc = 0;
  for (int i = 0; i < n; ++i) {
    int64_t s0 = cache.sample_ptr[i], s1 = cache.sample_ptr[i + 1];
    if (s1 == s0) continue;
    double m = 0;
    for (int64_t k = s0; k < s1; ++k) m -= cache.samples[k].logT;
    acc += density.mass[i] * m / double(s1 - s0);
  }
  return acc;
}

std::complex<double> osc_integral(const TwoStepCache& cache, const DensityEstimate& density,
                                  double t, bool single_psi) {
  const int n = cache.grid.active();
  std::complex<double> acc = 0;
  for (int i = 0; i < n; ++i) {
    int64_t s0 = cache.sample_ptr[i], s1 = cache.sample_ptr[i + 1];
    if (s1 == s0) continue;
    std::complex<double> m = 0;
    for (int64_t k = s0; k < s1; ++k) {
      double psi = single_psi ? double(cache.samples[k].imd1)
                              : double(cache.samples[k].imd1 - cache.samples[k].imd2);
      m += std::polar(1.0, t * psi) - 1.0;
    }
    acc += density.mass[i] * m / double(s1 - s0);
  }
  return acc;
}

S0Result s0_solve(const TwoStepCache& cache, double t, double s_tol, double im_tol) {
  S0Result res{1.0, 0.0, false, 0};
  auto eval = [&](double s) {
    EigenResult e = leading_eigen(ulam_twisted(cache, s, t));
    ++res.evals;
    res.max_im_lambda = std::max(res.max_im_lambda, std::abs(e.lambda.imag()));
    return e.lambda.real() - 1.0;
  };
  double s_hi = 1.0;
  double f_hi = eval(s_hi);
  if (std::abs(f_hi) < 1e-12) {
    res.flagged = res.max_im_lambda > im_tol;
    res.s0 = 1.0;
    return res;
  }
  if (f_hi > 0)
    throw NonConvergence("s0_solve: lambda(1,t) > 1, no bracket above");
  double s_lo = 0.97, f_lo = eval(s_lo);
  while (f_lo < 0) {
    s_lo -= 2 * (s_hi - s_lo);
    if (s_lo < 0.66)
      throw NonConvergence("s0_solve: no sign change down to s = 0.66 (lambda stays below 1)");
    f_lo = eval(s_lo);
  }
  // regula falsi with bisection fallback
  for (int it = 0; it < 200; ++it) {
    double mid = s_lo + (s_hi - s_lo) * (-f_lo) / (f_hi - f_lo);
    if (!(mid > s_lo && mid < s_hi)) mid = 0.5 * (s_lo + s_hi);
    double f_mid = eval(mid);
    if (f_mid == 0 || s_hi - s_lo < s_tol) {
      res.s0 = mid;
      res.flagged = res.max_im_lambda > im_tol;
      return res;
    }
    if (f_mid < 0)
      s_hi = mid, f_hi = f_mid;
    else
      s_lo = mid, f_lo = f_mid;
  }
  res.s0 = 0.5 * (s_lo + s_hi);
  res.flagged = res.max_im_lambda > im_tol;
  return res;
}

// ------------------------------------------------------------- level sets

std::map<long long, double> mu_level_histogram(const UlamGrid& grid,
                                               const DensityEstimate& density,
                                               long long nmax, int subgrid) {
  std::map<long long, double> out;
  const LatticeRounder rounder(grid.D);
  const int n = grid.active();
  for (int i = 0; i < n; ++i) {
    if (density.mass[i] == 0) continue;
    int box = grid.box_of_cell[i];
    int ix = box % grid.g, iy = box / grid.g;
    double x0 = -grid.geom.xmax + ix * grid.dx;
    double y0 = -grid.geom.ymax + iy * grid.dy;
    std::map<long long, int> tally;
    int inside = 0;
    for (int a = 0; a < subgrid; ++a) {
      for (int b = 0; b < subgrid; ++b) {
        double x = x0 + (a + 0.5) * grid.dx / subgrid;
        double y = y0 + (b + 0.5) * grid.dy / subgrid;
        if (!grid.geom.contains(x, y)) continue;
        ++inside;
        std::complex<double> w = 1.0 / std::complex<double>(x, y);
        long long du, dv;
        rounder.round(w.real(), w.imag(), du, dv);
        long long level = dv;  // psi_I is the second basis coordinate
        if (level > nmax) level = nmax + 1;
        if (level < -nmax) level = -(nmax + 1);
        ++tally[level];
      }
    }
    if (!inside) continue;
    for (auto& [lvl, cnt] : tally)
      out[lvl] += density.mass[i] * double(cnt) / double(inside);
  }
  return out;
}

double mu_level(const UlamGrid& grid, const DensityEstimate& density, long long n,
                int subgrid) {
  auto h = mu_level_histogram(grid, density, std::llabs(n) + 1, subgrid);
  auto it = h.find(n);
  return it == h.end() ? 0.0 : it->second;
}

SymmetryDefect density_symmetry_defect(const UlamGrid& grid, const DensityEstimate& density) {
  SymmetryDefect d{0, 0};
  const int n = grid.active();
  for (int i = 0; i < n; ++i) {
    int jn = grid.mirrored(i, true, true);
    int jc = grid.mirrored(i, false, true);
    double mn = jn >= 0 ? density.mass[jn] : 0.0;
    double mc = jc >= 0 ? density.mass[jc] : 0.0;
    d.neg_l1 += std::abs(density.mass[i] - mn);
    d.conj_l1 += std::abs(density.mass[i] - mc);
  }
  d.neg_l1 *= 0.5;
  d.conj_l1 *= 0.5;
  return d;
}

}  // namespace eds
