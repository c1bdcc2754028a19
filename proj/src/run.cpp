#include "eds/run.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "eds/dynamics.hpp"
#include "eds/farey.hpp"

#ifndef EDS_GIT_REVISION
#define EDS_GIT_REVISION "unknown"
#endif

namespace eds {

namespace {

using json = nlohmann::ordered_json;

std::string rat_str(const BigRat& r) {
  std::ostringstream os;
  os << boost::multiprecision::numerator(r);
  if (boost::multiprecision::denominator(r) != 1)
    os << "/" << boost::multiprecision::denominator(r);
  return os.str();
}

long long rat_to_int(const BigRat& r) {
  if (boost::multiprecision::denominator(r) != 1)
    throw std::logic_error("expected an integer value, got " + rat_str(r));
  return static_cast<long long>(boost::multiprecision::numerator(r));
}

json config_json(const RunConfig& c) {
  json j;
  j["subcommand"] = c.subcommand;
  j["D"] = c.D;
  if (c.X) j["X"] = c.X;
  if (c.Q) j["Q"] = c.Q;
  j["grid"] = c.grid;
  j["cutoff"] = c.cutoff;
  j["samples"] = c.samples;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["include_zero"] = c.include_zero;
  j["stat"] = c.stat;
  if (!c.tgrid.empty()) j["tgrid"] = c.tgrid;
  j["nmax"] = c.nmax;
  j["s"] = c.s;
  j["t"] = c.t;
  if (!c.csv_path.empty()) j["csv"] = c.csv_path;
  if (!c.args.empty()) j["args"] = c.args;
  return j;
}

void emit_report(const RunConfig& cfg, json results, double wall_ms) {
  json j;
  j["config"] = config_json(cfg);
  j["git_revision"] = EDS_GIT_REVISION;
  j["seed"] = cfg.seed;
  j["results"] = std::move(results);
  j["wall_ms"] = wall_ms;  // the only volatile field in any artifact
  std::string text = j.dump(2);
  text.push_back('\n');
  if (cfg.json_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(cfg.json_path);
    if (!out) throw std::invalid_argument("cannot open " + cfg.json_path);
    out << text;
  }
}

int effective_threads(const RunConfig& cfg) {
  if (cfg.threads > 0) return cfg.threads;
  unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

std::vector<double> default_tgrid() {
  std::vector<double> t;
  for (double v = 0.02; v <= 0.2 + 1e-12; v += 0.02) t.push_back(v);
  return t;
}

// ------------------------------------------------------------- subcommands

json run_cf(const RunConfig& cfg) {
  if (cfg.args.size() != 2) throw std::invalid_argument("cf needs <num> <den>");
  QuadInt num = QuadInt::parse(cfg.D, cfg.args[0]);
  QuadInt den = QuadInt::parse(cfg.D, cfg.args[1]);
  KElem z = KElem::reduce(num, den);
  CFExpansion e = cf_expand(z);
  json digits = json::array();
  for (const QuadInt& d : e.digits) digits.push_back(d.to_string());
  json convs = json::array();
  for (auto& [p, q] : convergents(e.a0, e.digits))
    convs.push_back({p.to_string(), q.to_string()});
  json r;
  r["z"] = z.to_string();
  r["a0"] = e.a0.to_string();
  r["digits"] = digits;
  r["convergents"] = convs;
  r["ell"] = e.length();
  return r;
}

json run_sczech(const RunConfig& cfg) {
  if (cfg.args.size() != 2) throw std::invalid_argument("sczech needs <a> <c>");
  QuadInt a = QuadInt::parse(cfg.D, cfg.args[0]);
  QuadInt c = QuadInt::parse(cfg.D, cfg.args[1]);
  KElem z = KElem::reduce(a, c);
  SczechSample s = sczech_sample(z);
  json r;
  r["z"] = z.to_string();
  r["Dtilde"] = rat_str(s.Dtilde);
  r["S"] = rat_str(s.S);
  r["ell"] = s.ell;
  r["height_sq"] = s.height_sq.str();
  if (!a.is_zero() && !c.is_zero() && euclid_gcd(a, c).is_unit()) {
    BigRat defect = reciprocity_defect(a, c);
    r["reciprocity_defect"] = rat_str(defect);
    if (defect != 0)
      throw std::logic_error("contract violation: nonzero reciprocity defect " +
                             rat_str(defect));
  }
  return r;
}

long long parse_int_arg(const std::string& s, const char* what) {
  try {
    size_t pos = 0;
    long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("bad integer for ") + what + ": '" + s + "'");
  }
}

json run_classical(const RunConfig& cfg) {
  if (cfg.args.size() != 2) throw std::invalid_argument("classical needs <h> <k>");
  long long h = parse_int_arg(cfg.args[0], "h");
  long long k = parse_int_arg(cfg.args[1], "k");
  BigRat v = classical_dedekind(h, k);
  json r;
  r["h"] = h;
  r["k"] = k;
  r["value"] = rat_str(v);
  return r;
}

json run_enumerate(const RunConfig& cfg) {
  if (cfg.X < 1) throw std::invalid_argument("enumerate needs X >= 1");
  std::ofstream csv;
  if (!cfg.csv_path.empty()) {
    csv.open(cfg.csv_path);
    if (!csv) throw std::invalid_argument("cannot open " + cfg.csv_path);
    csv << "a_u,a_v,b_u,b_v,normsq_b,ell,S_num,S_den,Dt_num,Dt_den\r\n";
  }
  FareyQuery q{cfg.D, cfg.X, cfg.include_zero};
  uint64_t count = 0;
  enumerate_farey(q, [&](const KElem& z) {
    ++count;
    if (csv.is_open()) {
      SczechSample s = sczech_sample(z);
      csv << z.num().u() << "," << z.num().v() << "," << z.den().u() << ","
          << z.den().v() << "," << s.height_sq << "," << s.ell << ","
          << boost::multiprecision::numerator(s.S) << ","
          << boost::multiprecision::denominator(s.S) << ","
          << boost::multiprecision::numerator(s.Dtilde) << ","
          << boost::multiprecision::denominator(s.Dtilde) << "\r\n";
    }
  });
  json r;
  r["count"] = count;
  return r;
}

json run_distribution(const RunConfig& cfg) {
  if (cfg.X < 2) throw std::invalid_argument("distribution needs X >= 2");
  DistributionData data =
      collect_distribution(cfg.D, cfg.X, cfg.include_zero, effective_threads(cfg));
  const std::vector<double>& vals = cfg.stat == "S" ? data.values_S : data.values_Dt;
  json r;
  r["count"] = data.count;
  r["stat"] = cfg.stat;
  Moments m = cfg.stat == "S" ? moments(vals) : data.exact_Dt.finalize();
  const double lx = std::log(double(cfg.X));
  const double norm_scale = std::sqrt(lx * std::log(lx));
  r["moments"] = {{"mean", m.mean},
                  {"var", m.var},
                  {"skewness", m.skewness},
                  {"excess_kurtosis", m.excess_kurtosis},
                  {"mean_abs", m.mean_abs}};
  r["std_over_sqrt_logX_loglogX"] = std::sqrt(m.var) / norm_scale;
  if (cfg.with_ks) {
    Standardized st = standardize(vals);
    r["ks_gaussian"] = ks_distance(st.values, [](double x) { return gaussian_cdf(x); });
    r["ks_cauchy"] = ks_distance(st.values, [](double x) { return cauchy_cdf(x); });
  }
  r["max_abs_S_minus_Dt"] = data.max_gap;
  if (!cfg.csv_path.empty()) {
    std::ofstream csv(cfg.csv_path);
    if (!csv) throw std::invalid_argument("cannot open " + cfg.csv_path);
    // raw and standardized (mean-centred) histograms
    csv << "kind,bin_lo,bin_hi,count\r\n";
    Histogram h = histogram_fd(vals);
    for (size_t i = 0; i < h.bins.size(); ++i)
      csv << "raw," << h.lo + i * h.width << "," << h.lo + (i + 1) * h.width << ","
          << h.bins[i] << "\r\n";
    Histogram hs = histogram_fd(standardize(vals).values);
    for (size_t i = 0; i < hs.bins.size(); ++i)
      csv << "standardized," << hs.lo + i * hs.width << "," << hs.lo + (i + 1) * hs.width
          << "," << hs.bins[i] << "\r\n";
  }
  return r;
}

json run_charfn(const RunConfig& cfg) {
  if (cfg.X < 2) throw std::invalid_argument("charfn needs X >= 2");
  std::vector<double> tgrid =
      cfg.tgrid.empty() ? default_tgrid() : parse_tgrid(cfg.tgrid);
  DistributionData data =
      collect_distribution(cfg.D, cfg.X, cfg.include_zero, effective_threads(cfg));
  auto chi = char_fn(data.s_hist, tgrid);
  json rows = json::array();
  std::vector<double> xs, ys;
  for (size_t i = 0; i < tgrid.size(); ++i) {
    rows.push_back({{"t", tgrid[i]},
                    {"re", chi[i].real()},
                    {"im", chi[i].imag()},
                    {"abs", std::abs(chi[i])}});
    double t = tgrid[i];
    if (t > 0 && std::abs(chi[i]) > 0) {
      xs.push_back(t * t * std::log(1.0 / t));
      ys.push_back(std::log(std::abs(chi[i])));
    }
  }
  json r;
  r["count"] = data.count;
  r["chi"] = rows;
  if (xs.size() >= 2) {
    LinFit f = linear_fit(xs, ys);
    r["shape_fit"] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
  }
  if (!cfg.csv_path.empty()) {
    std::ofstream csv(cfg.csv_path);
    if (!csv) throw std::invalid_argument("cannot open " + cfg.csv_path);
    csv << "t,re,im,abs\r\n";
    for (size_t i = 0; i < tgrid.size(); ++i)
      csv << tgrid[i] << "," << chi[i].real() << "," << chi[i].imag() << ","
          << std::abs(chi[i]) << "\r\n";
  }
  return r;
}

json run_ulam(const RunConfig& cfg) {
  UlamOptions opt{cfg.grid, cfg.cutoff, cfg.samples, cfg.seed, effective_threads(cfg)};
  json r;
  if (cfg.s == 1.0 && cfg.t == 0.0) {
    UlamOperator op = ulam_build(cfg.D, opt);
    EigenResult e = leading_eigen(op);
    SymmetryDefect sym = density_symmetry_defect(op.grid, e.density);
    TwoStepCache cache = two_step_cache(cfg.D, opt);
    EigenResult e2 = leading_eigen(ulam_twisted(cache, 1.0, 0.0));
    double A = a_constant(cache, e2.density);
    r["lambda"] = e.lambda.real();
    r["iterations"] = e.iterations;
    r["escape_mass"] = op.escape_mass;
    r["A_log_inv_T"] = A;
    r["two_step_escape_mass"] = cache.escape_mass;
    r["density_symmetry_defect_neg"] = sym.neg_l1;
    r["density_symmetry_defect_conj"] = sym.conj_l1;
    r["active_cells"] = op.grid.active();
    {
      std::vector<double> dens(op.grid.active());
      for (int i = 0; i < op.grid.active(); ++i) dens[i] = e.density.value(op.grid, i);
      Histogram h = histogram_fd(dens, 64);
      json bins = json::array();
      for (size_t i = 0; i < h.bins.size(); ++i)
        bins.push_back({{"lo", h.lo + i * h.width},
                        {"hi", h.lo + (i + 1) * h.width},
                        {"count", h.bins[i]}});
      r["density_histogram"] = bins;
    }
    if (!cfg.csv_path.empty()) {
      std::ofstream csv(cfg.csv_path);
      if (!csv) throw std::invalid_argument("cannot open " + cfg.csv_path);
      csv << "x,y,mass,density\r\n";
      for (int i = 0; i < op.grid.active(); ++i) {
        double x, y;
        op.grid.box_center(i, x, y);
        csv << x << "," << y << "," << e.density.mass[i] << ","
            << e.density.value(op.grid, i) << "\r\n";
      }
    }
  } else {
    TwoStepCache cache = two_step_cache(cfg.D, opt);
    EigenResult e = leading_eigen(ulam_twisted(cache, cfg.s, cfg.t));
    r["lambda_re"] = e.lambda.real();
    r["lambda_im"] = e.lambda.imag();
    r["lambda_abs"] = std::abs(e.lambda);
    r["iterations"] = e.iterations;
    r["escape_mass"] = cache.escape_mass;
  }
  return r;
}

json run_levelsets(const RunConfig& cfg) {
  UlamOptions opt{cfg.grid, cfg.cutoff, cfg.samples, cfg.seed, effective_threads(cfg)};
  UlamOperator op = ulam_build(cfg.D, opt);
  EigenResult e = leading_eigen(op);
  auto hist = mu_level_histogram(op.grid, e.density, cfg.nmax);
  json rows = json::array();
  for (long long n = 1; n <= cfg.nmax; ++n) {
    double mp = hist.count(n) ? hist.at(n) : 0.0;
    double mm = hist.count(-n) ? hist.at(-n) : 0.0;
    rows.push_back({{"n", n},
                    {"mu_Vn", mp},
                    {"mu_V-n", mm},
                    {"ratio", mm > 0 ? mp / mm : 0.0},
                    {"n3_mu", double(n) * n * n * mp}});
  }
  double total = 0;
  for (auto& [n, v] : hist) total += v;
  json r;
  r["levels"] = rows;
  r["mass_total"] = total;
  r["lambda"] = e.lambda.real();
  LevelSumResult ls = level_sum(cfg.D, 10, 1000000);
  r["coefficient_sum_n10"] = {{"sum", ls.sum},
                              {"comparator", ls.comparator},
                              {"rel_dev", ls.rel_dev},
                              {"abs_dev_scaled", ls.abs_dev_scaled}};
  if (!cfg.csv_path.empty()) {
    std::ofstream csv(cfg.csv_path);
    if (!csv) throw std::invalid_argument("cannot open " + cfg.csv_path);
    csv << "n,mu_Vn,mu_Vminus_n,n3_mu\r\n";
    for (long long n = 1; n <= cfg.nmax; ++n) {
      double mp = hist.count(n) ? hist.at(n) : 0.0;
      double mm = hist.count(-n) ? hist.at(-n) : 0.0;
      csv << n << "," << mp << "," << mm << "," << double(n) * n * n * mp << "\r\n";
    }
  }
  return r;
}

json run_s0curve(const RunConfig& cfg) {
  std::vector<double> tgrid =
      cfg.tgrid.empty() ? default_tgrid() : parse_tgrid(cfg.tgrid);
  UlamOptions opt{cfg.grid, cfg.cutoff, cfg.samples, cfg.seed, effective_threads(cfg)};
  TwoStepCache cache = two_step_cache(cfg.D, opt);
  EigenResult base = leading_eigen(ulam_twisted(cache, 1.0, 0.0));
  double A = a_constant(cache, base.density);
  json rows = json::array();
  std::vector<double> xs, ys;
  std::ofstream csv;
  if (!cfg.csv_path.empty()) {
    csv.open(cfg.csv_path);
    if (!csv) throw std::invalid_argument("cannot open " + cfg.csv_path);
    csv << "t,s0,osc_re,osc_im\r\n";
  }
  for (double t : tgrid) {
    S0Result s0 = s0_solve(cache, t);
    std::complex<double> osc = osc_integral(cache, base.density, t);
    rows.push_back({{"t", t},
                    {"s0", s0.s0},
                    {"osc_re", osc.real()},
                    {"osc_im", osc.imag()},
                    {"flagged", s0.flagged},
                    {"max_im_lambda", s0.max_im_lambda}});
    if (csv.is_open())
      csv << t << "," << s0.s0 << "," << osc.real() << "," << osc.imag() << "\r\n";
    if (t > 0) {
      xs.push_back(t * t * std::log(1.0 / t));
      ys.push_back(s0.s0 - 1.0);
    }
  }
  json r;
  r["A_log_inv_T"] = A;
  r["escape_mass"] = cache.escape_mass;
  r["points"] = rows;
  if (xs.size() >= 2) {
    LinFit f = linear_fit(xs, ys);
    r["s0_shape_fit"] = {{"slope", f.slope}, {"intercept", f.intercept}, {"r2", f.r2}};
  }
  return r;
}

json run_vardi(const RunConfig& cfg) {
  if (cfg.Q < 2) throw std::invalid_argument("vardi needs Q >= 2");
  VardiReport rep = vardi_contrast(cfg.Q);
  json r;
  r["Q"] = rep.Q;
  r["count"] = rep.count;
  r["ks_cauchy"] = rep.ks_cauchy;
  r["ks_gauss_best"] = rep.ks_gauss_best;
  r["excess_kurtosis"] = rep.excess_kurtosis;
  r["median"] = rep.median;
  if (rep.ks_cauchy >= rep.ks_gauss_best)
    throw std::logic_error("contract violation: Cauchy KS " + std::to_string(rep.ks_cauchy) +
                           " not below best Gaussian KS " + std::to_string(rep.ks_gauss_best) +
                           " at Q=" + std::to_string(rep.Q) +
                           " (the Cauchy limit needs larger Q)");
  return r;
}

}  // namespace

std::vector<double> parse_tgrid(const std::string& spec) {
  // "a:b:step"
  double a, b, step;
  char c1, c2;
  std::istringstream is(spec);
  if (!(is >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
    throw std::invalid_argument("bad tgrid spec '" + spec + "', want a:b:step");
  std::vector<double> out;
  for (double t = a; t <= b + step * 1e-9; t += step) out.push_back(t);
  if (out.empty()) throw std::invalid_argument("empty tgrid");
  return out;
}

DistributionData collect_distribution(int D, long long X, bool include_zero, int threads) {
  if (X > (1LL << 31) - 1) throw std::invalid_argument("X too large");
  DistributionData total;
  total.D = D;
  total.X = X;
  if (threads < 1) threads = 1;
  std::vector<DistributionData> parts(threads);
  FareyQuery q{D, X, include_zero};
  for_each_farey_parallel(q, threads, [&](int w, const QuadInt& a, const QuadInt& b) {
    DistributionData& part = parts[w];
    SczechSample s = sczech_sample(KElem::from_reduced(a, b));
    double dt = static_cast<double>(s.Dtilde);
    double sc = static_cast<double>(s.S);
    part.values_Dt.push_back(dt);
    part.values_S.push_back(sc);
    part.height_sq.push_back(static_cast<int32_t>(static_cast<long long>(s.height_sq)));
    part.im_pos.push_back(s.z.to_point().y > 0 ? 1 : 0);
    part.exact_Dt.add(s.Dtilde);
    part.max_gap = std::max(part.max_gap, std::abs(sc - dt));
    long long si = rat_to_int(s.S);
    part.s_hist.add(si);
    part.spectrum.add(static_cast<long long>(s.height_sq), si);
    ++part.count;
  });
  for (auto& p : parts) {
    total.count += p.count;
    total.values_Dt.insert(total.values_Dt.end(), p.values_Dt.begin(), p.values_Dt.end());
    total.values_S.insert(total.values_S.end(), p.values_S.begin(), p.values_S.end());
    total.height_sq.insert(total.height_sq.end(), p.height_sq.begin(), p.height_sq.end());
    total.im_pos.insert(total.im_pos.end(), p.im_pos.begin(), p.im_pos.end());
    total.exact_Dt.merge(p.exact_Dt);
    total.s_hist.merge(p.s_hist);
    total.spectrum.merge(p.spectrum);
    total.max_gap = std::max(total.max_gap, p.max_gap);
  }
  return total;
}

int run(const RunConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  json results;
  try {
    if (cfg.subcommand == "cf")
      results = run_cf(cfg);
    else if (cfg.subcommand == "sczech")
      results = run_sczech(cfg);
    else if (cfg.subcommand == "classical")
      results = run_classical(cfg);
    else if (cfg.subcommand == "enumerate")
      results = run_enumerate(cfg);
    else if (cfg.subcommand == "distribution")
      results = run_distribution(cfg);
    else if (cfg.subcommand == "charfn")
      results = run_charfn(cfg);
    else if (cfg.subcommand == "ulam")
      results = run_ulam(cfg);
    else if (cfg.subcommand == "levelsets")
      results = run_levelsets(cfg);
    else if (cfg.subcommand == "s0curve")
      results = run_s0curve(cfg);
    else if (cfg.subcommand == "vardi")
      results = run_vardi(cfg);
    else
      throw std::invalid_argument("unknown subcommand '" + cfg.subcommand + "'");
  } catch (const std::invalid_argument& e) {
    json err{{"error", e.what()}, {"kind", "config"}};
    std::cerr << err.dump() << "\n";
    return 2;
  } catch (const NonConvergence& e) {
    json err{{"error", e.what()}, {"kind", "non_convergence"}};
    std::cerr << err.dump() << "\n";
    return 4;
  } catch (const std::logic_error& e) {
    json err{{"error", e.what()}, {"kind", "contract"}};
    std::cerr << err.dump() << "\n";
    return 3;
  }
  double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  emit_report(cfg, std::move(results), wall_ms);
  return 0;
}

}  // namespace eds
