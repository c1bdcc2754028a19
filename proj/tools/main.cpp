#include <CLI11.hpp>

#include "eds/run.hpp"

// Command-line front end: one subcommand per experiment, everything routed
// through eds::run with the full configuration echoed into the artifacts.

int main(int argc, char** argv) {
  CLI::App app{"Hurwitz continued fractions and elliptic Dedekind sums over Q(sqrt(-D))"};
  app.require_subcommand(1);

  eds::RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--json", cfg.json_path, "write the JSON report here instead of stdout");
    sub->add_option("--threads", cfg.threads, "worker threads (0 = all cores)");
  };
  auto add_ulam_opts = [&](CLI::App* sub) {
    sub->add_option("--grid", cfg.grid, "Ulam grid resolution (even, >= 16)");
    sub->add_option("--cutoff", cfg.cutoff, "max digit norm retained");
    sub->add_option("--samples", cfg.samples, "samples per grid cell");
    sub->add_option("--seed", cfg.seed, "RNG seed");
  };

  std::string a1, a2;

  auto* cf = app.add_subcommand("cf", "continued fraction expansion of num/den");
  cf->add_option("D", cfg.D)->required();
  cf->add_option("num", a1)->required();
  cf->add_option("den", a2)->required();
  add_common(cf);

  auto* sz = app.add_subcommand("sczech", "normalized elliptic sum of a/c");
  sz->add_option("D", cfg.D)->required();
  sz->add_option("a", a1)->required();
  sz->add_option("c", a2)->required();
  add_common(sz);

  auto* cl = app.add_subcommand("classical", "classical Dedekind sum s(h,k)");
  cl->add_option("numer", a1, "h")->required();
  cl->add_option("denom", a2, "k")->required();
  add_common(cl);

  auto* en = app.add_subcommand("enumerate", "enumerate the Farey set K_D(X)");
  en->add_option("D", cfg.D)->required();
  en->add_option("X", cfg.X)->required();
  en->add_option("--csv", cfg.csv_path, "per-point CSV output");
  en->add_flag("--no-zero", [&](int64_t) { cfg.include_zero = false; }, "exclude z = 0");
  add_common(en);

  auto* di = app.add_subcommand("distribution", "distribution of the normalized sums");
  di->add_option("D", cfg.D)->required();
  di->add_option("X", cfg.X)->required();
  di->add_option("--stat", cfg.stat, "Dt or S")->check(CLI::IsMember({"Dt", "S"}));
  di->add_option("--csv", cfg.csv_path, "histogram CSV output");
  di->add_flag("--ks", cfg.with_ks, "report KS distances");
  di->add_flag("--moments", cfg.with_moments, "report moments");
  di->add_flag("--no-zero", [&](int64_t) { cfg.include_zero = false; }, "exclude z = 0");
  add_common(di);

  auto* ch = app.add_subcommand("charfn", "empirical characteristic function of S");
  ch->add_option("D", cfg.D)->required();
  ch->add_option("X", cfg.X)->required();
  ch->add_option("--tgrid", cfg.tgrid, "a:b:step (default 0.02:0.2:0.02)");
  ch->add_option("--csv", cfg.csv_path, "CSV output");
  add_common(ch);

  auto* ul = app.add_subcommand("ulam", "transfer-operator discretization");
  ul->add_option("D", cfg.D)->required();
  add_ulam_opts(ul);
  ul->add_option("--s", cfg.s, "twist exponent");
  ul->add_option("--t", cfg.t, "twist frequency");
  ul->add_option("--csv", cfg.csv_path, "density CSV output");
  add_common(ul);

  auto* lv = app.add_subcommand("levelsets", "level-set masses mu(V_n)");
  lv->add_option("D", cfg.D)->required();
  lv->add_option("--nmax", cfg.nmax, "largest |n| reported");
  add_ulam_opts(lv);
  lv->add_option("--csv", cfg.csv_path, "CSV output");
  add_common(lv);

  auto* s0 = app.add_subcommand("s0curve", "implicit root s0(t) and oscillatory integral");
  s0->add_option("D", cfg.D)->required();
  s0->add_option("--tgrid", cfg.tgrid, "a:b:step (default 0.02:0.2:0.02)");
  add_ulam_opts(s0);
  s0->add_option("--csv", cfg.csv_path, "CSV output");
  add_common(s0);

  auto* va = app.add_subcommand("vardi", "classical Cauchy-contrast experiment");
  va->add_option("Q", cfg.Q)->required();
  add_common(va);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? 2 : 0;
  }

  cfg.subcommand = app.get_subcommands().front()->get_name();
  if (!a1.empty() || !a2.empty()) cfg.args = {a1, a2};
  return eds::run(cfg);
}
