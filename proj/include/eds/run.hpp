#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eds/sczech.hpp"
#include "eds/stats.hpp"

// Experiment entry points: one RunConfig per invocation, echoed verbatim
// into every artifact. Exit codes: 0 ok, 2 config error, 3 contract
// violation, 4 numerical non-convergence.

namespace eds {

struct RunConfig {
  std::string subcommand;
  int D = 2;
  long long X = 0;
  long long Q = 0;
  int grid = 128;
  double cutoff = 400;
  int samples = 600;
  uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  std::string csv_path;
  std::string json_path;  // empty = stdout
  bool include_zero = true;
  std::string stat = "Dt";  // "Dt" or "S"
  bool with_ks = false;
  bool with_moments = false;
  double s = 1.0, t = 0.0;
  std::string tgrid;  // "a:b:step"
  long long nmax = 15;
  std::vector<std::string> args;  // subcommand positionals
};

int run(const RunConfig& cfg);

// Shared distribution sweep: one pass over K_{.,D}(X) collecting exact and
// floating summaries of every sample.
struct DistributionData {
  int D = 2;
  long long X = 0;
  uint64_t count = 0;
  std::vector<double> values_Dt;
  std::vector<double> values_S;
  std::vector<int32_t> height_sq;
  std::vector<uint8_t> im_pos;  // Im z > 0
  ExactMoments exact_Dt;
  SHistogram s_hist;
  HeightSpectrum spectrum;
  double max_gap = 0;  // max |S - Dtilde| seen
};
DistributionData collect_distribution(int D, long long X, bool include_zero, int threads);

std::vector<double> parse_tgrid(const std::string& spec);

}  // namespace eds
