#pragma once

#include "gradpred/attacks.hpp"
#include "gradpred/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace gradpred::harness {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Linear-interpolation quantile of sorted data (R type 7).
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  require(!sorted.empty(), "quantile_sorted: empty input");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(pos));
  if (i + 1 >= sorted.size()) return sorted.back();
  const double frac = pos - static_cast<double>(i);
  return sorted[i] + frac * (sorted[i + 1] - sorted[i]);
}

/// Percentile bootstrap for the success rate: B resamples of the per-example
/// indicators with replacement.
inline Interval bootstrap_ci(const std::vector<char>& successes, std::size_t resamples, double level,
                             std::uint64_t seed) {
  require(!successes.empty(), "bootstrap_ci: empty sample");
  require(resamples >= 1, "bootstrap_ci: B must be >= 1");
  require(level > 0.0 && level < 1.0, "bootstrap_ci: level must lie in (0, 1)");
  const std::size_t n = successes.size();
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<double> stats(resamples);
  for (auto& s : stats) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) hits += successes[pick(rng)] ? 1 : 0;
    s = static_cast<double>(hits) / static_cast<double>(n);
  }
  std::sort(stats.begin(), stats.end());
  const double tail = (1.0 - level) / 2.0;
  return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

struct RunRecord {
  std::string method;
  std::string grad_source;
  std::string norm;
  double eps = 0.0;
  std::size_t steps = 1;
  double alpha = 0.0;
  double asr = 0.0;
  double asr_lo = 0.0;
  double asr_hi = 0.0;
  double pert_throughput = 0.0;
  double succ_throughput = 0.0;
  double succ_lo = 0.0;
  double succ_hi = 0.0;
  std::size_t n = 0;
  std::int64_t wall_ns = 0;
  std::uint64_t seed = 0;

  // Not serialized.
  std::vector<char> successes;
  std::uint64_t backward_passes = 0;
  std::uint64_t grad_calls = 0;
};

inline constexpr const char* kRecordHeader =
    "method,grad_source,norm,eps,steps,alpha,asr,asr_lo,asr_hi,pert_throughput,succ_throughput,succ_lo,succ_hi,n,"
    "wall_ns,seed";

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Fills the rate and throughput columns from per-example outcomes.
inline void finalize_record(RunRecord& r, std::int64_t wall_ns, std::size_t resamples, double level,
                            std::uint64_t bootstrap_seed) {
  require(!r.successes.empty(), "finalize_record: no outcomes");
  r.n = r.successes.size();
  r.wall_ns = std::max<std::int64_t>(wall_ns, 1);
  const auto hits = static_cast<std::size_t>(std::count(r.successes.begin(), r.successes.end(), char{1}));
  r.asr = static_cast<double>(hits) / static_cast<double>(r.n);
  const Interval ci = bootstrap_ci(r.successes, resamples, level, bootstrap_seed);
  r.asr_lo = ci.lo;
  r.asr_hi = ci.hi;
  r.pert_throughput = static_cast<double>(r.n) * 1e9 / static_cast<double>(r.wall_ns);
  r.succ_throughput = r.asr * r.pert_throughput;
  r.succ_lo = r.asr_lo * r.pert_throughput;
  r.succ_hi = r.asr_hi * r.pert_throughput;
}

inline void write_record_row(std::ostream& os, const RunRecord& r) {
  os << r.method << ',' << r.grad_source << ',' << r.norm << ',' << fmt_double(r.eps) << ',' << r.steps << ','
     << fmt_double(r.alpha) << ',' << fmt_double(r.asr) << ',' << fmt_double(r.asr_lo) << ',' << fmt_double(r.asr_hi)
     << ',' << fmt_double(r.pert_throughput) << ',' << fmt_double(r.succ_throughput) << ',' << fmt_double(r.succ_lo)
     << ',' << fmt_double(r.succ_hi) << ',' << r.n << ',' << r.wall_ns << ',' << r.seed << '\n';
}

inline void write_records_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kRecordHeader << '\n';
  for (const auto& r : records) write_record_row(os, r);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::vector<RunRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRecordHeader) throw std::runtime_error("records CSV: unexpected header");
  std::vector<RunRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto c = split_csv_line(line);
    if (c.size() != 16) throw std::runtime_error("records CSV line " + std::to_string(lineno) + ": expected 16 columns");
    try {
      RunRecord r;
      r.method = c[0];
      r.grad_source = c[1];
      r.norm = c[2];
      r.eps = std::stod(c[3]);
      r.steps = std::stoull(c[4]);
      r.alpha = std::stod(c[5]);
      r.asr = std::stod(c[6]);
      r.asr_lo = std::stod(c[7]);
      r.asr_hi = std::stod(c[8]);
      r.pert_throughput = std::stod(c[9]);
      r.succ_throughput = std::stod(c[10]);
      r.succ_lo = std::stod(c[11]);
      r.succ_hi = std::stod(c[12]);
      r.n = std::stoull(c[13]);
      r.wall_ns = std::stoll(c[14]);
      r.seed = std::stoull(c[15]);
      out.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw std::runtime_error("records CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  return out;
}

}  // namespace gradpred::harness
