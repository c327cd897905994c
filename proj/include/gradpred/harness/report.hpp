#pragma once

// Plot-ready tables derived from run records.

#include "gradpred/harness/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

namespace gradpred::harness {

enum class ReportKind { table, pareto, pgd, alpha, all };

inline ReportKind parse_report_kind(const std::string& s) {
  if (s == "table") return ReportKind::table;
  if (s == "pareto") return ReportKind::pareto;
  if (s == "pgd") return ReportKind::pgd;
  if (s == "alpha") return ReportKind::alpha;
  if (s == "all") return ReportKind::all;
  throw std::invalid_argument("unknown report kind: " + s + " (table|pareto|pgd|alpha|all)");
}

/// Main results table: one row per non-mixed record.
inline void write_main_table(std::ostream& os, const std::vector<RunRecord>& records) {
  os << "method,grad_source,norm,eps,steps,asr,asr_lo,asr_hi,pert_throughput,succ_throughput,succ_lo,succ_hi,n\n";
  for (const auto& r : records) {
    if (r.grad_source == "mixed") continue;
    os << r.method << ',' << r.grad_source << ',' << r.norm << ',' << fmt_double(r.eps) << ',' << r.steps << ','
       << fmt_double(r.asr) << ',' << fmt_double(r.asr_lo) << ',' << fmt_double(r.asr_hi) << ','
       << fmt_double(r.pert_throughput) << ',' << fmt_double(r.succ_throughput) << ',' << fmt_double(r.succ_lo)
       << ',' << fmt_double(r.succ_hi) << ',' << r.n << '\n';
  }
}

/// True for records that no other record beats on both ASR and success
/// throughput (at least as good on both, strictly better on one).
inline std::vector<bool> pareto_frontier(const std::vector<RunRecord>& records) {
  std::vector<bool> front(records.size(), true);
  for (std::size_t i = 0; i < records.size(); ++i)
    for (std::size_t j = 0; j < records.size() && front[i]; ++j) {
      const auto& a = records[i];
      const auto& b = records[j];
      if (b.asr >= a.asr && b.succ_throughput >= a.succ_throughput &&
          (b.asr > a.asr || b.succ_throughput > a.succ_throughput))
        front[i] = false;
    }
  return front;
}

inline void write_pareto(std::ostream& os, const std::vector<RunRecord>& records) {
  const auto front = pareto_frontier(records);
  os << "asr,succ_throughput,method,grad_source,norm,eps,steps,alpha,frontier\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    os << fmt_double(r.asr) << ',' << fmt_double(r.succ_throughput) << ',' << r.method << ',' << r.grad_source << ','
       << r.norm << ',' << fmt_double(r.eps) << ',' << r.steps << ',' << fmt_double(r.alpha) << ','
       << (front[i] ? 1 : 0) << '\n';
  }
}

/// PGD records grouped by (source, alpha, norm, eps) and ordered by N.
inline void write_pgd_scaling(std::ostream& os, const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> pgd;
  for (const auto& r : records)
    if (r.method == "PGD") pgd.push_back(&r);
  std::stable_sort(pgd.begin(), pgd.end(), [](const RunRecord* a, const RunRecord* b) {
    return std::tie(a->grad_source, a->alpha, a->norm, a->eps, a->steps) <
           std::tie(b->grad_source, b->alpha, b->norm, b->eps, b->steps);
  });
  os << "grad_source,alpha,norm,eps,steps,asr,asr_lo,asr_hi,succ_throughput,succ_lo,succ_hi,pert_throughput\n";
  for (const auto* r : pgd)
    os << r->grad_source << ',' << fmt_double(r->alpha) << ',' << r->norm << ',' << fmt_double(r->eps) << ','
       << r->steps << ',' << fmt_double(r->asr) << ',' << fmt_double(r->asr_lo) << ',' << fmt_double(r->asr_hi) << ','
       << fmt_double(r->succ_throughput) << ',' << fmt_double(r->succ_lo) << ',' << fmt_double(r->succ_hi) << ','
       << fmt_double(r->pert_throughput) << '\n';
}

/// Mixed-source records, one row per alpha within each attack setting.
inline void write_alpha_sweep(std::ostream& os, const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> mixed;
  for (const auto& r : records)
    if (r.grad_source == "mixed") mixed.push_back(&r);
  std::stable_sort(mixed.begin(), mixed.end(), [](const RunRecord* a, const RunRecord* b) {
    return std::tie(a->method, a->norm, a->eps, a->steps, a->alpha) <
           std::tie(b->method, b->norm, b->eps, b->steps, b->alpha);
  });
  os << "method,norm,eps,steps,alpha,asr,asr_lo,asr_hi,succ_throughput,succ_lo,succ_hi\n";
  for (const auto* r : mixed)
    os << r->method << ',' << r->norm << ',' << fmt_double(r->eps) << ',' << r->steps << ',' << fmt_double(r->alpha)
       << ',' << fmt_double(r->asr) << ',' << fmt_double(r->asr_lo) << ',' << fmt_double(r->asr_hi) << ','
       << fmt_double(r->succ_throughput) << ',' << fmt_double(r->succ_lo) << ',' << fmt_double(r->succ_hi) << '\n';
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  out << contents;
  out.close();
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

/// Writes the requested tables into `dir` and returns the paths written.
inline std::vector<std::filesystem::path> report(const std::vector<RunRecord>& records, ReportKind kind,
                                                 const std::filesystem::path& dir) {
  require(!records.empty(), "report: no records");
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](ReportKind k, const char* name, void (*fn)(std::ostream&, const std::vector<RunRecord>&)) {
    if (kind != ReportKind::all && kind != k) return;
    std::ostringstream os;
    fn(os, records);
    write_file(dir / name, os.str());
    written.push_back(dir / name);
  };
  emit(ReportKind::table, "main_table.csv", write_main_table);
  emit(ReportKind::pareto, "pareto.csv", write_pareto);
  emit(ReportKind::pgd, "pgd_scaling.csv", write_pgd_scaling);
  emit(ReportKind::alpha, "alpha_sweep.csv", write_alpha_sweep);
  return written;
}

}  // namespace gradpred::harness
