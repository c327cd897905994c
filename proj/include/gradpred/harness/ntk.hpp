#pragma once

// Full ntklab report: kernel suite, width sweep and a conditioning check.

#include "gradpred/harness/config.hpp"
#include "gradpred/ntklab.hpp"

#include <string>

namespace gradpred::harness {

inline ntklab::CheckReport ntk_check(const NtkSpec& spec, std::uint64_t seed, std::size_t threads) {
  using namespace ntklab;
  NtkSuiteConfig suite = spec.suite;
  suite.seed = seed;
  suite.threads = threads;
  CheckReport rep = run_ntk_suite(suite);

  if (spec.run_sweep) {
    SweepConfig sw = spec.sweep;
    sw.seed = derive_seed(seed, 0x5ee9);
    sw.threads = threads;
    const auto rows = affine_exactness_sweep(sw);
    CheckRecord r;
    r.name = "width sweep inversions";
    r.statistic = static_cast<double>(count_inversions(rows));
    r.threshold = 1.0;
    r.pass = r.statistic <= r.threshold;
    rep.records.push_back(r);
    for (const auto& w : rows) {
      CheckRecord info;
      info.name = "width sweep residual m=" + std::to_string(w.width);
      info.statistic = w.residual;
      info.stderr_ = w.residual_se;
      info.threshold = 1.0;
      info.pass = w.residual < 1.0;
      rep.records.push_back(info);
    }
  }

  if (spec.conditioning_samples > 0) {
    const auto model = random_joint_gaussian(3, 2, derive_seed(seed, 0xc0d));
    auto check = sample_conditional_mean(model, model.mu_h + Vec::Constant(3, 0.3), 0.5, spec.conditioning_samples,
                                         derive_seed(seed, 0xc0e));
    prefix_names(check.report, "conditioning ");
    rep.append(check.report);
  }
  return rep;
}

inline json check_report_json(const ntklab::CheckReport& rep) {
  json recs = json::array();
  for (const auto& r : rep.records)
    recs.push_back({{"name", r.name},
                    {"statistic", r.statistic},
                    {"stderr", r.stderr_},
                    {"threshold", r.threshold},
                    {"pass", r.pass},
                    {"expect_pass", r.expect_pass},
                    {"as_expected", r.as_expected()}});
  return json{{"as_expected", rep.as_expected()}, {"records", recs}};
}

}  // namespace gradpred::harness
