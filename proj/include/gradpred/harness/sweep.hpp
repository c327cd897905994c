#pragma once

// Greedy hyperparameter sweep. Every phase keeps the previous winners fixed
// and selects by predicted-source success throughput (or per source where a
// phase tunes both). Phase 3 runs as three stages: PGD step size, RS-FGSM
// multiplier, PGD step count.

#include "gradpred/harness/bench.hpp"

#include <ostream>
#include <string>
#include <vector>

namespace gradpred::harness {

struct SweepRow {
  std::string phase;
  PredictorSpec predictor;
  std::string step_rule;      // empty unless PGD
  std::string rs_multiplier;  // empty unless RS-FGSM
  RunRecord record;
};

struct SourceWinners {
  StepRule pgd_step;
  double rs_multiplier = 1.25;
  std::size_t pgd_steps = 1;
};

struct SweepResult {
  PredictorSpec predictor;
  double eps_linf = 0.0;
  double eps_l2 = 0.0;
  SourceWinners exact;
  SourceWinners predicted;
  std::vector<SweepRow> rows;
};

/// Index of the row with the largest success throughput; first wins ties.
inline std::size_t best_row(const std::vector<SweepRow>& rows, std::size_t begin, std::size_t end) {
  require(begin < end && end <= rows.size(), "best_row: empty phase");
  std::size_t best = begin;
  for (std::size_t i = begin + 1; i < end; ++i)
    if (rows[i].record.succ_throughput > rows[best].record.succ_throughput) best = i;
  return best;
}

inline DatasetSpec tuning_split(const BenchmarkConfig& cfg) {
  DatasetSpec d = cfg.dataset;
  d.size = cfg.sweep.tuning_size;
  d.seed = cfg.sweep.tuning_seed;
  return d;
}

inline SweepResult sweep(const BenchmarkConfig& cfg) {
  using attacks::GradSource;
  using attacks::Method;
  using attacks::Norm;
  cfg.validate();
  const auto& sw = cfg.sweep;
  const auto net = diffnet::build_network(cfg.network);
  const auto tune = synth_dataset(tuning_split(cfg), net);
  const auto test = synth_dataset(cfg.dataset, net);
  if (id_overlap(tune, test) != 0)
    throw std::invalid_argument("sweep: tuning split overlaps the test split; use distinct seeds");
  const auto train = synth_dataset(predictor_split(cfg), net);
  if (id_overlap(train, tune) != 0)
    throw std::invalid_argument("sweep: predictor training split overlaps the tuning split; use distinct seeds");
  const auto opt = cell_options(cfg);

  SweepResult res;
  auto base_spec = [&](Method m, Norm n, double eps, GradSource src) {
    attacks::AttackSpec s;
    s.method = m;
    s.norm = n;
    s.eps = eps;
    s.grad_source = src;
    s.seed = cfg.seed;
    s.rs_multiplier = cfg.grid.rs_multiplier;
    return s;
  };
  auto add = [&](const std::string& phase, const PredictorSpec& p, const attacks::AttackSpec& s,
                 const gradpredict::GradientPredictor* pred, const std::string& rule = {}) {
    const std::string rs = s.method == Method::rs_fgsm ? fmt_double(s.rs_multiplier) : std::string();
    res.rows.push_back({phase, p, rule, rs, run_cell(s, net, pred, tune, opt)});
  };

  // Phase 1: layer x K x decay at fixed eps. Decay is irrelevant when K = 0.
  std::size_t begin = res.rows.size();
  std::vector<PredictorSpec> specs;
  for (std::size_t layer : sw.layers)
    for (std::size_t k : sw.aug_steps)
      for (double decay : sw.decays) {
        PredictorSpec p = cfg.predictor;
        p.layer = layer;
        p.aug_steps = k;
        p.decay = decay;
        specs.push_back(p);
        if (k == 0) break;
      }
  for (const auto& p : specs) {
    const auto pred = fit_predictor(net, train, p, cfg.threads);
    add("1", p, base_spec(Method::fgsm, Norm::linf, sw.phase1_eps, GradSource::predicted), &pred);
  }
  res.predictor = res.rows[best_row(res.rows, begin, res.rows.size())].predictor;
  const auto pred = fit_predictor(net, train, res.predictor, cfg.threads);

  // Phase 2: eps per norm.
  begin = res.rows.size();
  for (double eps : sw.eps_linf) add("2", res.predictor, base_spec(Method::fgsm, Norm::linf, eps, GradSource::predicted), &pred);
  res.eps_linf = res.rows[best_row(res.rows, begin, res.rows.size())].record.eps;
  begin = res.rows.size();
  for (double eps : sw.eps_l2) add("2", res.predictor, base_spec(Method::fgm, Norm::l2, eps, GradSource::predicted), &pred);
  res.eps_l2 = res.rows[best_row(res.rows, begin, res.rows.size())].record.eps;

  for (GradSource src : {GradSource::exact, GradSource::predicted}) {
    SourceWinners& win = src == GradSource::exact ? res.exact : res.predicted;
    const gradpredict::GradientPredictor* p = src == GradSource::exact ? nullptr : &pred;

    // 3a: PGD step size at a fixed step count.
    begin = res.rows.size();
    for (const auto& rule : sw.step_rules) {
      auto s = base_spec(Method::pgd, Norm::linf, res.eps_linf, src);
      s.steps = sw.phase3_steps;
      s.step_size = rule.step_size(s.eps, s.steps);
      add("3a", res.predictor, s, p, rule.label());
    }
    win.pgd_step = sw.step_rules[best_row(res.rows, begin, res.rows.size()) - begin];

    // 3b: RS-FGSM step multiplier.
    begin = res.rows.size();
    for (double mult : sw.rs_multipliers) {
      auto s = base_spec(Method::rs_fgsm, Norm::linf, res.eps_linf, src);
      s.rs_multiplier = mult;
      add("3b", res.predictor, s, p);
    }
    win.rs_multiplier = sw.rs_multipliers[best_row(res.rows, begin, res.rows.size()) - begin];

    // 3c: PGD step-count frontier.
    begin = res.rows.size();
    for (std::size_t n : sw.frontier_steps) {
      auto s = base_spec(Method::pgd, Norm::linf, res.eps_linf, src);
      s.steps = n;
      s.step_size = win.pgd_step.step_size(s.eps, n);
      add("3c", res.predictor, s, p, win.pgd_step.label());
    }
    win.pgd_steps = sw.frontier_steps[best_row(res.rows, begin, res.rows.size()) - begin];
  }
  return res;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& r) {
  os << "phase,layer,aug_steps,decay,step_rule,rs_multiplier," << kRecordHeader << '\n';
  for (const auto& row : r.rows) {
    os << row.phase << ',' << row.predictor.layer << ',' << row.predictor.aug_steps << ','
       << fmt_double(row.predictor.decay) << ',' << row.step_rule << ','
       << row.rs_multiplier << ',';
    write_record_row(os, row.record);
  }
}

inline json sweep_winners_json(const SweepResult& r) {
  auto src = [](const SourceWinners& w) {
    return json{{"pgd_step", w.pgd_step.label()}, {"rs_multiplier", w.rs_multiplier}, {"pgd_steps", w.pgd_steps}};
  };
  return json{{"predictor",
               {{"layer", r.predictor.layer},
                {"aug_steps", r.predictor.aug_steps},
                {"decay", r.predictor.decay},
                {"aug_eps", r.predictor.aug_eps},
                {"lambda", r.predictor.lambda}}},
              {"eps_linf", r.eps_linf},
              {"eps_l2", r.eps_l2},
              {"exact", src(r.exact)},
              {"predicted", src(r.predicted)}};
}

}  // namespace gradpred::harness
