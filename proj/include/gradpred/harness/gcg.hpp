#pragma once

// Token-level experiment: fit a suffix-gradient predictor on augmented GCG
// trajectories, then compare exact and predicted GCG on held-out prompts.

#include "gradpred/harness/config.hpp"
#include "gradpred/harness/metrics.hpp"
#include "gradpred/tokenattack.hpp"

#include <fstream>
#include <ostream>
#include <vector>

namespace gradpred::harness {

struct GcgPromptResult {
  tokenattack::GcgRun exact;
  tokenattack::GcgRun predicted;
};

struct GcgExperiment {
  std::vector<GcgPromptResult> prompts;
  std::vector<double> overlap;  // one value per (state, position)
  double overlap_mean = 0.0;
  double overlap_se = 0.0;
  double chance = 0.0;  // k / V
  std::size_t train_samples = 0;

  double z() const { return overlap_se > 0.0 ? (overlap_mean - chance) / overlap_se : 0.0; }
};

inline tokenattack::GcgConfig gcg_config(const GcgSpec& g, std::uint64_t seed, std::size_t threads) {
  tokenattack::GcgConfig c;
  c.steps = g.steps;
  c.k = g.k;
  c.batch_size = g.batch_size;
  c.suffix_len = g.suffix_len;
  c.filler = g.filler;
  c.seed = seed;
  c.threads = threads;
  return c;
}

inline std::vector<tokenattack::PromptPair> gcg_prompts(const GcgSpec& g, const tokenattack::ToyLM& lm,
                                                        std::uint64_t seed) {
  const std::size_t need = g.train_prompts + g.test_prompts;
  if (g.prompts_file.empty()) return tokenattack::synth_prompts(lm, need, g.prompt_len, g.target_len, seed);
  std::ifstream in(g.prompts_file);
  if (!in) throw std::runtime_error("cannot open prompts file: " + g.prompts_file);
  auto p = tokenattack::read_prompts(in);
  if (p.size() < need)
    throw std::runtime_error("prompts file has " + std::to_string(p.size()) + " pairs, need " + std::to_string(need));
  p.resize(need);
  return p;
}

inline tokenattack::SuffixPredictor fit_suffix_predictor(const tokenattack::ToyLM& lm,
                                                         const std::vector<tokenattack::PromptPair>& train,
                                                         const GcgSpec& g, std::uint64_t seed, std::size_t threads,
                                                         std::size_t* sample_count = nullptr) {
  auto cfg = gcg_config(g, derive_seed(seed, 0xa06), threads);
  cfg.steps = g.aug_steps;
  const auto samples = tokenattack::trajectory_augment(lm, train, cfg, g.variants, static_cast<int>(g.tap));
  if (sample_count) *sample_count = samples.size();
  const auto st = gradpredict::fit_standardizer(samples);
  return {gradpredict::fit_ridge(samples, st, g.lambda), static_cast<int>(g.tap)};
}

inline GcgExperiment run_gcg_experiment(const GcgSpec& g, std::uint64_t seed, std::size_t threads) {
  using namespace tokenattack;
  require(g.train_prompts >= 1 && g.test_prompts >= 1, "gcg: need at least one train and one test prompt");
  require(g.tap <= 2, "gcg: tap must be 0, 1 or 2");
  const ToyLM lm = build_lm(g.lm);
  const auto all = gcg_prompts(g, lm, seed);
  const std::vector<PromptPair> train(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(g.train_prompts));
  const std::vector<PromptPair> test(all.begin() + static_cast<std::ptrdiff_t>(g.train_prompts), all.end());

  GcgExperiment ex;
  const auto pred = fit_suffix_predictor(lm, train, g, seed, threads, &ex.train_samples);
  const auto cfg = gcg_config(g, seed, threads);
  for (const auto& p : test) {
    GcgPromptResult r;
    r.exact = run_gcg(lm, p.prompt, p.target, cfg, GradSource::exact);
    r.predicted = run_gcg(lm, p.prompt, p.target, cfg, GradSource::predicted, &pred);
    ex.prompts.push_back(std::move(r));

    // Candidate overlap at every state of an exact trajectory.
    SuffixState s = make_state(lm, p.prompt, filler_suffix(cfg), p.target);
    const auto exact_grad = exact_suffix_gradient(lm);
    for (std::size_t i = 0; i < cfg.steps; ++i) {
      const auto ce = build_candidates(exact_grad(s), lm.E, s.a, cfg.k);
      const auto cp = build_candidates(pred.predict(lm, s), lm.E, s.a, cfg.k);
      for (double o : candidate_overlap(ce, cp)) ex.overlap.push_back(o);
      Rng rng(derive_seed(cfg.seed, i));
      s = select_best(lm, s, sample_batch(ce, cfg.batch_size, rng), cfg.threads);
    }
  }
  ex.chance = static_cast<double>(g.k) / static_cast<double>(g.lm.vocab);
  if (!ex.overlap.empty()) {
    const auto ms = mean_stderr(ex.overlap);
    ex.overlap_mean = ms.mean;
    ex.overlap_se = ms.se;
  }
  return ex;
}

/// Per-step loss curves: prompt, source, step, loss.
inline void write_gcg_losses(std::ostream& os, const GcgExperiment& ex) {
  os << "prompt,grad_source,step,loss\n";
  for (std::size_t p = 0; p < ex.prompts.size(); ++p)
    for (const auto* run : {&ex.prompts[p].exact, &ex.prompts[p].predicted})
      for (std::size_t i = 0; i < run->losses.size(); ++i)
        os << p << ',' << (run == &ex.prompts[p].exact ? "exact" : "predicted") << ',' << i << ','
           << fmt_double(run->losses[i]) << '\n';
}

inline json gcg_summary_json(const GcgExperiment& ex) {
  double fe = 0, fp = 0;
  std::int64_t te = 0, tp = 0;
  std::uint64_t be = 0, bp = 0;
  for (const auto& r : ex.prompts) {
    fe += r.exact.losses.back();
    fp += r.predicted.losses.back();
    te += r.exact.gen_time_ns;
    tp += r.predicted.gen_time_ns;
    be += r.exact.backward_passes;
    bp += r.predicted.backward_passes;
  }
  const double n = static_cast<double>(std::max<std::size_t>(ex.prompts.size(), 1));
  return json{{"prompts", ex.prompts.size()},
              {"train_samples", ex.train_samples},
              {"overlap_mean", ex.overlap_mean},
              {"overlap_se", ex.overlap_se},
              {"chance", ex.chance},
              {"overlap_z", ex.z()},
              {"final_loss_exact", fe / n},
              {"final_loss_predicted", fp / n},
              {"gen_time_ns_exact", te},
              {"gen_time_ns_predicted", tp},
              {"backward_passes_exact", be},
              {"backward_passes_predicted", bp}};
}

}  // namespace gradpred::harness
