#pragma once

// Grid expansion, per-cell attack runs and record assembly.

#include "gradpred/attacks.hpp"
#include "gradpred/diffnet.hpp"
#include "gradpred/gradpredict.hpp"
#include "gradpred/harness/config.hpp"
#include "gradpred/harness/dataset.hpp"
#include "gradpred/harness/metrics.hpp"

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradpred::harness {

inline constexpr std::uint64_t kBootstrapStream = 0xb0075;

inline std::string describe(const attacks::AttackSpec& s) {
  std::string out = std::string(attacks::to_string(s.method)) + "/" + std::string(attacks::to_string(s.grad_source)) +
                    "/" + std::string(attacks::to_string(s.norm)) + " eps=" + fmt_double(s.eps) +
                    " steps=" + std::to_string(s.steps);
  if (s.grad_source == attacks::GradSource::mixed) out += " alpha=" + fmt_double(s.mix_alpha);
  return out;
}

/// Column value for alpha: the exact source is the alpha = 1 endpoint and the
/// predicted source the alpha = 0 endpoint.
inline double alpha_column(const attacks::AttackSpec& s) {
  switch (s.grad_source) {
    case attacks::GradSource::exact: return 1.0;
    case attacks::GradSource::predicted: return 0.0;
    case attacks::GradSource::mixed: return s.mix_alpha;
  }
  return 0.0;
}

struct CellOptions {
  ClockKind clock = ClockKind::wall;
  std::size_t warmup = 10;
  std::size_t threads = 1;
  BootstrapSpec bootstrap;
  std::uint64_t bootstrap_seed = 0;
};

namespace detail {

template <class Clock>
RunRecord run_cell_with(const attacks::AttackSpec& spec, const diffnet::Network& net,
                        const gradpredict::GradientPredictor* predictor, const std::vector<Example>& data,
                        const CellOptions& opt) {
  require(!data.empty(), "run_cell: empty dataset");
  for (std::size_t i = 0; i < opt.warmup; ++i)
    attacks::run_attack<Clock>(spec, net, predictor, data[i % data.size()], i % data.size());

  std::vector<attacks::AttackOutcome> outcomes(data.size());
  parallel_for(data.size(), opt.threads,
               [&](std::size_t i) { outcomes[i] = attacks::run_attack<Clock>(spec, net, predictor, data[i], i); });

  RunRecord r;
  r.method = std::string(attacks::to_string(spec.method));
  r.grad_source = std::string(attacks::to_string(spec.grad_source));
  r.norm = std::string(attacks::to_string(spec.norm));
  r.eps = spec.eps;
  r.steps = spec.steps;
  r.alpha = alpha_column(spec);
  r.seed = spec.seed;
  r.successes.resize(data.size());
  std::int64_t wall = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    r.successes[i] = outcomes[i].success ? 1 : 0;
    wall += outcomes[i].gen_time_ns;
    r.backward_passes += outcomes[i].backward_passes;
    r.grad_calls += outcomes[i].grad_calls;
  }
  finalize_record(r, wall, opt.bootstrap.resamples, opt.bootstrap.level, opt.bootstrap_seed);
  return r;
}

}  // namespace detail

/// Runs one grid cell: warm-up, then every example with its own derived
/// stream. Module errors are rethrown with the cell identity attached.
inline RunRecord run_cell(const attacks::AttackSpec& spec, const diffnet::Network& net,
                          const gradpredict::GradientPredictor* predictor, const std::vector<Example>& data,
                          const CellOptions& opt) {
  try {
    return opt.clock == ClockKind::work
               ? detail::run_cell_with<attacks::WorkClock>(spec, net, predictor, data, opt)
               : detail::run_cell_with<std::chrono::steady_clock>(spec, net, predictor, data, opt);
  } catch (const std::exception& e) {
    throw std::runtime_error("cell [" + describe(spec) + "]: " + e.what());
  }
}

/// Cells in a fixed order: method, norm, eps, steps, source, alpha.
inline std::vector<attacks::AttackSpec> expand_grid(const AttackGrid& g, std::uint64_t seed) {
  using attacks::GradSource;
  using attacks::Method;
  using attacks::Norm;
  std::vector<attacks::AttackSpec> cells;
  for (Method m : g.methods) {
    std::vector<Norm> norms = m == Method::pgd ? g.pgd_norms : std::vector<Norm>{attacks::default_norm(m)};
    for (Norm nrm : norms) {
      const auto& eps_list = nrm == Norm::linf ? g.eps_linf : g.eps_l2;
      for (double eps : eps_list) {
        std::vector<std::size_t> steps_list = m == Method::pgd ? g.pgd_steps : std::vector<std::size_t>{1};
        for (std::size_t steps : steps_list) {
          for (GradSource src : g.sources) {
            attacks::AttackSpec s;
            s.method = m;
            s.norm = nrm;
            s.eps = eps;
            s.steps = steps;
            s.step_size = m == Method::pgd ? g.pgd_step.step_size(eps, steps) : 0.0;
            s.rs_multiplier = g.rs_multiplier;
            s.grad_source = src;
            s.seed = seed;
            if (src == GradSource::mixed) {
              for (double a : g.alphas) {
                s.mix_alpha = a;
                cells.push_back(s);
              }
            } else {
              cells.push_back(s);
            }
          }
        }
      }
    }
  }
  return cells;
}

inline bool needs_predictor(const AttackGrid& g) {
  for (auto s : g.sources)
    if (s != attacks::GradSource::exact) return true;
  return false;
}

inline DatasetSpec predictor_split(const BenchmarkConfig& cfg) {
  DatasetSpec d = cfg.dataset;
  d.size = cfg.predictor.train_size;
  d.seed = cfg.predictor.seed;
  return d;
}

/// Fits the affine predictor on its own split. Never timed.
inline gradpredict::GradientPredictor fit_predictor(const diffnet::Network& net, const std::vector<Example>& train,
                                                    const PredictorSpec& p, std::size_t threads) {
  const auto samples = gradpredict::collect_samples(net, p.layer, train, p.aug_steps, p.aug_eps, p.decay, threads);
  const auto st = gradpredict::fit_standardizer(samples);
  return gradpredict::fit_ridge(samples, st, p.lambda, p.layer);
}

struct BenchContext {
  diffnet::Network net;
  std::vector<Example> test;
  std::vector<Example> train;
  std::optional<gradpredict::GradientPredictor> predictor;
};

inline CellOptions cell_options(const BenchmarkConfig& cfg) {
  CellOptions o;
  o.clock = cfg.clock;
  o.warmup = cfg.warmup;
  o.threads = cfg.threads;
  o.bootstrap = cfg.bootstrap;
  o.bootstrap_seed = derive_seed(cfg.seed, kBootstrapStream);
  return o;
}

inline BenchContext prepare(const BenchmarkConfig& cfg) {
  cfg.validate();
  BenchContext ctx;
  ctx.net = diffnet::build_network(cfg.network);
  ctx.test = synth_dataset(cfg.dataset, ctx.net);
  if (needs_predictor(cfg.grid)) {
    ctx.train = synth_dataset(predictor_split(cfg), ctx.net);
    if (id_overlap(ctx.train, ctx.test) != 0)
      throw std::invalid_argument("predictor training split overlaps the test split; use distinct seeds");
    ctx.predictor = fit_predictor(ctx.net, ctx.train, cfg.predictor, cfg.threads);
  }
  return ctx;
}

/// Cells run one after another; examples inside a cell run concurrently.
inline std::vector<RunRecord> run_grid(const BenchmarkConfig& cfg, const BenchContext& ctx) {
  const auto cells = expand_grid(cfg.grid, cfg.seed);
  const auto opt = cell_options(cfg);
  const gradpredict::GradientPredictor* p = ctx.predictor ? &*ctx.predictor : nullptr;
  std::vector<RunRecord> out;
  out.reserve(cells.size());
  for (const auto& c : cells) out.push_back(run_cell(c, ctx.net, p, ctx.test, opt));
  return out;
}

inline std::vector<RunRecord> run_benchmark(const BenchmarkConfig& cfg) { return run_grid(cfg, prepare(cfg)); }

}  // namespace gradpred::harness
