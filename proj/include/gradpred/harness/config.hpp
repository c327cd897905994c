#pragma once

// Benchmark configuration and its JSON form. Unknown keys are errors.

#include "gradpred/attacks.hpp"
#include "gradpred/common.hpp"
#include "gradpred/diffnet.hpp"
#include "gradpred/ntklab.hpp"
#include "gradpred/tokenattack.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

namespace gradpred::harness {

using json = nlohmann::json;

/// PGD inner step: either factor * eps / N or an absolute size.
struct StepRule {
  bool relative = true;
  double value = 2.0;

  double step_size(double eps, std::size_t steps) const {
    return relative ? value * eps / static_cast<double>(steps) : value;
  }
  std::string label() const;
};

struct DatasetSpec {
  std::size_t size = 320;
  std::uint64_t seed = 1;
  std::size_t target = 0;     // fixed target class
  std::size_t clusters = 8;
  double spread = 0.35;       // per-coordinate std around each centre
  double centre_range = 1.0;  // centres ~ U[-range, range]^d
};

struct PredictorSpec {
  std::size_t layer = 1;
  std::size_t aug_steps = 5;
  double decay = 0.9;
  double aug_eps = 0.05;
  double lambda = 1.0;
  std::size_t train_size = 2000;
  std::uint64_t seed = 2;
};

struct AttackGrid {
  std::vector<attacks::Method> methods{attacks::Method::fgsm, attacks::Method::fgm, attacks::Method::rs_fgsm,
                                       attacks::Method::pgd};
  std::vector<attacks::GradSource> sources{attacks::GradSource::exact, attacks::GradSource::predicted};
  std::vector<double> eps_linf{0.1};
  std::vector<double> eps_l2{0.25};
  std::vector<attacks::Norm> pgd_norms{attacks::Norm::linf};
  std::vector<std::size_t> pgd_steps{5};
  StepRule pgd_step{true, 2.0};
  double rs_multiplier = 1.25;
  std::vector<double> alphas{0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0};
};

struct BootstrapSpec {
  std::size_t resamples = 10000;
  double level = 0.95;
};

struct SweepSpec {
  std::vector<std::size_t> layers{1};
  std::vector<std::size_t> aug_steps{0, 5};
  std::vector<double> decays{0.7, 0.8, 0.9, 0.95, 1.0};
  double phase1_eps = 0.1;
  std::vector<double> eps_linf{0.05, 0.1, 0.2};
  std::vector<double> eps_l2{0.25, 0.5, 1.0};
  std::size_t phase3_steps = 5;
  std::vector<StepRule> step_rules{{true, 1.0}, {true, 2.0}, {false, 1e-3}, {false, 2e-3}};
  std::vector<double> rs_multipliers{0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5};
  std::vector<std::size_t> frontier_steps{1, 2, 3, 5, 7, 10, 15, 20};
  std::size_t tuning_size = 160;
  std::uint64_t tuning_seed = 3;
};

struct GcgSpec {
  tokenattack::LMSpec lm;
  std::size_t steps = 25;
  std::size_t k = 16;
  std::size_t batch_size = 64;
  std::size_t suffix_len = 10;
  tokenattack::Token filler = 0;
  std::size_t tap = 1;
  double lambda = 100.0;
  std::size_t train_prompts = 80;
  std::size_t test_prompts = 8;
  std::size_t aug_steps = 25;
  std::size_t variants = 7;
  std::size_t prompt_len = 8;
  std::size_t target_len = 4;
  std::string prompts_file;  // optional; else synthetic prompts
};

struct NtkSpec {
  ntklab::NtkSuiteConfig suite;
  ntklab::SweepConfig sweep;
  bool run_sweep = true;
  std::size_t conditioning_samples = 1000000;
  std::size_t gp_instances = 20;
};

enum class ClockKind { wall, work };

struct BenchmarkConfig {
  diffnet::NetworkSpec network;
  DatasetSpec dataset;
  PredictorSpec predictor;
  AttackGrid grid;
  BootstrapSpec bootstrap;
  SweepSpec sweep;
  GcgSpec gcg;
  NtkSpec ntk;
  ClockKind clock = ClockKind::wall;
  std::size_t warmup = 10;
  std::size_t threads = 1;
  std::string output_dir = "out";
  std::uint64_t seed = 0;

  void validate() const;
};

inline std::string StepRule::label() const {
  char buf[48];
  if (relative)
    std::snprintf(buf, sizeof buf, "%geps/N", value);
  else
    std::snprintf(buf, sizeof buf, "%g", value);
  return buf;
}

/// "2eps/N" or "eps/N" for relative rules, a plain number otherwise.
inline StepRule parse_step_rule(const json& j) {
  if (j.is_number()) return {false, j.get<double>()};
  const std::string s = j.get<std::string>();
  const auto pos = s.find("eps/N");
  if (pos != std::string::npos && pos + 5 == s.size()) {
    const std::string f = s.substr(0, pos);
    return {true, f.empty() ? 1.0 : std::stod(f)};
  }
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("bad PGD step rule: " + s);
  return {false, v};
}

inline void BenchmarkConfig::validate() const {
  network.validate();
  require(dataset.size >= 1, "dataset.size must be >= 1");
  require(network.output_dim >= 2, "dataset: need at least 2 classes");
  require(dataset.target < network.output_dim, "dataset.target must be a valid class");
  require(dataset.clusters >= 1, "dataset.clusters must be >= 1");
  require(predictor.layer <= network.hidden_widths.size(), "predictor.layer exceeds network depth");
  require(predictor.train_size >= 1, "predictor.train_size must be >= 1");
  require(!grid.methods.empty() && !grid.sources.empty(), "attacks: methods and grad_sources must be nonempty");
  require(!grid.eps_linf.empty() && !grid.eps_l2.empty(), "attacks: eps lists must be nonempty");
  require(!grid.pgd_steps.empty() && !grid.pgd_norms.empty(), "attacks: PGD steps and norms must be nonempty");
  for (double a : grid.alphas) require(a >= 0.0 && a <= 1.0, "attacks.alphas must lie in [0, 1]");
  require(bootstrap.resamples >= 1, "bootstrap.resamples must be >= 1");
  require(bootstrap.level > 0.0 && bootstrap.level < 1.0, "bootstrap.level must lie in (0, 1)");
  for (auto l : sweep.layers) require(l <= network.hidden_widths.size(), "sweep.layers: layer exceeds network depth");
  require(!sweep.layers.empty() && !sweep.aug_steps.empty() && !sweep.decays.empty(), "sweep: phase 1 grids are empty");
  require(!sweep.eps_linf.empty() && !sweep.eps_l2.empty(), "sweep: phase 2 grids are empty");
  require(!sweep.step_rules.empty() && !sweep.rs_multipliers.empty() && !sweep.frontier_steps.empty(),
          "sweep: phase 3 grids are empty");
  require(threads >= 1, "threads must be >= 1");
}

namespace detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument("config: '" + where + "' must be an object");
  for (const auto& item : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

template <class T, class F>
void get_list(const json& j, const char* key, std::vector<T>& out, F&& parse) {
  if (!j.contains(key)) return;
  out.clear();
  for (const auto& v : j.at(key)) out.push_back(parse(v));
}

inline void read_network(const json& j, diffnet::NetworkSpec& n) {
  check_keys(j, {"input_dim", "embedding_width", "hidden_widths", "output_dim", "activation", "frequency_scale",
                 "bias_scale", "seed"},
             "network");
  get(j, "input_dim", n.input_dim);
  get(j, "embedding_width", n.embedding_width);
  get(j, "hidden_widths", n.hidden_widths);
  get(j, "output_dim", n.output_dim);
  if (j.contains("activation")) n.activation = diffnet::parse_activation(j.at("activation").get<std::string>());
  get(j, "frequency_scale", n.frequency_scale);
  get(j, "bias_scale", n.bias_scale);
  get(j, "seed", n.seed);
}

}  // namespace detail

inline BenchmarkConfig parse_config(const json& j) {
  using detail::check_keys;
  using detail::get;
  using detail::get_list;
  BenchmarkConfig c;
  check_keys(j, {"network", "dataset", "predictor", "attacks", "bootstrap", "sweep", "gcg", "ntk", "clock", "warmup",
                 "threads", "output_dir", "seed"},
             "top level");
  if (j.contains("network")) detail::read_network(j.at("network"), c.network);
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    check_keys(d, {"size", "seed", "target", "clusters", "spread", "centre_range"}, "dataset");
    get(d, "size", c.dataset.size);
    get(d, "seed", c.dataset.seed);
    get(d, "target", c.dataset.target);
    get(d, "clusters", c.dataset.clusters);
    get(d, "spread", c.dataset.spread);
    get(d, "centre_range", c.dataset.centre_range);
  }
  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    check_keys(p, {"layer", "aug_steps", "decay", "aug_eps", "lambda", "train_size", "seed"}, "predictor");
    get(p, "layer", c.predictor.layer);
    get(p, "aug_steps", c.predictor.aug_steps);
    get(p, "decay", c.predictor.decay);
    get(p, "aug_eps", c.predictor.aug_eps);
    get(p, "lambda", c.predictor.lambda);
    get(p, "train_size", c.predictor.train_size);
    get(p, "seed", c.predictor.seed);
  }
  if (j.contains("attacks")) {
    const auto& a = j.at("attacks");
    check_keys(a, {"methods", "grad_sources", "eps_linf", "eps_l2", "pgd_norms", "pgd_steps", "pgd_step", "rs_multiplier",
                   "alphas"},
               "attacks");
    get_list(a, "methods", c.grid.methods, [](const json& v) { return attacks::parse_method(v.get<std::string>()); });
    get_list(a, "grad_sources", c.grid.sources,
             [](const json& v) { return attacks::parse_grad_source(v.get<std::string>()); });
    get(a, "eps_linf", c.grid.eps_linf);
    get(a, "eps_l2", c.grid.eps_l2);
    get_list(a, "pgd_norms", c.grid.pgd_norms, [](const json& v) { return attacks::parse_norm(v.get<std::string>()); });
    get(a, "pgd_steps", c.grid.pgd_steps);
    if (a.contains("pgd_step")) c.grid.pgd_step = parse_step_rule(a.at("pgd_step"));
    get(a, "rs_multiplier", c.grid.rs_multiplier);
    get(a, "alphas", c.grid.alphas);
  }
  if (j.contains("bootstrap")) {
    const auto& b = j.at("bootstrap");
    check_keys(b, {"resamples", "level"}, "bootstrap");
    get(b, "resamples", c.bootstrap.resamples);
    get(b, "level", c.bootstrap.level);
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    check_keys(s, {"layers", "aug_steps", "decays", "phase1_eps", "eps_linf", "eps_l2", "phase3_steps", "step_rules",
                   "rs_multipliers", "frontier_steps", "tuning_size", "tuning_seed"},
               "sweep");
    get(s, "layers", c.sweep.layers);
    get(s, "aug_steps", c.sweep.aug_steps);
    get(s, "decays", c.sweep.decays);
    get(s, "phase1_eps", c.sweep.phase1_eps);
    get(s, "eps_linf", c.sweep.eps_linf);
    get(s, "eps_l2", c.sweep.eps_l2);
    get(s, "phase3_steps", c.sweep.phase3_steps);
    get_list(s, "step_rules", c.sweep.step_rules, parse_step_rule);
    get(s, "rs_multipliers", c.sweep.rs_multipliers);
    get(s, "frontier_steps", c.sweep.frontier_steps);
    get(s, "tuning_size", c.sweep.tuning_size);
    get(s, "tuning_seed", c.sweep.tuning_seed);
  }
  if (j.contains("gcg")) {
    const auto& g = j.at("gcg");
    check_keys(g, {"vocab", "d_model", "d_ff", "max_len", "lm_seed", "steps", "k", "batch_size", "suffix_len", "filler",
                   "tap", "lambda", "train_prompts", "test_prompts", "aug_steps", "variants", "prompt_len", "target_len",
                   "prompts_file"},
               "gcg");
    get(g, "vocab", c.gcg.lm.vocab);
    get(g, "d_model", c.gcg.lm.d_model);
    get(g, "d_ff", c.gcg.lm.d_ff);
    get(g, "max_len", c.gcg.lm.max_len);
    get(g, "lm_seed", c.gcg.lm.seed);
    get(g, "steps", c.gcg.steps);
    get(g, "k", c.gcg.k);
    get(g, "batch_size", c.gcg.batch_size);
    get(g, "suffix_len", c.gcg.suffix_len);
    get(g, "filler", c.gcg.filler);
    get(g, "tap", c.gcg.tap);
    get(g, "lambda", c.gcg.lambda);
    get(g, "train_prompts", c.gcg.train_prompts);
    get(g, "test_prompts", c.gcg.test_prompts);
    get(g, "aug_steps", c.gcg.aug_steps);
    get(g, "variants", c.gcg.variants);
    get(g, "prompt_len", c.gcg.prompt_len);
    get(g, "target_len", c.gcg.target_len);
    get(g, "prompts_file", c.gcg.prompts_file);
  }
  if (j.contains("ntk")) {
    const auto& n = j.at("ntk");
    check_keys(n, {"input_dims", "embedding_width", "replicas", "hidden_widths", "tap", "probes", "shifts",
                   "frequency_scale", "sweep_widths", "sweep_train", "sweep_test", "sweep_shift", "run_sweep",
                   "conditioning_samples", "gp_instances"},
               "ntk");
    auto& s = c.ntk.suite;
    get(n, "input_dims", s.input_dims);
    get(n, "embedding_width", s.embedding_width);
    get(n, "replicas", s.replicas);
    get(n, "hidden_widths", s.hidden_widths);
    get(n, "tap", s.tap);
    get(n, "probes", s.probes);
    get(n, "shifts", s.shifts);
    get(n, "frequency_scale", s.frequency_scale);
    get(n, "sweep_widths", c.ntk.sweep.widths);
    get(n, "sweep_train", c.ntk.sweep.train);
    get(n, "sweep_test", c.ntk.sweep.test);
    get(n, "sweep_shift", c.ntk.sweep.shift);
    get(n, "run_sweep", c.ntk.run_sweep);
    get(n, "conditioning_samples", c.ntk.conditioning_samples);
    get(n, "gp_instances", c.ntk.gp_instances);
  }
  if (j.contains("clock")) {
    const auto s = j.at("clock").get<std::string>();
    if (s == "wall")
      c.clock = ClockKind::wall;
    else if (s == "work")
      c.clock = ClockKind::work;
    else
      throw std::invalid_argument("config: clock must be 'wall' or 'work'");
  }
  get(j, "warmup", c.warmup);
  get(j, "threads", c.threads);
  get(j, "output_dir", c.output_dir);
  get(j, "seed", c.seed);
  c.validate();
  return c;
}

inline BenchmarkConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace gradpred::harness
