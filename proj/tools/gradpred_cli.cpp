#include "gradpred/gradpred.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace gradpred;
using namespace gradpred::harness;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c, bool need_config = true) {
  auto* opt = cmd->add_option("--config", c.config, "JSON config file");
  if (need_config) opt->required();
  cmd->add_option("--seed", c.seed, "Global seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", c.threads, "Worker threads (overrides the config)");
}

BenchmarkConfig load(const Common& c) {
  BenchmarkConfig cfg = c.config.empty() ? BenchmarkConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.output_dir = *c.out;
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  fs::create_directories(cfg.output_dir);
  return cfg;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

int cmd_bench(const Common& c) {
  const auto cfg = load(c);
  const auto records = run_benchmark(cfg);
  std::ostringstream os;
  write_records_csv(os, records);
  const fs::path dir = cfg.output_dir;
  write_file(dir / "results.csv", os.str());
  report(records, ReportKind::all, dir);
  for (const auto& r : records)
    std::printf("%-8s %-9s %-4s eps=%-8g N=%-3zu alpha=%-4g asr=%.3f [%.3f, %.3f] succ/s=%.4g\n", r.method.c_str(),
                r.grad_source.c_str(), r.norm.c_str(), r.eps, r.steps, r.alpha, r.asr, r.asr_lo, r.asr_hi,
                r.succ_throughput);
  std::printf("wrote %s\n", (dir / "results.csv").c_str());
  return 0;
}

int cmd_fit(const Common& c) {
  const auto cfg = load(c);
  const auto net = diffnet::build_network(cfg.network);
  const auto train = synth_dataset(predictor_split(cfg), net);
  const auto test = synth_dataset(cfg.dataset, net);
  if (id_overlap(train, test) != 0) throw std::invalid_argument("predictor split overlaps the test split");
  const auto pred = fit_predictor(net, train, cfg.predictor, cfg.threads);
  const fs::path path = fs::path(cfg.output_dir) / "predictor.txt";
  std::ostringstream os;
  gradpredict::write_predictor(os, pred);
  write_file(path, os.str());
  const auto cos = gradpredict::eval_cosine(pred, net, test);
  std::printf("layer %zu, %zu training inputs, held-out cosine mean %.4f median %.4f\n", pred.layer, train.size(),
              cos.mean, cos.median);
  std::printf("wrote %s\n", path.c_str());
  return 0;
}

int cmd_attack(const Common& c, std::size_t index, const std::string& method, std::optional<double> eps) {
  const auto cfg = load(c);
  const auto net = diffnet::build_network(cfg.network);
  const auto test = synth_dataset(cfg.dataset, net);
  require(index < test.size(), "attack: --index out of range");
  const auto train = synth_dataset(predictor_split(cfg), net);
  const auto pred = fit_predictor(net, train, cfg.predictor, cfg.threads);
  const Example& ex = test[index];

  attacks::AttackSpec spec;
  spec.method = attacks::parse_method(method);
  spec.norm = attacks::default_norm(spec.method);
  spec.eps = eps ? *eps : (spec.norm == attacks::Norm::linf ? cfg.grid.eps_linf.front() : cfg.grid.eps_l2.front());
  if (spec.method == attacks::Method::pgd) {
    spec.steps = cfg.grid.pgd_steps.front();
    spec.step_size = cfg.grid.pgd_step.step_size(spec.eps, spec.steps);
  }
  spec.rs_multiplier = cfg.grid.rs_multiplier;
  spec.seed = cfg.seed;

  const Vec g = diffnet::input_gradient(net, ex.x, ex.target);
  const Vec gp = pred.estimate(net, ex.x, ex.target);
  std::printf("example %zu (id %llu), clean class %lld, target %zu\n", index,
              static_cast<unsigned long long>(ex.id), static_cast<long long>(argmax(diffnet::logits(net, ex.x))),
              ex.target);
  std::printf("gradient cosine (predicted vs exact): %.6f\n", cosine(gp, g));
  for (auto src : {attacks::GradSource::exact, attacks::GradSource::predicted}) {
    spec.grad_source = src;
    const auto out = attacks::run_attack(spec, net, &pred, ex, index);
    std::printf("%s/%s eps=%g: %s, adversarial class %lld, %zu gradient calls, %llu backward passes, %lld ns\n",
                std::string(attacks::to_string(spec.method)).c_str(), std::string(attacks::to_string(src)).c_str(),
                spec.eps, out.success ? "success" : "failure",
                static_cast<long long>(argmax(diffnet::logits(net, out.x_adv))), out.grad_calls,
                static_cast<unsigned long long>(out.backward_passes), static_cast<long long>(out.gen_time_ns));
  }
  return 0;
}

int cmd_gcg(const Common& c) {
  const auto cfg = load(c);
  const auto ex = run_gcg_experiment(cfg.gcg, cfg.seed, cfg.threads);
  const fs::path dir = cfg.output_dir;
  std::ostringstream os;
  write_gcg_losses(os, ex);
  write_file(dir / "gcg_losses.csv", os.str());
  const json s = gcg_summary_json(ex);
  write_json(dir / "gcg_summary.json", s);
  std::cout << s.dump(2) << "\n";
  return 0;
}

int cmd_ntk(const Common& c) {
  const auto cfg = load(c);
  const auto rep = ntk_check(cfg.ntk, cfg.seed, cfg.threads);
  const fs::path path = fs::path(cfg.output_dir) / "ntk_report.json";
  write_json(path, check_report_json(rep));
  for (const auto& r : rep.records)
    std::printf("%-4s %-5s %s (stat %.4g, threshold %.4g)\n", r.pass ? "pass" : "FAIL",
                r.as_expected() ? "ok" : "UNEXP", r.name.c_str(), r.statistic, r.threshold);
  std::printf("wrote %s\n", path.c_str());
  return rep.as_expected() ? 0 : 1;
}

int cmd_sweep(const Common& c) {
  const auto cfg = load(c);
  const auto res = sweep(cfg);
  const fs::path dir = cfg.output_dir;
  std::ostringstream os;
  write_sweep_csv(os, res);
  write_file(dir / "sweep.csv", os.str());
  const json best = sweep_winners_json(res);
  write_json(dir / "sweep_best.json", best);
  std::cout << best.dump(2) << "\n";
  return 0;
}

int cmd_report(const Common& c, const std::string& in, const std::string& kind) {
  std::ifstream is(in);
  if (!is) throw std::runtime_error("cannot open records file: " + in);
  const auto records = read_records_csv(is);
  const fs::path dir = c.out ? fs::path(*c.out) : fs::path(in).parent_path();
  for (const auto& p : report(records, parse_report_kind(kind), dir.empty() ? fs::path(".") : dir))
    std::printf("wrote %s\n", p.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gradient-prediction attack benchmark"};
  app.require_subcommand(1);

  Common bench, fit, attack, gcg, ntk, sw, rep;
  add_common(app.add_subcommand("bench", "Run the attack grid and write results.csv plus tables"), bench);
  add_common(app.add_subcommand("fit", "Fit and serialize a gradient predictor"), fit);
  auto* attack_cmd = app.add_subcommand("attack", "Debug one example: gradient cosine and attack outcome");
  add_common(attack_cmd, attack);
  std::size_t index = 0;
  std::string method = "FGSM";
  std::optional<double> eps;
  attack_cmd->add_option("--index", index, "Example index in the test split");
  attack_cmd->add_option("--method", method, "FGSM, FGM, RS-FGSM or PGD");
  attack_cmd->add_option("--eps", eps, "Perturbation budget");
  add_common(app.add_subcommand("gcg", "Exact vs predicted GCG on the toy language model"), gcg, false);
  add_common(app.add_subcommand("ntk-check", "Kernel-stationarity report; nonzero exit on unexpected results"), ntk,
             false);
  add_common(app.add_subcommand("sweep", "Greedy hyperparameter sweep"), sw);
  auto* report_cmd = app.add_subcommand("report", "Re-emit tables from a results.csv");
  add_common(report_cmd, rep, false);
  std::string in, kind = "all";
  report_cmd->add_option("--in", in, "results.csv written by bench")->required();
  report_cmd->add_option("--kind", kind, "table, pareto, pgd, alpha or all");

  CLI11_PARSE(app, argc, argv);
  try {
    if (app.got_subcommand("bench")) return cmd_bench(bench);
    if (app.got_subcommand("fit")) return cmd_fit(fit);
    if (app.got_subcommand("attack")) return cmd_attack(attack, index, method, eps);
    if (app.got_subcommand("gcg")) return cmd_gcg(gcg);
    if (app.got_subcommand("ntk-check")) return cmd_ntk(ntk);
    if (app.got_subcommand("sweep")) return cmd_sweep(sw);
    if (app.got_subcommand("report")) return cmd_report(rep, in, kind);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
