#include "gradpred/harness.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gradpred;
using namespace gradpred::harness;
namespace fs = std::filesystem;

namespace {

// Forward-pass counter as a clock: elapsed "ns" = forward passes made.
struct ForwardClock {
  using rep = std::int64_t;
  using period = std::nano;
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<ForwardClock, duration>;
  static constexpr bool is_steady = true;
  static time_point now() noexcept {
    return time_point(duration(static_cast<rep>(diffnet::op_counters().forward_passes)));
  }
};

BenchmarkConfig tiny_config() {
  return parse_config(json::parse(R"({
    "network": {"input_dim": 4, "embedding_width": 128, "hidden_widths": [32, 32], "output_dim": 4, "seed": 3},
    "dataset": {"size": 60, "seed": 11, "target": 0},
    "predictor": {"layer": 1, "aug_steps": 2, "train_size": 120, "seed": 12},
    "attacks": {"methods": ["FGSM"], "grad_sources": ["exact", "predicted"], "eps_linf": [0.3]},
    "bootstrap": {"resamples": 200},
    "clock": "work",
    "warmup": 2
  })"));
}

std::string csv_of(const std::vector<RunRecord>& rs) {
  std::ostringstream os;
  write_records_csv(os, rs);
  return os.str();
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gradpred_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Config, ParsesSections) {
  const auto c = tiny_config();
  EXPECT_EQ(c.network.embedding_width, 128u);
  EXPECT_EQ(c.network.hidden_widths.size(), 2u);
  EXPECT_EQ(c.dataset.size, 60u);
  EXPECT_EQ(c.predictor.aug_steps, 2u);
  ASSERT_EQ(c.grid.methods.size(), 1u);
  EXPECT_EQ(c.grid.methods[0], attacks::Method::fgsm);
  EXPECT_EQ(c.clock, ClockKind::work);
  EXPECT_EQ(c.bootstrap.resamples, 200u);
  EXPECT_EQ(c.grid.alphas.size(), 7u);
}

TEST(Config, UnknownKeysAreErrors) {
  EXPECT_THROW(parse_config(json::parse(R"({"sead": 1})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"network": {"widht": 3}})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"attacks": {"eps": [0.1]}})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"clock": "cpu"})")), std::invalid_argument);
}

TEST(Config, InvariantsAreChecked) {
  EXPECT_THROW(parse_config(json::parse(R"({"predictor": {"layer": 5}})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"attacks": {"eps_linf": []}})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"bootstrap": {"resamples": 0}})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"attacks": {"alphas": [1.5]}})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"sweep": {"layers": [4]}})")), std::invalid_argument);
  EXPECT_THROW(parse_config(json::parse(R"({"network": {"output_dim": 1}})")), std::invalid_argument);
}

TEST(Config, StepRules) {
  EXPECT_EQ(parse_step_rule(json("2eps/N")).value, 2.0);
  EXPECT_TRUE(parse_step_rule(json("eps/N")).relative);
  EXPECT_EQ(parse_step_rule(json("eps/N")).value, 1.0);
  const auto abs = parse_step_rule(json(0.001));
  EXPECT_FALSE(abs.relative);
  EXPECT_EQ(abs.step_size(0.5, 10), 0.001);
  EXPECT_EQ(parse_step_rule(json("2eps/N")).step_size(0.5, 5), 0.2);
  EXPECT_THROW(parse_step_rule(json("fast")), std::invalid_argument);
  EXPECT_THROW(parse_step_rule(json("0.1x")), std::invalid_argument);
}

TEST(Dataset, FilterAndDeterminism) {
  const auto c = tiny_config();
  const auto net = diffnet::build_network(c.network);
  const auto a = synth_dataset(c.dataset, net), b = synth_dataset(c.dataset, net);
  ASSERT_EQ(a.size(), 60u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_NE(argmax(diffnet::logits(net, a[i].x)), 0);
    EXPECT_EQ(a[i].target, 0u);
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].id, b[i].id);
  }
  DatasetSpec other = c.dataset;
  other.seed = 99;
  EXPECT_EQ(id_overlap(a, synth_dataset(other, net)), 0u);
  EXPECT_EQ(id_overlap(a, a), a.size());
}

TEST(Dataset, DegenerateSpecs) {
  diffnet::NetworkSpec s;
  s.output_dim = 1;
  EXPECT_THROW(synth_dataset(DatasetSpec{}, diffnet::build_network(s)), std::invalid_argument);

  // A head that always prefers class 0 leaves nothing to attack.
  s.output_dim = 2;
  auto net = diffnet::build_network(s);
  net.head.setZero();
  net.layers.back().bias.setConstant(1.0);
  net.head.row(0).setConstant(1.0);
  DatasetSpec d;
  d.size = 3;
  EXPECT_THROW(synth_dataset(d, net, 10), std::runtime_error);
}

TEST(Bootstrap, QuantileType7) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
}

TEST(Bootstrap, DegenerateAndDeterministic) {
  const auto ones = bootstrap_ci(std::vector<char>(50, 1), 500, 0.95, 1);
  EXPECT_EQ(ones.lo, 1.0);
  EXPECT_EQ(ones.hi, 1.0);
  const auto zeros = bootstrap_ci(std::vector<char>(50, 0), 500, 0.95, 1);
  EXPECT_EQ(zeros.lo, 0.0);
  EXPECT_EQ(zeros.hi, 0.0);

  std::vector<char> mixed(40, 0);
  for (std::size_t i = 0; i < mixed.size(); i += 3) mixed[i] = 1;
  const auto a = bootstrap_ci(mixed, 500, 0.9, 7), b = bootstrap_ci(mixed, 500, 0.9, 7);
  EXPECT_EQ(a.lo, b.lo);
  EXPECT_EQ(a.hi, b.hi);
  EXPECT_LE(a.lo, 14.0 / 40.0);
  EXPECT_GE(a.hi, 14.0 / 40.0);
  EXPECT_THROW(bootstrap_ci({}, 10, 0.95, 1), std::invalid_argument);
  EXPECT_THROW(bootstrap_ci(mixed, 0, 0.95, 1), std::invalid_argument);
  EXPECT_THROW(bootstrap_ci(mixed, 10, 1.0, 1), std::invalid_argument);
}

TEST(Bootstrap, CoverageAtReducedB) {
  Rng rng(5);
  std::bernoulli_distribution coin(0.3);
  int covered = 0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    std::vector<char> s(320);
    for (auto& x : s) x = coin(rng) ? 1 : 0;
    const auto ci = bootstrap_ci(s, 1000, 0.95, derive_seed(5, rep));
    covered += (ci.lo <= 0.3 && 0.3 <= ci.hi) ? 1 : 0;
  }
  EXPECT_GE(covered, static_cast<int>(0.88 * reps));
}

TEST(Records, MetricIdentityAndCsvRoundTrip) {
  RunRecord r;
  r.method = "FGSM";
  r.grad_source = "exact";
  r.norm = "Linf";
  r.eps = 0.1;
  r.successes = {1, 0, 1, 1, 0, 0, 1};
  finalize_record(r, 123457, 300, 0.95, 4);
  EXPECT_EQ(r.succ_throughput, r.asr * r.pert_throughput);
  EXPECT_LE(r.asr_lo, r.asr);
  EXPECT_GE(r.asr_hi, r.asr);
  EXPECT_EQ(r.n, 7u);
  EXPECT_DOUBLE_EQ(r.pert_throughput, 7e9 / 123457.0);

  std::stringstream ss;
  write_records_csv(ss, {r, r});
  const std::string text = ss.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), kRecordHeader);
  const auto back = read_records_csv(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].asr, r.asr);
  EXPECT_EQ(back[0].eps, r.eps);
  EXPECT_EQ(back[0].succ_hi, r.succ_hi);
  EXPECT_EQ(back[0].wall_ns, r.wall_ns);
  EXPECT_EQ(csv_of(back), text);

  std::istringstream bad(std::string(kRecordHeader) + "\nFGSM,exact\n");
  EXPECT_THROW(read_records_csv(bad), std::runtime_error);
  std::istringstream wrong_header("a,b\n");
  EXPECT_THROW(read_records_csv(wrong_header), std::runtime_error);
}

TEST(Grid, ExpansionOrderAndCounts) {
  AttackGrid g;
  g.methods = {attacks::Method::fgsm, attacks::Method::pgd};
  g.sources = {attacks::GradSource::exact, attacks::GradSource::mixed};
  g.eps_linf = {0.1, 0.2};
  g.pgd_steps = {3, 5};
  g.alphas = {0.0, 1.0};
  const auto cells = expand_grid(g, 9);
  // FGSM: 2 eps x (1 + 2 alphas); PGD: 2 eps x 2 N x 3.
  ASSERT_EQ(cells.size(), 6u + 12u);
  EXPECT_EQ(cells[0].grad_source, attacks::GradSource::exact);
  EXPECT_EQ(cells[1].mix_alpha, 0.0);
  EXPECT_EQ(cells[2].mix_alpha, 1.0);
  EXPECT_EQ(cells[6].method, attacks::Method::pgd);
  EXPECT_DOUBLE_EQ(cells[6].step_size, 2.0 * 0.1 / 3.0);
  for (const auto& c : cells) EXPECT_EQ(c.seed, 9u);
}

TEST(Bench, TwoSourcesShareTheDataset) {
  const auto c = tiny_config();
  const auto recs = run_benchmark(c);
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].grad_source, "exact");
  EXPECT_EQ(recs[1].grad_source, "predicted");
  EXPECT_EQ(recs[0].n, recs[1].n);
  EXPECT_EQ(recs[0].alpha, 1.0);
  EXPECT_EQ(recs[1].alpha, 0.0);
  EXPECT_EQ(recs[1].backward_passes, 0u);
  EXPECT_EQ(recs[0].backward_passes, recs[0].n);
  for (const auto& r : recs) EXPECT_EQ(r.succ_throughput, r.asr * r.pert_throughput);
}

TEST(Bench, AlphaEndpointMatchesExact) {
  auto c = tiny_config();
  c.grid.sources = {attacks::GradSource::exact, attacks::GradSource::mixed};
  c.grid.alphas = {0.0, 1.0};
  const auto recs = run_benchmark(c);
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[2].alpha, 1.0);
  EXPECT_EQ(recs[2].successes, recs[0].successes);
  EXPECT_EQ(recs[2].asr, recs[0].asr);
  EXPECT_EQ(recs[2].asr_lo, recs[0].asr_lo);
  EXPECT_EQ(recs[2].asr_hi, recs[0].asr_hi);
}

TEST(Bench, TimingExcludesAdjudicationAndWarmup) {
  const auto c = tiny_config();
  const auto ctx = prepare(c);
  CellOptions opt = cell_options(c);
  opt.warmup = 5;
  for (auto src : {attacks::GradSource::exact, attacks::GradSource::predicted}) {
    attacks::AttackSpec s;
    s.eps = 0.3;
    s.grad_source = src;
    const auto r = detail::run_cell_with<ForwardClock>(s, ctx.net, &*ctx.predictor, ctx.test, opt);
    // One forward (or early-exit) pass per example; the two adjudication
    // passes and the warm-up runs are not on the clock.
    EXPECT_EQ(r.wall_ns, static_cast<std::int64_t>(ctx.test.size()));
  }
}

TEST(Bench, ReproducibleAcrossThreadCounts) {
  auto c = tiny_config();
  c.grid.methods = {attacks::Method::fgsm, attacks::Method::rs_fgsm, attacks::Method::pgd};
  const std::string one = csv_of(run_benchmark(c));
  EXPECT_EQ(one, csv_of(run_benchmark(c)));
  c.threads = 3;
  EXPECT_EQ(one, csv_of(run_benchmark(c)));
}

TEST(Bench, ErrorsCarryCellIdentity) {
  const auto c = tiny_config();
  const auto ctx = prepare(c);
  attacks::AttackSpec s;
  s.grad_source = attacks::GradSource::predicted;
  try {
    run_cell(s, ctx.net, nullptr, ctx.test, cell_options(c));
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("FGSM/predicted/Linf"), std::string::npos) << e.what();
  }
}

TEST(Bench, PredictorSplitMustBeDisjoint) {
  auto c = tiny_config();
  c.predictor.seed = c.dataset.seed;
  EXPECT_THROW(prepare(c), std::invalid_argument);
}

TEST(Sweep, SinglePointGridsAreReturned) {
  auto c = tiny_config();
  c.sweep.layers = {2};
  c.sweep.aug_steps = {3};
  c.sweep.decays = {0.8};
  c.sweep.eps_linf = {0.25};
  c.sweep.eps_l2 = {0.6};
  c.sweep.step_rules = {StepRule{false, 0.01}};
  c.sweep.rs_multipliers = {0.75};
  c.sweep.frontier_steps = {4};
  c.sweep.tuning_size = 30;
  const auto r = sweep(c);
  EXPECT_EQ(r.predictor.layer, 2u);
  EXPECT_EQ(r.predictor.aug_steps, 3u);
  EXPECT_EQ(r.predictor.decay, 0.8);
  EXPECT_EQ(r.eps_linf, 0.25);
  EXPECT_EQ(r.eps_l2, 0.6);
  for (const auto* w : {&r.exact, &r.predicted}) {
    EXPECT_FALSE(w->pgd_step.relative);
    EXPECT_EQ(w->pgd_step.value, 0.01);
    EXPECT_EQ(w->rs_multiplier, 0.75);
    EXPECT_EQ(w->pgd_steps, 4u);
  }
  // 1 + 2 + 2 x (1 + 1 + 1)
  EXPECT_EQ(r.rows.size(), 9u);
}

TEST(Sweep, WinnersMaximizeSuccessThroughput) {
  auto c = tiny_config();
  c.sweep.layers = {0, 1};
  c.sweep.aug_steps = {0, 2};
  c.sweep.decays = {0.7, 1.0};
  c.sweep.eps_linf = {0.1, 0.3, 0.5};
  c.sweep.eps_l2 = {0.3, 0.9};
  c.sweep.frontier_steps = {1, 3};
  c.sweep.rs_multipliers = {1.0, 2.0};
  c.sweep.tuning_size = 40;
  const auto r = sweep(c);

  std::size_t phase1 = 0, k0 = 0;
  double best1 = -1, best_linf = -1;
  for (const auto& row : r.rows) {
    if (row.phase == "1") {
      ++phase1;
      k0 += row.predictor.aug_steps == 0;
      best1 = std::max(best1, row.record.succ_throughput);
    }
    if (row.phase == "2" && row.record.norm == "Linf") best_linf = std::max(best_linf, row.record.succ_throughput);
  }
  EXPECT_EQ(phase1, 2u * (1u + 2u));  // decay pruned at K = 0
  EXPECT_EQ(k0, 2u);
  for (const auto& row : r.rows) {
    if (row.phase == "1" && row.predictor.layer == r.predictor.layer && row.predictor.aug_steps == r.predictor.aug_steps &&
        row.predictor.decay == r.predictor.decay) {
      EXPECT_EQ(row.record.succ_throughput, best1);
    }
    if (row.phase == "2" && row.record.norm == "Linf" && row.record.eps == r.eps_linf) {
      EXPECT_EQ(row.record.succ_throughput, best_linf);
    }
  }
  std::ostringstream os;
  write_sweep_csv(os, r);
  const std::string text = os.str();
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), r.rows.size() + 1);
}

TEST(Sweep, TuningSplitMustBeDisjoint) {
  auto c = tiny_config();
  c.sweep.tuning_seed = c.dataset.seed;
  EXPECT_THROW(sweep(c), std::invalid_argument);
}

TEST(Report, MinimalAndLossless) {
  const auto dir = temp_dir("report");
  RunRecord r;
  r.method = "FGSM";
  r.grad_source = "exact";
  r.norm = "Linf";
  r.successes = {1, 0};
  finalize_record(r, 1000, 50, 0.95, 1);
  report({r}, ReportKind::all, dir);
  const auto table = slurp(dir / "main_table.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 2);
  EXPECT_EQ(table.substr(0, table.find('\n')),
            "method,grad_source,norm,eps,steps,asr,asr_lo,asr_hi,pert_throughput,succ_throughput,succ_lo,succ_hi,n");

  std::vector<RunRecord> rs(3, r);
  rs[0].asr = 0.9, rs[0].succ_throughput = 1.0;  // frontier
  rs[1].asr = 0.5, rs[1].succ_throughput = 5.0;  // frontier
  rs[2].asr = 0.4, rs[2].succ_throughput = 0.9;  // dominated by both
  EXPECT_EQ(pareto_frontier(rs), (std::vector<bool>{true, true, false}));
  report(rs, ReportKind::pareto, dir);
  const auto pareto = slurp(dir / "pareto.csv");
  EXPECT_EQ(std::count(pareto.begin(), pareto.end(), '\n'), 4);
  EXPECT_THROW(report({}, ReportKind::all, dir), std::invalid_argument);
  EXPECT_THROW(parse_report_kind("plots"), std::invalid_argument);
}

TEST(Report, AlphaSweepHasOneRowPerAlpha) {
  auto c = tiny_config();
  c.grid.sources = {attacks::GradSource::mixed};
  const auto recs = run_benchmark(c);
  ASSERT_EQ(recs.size(), 7u);
  std::ostringstream os;
  write_alpha_sweep(os, recs);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  std::vector<double> alphas;
  while (std::getline(in, line)) alphas.push_back(std::stod(split_csv_line(line)[4]));
  EXPECT_EQ(alphas, (std::vector<double>{0, 0.1, 0.25, 0.5, 0.75, 0.9, 1}));
}

TEST(GcgExperiment, SmallRunInvariants) {
  GcgSpec g;
  g.lm.vocab = 24;
  g.lm.d_model = 8;
  g.lm.d_ff = 16;
  g.steps = 4;
  g.k = 4;
  g.batch_size = 8;
  g.suffix_len = 3;
  g.train_prompts = 3;
  g.test_prompts = 2;
  g.aug_steps = 2;
  g.variants = 1;
  const auto ex = run_gcg_experiment(g, 1, 1);
  EXPECT_EQ(ex.train_samples, 3u * 3u * 2u);
  ASSERT_EQ(ex.prompts.size(), 2u);
  for (const auto& p : ex.prompts) {
    EXPECT_EQ(p.predicted.backward_passes, 0u);
    EXPECT_EQ(p.exact.backward_passes, 4u);
    for (const auto* run : {&p.exact, &p.predicted})
      for (std::size_t i = 1; i < run->losses.size(); ++i) EXPECT_LE(run->losses[i], run->losses[i - 1]);
  }
  EXPECT_EQ(ex.overlap.size(), 2u * 4u * 3u);
  EXPECT_DOUBLE_EQ(ex.chance, 4.0 / 24.0);
}

TEST(NtkCheck, SmallReportIsAsExpected) {
  NtkSpec s;
  s.suite.input_dims = {2};
  s.suite.embedding_width = 256;
  s.suite.replicas = 256;
  s.suite.shifts = 2;
  s.sweep.widths = {64, 256};
  s.sweep.train = 256;
  s.sweep.test = 64;
  s.conditioning_samples = 50000;
  const auto rep = ntk_check(s, 0, 1);
  for (const auto& r : rep.records) EXPECT_TRUE(r.as_expected()) << r.name;
  const auto j = check_report_json(rep);
  EXPECT_TRUE(j["as_expected"].get<bool>());
  EXPECT_EQ(j["records"].size(), rep.records.size());
}

#ifdef GRADPRED_CLI_PATH
namespace {
int run_cli(const std::string& args) {
  const std::string cmd = std::string(GRADPRED_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
}  // namespace

TEST(Cli, BenchTwiceIsByteIdenticalAndReportRegenerates) {
  const auto dir = temp_dir("cli");
  std::ofstream(dir / "c.json") << R"({
    "network": {"input_dim": 4, "embedding_width": 64, "hidden_widths": [16], "output_dim": 3, "seed": 1},
    "dataset": {"size": 20, "seed": 5},
    "predictor": {"layer": 1, "train_size": 40, "seed": 6},
    "attacks": {"methods": ["FGSM", "PGD"], "grad_sources": ["exact", "predicted", "mixed"],
                "eps_linf": [0.3], "alphas": [0, 1]},
    "bootstrap": {"resamples": 100},
    "clock": "work"
  })";
  const std::string cfg = "--config " + (dir / "c.json").string();
  ASSERT_EQ(run_cli("bench " + cfg + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli("bench " + cfg + " --out " + (dir / "b").string() + " --threads 2"), 0);
  const auto a = slurp(dir / "a" / "results.csv");
  EXPECT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(dir / "b" / "results.csv"));

  ASSERT_EQ(run_cli("report --in " + (dir / "a" / "results.csv").string() + " --out " + (dir / "r").string()), 0);
  EXPECT_EQ(slurp(dir / "r" / "main_table.csv"), slurp(dir / "a" / "main_table.csv"));
  EXPECT_EQ(slurp(dir / "r" / "alpha_sweep.csv"), slurp(dir / "a" / "alpha_sweep.csv"));

  ASSERT_EQ(run_cli("fit " + cfg + " --out " + (dir / "f").string()), 0);
  std::ifstream pin(dir / "f" / "predictor.txt");
  EXPECT_EQ(gradpredict::read_predictor(pin).layer, 1u);
}

TEST(Cli, BadInputsExitNonzero) {
  const auto dir = temp_dir("cli_bad");
  std::ofstream(dir / "typo.json") << R"({"netwrok": {}})";
  EXPECT_NE(run_cli("bench --config " + (dir / "typo.json").string() + " --out " + dir.string()), 0);
  EXPECT_NE(run_cli("bench --out " + dir.string()), 0);
  EXPECT_NE(run_cli("frobnicate"), 0);
}

TEST(Cli, NtkCheckExitCode) {
  const auto dir = temp_dir("cli_ntk");
  std::ofstream(dir / "n.json") << R"({"ntk": {"input_dims": [2], "embedding_width": 256, "replicas": 256,
    "shifts": 2, "sweep_widths": [64, 128], "sweep_train": 128, "sweep_test": 32, "conditioning_samples": 20000}})";
  EXPECT_EQ(run_cli("ntk-check --config " + (dir / "n.json").string() + " --out " + dir.string()), 0);
  const auto j = json::parse(slurp(dir / "ntk_report.json"));
  EXPECT_TRUE(j["as_expected"].get<bool>());
}
#endif
