// Acceptance suite: one pass/fail line per criterion. Exit code is the
// number of failed criteria (capped at 125).

#include "gradpred/gradpred.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

using namespace gradpred;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

fs::path g_out;
const fs::path kSource = GRADPRED_SOURCE_DIR;

harness::BenchmarkConfig config_file(const char* name) { return harness::load_config((kSource / "configs" / name).string()); }

// 1. Reverse-mode gradient against central differences written here.
Outcome gradient_oracle() {
  Rng rng(101);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    diffnet::NetworkSpec s;
    s.activation = trial % 2 ? diffnet::Activation::erf : diffnet::Activation::tanh;
    s.input_dim = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    s.embedding_width = std::uniform_int_distribution<std::size_t>(4, 32)(rng);
    s.hidden_widths.assign(std::uniform_int_distribution<std::size_t>(1, 3)(rng), 0);
    for (auto& w : s.hidden_widths) w = std::uniform_int_distribution<std::size_t>(4, 24)(rng);
    s.output_dim = std::uniform_int_distribution<std::size_t>(2, 5)(rng);
    s.frequency_scale = std::uniform_real_distribution<double>(0.3, 1.5)(rng);
    s.bias_scale = 0.3;
    s.seed = 5000 + static_cast<std::uint64_t>(trial);
    const auto net = diffnet::build_network(s);
    const Vec x = uniform_vector(rng, static_cast<Eigen::Index>(s.input_dim), -1, 1);
    const std::size_t t = std::uniform_int_distribution<std::size_t>(0, s.output_dim - 1)(rng);
    const double h = 1e-4;
    Vec fd(x.size());
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      Vec a = x, b = x;
      a[j] += h;
      b[j] -= h;
      fd[j] = (diffnet::logits(net, a)[static_cast<Eigen::Index>(t)] - diffnet::logits(net, b)[static_cast<Eigen::Index>(t)]) /
              (2 * h);
    }
    const Vec g = diffnet::input_gradient(net, x, t);
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  return {worst < 1e-5, fmt("100 tanh/erf nets, max relative error %.3g (< 1e-5)", worst)};
}

Mat normal_equations(const Mat& phi, const Vec& w, const Mat& g, double lambda) {
  Mat lhs = phi.transpose() * w.asDiagonal() * phi;
  lhs += lambda * Mat::Identity(phi.cols(), phi.cols());
  return lhs.fullPivLu().solve(phi.transpose() * w.asDiagonal() * g);
}

// 2. Eigendecomposition ridge against LU on the normal equations.
Outcome ridge_correctness() {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index dh = std::uniform_int_distribution<Eigen::Index>(1, 50)(rng);
    const Eigen::Index n = std::uniform_int_distribution<Eigen::Index>(5, 150)(rng);
    const Eigen::Index q = std::uniform_int_distribution<Eigen::Index>(1, 6)(rng);
    const Mat phi = normal_matrix(rng, n, dh, 2.0);
    const Mat g = normal_matrix(rng, n, q);
    const Vec w = uniform_vector(rng, n, 0.0, 2.0);
    const double lambda = std::uniform_real_distribution<double>(0.1, 10.0)(rng);
    worst = std::max(worst, (gradpredict::ridge_solve(phi, w, g, lambda) - normal_equations(phi, w, g, lambda))
                                .cwiseAbs()
                                .maxCoeff());
  }

  // Planted affine map g = M h~ + c, fitted with lambda = 1.
  const Eigen::Index dh = 8, dout = 3;
  const Mat M = normal_matrix(rng, dout, dh);
  const Vec c = normal_vector(rng, dout);
  std::vector<gradpredict::TrainingSample> samples(20000);
  for (auto& s : samples) s.features = normal_vector(rng, dh, 1.5) + Vec::Constant(dh, 0.5);
  const auto st = gradpredict::fit_standardizer(samples);
  for (auto& s : samples) s.target = M * st.transform(s.features) + c;
  const auto p = gradpredict::fit_ridge(samples, st, 1.0);
  const double recover = std::max((p.weight - M).cwiseAbs().maxCoeff(), (p.bias - c).cwiseAbs().maxCoeff());
  const Mat phi = gradpredict::design_matrix(samples, st);
  Mat tg(phi.rows(), dout);
  for (Eigen::Index i = 0; i < phi.rows(); ++i) tg.row(i) = samples[static_cast<std::size_t>(i)].target.transpose();
  const Mat oracle = normal_equations(phi, Vec::Ones(phi.rows()), tg, 1.0);
  const double planted_vs_oracle = std::max((p.weight - oracle.topRows(dh).transpose()).cwiseAbs().maxCoeff(),
                                            (p.bias - oracle.row(dh).transpose()).cwiseAbs().maxCoeff());
  worst = std::max(worst, planted_vs_oracle);
  const bool pass = worst < 1e-8 && recover < 1e-3;
  return {pass, fmt("50 instances + planted: max |eig - normal eq| %.3g (< 1e-8); planted recovery error %.3g (< 1e-3)",
                    worst, recover)};
}

// 3. Conditional mean of a joint Gaussian from 10^6 samples.
Outcome conditioning() {
  const auto model = ntklab::random_joint_gaussian(3, 2, 303);
  const auto check = ntklab::sample_conditional_mean(model, model.mu_h + Vec::Constant(3, 0.3), 0.5, 1000000, 304);
  std::string d = fmt("%zu samples in the ball;", check.in_bin);
  for (const auto& r : check.report.records) d += fmt(" |%.3g| <= %.3g", r.statistic, r.threshold);
  return {check.report.all_pass(), d};
}

// 4. Rotation identity e(x + c; eta) = e(x; eta').
Outcome rotation_identity() {
  diffnet::NetworkSpec s;
  s.input_dim = 3;
  s.embedding_width = 256;
  s.seed = 404;
  const auto net = diffnet::build_network(s);
  Rng rng(404);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    const Vec x = uniform_vector(rng, 3, -2, 2), c = uniform_vector(rng, 3, -3, 3);
    const auto rotated = diffnet::rotate_coefficients(net, c);
    worst = std::max(worst, (diffnet::sincos_embed(x + c, net) - diffnet::sincos_embed(x, rotated)).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-12, fmt("20 (x, c) pairs, max pointwise difference %.3g (<= 1e-12)", worst)};
}

// 5. Stationarity suite at m = R = 4096 with both negative controls.
Outcome ntk_suite(std::size_t threads) {
  ntklab::NtkSuiteConfig cfg;  // m = R = 4096, d in {2, 4}, 5 probes, 5 shifts
  cfg.seed = 505;
  cfg.threads = threads;
  const auto t0 = std::chrono::steady_clock::now();
  const auto rep = ntklab::run_ntk_suite(cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t positive = 0, controls = 0, unexpected = 0;
  for (const auto& r : rep.records) {
    if (!r.as_expected()) {
      ++unexpected;
      std::printf("    unexpected: %s (stat %.4g, threshold %.4g)\n", r.name.c_str(), r.statistic, r.threshold);
    }
    if (r.expect_pass)
      ++positive;
    else
      ++controls;
  }
  std::ofstream(g_out / "ntk_suite.json") << harness::check_report_json(rep).dump(2) << "\n";
  return {unexpected == 0 && controls >= 4 && secs < 600.0,
          fmt("%zu checks pass, %zu control verdicts fail as planted, %zu unexpected, %.0f s (< 600 s)", positive,
              controls, unexpected, secs)};
}

// 6. Held-out residual of the affine predictor shrinks with width.
Outcome width_sweep(std::size_t threads) {
  ntklab::SweepConfig cfg;
  cfg.seed = 606;
  cfg.threads = threads;
  const auto rows = ntklab::affine_exactness_sweep(cfg);
  std::string d;
  for (const auto& r : rows) d += fmt("m=%zu: %.4f  ", r.width, r.residual);
  const auto inv = ntklab::count_inversions(rows);
  return {rows.size() == 4 && inv <= 1, d + fmt("(%zu inversions, <= 1)", inv)};
}

// 7. GP derivative posterior against differences of the posterior mean.
Outcome gp_derivative() {
  Rng rng(707);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const ntklab::RbfKernel k{std::uniform_real_distribution<double>(0.3, 0.8)(rng)};
    const Eigen::Index n = 3 + trial % 8;
    Mat X(n, 1);
    for (Eigen::Index i = 0; i < n; ++i)
      X(i, 0) = -2.0 + 0.7 * static_cast<double>(i) + std::uniform_real_distribution<double>(-0.2, 0.2)(rng);
    const Vec y = normal_vector(rng, n);
    const double xs = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
    const double h = 1e-5;
    const double fd = (ntklab::gp_posterior_mean(k, X, y, Vec::Constant(1, xs + h)) -
                       ntklab::gp_posterior_mean(k, X, y, Vec::Constant(1, xs - h))) /
                      (2 * h);
    worst = std::max(worst, std::abs(ntklab::gp_derivative_posterior(k, X, y, Vec::Constant(1, xs), 0) - fd));
  }
  return {worst < 1e-4, fmt("20 1-D RBF instances, max |derivative - FD| %.3g (< 1e-4)", worst)};
}

const harness::RunRecord& find(const std::vector<harness::RunRecord>& rs, const std::string& method,
                               const std::string& source, double alpha) {
  for (const auto& r : rs)
    if (r.method == method && r.grad_source == source && r.alpha == alpha && r.steps == 1) return r;
  throw std::runtime_error("record not found: " + method + "/" + source);
}

// 8. Throughput on a 24-layer network tapped at layer 12.
Outcome throughput(std::size_t threads) {
  auto cfg = config_file("throughput24.json");
  cfg.threads = threads;
  const bool shape = cfg.network.hidden_widths.size() == 24 && cfg.predictor.layer == 12 && cfg.dataset.size >= 1000;
  const auto recs = harness::run_benchmark(cfg);
  const auto& ex = find(recs, "FGSM", "exact", 1.0);
  const auto& pr = find(recs, "FGSM", "predicted", 0.0);
  const double ratio = pr.pert_throughput / ex.pert_throughput;
  const bool pass = shape && ratio >= 1.5 && pr.backward_passes == 0 && pr.grad_calls == pr.n;
  return {pass, fmt("n=%zu, pert/s exact %.0f, predicted %.0f, ratio %.2f (>= 1.5); predicted path: %zu gradient "
                    "calls, %llu backward passes",
                    pr.n, ex.pert_throughput, pr.pert_throughput, ratio, static_cast<std::size_t>(pr.grad_calls),
                    static_cast<unsigned long long>(pr.backward_passes))};
}

std::vector<harness::RunRecord> quality_records(std::size_t threads) {
  static std::vector<harness::RunRecord> cache;
  if (cache.empty()) {
    auto cfg = config_file("quality.json");
    cfg.threads = threads;
    cfg.grid.methods = {attacks::Method::fgsm};
    cache = harness::run_benchmark(cfg);
    std::ostringstream os;
    harness::write_records_csv(os, cache);
    std::ofstream(g_out / "quality_results.csv") << os.str();
  }
  return cache;
}

// 9. Attack quality with a trained predictor.
Outcome attack_quality(std::size_t threads) {
  const auto recs = quality_records(threads);
  const auto& ex = find(recs, "FGSM", "exact", 1.0);
  const auto& pr = find(recs, "FGSM", "predicted", 0.0);
  return {ex.asr >= 0.5 && pr.asr >= 0.5 * ex.asr,
          fmt("n=%zu, exact FGSM ASR %.3f (>= 0.5), predicted FGSM ASR %.3f (>= %.3f)", ex.n, ex.asr, pr.asr,
              0.5 * ex.asr)};
}

// 10. Mixed-gradient endpoints.
Outcome alpha_endpoints(std::size_t threads) {
  const auto recs = quality_records(threads);
  const auto& ex = find(recs, "FGSM", "exact", 1.0);
  const auto& m1 = find(recs, "FGSM", "mixed", 1.0);
  const auto& m0 = find(recs, "FGSM", "mixed", 0.0);
  const bool same = m1.successes == ex.successes && m1.asr == ex.asr && m1.asr_lo == ex.asr_lo && m1.asr_hi == ex.asr_hi;
  const bool direction = m1.asr >= m0.asr || m1.asr_hi >= m0.asr_lo;
  return {same && direction, fmt("alpha=1 %s exact (ASR %.3f); ASR(1) %.3f [%.3f, %.3f] vs ASR(0) %.3f [%.3f, %.3f]",
                                 same ? "reproduces" : "DIFFERS FROM", ex.asr, m1.asr, m1.asr_lo, m1.asr_hi, m0.asr,
                                 m0.asr_lo, m0.asr_hi)};
}

// Brute force over all in-candidate substitutions, written independently of
// select_best: lowest loss, then smaller token, then smaller position.
tokenattack::Tokens brute_force_step(const tokenattack::ToyLM& lm, const tokenattack::SuffixState& s,
                                     const std::vector<tokenattack::CandidateSet>& cands) {
  double best = s.loss;
  tokenattack::Tokens best_a = s.a;
  bool found = false;
  std::size_t best_tok = 0, best_pos = 0;
  for (const auto& c : cands)
    for (auto v : c.tokens) {
      auto a = s.a;
      a[c.position] = v;
      const double l = tokenattack::teacher_forced_loss(lm, s.q, a, s.t);
      const bool better = !found || l < best || (l == best && (v < best_tok || (v == best_tok && c.position < best_pos)));
      if (better) {
        found = true;
        best = l;
        best_tok = v;
        best_pos = c.position;
        best_a = a;
      }
    }
  return best <= s.loss ? best_a : s.a;
}

// 11. GCG invariants and predictor candidate overlap.
Outcome gcg_invariants(std::size_t threads) {
  using namespace tokenattack;
  auto cfg = config_file("gcg.json");
  const auto ex = harness::run_gcg_experiment(cfg.gcg, cfg.seed, threads);
  std::size_t increases = 0, trajectories = 0;
  for (const auto& p : ex.prompts)
    for (const auto* run : {&p.exact, &p.predicted}) {
      ++trajectories;
      for (std::size_t i = 1; i < run->losses.size(); ++i) increases += run->losses[i] > run->losses[i - 1];
    }

  const ToyLM lm = build_lm(cfg.gcg.lm);
  const auto prompts = synth_prompts(lm, 6, 6, 3, 1111);
  std::size_t nonzero = 0, mismatches = 0, checked = 0;
  for (const auto& p : prompts) {
    SuffixState s = make_state(lm, p.prompt, Tokens(6, 0), p.target);
    for (int step = 0; step < 4; ++step) {
      const Mat g = suffix_gradient(lm, s.q, s.a, s.t);
      for (std::size_t r = 0; r < s.a.size(); ++r)
        nonzero += candidate_scores(lm.E, s.a[r], g.row(static_cast<Eigen::Index>(r)).transpose())[static_cast<Eigen::Index>(s.a[r])] != 0.0;
      const std::size_t k = 5;
      const auto cands = build_candidates(g, lm.E, s.a, k);
      const auto next = gcg_iterate(lm, s, k, s.a.size() * k, 9000 + static_cast<std::uint64_t>(step));
      mismatches += next.a != brute_force_step(lm, s, cands);
      ++checked;
      s = next;
    }
  }
  const bool pass = increases == 0 && nonzero == 0 && mismatches == 0 && ex.z() >= 3.0;
  return {pass, fmt("%zu trajectories, %zu loss increases; %zu nonzero incumbent scores; %zu/%zu exhaustive steps differ "
                    "from brute force; overlap %.4f vs chance %.4f (z = %.1f, >= 3)",
                    trajectories, increases, nonzero, mismatches, checked, ex.overlap_mean, ex.chance, ex.z())};
}

// 12. Percentile bootstrap coverage.
Outcome bootstrap_coverage() {
  Rng rng(1212);
  std::bernoulli_distribution coin(0.3);
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<char> s(320);
    for (auto& x : s) x = coin(rng) ? 1 : 0;
    const auto ci = harness::bootstrap_ci(s, 10000, 0.95, derive_seed(1212, static_cast<std::uint64_t>(rep)));
    covered += ci.lo <= 0.3 && 0.3 <= ci.hi;
  }
  return {covered >= 180, fmt("n=320, B=10000: %d/200 intervals cover 0.3 (>= 180)", covered)};
}

// 13. `bench` twice through the CLI.
Outcome reproducibility() {
  const std::string cli = GRADPRED_CLI_PATH;
  const std::string cfg = (kSource / "configs" / "repro.json").string();
  std::string out[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path dir = g_out / ("repro_" + std::to_string(i));
    fs::remove_all(dir);
    const std::string cmd = cli + " bench --config " + cfg + " --out " + dir.string() + " > " +
                            (g_out / ("repro_" + std::to_string(i) + ".log")).string() + " 2>&1";
    if (std::system(cmd.c_str()) != 0) return {false, "bench exited nonzero: " + cmd};
    std::ifstream in(dir / "results.csv", std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    out[i] = ss.str();
  }
  const auto rows = std::count(out[0].begin(), out[0].end(), '\n') - 1;
  return {!out[0].empty() && out[0] == out[1],
          fmt("%ld records, %zu bytes, runs %s", static_cast<long>(rows), out[0].size(),
              out[0] == out[1] ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::string out = "acceptance_out";
  std::set<int> only;
  std::size_t threads = 1;
  app.add_option("--out", out, "Directory for artifacts");
  app.add_option("--only", only, "Run only these criteria");
  app.add_option("--threads", threads, "Worker threads");
  CLI11_PARSE(app, argc, argv);
  g_out = out;
  fs::create_directories(g_out);

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient oracle", gradient_oracle},
      {"ridge correctness", ridge_correctness},
      {"Gaussian conditioning", conditioning},
      {"rotation identity", rotation_identity},
      {"stationarity suite", [&] { return ntk_suite(threads); }},
      {"width sweep trend", [&] { return width_sweep(threads); }},
      {"GP derivative", gp_derivative},
      {"throughput 24-layer", [&] { return throughput(threads); }},
      {"attack quality", [&] { return attack_quality(threads); }},
      {"mixed-gradient endpoints", [&] { return alpha_endpoints(threads); }},
      {"GCG invariants", [&] { return gcg_invariants(threads); }},
      {"bootstrap coverage", bootstrap_coverage},
      {"bench reproducibility", reproducibility},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !o.pass;
    std::printf("[%s] %2d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d criteria failed\n", failed);
  return std::min(failed, 125);
}
