#pragma once

// Toy-scale greedy coordinate-gradient (GCG) suffix attack on a one-block
// causal language model, with exact or predicted suffix gradients.

#include "gradpred/common.hpp"
#include "gradpred/diffnet.hpp"
#include "gradpred/gradpredict.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <istream>
#include <iterator>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gradpred::tokenattack {

using Token = std::size_t;
using Tokens = std::vector<Token>;

struct LMSpec {
  std::size_t vocab = 64;
  std::size_t d_model = 32;
  std::size_t d_ff = 64;
  std::size_t max_len = 64;
  double positional_scale = 0.1;
  double head_scale = 2.0;  // output-head std = head_scale / sqrt(d_model)
  std::uint64_t seed = 0;

  void validate() const {
    require(vocab >= 2, "LMSpec: vocab must be >= 2");
    require(d_model >= 1 && d_ff >= 1, "LMSpec: widths must be >= 1");
    require(max_len >= 2, "LMSpec: max_len must be >= 2");
  }
};

/// Token embedding + positional embedding, one single-head causal attention
/// block and one tanh feed-forward block, both residual, then a linear head.
struct ToyLM {
  LMSpec spec;
  Mat E;   // V x d
  Mat P;   // max_len x d
  Mat Wq, Wk, Wv, Wo;  // d x d
  Mat W1;  // d_ff x d
  Vec c1;  // d_ff
  Mat W2;  // d x d_ff
  Mat U;   // V x d

  std::size_t vocab() const { return static_cast<std::size_t>(E.rows()); }
  std::size_t d_model() const { return static_cast<std::size_t>(E.cols()); }
};

inline ToyLM build_lm(const LMSpec& spec) {
  spec.validate();
  const auto V = static_cast<Eigen::Index>(spec.vocab);
  const auto d = static_cast<Eigen::Index>(spec.d_model);
  const auto f = static_cast<Eigen::Index>(spec.d_ff);
  const auto L = static_cast<Eigen::Index>(spec.max_len);
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  ToyLM lm;
  lm.spec = spec;
  Rng r1 = make_rng(spec.seed, 1), r2 = make_rng(spec.seed, 2), r3 = make_rng(spec.seed, 3), r4 = make_rng(spec.seed, 4);
  lm.E = normal_matrix(r1, V, d);
  lm.P = normal_matrix(r2, L, d, spec.positional_scale);
  lm.Wq = normal_matrix(r3, d, d, sd);
  lm.Wk = normal_matrix(r3, d, d, sd);
  lm.Wv = normal_matrix(r3, d, d, sd);
  lm.Wo = normal_matrix(r3, d, d, sd);
  lm.W1 = normal_matrix(r3, f, d, sd);
  lm.c1 = Vec::Zero(f);
  lm.W2 = normal_matrix(r3, d, f, 1.0 / std::sqrt(static_cast<double>(f)));
  lm.U = normal_matrix(r4, V, d, spec.head_scale * sd);
  return lm;
}

inline void check_tokens(const ToyLM& lm, const Tokens& toks, const char* what) {
  for (Token t : toks)
    if (t >= lm.vocab()) throw std::out_of_range(std::string(what) + ": token id " + std::to_string(t) + " >= vocab");
}

/// Rows E[tok_i] + P_i.
inline Mat embed(const ToyLM& lm, const Tokens& toks) {
  check_tokens(lm, toks, "embed");
  require(toks.size() <= static_cast<std::size_t>(lm.P.rows()), "embed: sequence longer than max_len");
  Mat X(static_cast<Eigen::Index>(toks.size()), lm.E.cols());
  for (std::size_t i = 0; i < toks.size(); ++i)
    X.row(static_cast<Eigen::Index>(i)) = lm.E.row(static_cast<Eigen::Index>(toks[i])) + lm.P.row(static_cast<Eigen::Index>(i));
  return X;
}

struct LMTrace {
  Mat X, Q, K, Vv, Alpha, H1, R, H2, Z;
};

/// Forward on embedded inputs. tap 0 stops after the embedding, tap 1 after
/// attention, tap 2 after the feed-forward block; no tap runs the head.
inline LMTrace lm_forward(const ToyLM& lm, const Mat& X, std::optional<int> tap = std::nullopt) {
  require(!tap || (*tap >= 0 && *tap <= 2), "lm_forward: tap must be 0, 1 or 2");
  auto& ops = diffnet::op_counters();
  ++ops.forward_passes;
  const Eigen::Index n = X.rows(), d = X.cols();
  LMTrace tr;
  tr.X = X;
  if (tap && *tap == 0) return tr;
  tr.Q = X * lm.Wq.transpose();
  tr.K = X * lm.Wk.transpose();
  tr.Vv = X * lm.Wv.transpose();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  tr.Alpha = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::RowVectorXd s = (tr.K.topRows(i + 1) * tr.Q.row(i).transpose()).transpose() * scale;
    s.array() -= s.maxCoeff();
    s = s.array().exp().matrix();
    tr.Alpha.row(i).head(i + 1) = s / s.sum();
  }
  tr.H1 = X + (tr.Alpha * tr.Vv) * lm.Wo.transpose();
  ops.multiply_adds += static_cast<std::uint64_t>(n * d * 4 * d + n * n * d);
  if (tap && *tap == 1) return tr;
  tr.R = ((tr.H1 * lm.W1.transpose()).rowwise() + lm.c1.transpose()).array().tanh().matrix();
  tr.H2 = tr.H1 + tr.R * lm.W2.transpose();
  ops.multiply_adds += static_cast<std::uint64_t>(2 * n * d * lm.W1.rows());
  if (tap && *tap == 2) return tr;
  tr.Z = tr.H2 * lm.U.transpose();
  ops.multiply_adds += static_cast<std::uint64_t>(n * d * lm.U.rows());
  return tr;
}

inline Mat lm_logits(const ToyLM& lm, const Tokens& toks) { return lm_forward(lm, embed(lm, toks)).Z; }

/// Context fed to the model for the teacher-forced loss: q, a, then t without
/// its final token.
inline Tokens context(const Tokens& q, const Tokens& a, const Tokens& t) {
  Tokens s;
  s.reserve(q.size() + a.size() + t.size());
  s.insert(s.end(), q.begin(), q.end());
  s.insert(s.end(), a.begin(), a.end());
  s.insert(s.end(), t.begin(), t.end() - 1);
  return s;
}

inline double log_softmax_at(const Eigen::RowVectorXd& z, Eigen::Index k) {
  const double m = z.maxCoeff();
  return z[k] - m - std::log((z.array() - m).exp().sum());
}

/// Loss of `t` where row first + h of Z predicts t[h].
inline double loss_from_logits(const Mat& Z, std::size_t first, const Tokens& t) {
  double loss = 0.0;
  for (std::size_t h = 0; h < t.size(); ++h)
    loss -= log_softmax_at(Z.row(static_cast<Eigen::Index>(first + h)), static_cast<Eigen::Index>(t[h]));
  return loss;
}

inline void check_problem(const ToyLM& lm, const Tokens& q, const Tokens& a, const Tokens& t) {
  require(!t.empty(), "teacher_forced_loss: empty target");
  require(q.size() + a.size() >= 1, "teacher_forced_loss: empty context");
  check_tokens(lm, q, "prompt");
  check_tokens(lm, a, "suffix");
  check_tokens(lm, t, "target");
}

/// -sum_h log P(t_h | q, a, t_<h).
inline double teacher_forced_loss(const ToyLM& lm, const Tokens& q, const Tokens& a, const Tokens& t) {
  check_problem(lm, q, a, t);
  const Mat Z = lm_forward(lm, embed(lm, context(q, a, t))).Z;
  return loss_from_logits(Z, q.size() + a.size() - 1, t);
}

/// Loss with the embedded context supplied directly (used for finite differences).
inline double loss_from_embeddings(const ToyLM& lm, const Mat& X, std::size_t first, const Tokens& t) {
  return loss_from_logits(lm_forward(lm, X).Z, first, t);
}

/// Reverse pass: gradient of the loss with respect to every input row X_i.
inline Mat input_rows_gradient(const ToyLM& lm, const Mat& X, std::size_t first, const Tokens& t) {
  const LMTrace tr = lm_forward(lm, X);
  auto& ops = diffnet::op_counters();
  ++ops.backward_passes;
  const Eigen::Index n = X.rows(), d = X.cols();
  Mat dZ = Mat::Zero(n, tr.Z.cols());
  for (std::size_t h = 0; h < t.size(); ++h) {
    const auto p = static_cast<Eigen::Index>(first + h);
    Eigen::RowVectorXd z = tr.Z.row(p);
    z.array() -= z.maxCoeff();
    z = z.array().exp().matrix();
    dZ.row(p) = z / z.sum();
    dZ(p, static_cast<Eigen::Index>(t[h])) -= 1.0;
  }
  const Mat dH2 = dZ * lm.U;
  const Mat dPre = (dH2 * lm.W2).cwiseProduct((1.0 - tr.R.array().square()).matrix());
  const Mat dH1 = dH2 + dPre * lm.W1;
  const Mat dAtt = dH1 * lm.Wo;
  const Mat dAlpha = dAtt * tr.Vv.transpose();
  const Mat dV = tr.Alpha.transpose() * dAtt;
  const Vec rowdot = tr.Alpha.cwiseProduct(dAlpha).rowwise().sum();
  const Mat dS = tr.Alpha.cwiseProduct(dAlpha.colwise() - rowdot);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const Mat dQ = dS * tr.K * scale;
  const Mat dK = dS.transpose() * tr.Q * scale;
  ops.multiply_adds += 2 * static_cast<std::uint64_t>(n * d * (4 * d + 2 * lm.W1.rows() + lm.U.rows()) + 2 * n * n * d);
  return dH1 + dQ * lm.Wq + dK * lm.Wk + dV * lm.Wv;
}

/// Gradient of the teacher-forced loss with respect to each suffix token's
/// input embedding; one row per suffix position.
inline Mat suffix_gradient(const ToyLM& lm, const Tokens& q, const Tokens& a, const Tokens& t) {
  check_problem(lm, q, a, t);
  const Mat G = input_rows_gradient(lm, embed(lm, context(q, a, t)), q.size() + a.size() - 1, t);
  return G.middleRows(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(a.size()));
}

/// Tapped hidden states at the suffix positions, flattened in position order.
/// Causality means the target tokens never influence them.
inline Vec suffix_features(const ToyLM& lm, const Tokens& q, const Tokens& a, int tap) {
  Tokens s = q;
  s.insert(s.end(), a.begin(), a.end());
  const LMTrace tr = lm_forward(lm, embed(lm, s), tap);
  const Mat& H = tap == 0 ? tr.X : tap == 1 ? tr.H1 : tr.H2;
  const Mat rows = H.middleRows(static_cast<Eigen::Index>(q.size()), static_cast<Eigen::Index>(a.size()));
  Vec out(rows.size());
  for (Eigen::Index r = 0; r < rows.rows(); ++r) out.segment(r * rows.cols(), rows.cols()) = rows.row(r).transpose();
  return out;
}

inline Vec flatten_rows(const Mat& m) {
  Vec out(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r) out.segment(r * m.cols(), m.cols()) = m.row(r).transpose();
  return out;
}

inline Mat unflatten_rows(const Vec& v, Eigen::Index rows) {
  require(rows > 0 && v.size() % rows == 0, "unflatten_rows: size mismatch");
  const Eigen::Index cols = v.size() / rows;
  Mat m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) m.row(r) = v.segment(r * cols, cols).transpose();
  return m;
}

/// Each row scaled to unit norm; zero rows stay zero.
inline Mat normalize_rows(const Mat& g) {
  Mat out = g;
  for (Eigen::Index r = 0; r < g.rows(); ++r) out.row(r) = unit_or_zero(g.row(r).transpose()).transpose();
  return out;
}

struct CandidateSet {
  std::size_t position = 0;
  Tokens tokens;
};

/// Per-position scores (E_v - E_{a_r}) . g_r for every token v.
inline Vec candidate_scores(const Mat& E, Token incumbent, const Eigen::Ref<const Vec>& g) {
  Vec delta(E.rows());
  const auto a = static_cast<Eigen::Index>(incumbent);
  for (Eigen::Index v = 0; v < E.rows(); ++v) delta[v] = (E.row(v) - E.row(a)).dot(g.transpose());
  return delta;
}

/// The k most negative scores per position, ties to the smaller token id.
inline std::vector<CandidateSet> build_candidates(const Mat& grads, const Mat& E, const Tokens& a, std::size_t k) {
  require(k >= 1, "build_candidates: k must be >= 1");
  require_dim(grads.rows(), static_cast<Eigen::Index>(a.size()), "build_candidates rows");
  require_dim(grads.cols(), E.cols(), "build_candidates cols");
  const auto V = static_cast<std::size_t>(E.rows());
  const std::size_t kk = std::min(k, V);
  std::vector<CandidateSet> out(a.size());
  Tokens order(V);
  for (std::size_t r = 0; r < a.size(); ++r) {
    require(a[r] < V, "build_candidates: suffix token out of range");
    const Vec delta = candidate_scores(E, a[r], grads.row(static_cast<Eigen::Index>(r)).transpose());
    std::iota(order.begin(), order.end(), Token{0});
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(), [&](Token x, Token y) {
      const double dx = delta[static_cast<Eigen::Index>(x)], dy = delta[static_cast<Eigen::Index>(y)];
      return dx < dy || (dx == dy && x < y);
    });
    out[r].position = r;
    out[r].tokens.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk));
  }
  return out;
}

struct SuffixState {
  Tokens q, a, t;
  double loss = 0.0;
  std::size_t iteration = 0;
};

inline SuffixState make_state(const ToyLM& lm, Tokens q, Tokens a, Tokens t) {
  SuffixState s{std::move(q), std::move(a), std::move(t), 0.0, 0};
  s.loss = teacher_forced_loss(lm, s.q, s.a, s.t);
  return s;
}

struct Substitution {
  std::size_t position = 0;
  Token token = 0;
};

/// Evaluates every substitution exactly and commits the lowest-loss one when
/// it does not increase the loss. Ties go to the smaller token id, then the
/// smaller position. The iteration counter always advances.
inline SuffixState select_best(const ToyLM& lm, const SuffixState& state, const std::vector<Substitution>& batch,
                               std::size_t threads = 1) {
  std::vector<double> losses(batch.size());
  parallel_for(batch.size(), threads, [&](std::size_t i) {
    require(batch[i].position < state.a.size(), "select_best: position out of range");
    Tokens a = state.a;
    a[batch[i].position] = batch[i].token;
    losses[i] = teacher_forced_loss(lm, state.q, a, state.t);
  });
  SuffixState next = state;
  ++next.iteration;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (!best) {
      best = i;
      continue;
    }
    const auto& b = batch[*best];
    const auto& c = batch[i];
    if (losses[i] < losses[*best] ||
        (losses[i] == losses[*best] && (c.token < b.token || (c.token == b.token && c.position < b.position))))
      best = i;
  }
  if (best && losses[*best] <= state.loss) {
    next.a[batch[*best].position] = batch[*best].token;
    next.loss = losses[*best];
  }
  return next;
}

/// Batch of (r, v) pairs: every candidate when the pool is no larger than
/// batch_size, otherwise batch_size draws of r uniform then v uniform in C_r.
inline std::vector<Substitution> sample_batch(const std::vector<CandidateSet>& cands, std::size_t batch_size, Rng& rng) {
  require(batch_size >= 1, "gcg: batch_size must be >= 1");
  require(!cands.empty(), "gcg: empty suffix");
  std::size_t pool = 0;
  for (const auto& c : cands) pool += c.tokens.size();
  std::vector<Substitution> batch;
  if (batch_size >= pool) {
    for (const auto& c : cands)
      for (Token v : c.tokens) batch.push_back({c.position, v});
    return batch;
  }
  batch.reserve(batch_size);
  std::uniform_int_distribution<std::size_t> pick_r(0, cands.size() - 1);
  for (std::size_t i = 0; i < batch_size; ++i) {
    const auto& c = cands[pick_r(rng)];
    std::uniform_int_distribution<std::size_t> pick_v(0, c.tokens.size() - 1);
    batch.push_back({c.position, c.tokens[pick_v(rng)]});
  }
  return batch;
}

/// Source of per-position suffix gradients (l_s x d_e).
using SuffixGradFn = std::function<Mat(const SuffixState&)>;

inline SuffixGradFn exact_suffix_gradient(const ToyLM& lm) {
  return [&lm](const SuffixState& s) { return suffix_gradient(lm, s.q, s.a, s.t); };
}

/// Affine predictor over flattened tapped suffix states; no backward pass.
struct SuffixPredictor {
  gradpredict::GradientPredictor affine;
  int tap = 1;

  Mat predict(const ToyLM& lm, const SuffixState& s) const {
    return unflatten_rows(affine.predict(suffix_features(lm, s.q, s.a, tap)), static_cast<Eigen::Index>(s.a.size()));
  }
};

inline SuffixGradFn predicted_suffix_gradient(const ToyLM& lm, const SuffixPredictor& p) {
  return [&lm, &p](const SuffixState& s) { return p.predict(lm, s); };
}

/// One GCG step driven by an arbitrary gradient source.
inline SuffixState gcg_step(const ToyLM& lm, const SuffixState& state, std::size_t k, std::size_t batch_size, Rng& rng,
                            const SuffixGradFn& grad, std::size_t threads = 1) {
  const auto cands = build_candidates(grad(state), lm.E, state.a, k);
  return select_best(lm, state, sample_batch(cands, batch_size, rng), threads);
}

/// One GCG step with exact gradients.
inline SuffixState gcg_iterate(const ToyLM& lm, const SuffixState& state, std::size_t k, std::size_t batch_size,
                               std::uint64_t seed, std::size_t threads = 1) {
  Rng rng(seed);
  return gcg_step(lm, state, k, batch_size, rng, exact_suffix_gradient(lm), threads);
}

enum class GradSource { exact, predicted };

struct GcgConfig {
  std::size_t steps = 25;
  std::size_t k = 16;
  std::size_t batch_size = 64;
  std::size_t suffix_len = 10;
  Token filler = 0;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct GcgRun {
  SuffixState state;
  std::vector<double> losses;  // loss after 0..steps iterations
  std::int64_t gen_time_ns = 0;
  std::uint64_t backward_passes = 0;
};

inline Tokens filler_suffix(const GcgConfig& cfg) { return Tokens(cfg.suffix_len, cfg.filler); }

/// Runs `steps` GCG iterations from the filler suffix. Step i draws its batch
/// from the stream derive_seed(seed, i).
inline GcgRun run_gcg(const ToyLM& lm, const Tokens& q, const Tokens& t, const GcgConfig& cfg, const SuffixGradFn& grad) {
  require(cfg.suffix_len >= 1, "run_gcg: suffix_len must be >= 1");
  GcgRun run;
  run.state = make_state(lm, q, filler_suffix(cfg), t);
  run.losses.push_back(run.state.loss);
  const std::uint64_t bw0 = diffnet::op_counters().backward_passes;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < cfg.steps; ++i) {
    Rng rng(derive_seed(cfg.seed, i));
    run.state = gcg_step(lm, run.state, cfg.k, cfg.batch_size, rng, grad, cfg.threads);
    run.losses.push_back(run.state.loss);
  }
  run.gen_time_ns =
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - t0).count();
  run.backward_passes = diffnet::op_counters().backward_passes - bw0;
  return run;
}

inline GcgRun run_gcg(const ToyLM& lm, const Tokens& q, const Tokens& t, const GcgConfig& cfg, GradSource source,
                      const SuffixPredictor* predictor = nullptr) {
  if (source == GradSource::exact) return run_gcg(lm, q, t, cfg, exact_suffix_gradient(lm));
  if (predictor == nullptr) throw std::invalid_argument("run_gcg: predicted source needs a predictor");
  require(predictor->affine.output_dim() == cfg.suffix_len * lm.d_model(), "run_gcg: predictor output size mismatch");
  return run_gcg(lm, q, t, cfg, predicted_suffix_gradient(lm, *predictor));
}

struct PromptPair {
  Tokens prompt;
  Tokens target;
};

/// Exact-GCG trajectories plus one-token random variants of every visited
/// state. Features are flattened tapped suffix states, targets are suffix
/// gradients normalized per position. Yields prompts * (steps + 1) *
/// (variants + 1) samples of weight 1.
inline std::vector<gradpredict::TrainingSample> trajectory_augment(const ToyLM& lm, const std::vector<PromptPair>& prompts,
                                                                   const GcgConfig& cfg, std::size_t variants, int tap) {
  const std::size_t per_prompt = (cfg.steps + 1) * (variants + 1);
  std::vector<gradpredict::TrainingSample> out(prompts.size() * per_prompt);
  parallel_for(prompts.size(), cfg.threads, [&](std::size_t p) {
    Rng rng = make_rng(cfg.seed, 1000 + p);
    std::uniform_int_distribution<std::size_t> pick_r(0, cfg.suffix_len - 1);
    std::uniform_int_distribution<Token> pick_v(0, lm.vocab() - 2);
    SuffixState s = make_state(lm, prompts[p].prompt, filler_suffix(cfg), prompts[p].target);
    std::size_t slot = p * per_prompt;
    for (std::size_t i = 0; i <= cfg.steps; ++i) {
      for (std::size_t v = 0; v <= variants; ++v) {
        Tokens a = s.a;
        if (v > 0) {
          const std::size_t r = pick_r(rng);
          Token tok = pick_v(rng);
          if (tok >= a[r]) ++tok;  // uniform over tokens other than the incumbent
          a[r] = tok;
        }
        auto& smp = out[slot++];
        smp.features = suffix_features(lm, s.q, a, tap);
        smp.target = flatten_rows(normalize_rows(suffix_gradient(lm, s.q, a, s.t)));
        smp.weight = 1.0;
      }
      if (i < cfg.steps) {
        Rng step_rng(derive_seed(derive_seed(cfg.seed, p), i));
        s = gcg_step(lm, s, cfg.k, cfg.batch_size, step_rng, exact_suffix_gradient(lm));
      }
    }
  });
  return out;
}

/// Mean fraction of shared tokens between two candidate lists, per position.
inline std::vector<double> candidate_overlap(const std::vector<CandidateSet>& x, const std::vector<CandidateSet>& y) {
  require(x.size() == y.size(), "candidate_overlap: position count mismatch");
  std::vector<double> out;
  out.reserve(x.size());
  for (std::size_t r = 0; r < x.size(); ++r) {
    Tokens a = x[r].tokens, b = y[r].tokens;
    require(a.size() == b.size() && !a.empty(), "candidate_overlap: candidate sizes differ");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    Tokens common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    out.push_back(static_cast<double>(common.size()) / static_cast<double>(a.size()));
  }
  return out;
}

inline Tokens parse_tokens(const std::string& field, std::size_t line_no) {
  Tokens out;
  std::istringstream is(field);
  std::string word;
  while (is >> word) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(word, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != word.size() || word.front() == '-')
      throw std::runtime_error("prompt file line " + std::to_string(line_no) + ": bad token '" + word + "'");
    out.push_back(static_cast<Token>(v));
  }
  return out;
}

/// Lines of `prompt_tokens <TAB> target_tokens`; blank lines and lines
/// starting with '#' are skipped.
inline std::vector<PromptPair> read_prompts(std::istream& is) {
  std::vector<PromptPair> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos || line[line.find_first_not_of(" \t")] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos)
      throw std::runtime_error("prompt file line " + std::to_string(line_no) + ": expected exactly one tab");
    PromptPair p{parse_tokens(line.substr(0, tab), line_no), parse_tokens(line.substr(tab + 1), line_no)};
    if (p.target.empty()) throw std::runtime_error("prompt file line " + std::to_string(line_no) + ": empty target");
    out.push_back(std::move(p));
  }
  return out;
}

/// Random prompt/target pairs for desk-scale runs.
inline std::vector<PromptPair> synth_prompts(const ToyLM& lm, std::size_t count, std::size_t prompt_len,
                                             std::size_t target_len, std::uint64_t seed) {
  Rng rng = make_rng(seed, 7);
  std::uniform_int_distribution<Token> tok(0, lm.vocab() - 1);
  std::vector<PromptPair> out(count);
  for (auto& p : out) {
    p.prompt.resize(prompt_len);
    p.target.resize(target_len);
    for (auto& x : p.prompt) x = tok(rng);
    for (auto& x : p.target) x = tok(rng);
  }
  return out;
}

}  // namespace gradpred::tokenattack
