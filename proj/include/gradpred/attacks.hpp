#pragma once

// Embedding-level attacks (FGSM, FGM, RS-FGSM, PGD) over a pluggable gradient
// source: exact backprop, the affine predictor, or a convex mix of both.

#include "gradpred/common.hpp"
#include "gradpred/diffnet.hpp"
#include "gradpred/gradpredict.hpp"

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace gradpred::attacks {

enum class Method { fgsm, fgm, rs_fgsm, pgd };
enum class Norm { linf, l2 };
enum class GradSource { exact, predicted, mixed };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::fgsm: return "FGSM";
    case Method::fgm: return "FGM";
    case Method::rs_fgsm: return "RS-FGSM";
    case Method::pgd: return "PGD";
  }
  return "?";
}

inline std::string_view to_string(Norm n) { return n == Norm::linf ? "Linf" : "L2"; }

inline std::string_view to_string(GradSource s) {
  switch (s) {
    case GradSource::exact: return "exact";
    case GradSource::predicted: return "predicted";
    case GradSource::mixed: return "mixed";
  }
  return "?";
}

inline Method parse_method(std::string_view s) {
  if (s == "FGSM" || s == "fgsm") return Method::fgsm;
  if (s == "FGM" || s == "fgm") return Method::fgm;
  if (s == "RS-FGSM" || s == "rs_fgsm" || s == "RS_FGSM") return Method::rs_fgsm;
  if (s == "PGD" || s == "pgd") return Method::pgd;
  throw std::invalid_argument("unknown attack method: " + std::string(s));
}

inline Norm parse_norm(std::string_view s) {
  if (s == "Linf" || s == "linf") return Norm::linf;
  if (s == "L2" || s == "l2") return Norm::l2;
  throw std::invalid_argument("unknown norm: " + std::string(s));
}

inline GradSource parse_grad_source(std::string_view s) {
  if (s == "exact") return GradSource::exact;
  if (s == "predicted") return GradSource::predicted;
  if (s == "mixed") return GradSource::mixed;
  throw std::invalid_argument("unknown gradient source: " + std::string(s));
}

/// Natural norm of each method.
inline Norm default_norm(Method m) { return m == Method::fgm ? Norm::l2 : Norm::linf; }

struct AttackSpec {
  Method method = Method::fgsm;
  Norm norm = Norm::linf;
  double eps = 0.1;
  std::size_t steps = 1;
  double step_size = 0.0;       // PGD inner step
  double rs_multiplier = 1.25;  // RS-FGSM step = rs_multiplier * eps
  double mix_alpha = 0.0;
  GradSource grad_source = GradSource::exact;
  std::uint64_t seed = 0;

  void validate() const {
    require(std::isfinite(eps) && eps > 0.0, "AttackSpec: eps must be > 0");
    require(mix_alpha >= 0.0 && mix_alpha <= 1.0, "AttackSpec: mix_alpha must lie in [0, 1]");
    require(rs_multiplier >= 0.0, "AttackSpec: rs_multiplier must be >= 0");
    switch (method) {
      case Method::fgsm:
      case Method::rs_fgsm:
        require(norm == Norm::linf, std::string(to_string(method)) + " is an Linf attack");
        require(steps == 1, std::string(to_string(method)) + " is one-shot (steps must be 1)");
        break;
      case Method::fgm:
        require(norm == Norm::l2, "FGM is an L2 attack");
        require(steps == 1, "FGM is one-shot (steps must be 1)");
        break;
      case Method::pgd:
        require(steps >= 1, "PGD: steps must be >= 1");
        require(step_size > 0.0, "PGD: step_size must be > 0");
        break;
    }
  }
};

struct AttackOutcome {
  Vec x_adv;
  bool success = false;
  std::int64_t gen_time_ns = 0;
  std::size_t grad_calls = 0;
  std::uint64_t backward_passes = 0;
};

/// x + eps * sgn(g), sgn(0) = 0.
inline Vec fgsm_step(const Vec& x, const Vec& g, double eps) {
  require_dim(g.size(), x.size(), "fgsm_step");
  require(eps >= 0.0, "fgsm_step: eps must be >= 0");
  return x + eps * sign_of(g);
}

/// x + eps * g / |g|_2; x unchanged when g = 0.
inline Vec fgm_step(const Vec& x, const Vec& g, double eps) {
  require_dim(g.size(), x.size(), "fgm_step");
  require(eps >= 0.0, "fgm_step: eps must be >= 0");
  return x + eps * unit_or_zero(g);
}

/// Exact Euclidean projection onto the eps-ball around `center`.
inline Vec project(const Vec& x, const Vec& center, double eps, Norm norm) {
  const Vec d = x - center;
  if (norm == Norm::linf) return center + d.cwiseMax(-eps).cwiseMin(eps);
  const double n = d.norm();
  return n <= eps ? x : Vec(center + d * (eps / n));
}

inline double distance(const Vec& a, const Vec& b, Norm norm) {
  return norm == Norm::linf ? (a - b).lpNorm<Eigen::Infinity>() : (a - b).norm();
}

/// (1 - alpha) * predicted + alpha * exact, not renormalized. The endpoints
/// return their operand unchanged.
inline Vec mix_gradient(const Vec& predicted, const Vec& exact, double alpha) {
  require(alpha >= 0.0 && alpha <= 1.0, "mix_gradient: alpha must lie in [0, 1]");
  require_dim(exact.size(), predicted.size(), "mix_gradient");
  if (alpha == 0.0) return predicted;
  if (alpha == 1.0) return exact;
  return (1.0 - alpha) * predicted + alpha * exact;
}

/// Randomized-start FGSM: delta0 ~ U[-eps, eps]^d, one signed step of size
/// alpha_rs * eps from x + delta0, clipped back into the Linf eps-ball.
template <class GradFn>
Vec rs_fgsm(const Vec& x, GradFn&& grad_fn, double eps, double alpha_rs, std::uint64_t seed) {
  require(eps > 0.0, "rs_fgsm: eps must be > 0");
  Rng rng(seed);
  const Vec start = x + uniform_vector(rng, x.size(), -eps, eps);
  const Vec g = grad_fn(start);
  return project(start + alpha_rs * eps * sign_of(g), x, eps, Norm::linf);
}

/// Direction used by an iterative step: sign for Linf, unit vector for L2.
inline Vec step_direction(const Vec& g, Norm norm) { return norm == Norm::linf ? sign_of(g) : unit_or_zero(g); }

/// N projected steps from x (deterministic start). grad_fn is called exactly
/// once per iteration.
template <class GradFn>
Vec pgd(const Vec& x, GradFn&& grad_fn, double eps, std::size_t steps, double step_size, Norm norm) {
  require(steps >= 1, "pgd: steps must be >= 1");
  require(step_size > 0.0, "pgd: step_size must be > 0");
  Vec cur = x;
  for (std::size_t k = 0; k < steps; ++k) cur = project(cur + step_size * step_direction(grad_fn(cur), norm), x, eps, norm);
  return cur;
}

/// Attack is successful when the full-forward argmax moves onto the target
/// class from somewhere else.
inline bool adjudicate(const diffnet::Network& net, const Vec& x, const Vec& x_adv, std::size_t target) {
  const auto t = static_cast<Eigen::Index>(target);
  return argmax(diffnet::logits(net, x_adv)) == t && argmax(diffnet::logits(net, x)) != t;
}

/// Chrono-compatible clock that reads this thread's multiply-add counter as
/// nanoseconds. Gives a deterministic cost measure for reproducible runs.
struct WorkClock {
  using rep = std::int64_t;
  using period = std::nano;
  using duration = std::chrono::nanoseconds;
  using time_point = std::chrono::time_point<WorkClock, duration>;
  static constexpr bool is_steady = true;
  static time_point now() noexcept {
    return time_point(duration(static_cast<rep>(diffnet::op_counters().multiply_adds)));
  }
};

/// Gradient evaluation for a given source. Exact gradients are unit-normalized
/// so that the mixed source at alpha = 1 coincides with the exact source.
class GradientSource {
 public:
  GradientSource(const diffnet::Network& net, const gradpredict::GradientPredictor* predictor, GradSource source,
                 double alpha, std::size_t target)
      : net_(net), predictor_(predictor), source_(source), alpha_(alpha), target_(target) {
    if (source != GradSource::exact && predictor == nullptr)
      throw std::invalid_argument("gradient source '" + std::string(to_string(source)) + "' needs a predictor");
    if (predictor != nullptr && source != GradSource::exact)
      require(predictor->output_dim() == net.input_dim(), "predictor output dimension does not match the input");
  }

  Vec operator()(const Vec& x) {
    ++calls_;
    switch (source_) {
      case GradSource::exact: return unit_or_zero(diffnet::input_gradient(net_, x, target_));
      case GradSource::predicted: return predictor_->estimate(net_, x, target_);
      case GradSource::mixed:
        return mix_gradient(predictor_->estimate(net_, x, target_),
                            unit_or_zero(diffnet::input_gradient(net_, x, target_)), alpha_);
    }
    return {};
  }

  std::size_t calls() const { return calls_; }

 private:
  const diffnet::Network& net_;
  const gradpredict::GradientPredictor* predictor_;
  GradSource source_;
  double alpha_;
  std::size_t target_;
  std::size_t calls_ = 0;
};

/// Generates the perturbation only; no timing and no adjudication.
inline Vec generate(const AttackSpec& spec, GradientSource& grad, const Vec& x, std::uint64_t example_index) {
  switch (spec.method) {
    case Method::fgsm: return fgsm_step(x, grad(x), spec.eps);
    case Method::fgm: return fgm_step(x, grad(x), spec.eps);
    case Method::rs_fgsm: return rs_fgsm(x, grad, spec.eps, spec.rs_multiplier, derive_seed(spec.seed, example_index));
    case Method::pgd: return pgd(x, grad, spec.eps, spec.steps, spec.step_size, spec.norm);
  }
  return x;
}

/// Runs one attack. Timing covers gradient evaluation and the update only;
/// success is adjudicated after the clock stops.
template <class Clock = std::chrono::steady_clock>
AttackOutcome run_attack(const AttackSpec& spec, const diffnet::Network& net,
                         const gradpredict::GradientPredictor* predictor, const Example& example,
                         std::uint64_t example_index = 0) {
  spec.validate();
  require_dim(example.x.size(), static_cast<Eigen::Index>(net.input_dim()), "run_attack");
  GradientSource grad(net, predictor, spec.grad_source, spec.mix_alpha, example.target);

  AttackOutcome out;
  const std::uint64_t backward_before = diffnet::op_counters().backward_passes;
  const auto t0 = Clock::now();
  out.x_adv = generate(spec, grad, example.x, example_index);
  const auto t1 = Clock::now();
  out.backward_passes = diffnet::op_counters().backward_passes - backward_before;
  out.gen_time_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count();
  out.grad_calls = grad.calls();
  out.success = adjudicate(net, example.x, out.x_adv, example.target);
  return out;
}

}  // namespace gradpred::attacks
