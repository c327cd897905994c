#pragma once

// Toy differentiable networks: a sine-cosine embedding front end followed by
// dense layers and a linear output head. Provides hidden-state taps,
// early-exit forward passes, a hand-derived reverse-mode input gradient and a
// central-difference checker.

#include "gradpred/common.hpp"

#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gradpred::diffnet {

enum class Activation { tanh, relu, erf };

/// Embedding family. `linear` (e_j = u_j * w_j.x) is not translation
/// covariant and exists only as a planted violation for the kernel checks.
enum class EmbeddingKind { sincos, linear };

/// Law of the (u_j, v_j) coefficient pairs. `unit_cosine` pins u_j = 1,
/// which breaks rotational invariance of the pair.
enum class CoefficientLaw { gaussian, unit_cosine };

/// Law of the frequency rows. `two_point` draws each entry as +-scale.
enum class FrequencyLaw { normal, two_point };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
    case Activation::erf: return "erf";
  }
  return "?";
}

inline Activation parse_activation(std::string_view s) {
  if (s == "tanh") return Activation::tanh;
  if (s == "relu") return Activation::relu;
  if (s == "erf") return Activation::erf;
  throw std::invalid_argument("unknown activation: " + std::string(s));
}

struct NetworkSpec {
  std::size_t input_dim = 2;
  std::size_t embedding_width = 64;
  std::vector<std::size_t> hidden_widths{32};
  std::size_t output_dim = 2;
  Activation activation = Activation::tanh;
  /// Standard deviation of each frequency entry.
  double frequency_scale = 1.0;
  /// Standard deviation of dense-layer biases (0 gives bias-free layers).
  double bias_scale = 0.0;
  std::uint64_t seed = 0;
  EmbeddingKind embedding = EmbeddingKind::sincos;
  CoefficientLaw coefficients = CoefficientLaw::gaussian;
  FrequencyLaw frequencies = FrequencyLaw::normal;

  void validate() const {
    require(input_dim >= 1, "NetworkSpec: input_dim must be >= 1");
    require(embedding_width >= 1, "NetworkSpec: embedding_width must be >= 1");
    require(output_dim >= 1, "NetworkSpec: output_dim must be >= 1");
    for (auto w : hidden_widths) require(w >= 1, "NetworkSpec: hidden widths must be >= 1");
    require(std::isfinite(frequency_scale) && frequency_scale > 0.0, "NetworkSpec: frequency_scale must be > 0");
    require(std::isfinite(bias_scale) && bias_scale >= 0.0, "NetworkSpec: bias_scale must be >= 0");
  }
};

struct DenseLayer {
  Mat weight;  // out x in
  Vec bias;    // out
};

/// Plain value type. Shared read-only across workers once built.
struct Network {
  NetworkSpec spec;
  Mat frequencies;  // m x d, row j is w_j
  Vec u;            // m
  Vec v;            // m
  std::vector<DenseLayer> layers;
  Mat head;         // C x width(L)

  std::size_t input_dim() const { return static_cast<std::size_t>(frequencies.cols()); }
  std::size_t embedding_width() const { return static_cast<std::size_t>(frequencies.rows()); }
  std::size_t depth() const { return layers.size(); }
  std::size_t output_dim() const { return static_cast<std::size_t>(head.rows()); }

  /// Width of hidden state `layer`; layer 0 is the embedding.
  std::size_t width(std::size_t layer) const {
    require(layer <= depth(), "Network::width: layer out of range");
    return layer == 0 ? embedding_width() : static_cast<std::size_t>(layers[layer - 1].weight.rows());
  }
};

/// Per-thread work counters. Attack code reads deltas around a gradient
/// evaluation to prove which path ran.
struct OpCounters {
  std::uint64_t forward_passes = 0;
  std::uint64_t backward_passes = 0;
  std::uint64_t multiply_adds = 0;
};

inline OpCounters& op_counters() noexcept {
  thread_local OpCounters counters;
  return counters;
}

inline Network build_network(const NetworkSpec& spec) {
  spec.validate();
  const auto d = static_cast<Eigen::Index>(spec.input_dim);
  const auto m = static_cast<Eigen::Index>(spec.embedding_width);

  Network net;
  net.spec = spec;
  // Separate streams per parameter group so widening one layer does not
  // reshuffle the others.
  {
    Rng rng = make_rng(spec.seed, 1);
    if (spec.frequencies == FrequencyLaw::normal) {
      net.frequencies = normal_matrix(rng, m, d, spec.frequency_scale);
    } else {
      std::bernoulli_distribution coin(0.5);
      net.frequencies.resize(m, d);
      for (Eigen::Index r = 0; r < m; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
          net.frequencies(r, c) = coin(rng) ? spec.frequency_scale : -spec.frequency_scale;
    }
  }
  {
    Rng rng = make_rng(spec.seed, 2);
    std::normal_distribution<double> n01;
    net.u.resize(m);
    net.v.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
      net.u[j] = n01(rng);
      net.v[j] = n01(rng);
    }
    if (spec.coefficients == CoefficientLaw::unit_cosine) net.u.setOnes();
  }
  std::size_t fan_in = spec.embedding_width;
  for (std::size_t l = 0; l < spec.hidden_widths.size(); ++l) {
    Rng rng = make_rng(spec.seed, 100 + l);
    const auto out = static_cast<Eigen::Index>(spec.hidden_widths[l]);
    DenseLayer layer;
    layer.weight = normal_matrix(rng, out, static_cast<Eigen::Index>(fan_in), 1.0 / std::sqrt(double(fan_in)));
    layer.bias = spec.bias_scale > 0.0 ? normal_vector(rng, out, spec.bias_scale) : Vec(Vec::Zero(out));
    net.layers.push_back(std::move(layer));
    fan_in = spec.hidden_widths[l];
  }
  {
    Rng rng = make_rng(spec.seed, 3);
    net.head = normal_matrix(rng, static_cast<Eigen::Index>(spec.output_dim), static_cast<Eigen::Index>(fan_in),
                             1.0 / std::sqrt(double(fan_in)));
  }
  return net;
}

inline double activate(Activation act, double a) {
  switch (act) {
    case Activation::tanh: return std::tanh(a);
    case Activation::relu: return a > 0.0 ? a : 0.0;
    case Activation::erf: return std::erf(a);
  }
  return a;
}

/// Derivative; relu uses subgradient 0 at the kink.
inline double activate_deriv(Activation act, double a) {
  switch (act) {
    case Activation::tanh: {
      const double t = std::tanh(a);
      return 1.0 - t * t;
    }
    case Activation::relu: return a > 0.0 ? 1.0 : 0.0;
    case Activation::erf: return 2.0 / std::sqrt(std::numbers::pi) * std::exp(-a * a);
  }
  return 1.0;
}

inline Vec activate(Activation act, const Vec& a) {
  return a.unaryExpr([act](double z) { return activate(act, z); });
}

/// e_j(x) = u_j cos(w_j.x) + v_j sin(w_j.x).
inline Vec sincos_embed(const Vec& x, const Network& net) {
  require_dim(x.size(), static_cast<Eigen::Index>(net.input_dim()), "sincos_embed");
  const Vec phase = net.frequencies * x;
  op_counters().multiply_adds += static_cast<std::uint64_t>(net.frequencies.size());
  if (net.spec.embedding == EmbeddingKind::linear) return net.u.cwiseProduct(phase);
  return net.u.cwiseProduct(phase.array().cos().matrix()) + net.v.cwiseProduct(phase.array().sin().matrix());
}

struct ForwardTrace {
  std::vector<Vec> hidden_states;  // h^(0) .. h^(exit)
  std::optional<Vec> logits;       // present only for a full pass
  std::optional<std::size_t> exit_layer;  // nullopt means "full"
};

/// Forward pass. `exit_layer = nullopt` runs to the logits; otherwise the
/// pass stops after hidden state `exit_layer` (0 = embedding only).
inline ForwardTrace forward(const Network& net, const Vec& x, std::optional<std::size_t> exit_layer = std::nullopt) {
  if (exit_layer && *exit_layer > net.depth())
    throw std::out_of_range("forward: exit_layer " + std::to_string(*exit_layer) + " exceeds depth " +
                            std::to_string(net.depth()));
  auto& ops = op_counters();
  ++ops.forward_passes;
  ForwardTrace trace;
  trace.exit_layer = exit_layer;
  const std::size_t stop = exit_layer.value_or(net.depth());
  trace.hidden_states.reserve(stop + 1);
  trace.hidden_states.push_back(sincos_embed(x, net));
  for (std::size_t l = 1; l <= stop; ++l) {
    const auto& layer = net.layers[l - 1];
    Vec pre = layer.weight * trace.hidden_states.back() + layer.bias;
    ops.multiply_adds += static_cast<std::uint64_t>(layer.weight.size());
    trace.hidden_states.push_back(activate(net.spec.activation, pre));
  }
  if (!exit_layer) {
    trace.logits = net.head * trace.hidden_states.back();
    ops.multiply_adds += static_cast<std::uint64_t>(net.head.size());
  }
  return trace;
}

/// Hidden state at `layer` via an early-exit pass, without keeping the prefix.
inline Vec hidden_state(const Network& net, const Vec& x, std::size_t layer) {
  require(layer <= net.depth(), "hidden_state: layer out of range");
  auto& ops = op_counters();
  ++ops.forward_passes;
  Vec h = sincos_embed(x, net);
  for (std::size_t l = 1; l <= layer; ++l) {
    const auto& dense = net.layers[l - 1];
    h = activate(net.spec.activation, Vec(dense.weight * h + dense.bias));
    ops.multiply_adds += static_cast<std::uint64_t>(dense.weight.size());
  }
  return h;
}

inline Vec logits(const Network& net, const Vec& x) { return *forward(net, x).logits; }

/// S(x, t) = z_t(x).
inline double target_score(const Network& net, const Vec& x, std::size_t t) {
  if (t >= net.output_dim()) throw std::out_of_range("target_score: class index out of range");
  return logits(net, x)[static_cast<Eigen::Index>(t)];
}

/// Vector-Jacobian product of the logits w.r.t. the input: returns
/// J(x)^T * cotangent, where J is the d-column Jacobian of z.
inline Vec input_vjp(const Network& net, const Vec& x, const Vec& cotangent) {
  require_dim(x.size(), static_cast<Eigen::Index>(net.input_dim()), "input_vjp");
  require_dim(cotangent.size(), static_cast<Eigen::Index>(net.output_dim()), "input_vjp cotangent");
  auto& ops = op_counters();
  ++ops.forward_passes;
  ++ops.backward_passes;

  const Vec phase = net.frequencies * x;
  Vec h = net.spec.embedding == EmbeddingKind::linear
              ? Vec(net.u.cwiseProduct(phase))
              : Vec(net.u.cwiseProduct(phase.array().cos().matrix()) + net.v.cwiseProduct(phase.array().sin().matrix()));
  ops.multiply_adds += static_cast<std::uint64_t>(net.frequencies.size());

  std::vector<Vec> pre;
  pre.reserve(net.depth());
  for (const auto& layer : net.layers) {
    pre.push_back(layer.weight * h + layer.bias);
    h = activate(net.spec.activation, pre.back());
    ops.multiply_adds += static_cast<std::uint64_t>(layer.weight.size());
  }

  Vec delta = net.head.transpose() * cotangent;
  ops.multiply_adds += static_cast<std::uint64_t>(net.head.size());
  for (std::size_t l = net.depth(); l-- > 0;) {
    const Vec dpre = delta.cwiseProduct(
        pre[l].unaryExpr([act = net.spec.activation](double a) { return activate_deriv(act, a); }));
    delta = net.layers[l].weight.transpose() * dpre;
    ops.multiply_adds += static_cast<std::uint64_t>(net.layers[l].weight.size());
  }

  // de_j/dx = (-u_j sin + v_j cos)(w_j.x) * w_j for sincos, u_j * w_j for linear.
  Vec dphase = net.spec.embedding == EmbeddingKind::linear
                   ? Vec(delta.cwiseProduct(net.u))
                   : Vec(delta.cwiseProduct(Vec(-net.u.cwiseProduct(phase.array().sin().matrix()) +
                                                net.v.cwiseProduct(phase.array().cos().matrix()))));
  ops.multiply_adds += static_cast<std::uint64_t>(net.frequencies.size());
  return net.frequencies.transpose() * dphase;
}

/// g(x, t) = grad_x S(x, t), exact reverse mode.
inline Vec input_gradient(const Network& net, const Vec& x, std::size_t t) {
  if (t >= net.output_dim()) throw std::out_of_range("input_gradient: class index out of range");
  Vec cot = Vec::Zero(static_cast<Eigen::Index>(net.output_dim()));
  cot[static_cast<Eigen::Index>(t)] = 1.0;
  return input_vjp(net, x, cot);
}

/// Central differences, one coordinate at a time.
inline Vec finite_diff_gradient(const Network& net, const Vec& x, std::size_t t, double h) {
  require(h > 0.0, "finite_diff_gradient: step must be > 0");
  Vec g(x.size());
  Vec probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = target_score(net, probe, t);
    probe[i] = x[i] - h;
    const double down = target_score(net, probe, t);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

/// Smallest |pre-activation| over all dense layers at x. Used to keep relu
/// gradient checks away from the kink.
inline double min_abs_preactivation(const Network& net, const Vec& x) {
  double best = std::numeric_limits<double>::infinity();
  Vec h = sincos_embed(x, net);
  for (const auto& layer : net.layers) {
    const Vec pre = layer.weight * h + layer.bias;
    best = std::min(best, pre.cwiseAbs().minCoeff());
    h = activate(net.spec.activation, pre);
  }
  return best;
}

/// Returns a copy whose coefficient pairs are rotated by delta_j = w_j.c, so
/// that e(x; rotated) = e(x + c; original) for every x.
inline Network rotate_coefficients(const Network& net, const Vec& c) {
  require(net.spec.embedding == EmbeddingKind::sincos, "rotate_coefficients: needs a sine-cosine embedding");
  require_dim(c.size(), static_cast<Eigen::Index>(net.input_dim()), "rotate_coefficients");
  Network out = net;
  const Vec delta = net.frequencies * c;
  for (Eigen::Index j = 0; j < delta.size(); ++j) {
    const double cs = std::cos(delta[j]);
    const double sn = std::sin(delta[j]);
    out.u[j] = cs * net.u[j] + sn * net.v[j];
    out.v[j] = -sn * net.u[j] + cs * net.v[j];
  }
  return out;
}

}  // namespace gradpred::diffnet
