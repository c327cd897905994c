#pragma once

// Affine gradient predictor: hidden state -> unit-norm input-gradient
// direction, fitted by weighted ridge regression in closed form.

#include "gradpred/common.hpp"
#include "gradpred/diffnet.hpp"

#include <Eigen/Eigenvalues>

#include <concepts>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace gradpred::gradpredict {

struct TrainingSample {
  Vec features;
  Vec target;  // unit norm, or zero when the gradient vanished
  double weight = 1.0;
};

/// Anything that can supply a gradient direction for (net, x, t).
template <class E>
concept GradientEstimator = requires(const E& e, const diffnet::Network& net, const Vec& x, std::size_t t) {
  { e.estimate(net, x, t) } -> std::convertible_to<Vec>;
};

/// Backprop oracle wrapped as an estimator.
struct ExactGradient {
  Vec estimate(const diffnet::Network& net, const Vec& x, std::size_t t) const {
    return diffnet::input_gradient(net, x, t);
  }
};

/// Collects (h^(layer)(x_k), g(x_k)/|g(x_k)|, decay^k) for k = 0..aug_steps
/// along an exact-gradient FGSM trajectory started at each input. Steps
/// accumulate: x_k = x_{k-1} + aug_eps * sgn(g(x_{k-1})).
inline std::vector<TrainingSample> collect_samples(const diffnet::Network& net, std::size_t layer,
                                                   std::span<const Example> inputs, std::size_t aug_steps,
                                                   double aug_eps, double decay, std::size_t threads = 1) {
  require(decay > 0.0 && decay <= 1.0, "collect_samples: decay must be in (0, 1]");
  require(aug_steps == 0 || aug_eps > 0.0, "collect_samples: aug_eps must be > 0 when aug_steps > 0");
  require(layer <= net.depth(), "collect_samples: layer out of range");

  const std::size_t per_input = aug_steps + 1;
  std::vector<TrainingSample> out(inputs.size() * per_input);
  parallel_for(inputs.size(), threads, [&](std::size_t i) {
    Vec x = inputs[i].x;
    double w = 1.0;
    for (std::size_t k = 0; k <= aug_steps; ++k) {
      const Vec g = diffnet::input_gradient(net, x, inputs[i].target);
      auto& s = out[i * per_input + k];
      s.features = diffnet::hidden_state(net, x, layer);
      s.target = unit_or_zero(g);
      s.weight = w;
      x += aug_eps * sign_of(g);
      w *= decay;
    }
  });
  return out;
}

struct Standardizer {
  Vec mean;
  Vec stddev;
  double floor = 1e-8;

  Vec transform(const Vec& h) const {
    require_dim(h.size(), mean.size(), "Standardizer::transform");
    return (h - mean).cwiseQuotient(stddev);
  }
};

/// Unweighted per-coordinate mean and population standard deviation, with
/// the deviation floored at `floor`.
inline Standardizer fit_standardizer(std::span<const TrainingSample> samples, double floor = 1e-8) {
  require(!samples.empty(), "fit_standardizer: no samples");
  require(floor > 0.0, "fit_standardizer: floor must be > 0");
  const Eigen::Index dim = samples.front().features.size();
  const auto n = static_cast<double>(samples.size());
  Standardizer s;
  s.floor = floor;
  s.mean = Vec::Zero(dim);
  for (const auto& smp : samples) {
    require_dim(smp.features.size(), dim, "fit_standardizer");
    s.mean += smp.features;
  }
  s.mean /= n;
  Vec var = Vec::Zero(dim);
  for (const auto& smp : samples) var += (smp.features - s.mean).cwiseAbs2();
  s.stddev = (var / n).cwiseSqrt().cwiseMax(floor);
  return s;
}

/// Solves (Phi^T W Phi + lambda I) C = Phi^T W G through the symmetric
/// eigendecomposition of Phi^T W Phi. Phi is n x p, weights n, targets n x q.
inline Mat ridge_solve(const Mat& phi, const Vec& weights, const Mat& targets, double lambda) {
  require(lambda > 0.0, "ridge_solve: lambda must be > 0");
  require_dim(weights.size(), phi.rows(), "ridge_solve weights");
  require_dim(targets.rows(), phi.rows(), "ridge_solve targets");
  if (phi.rows() < phi.cols()) {
    // Fewer samples than features: decompose the n x n dual Gram matrix
    // instead, using (B^T B + lambda I)^-1 B^T = B^T (B B^T + lambda I)^-1.
    require(weights.minCoeff() >= 0.0, "ridge_solve: negative weight");
    const Vec sw = weights.cwiseSqrt();
    const Mat b = sw.asDiagonal() * phi;
    Mat gram = b * b.transpose();
    gram = 0.5 * (gram + gram.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
    if (eig.info() != Eigen::Success) throw std::runtime_error("ridge_solve: eigendecomposition failed");
    const Mat& q = eig.eigenvectors();
    const Vec inv = (eig.eigenvalues().array() + lambda).inverse().matrix();
    return b.transpose() * (q * (inv.asDiagonal() * (q.transpose() * (sw.asDiagonal() * targets))));
  }
  const Mat weighted = weights.asDiagonal() * phi;
  Mat gram = phi.transpose() * weighted;
  gram = 0.5 * (gram + gram.transpose());
  const Mat rhs = weighted.transpose() * targets;
  Eigen::SelfAdjointEigenSolver<Mat> eig(gram);
  if (eig.info() != Eigen::Success) throw std::runtime_error("ridge_solve: eigendecomposition failed");
  const Mat& q = eig.eigenvectors();
  const Vec inv = (eig.eigenvalues().array() + lambda).inverse().matrix();
  return q * (inv.asDiagonal() * (q.transpose() * rhs));
}

struct GradientPredictor {
  std::size_t layer = 0;
  Mat weight;  // A: d_out x d_h
  Vec bias;    // b: d_out
  Standardizer standardizer;
  double lambda = 1.0;

  std::size_t feature_dim() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t output_dim() const { return static_cast<std::size_t>(weight.rows()); }

  /// A * standardize(h) + b. Not renormalized.
  Vec predict(const Vec& h) const {
    require_dim(h.size(), weight.cols(), "GradientPredictor::predict");
    diffnet::op_counters().multiply_adds += static_cast<std::uint64_t>(weight.size());
    return weight * standardizer.transform(h) + bias;
  }

  /// Early-exit forward to `layer`, then predict. No backward pass. The
  /// target class is baked into the training data, so `t` is unused.
  Vec estimate(const diffnet::Network& net, const Vec& x, std::size_t /*t*/) const {
    return predict(diffnet::hidden_state(net, x, layer));
  }
};

/// Builds the standardized design matrix with a trailing bias column.
inline Mat design_matrix(std::span<const TrainingSample> samples, const Standardizer& st) {
  const Eigen::Index dh = st.mean.size();
  Mat phi(static_cast<Eigen::Index>(samples.size()), dh + 1);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    phi.row(r).head(dh) = st.transform(samples[i].features).transpose();
    phi(r, dh) = 1.0;
  }
  return phi;
}

/// Weighted ridge fit of all output dimensions jointly. The bias column is
/// appended after standardization and penalized like the other columns.
inline GradientPredictor fit_ridge(std::span<const TrainingSample> samples, const Standardizer& st, double lambda,
                                   std::size_t layer = 0) {
  require(!samples.empty(), "fit_ridge: no samples");
  require(lambda > 0.0, "fit_ridge: lambda must be > 0");
  const Eigen::Index dout = samples.front().target.size();
  const Eigen::Index dh = st.mean.size();
  Mat targets(static_cast<Eigen::Index>(samples.size()), dout);
  Vec weights(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    require(samples[i].weight >= 0.0, "fit_ridge: negative sample weight");
    require_dim(samples[i].target.size(), dout, "fit_ridge target");
    targets.row(static_cast<Eigen::Index>(i)) = samples[i].target.transpose();
    weights[static_cast<Eigen::Index>(i)] = samples[i].weight;
  }
  const Mat coef = ridge_solve(design_matrix(samples, st), weights, targets, lambda);
  GradientPredictor p;
  p.layer = layer;
  p.weight = coef.topRows(dh).transpose();
  p.bias = coef.row(dh).transpose();
  p.standardizer = st;
  p.lambda = lambda;
  return p;
}

struct CosineSummary {
  double mean = 0.0;
  double median = 0.0;
  std::vector<double> values;
};

template <GradientEstimator E>
CosineSummary eval_cosine(const E& estimator, const diffnet::Network& net, std::span<const Example> inputs) {
  require(!inputs.empty(), "eval_cosine: no inputs");
  CosineSummary s;
  s.values.reserve(inputs.size());
  for (const auto& ex : inputs)
    s.values.push_back(cosine(estimator.estimate(net, ex.x, ex.target), diffnet::input_gradient(net, ex.x, ex.target)));
  s.mean = pairwise_sum(s.values) / static_cast<double>(s.values.size());
  std::vector<double> sorted = s.values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return s;
}

// Text artifact: a header line, scalar fields, then vectors and the row-major
// weight matrix. Numbers use 17 significant digits so a round trip is exact.
namespace detail {
inline void write_row(std::ostream& os, const char* key, const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  os << key;
  char buf[40];
  for (Eigen::Index i = 0; i < row.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g", row[i]);
    os << buf;
  }
  os << '\n';
}

inline std::string expect_key(std::istream& is, const char* key) {
  std::string got;
  if (!(is >> got) || got != key) throw std::runtime_error(std::string("predictor file: expected '") + key + "'");
  return got;
}

inline Vec read_values(std::istream& is, Eigen::Index n) {
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(is >> v[i])) throw std::runtime_error("predictor file: truncated vector");
  return v;
}
}  // namespace detail

inline void write_predictor(std::ostream& os, const GradientPredictor& p) {
  char buf[64];
  os << "gradpred-predictor 1\n";
  os << "layer " << p.layer << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", p.lambda);
  os << "lambda " << buf << '\n';
  std::snprintf(buf, sizeof buf, "%.17g", p.standardizer.floor);
  os << "floor " << buf << '\n';
  os << "features " << p.feature_dim() << '\n';
  os << "outputs " << p.output_dim() << '\n';
  detail::write_row(os, "mean", p.standardizer.mean.transpose());
  detail::write_row(os, "std", p.standardizer.stddev.transpose());
  for (Eigen::Index r = 0; r < p.weight.rows(); ++r) detail::write_row(os, "A", p.weight.row(r));
  detail::write_row(os, "b", p.bias.transpose());
  if (!os) throw std::runtime_error("write_predictor: stream failure");
}

inline GradientPredictor read_predictor(std::istream& is) {
  GradientPredictor p;
  std::string tag;
  int version = 0;
  if (!(is >> tag >> version) || tag != "gradpred-predictor" || version != 1)
    throw std::runtime_error("predictor file: bad header");
  std::size_t dh = 0, dout = 0;
  detail::expect_key(is, "layer");
  is >> p.layer;
  detail::expect_key(is, "lambda");
  is >> p.lambda;
  detail::expect_key(is, "floor");
  is >> p.standardizer.floor;
  detail::expect_key(is, "features");
  is >> dh;
  detail::expect_key(is, "outputs");
  is >> dout;
  if (!is) throw std::runtime_error("predictor file: bad scalar fields");
  const auto h = static_cast<Eigen::Index>(dh);
  const auto o = static_cast<Eigen::Index>(dout);
  detail::expect_key(is, "mean");
  p.standardizer.mean = detail::read_values(is, h);
  detail::expect_key(is, "std");
  p.standardizer.stddev = detail::read_values(is, h);
  p.weight.resize(o, h);
  for (Eigen::Index r = 0; r < o; ++r) {
    detail::expect_key(is, "A");
    p.weight.row(r) = detail::read_values(is, h).transpose();
  }
  detail::expect_key(is, "b");
  p.bias = detail::read_values(is, o);
  return p;
}

}  // namespace gradpred::gradpredict
