#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace gradpred {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// One attack/training input: a point and the class whose logit is pushed up.
/// `id` identifies the example across dataset splits.
struct Example {
  Vec x;
  std::size_t target = 0;
  std::uint64_t id = 0;
};

/// SplitMix64 finalizer. Used to derive independent RNG streams from a base
/// seed so that results do not depend on scheduling order.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ (stream * 0xd1b54a32d192ed03ULL + 0x2545f4914f6cdd1dULL));
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng(derive_seed(seed, stream));
}

inline Vec normal_vector(Rng& rng, Eigen::Index n, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline Mat normal_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double stddev = 1.0) {
  std::normal_distribution<double> dist(0.0, stddev);
  Mat m(rows, cols);
  // Row-major fill order so the stream layout is independent of Eigen's storage.
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
  return m;
}

inline Vec uniform_vector(Rng& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = dist(rng);
  return v;
}

inline void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (got " + std::to_string(got) +
                                ", expected " + std::to_string(want) + ")");
}

inline bool all_finite(const Eigen::Ref<const Mat>& m) { return m.allFinite(); }

/// Pairwise summation; error grows as O(log n) rather than O(n).
inline double pairwise_sum(std::span<const double> xs) {
  if (xs.size() <= 16) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half)) + pairwise_sum(xs.subspan(half));
}

/// Mean and standard error of the mean (sample std / sqrt(n)).
struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanStderr mean_stderr(std::span<const double> xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return {};
  const double mean = pairwise_sum(xs) / n;
  if (xs.size() < 2) return {mean, 0.0};
  std::vector<double> sq(xs.size());
  std::transform(xs.begin(), xs.end(), sq.begin(), [mean](double x) { return (x - mean) * (x - mean); });
  const double var = pairwise_sum(sq) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

/// sgn with sgn(0) = 0.
inline Vec sign_of(const Vec& g) {
  return g.unaryExpr([](double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); });
}

/// g / ||g||_2, or the zero vector when g = 0.
inline Vec unit_or_zero(const Vec& g) {
  const double n = g.norm();
  return n > 0.0 ? Vec(g / n) : Vec(Vec::Zero(g.size()));
}

/// Cosine similarity with the convention cos(0, .) = cos(., 0) = 0.
inline double cosine(const Vec& a, const Vec& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

inline Eigen::Index argmax(const Vec& v) {
  Eigen::Index best = 0;
  v.maxCoeff(&best);
  return best;
}

/// Runs fn(i) for i in [0, n) on up to `threads` workers. Callers write
/// results by index, so output never depends on scheduling. The first
/// exception thrown by any worker is rethrown on the calling thread.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace gradpred
