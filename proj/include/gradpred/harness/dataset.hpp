#pragma once

#include "gradpred/common.hpp"
#include "gradpred/diffnet.hpp"
#include "gradpred/harness/config.hpp"

#include <algorithm>
#include <unordered_set>
#include <vector>

namespace gradpred::harness {

/// Gaussian-mixture inputs pushed toward a fixed target class. Draws whose
/// clean argmax already equals the target are dropped. Draw k uses its own
/// RNG stream and gets id derive_seed(seed, k), so ids are stable and a
/// different seed gives a disjoint id set with overwhelming probability.
inline std::vector<Example> synth_dataset(const DatasetSpec& spec, const diffnet::Network& net,
                                          std::size_t max_draws_per_example = 1000) {
  require(spec.size >= 1, "synth_dataset: size must be >= 1");
  require(net.output_dim() >= 2, "synth_dataset: degenerate spec (fewer than 2 classes)");
  require(spec.target < net.output_dim(), "synth_dataset: target class out of range");
  require(spec.clusters >= 1, "synth_dataset: clusters must be >= 1");
  require(spec.spread >= 0.0, "synth_dataset: spread must be >= 0");
  const auto d = static_cast<Eigen::Index>(net.input_dim());

  Rng centre_rng = make_rng(spec.seed, 0xc3);
  std::vector<Vec> centres(spec.clusters);
  for (auto& c : centres) c = uniform_vector(centre_rng, d, -spec.centre_range, spec.centre_range);

  std::vector<Example> out;
  out.reserve(spec.size);
  const std::size_t limit = spec.size * max_draws_per_example;
  for (std::size_t k = 0; out.size() < spec.size; ++k) {
    if (k >= limit) throw std::runtime_error("synth_dataset: too few inputs avoid the target class");
    Rng rng = make_rng(spec.seed, k + 1);
    const std::size_t c = std::uniform_int_distribution<std::size_t>(0, spec.clusters - 1)(rng);
    Example ex;
    ex.x = centres[c] + normal_vector(rng, d, spec.spread);
    ex.target = spec.target;
    ex.id = derive_seed(spec.seed, k);
    if (static_cast<std::size_t>(argmax(diffnet::logits(net, ex.x))) == spec.target) continue;
    out.push_back(std::move(ex));
  }
  return out;
}

inline std::size_t id_overlap(const std::vector<Example>& a, const std::vector<Example>& b) {
  std::unordered_set<std::uint64_t> ids;
  for (const auto& e : a) ids.insert(e.id);
  return static_cast<std::size_t>(std::count_if(b.begin(), b.end(), [&](const Example& e) { return ids.count(e.id) > 0; }));
}

}  // namespace gradpred::harness
