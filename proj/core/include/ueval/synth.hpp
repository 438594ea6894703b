#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "ueval/tensor.hpp"

namespace ueval {

struct RectGeometry {
  std::size_t top = 0;
  std::size_t left = 0;
  std::size_t height = 1;
  std::size_t width = 1;
};

struct DiskGeometry {
  double center_row = 0.0;
  double center_col = 0.0;
  double radius = 0.0;
};

/// One painted region. Aleatoric softness spreads probability mass over the
/// non-favored classes; the epistemic flip rate makes whole samples favor
/// the decoy class instead, which is what creates disagreement between
/// Monte-Carlo samples (and therefore mutual information).
struct SynthRegion {
  std::variant<RectGeometry, DiskGeometry> geometry;
  std::int32_t true_class = 1;
  std::int32_t decoy_class = 0;
  double aleatoric_softness = 0.0;   // alpha in [0, 1]
  double epistemic_flip_rate = 0.0;  // epsilon in [0, 1]
};

/// Fully determines one synthetic scene: a labelled ground truth plus a
/// T-sample softmax stack. Later regions paint over earlier ones.
struct SynthSpec {
  std::uint64_t seed = 0;
  std::size_t height = 1;
  std::size_t width = 1;
  std::int32_t class_count = 2;
  std::size_t samples = 1;
  std::int32_t background_class = 0;
  std::vector<SynthRegion> regions;
};

struct SynthOutput {
  ClassMap gt;
  ProbStack stack;
};

/// Deterministic given the seed. Epistemic flips are drawn once per
/// (region, sample) and shared by all pixels of the region, so mutual
/// information is spatially coherent inside regions. Background pixels are
/// always one-hot on the background class. Throws on invalid geometry or
/// class ids.
SynthOutput generate(const SynthSpec& spec);

/// The same multiset of values under a seeded spatial permutation. Destroys
/// any alignment between uncertainty and prediction errors while preserving
/// min, max and mean.
ScalarMap misaligned_uncertainty(const ScalarMap& umap, std::uint64_t seed);

}  // namespace ueval
