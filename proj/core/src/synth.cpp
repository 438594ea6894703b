#include "ueval/synth.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace ueval {

namespace {

// mt19937_64 output is fully specified by the standard; mapping the raw
// 64-bit draws ourselves keeps generated data and frozen test expectations
// stable across standard-library implementations.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(
      (static_cast<unsigned __int128>(rng()) * n) >> 64);
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_class(std::int32_t cls, std::int32_t class_count,
                 const char* what) {
  require(cls >= 0 && cls < class_count,
          std::string(what) + " " + std::to_string(cls) +
              " is outside [0, " + std::to_string(class_count) + ")");
}

bool covers(const RectGeometry& rect, std::size_t r, std::size_t c) {
  return r >= rect.top && r < rect.top + rect.height && c >= rect.left &&
         c < rect.left + rect.width;
}

bool covers(const DiskGeometry& disk, std::size_t r, std::size_t c) {
  const double dr = static_cast<double>(r) - disk.center_row;
  const double dc = static_cast<double>(c) - disk.center_col;
  return dr * dr + dc * dc <= disk.radius * disk.radius;
}

void validate_geometry(const SynthRegion& region, std::size_t height,
                       std::size_t width) {
  if (const auto* rect = std::get_if<RectGeometry>(&region.geometry)) {
    require(rect->height >= 1 && rect->width >= 1,
            "region rectangle must span at least one pixel");
    require(rect->top + rect->height <= height &&
                rect->left + rect->width <= width,
            "region rectangle exceeds the image bounds");
  } else {
    const auto& disk = std::get<DiskGeometry>(region.geometry);
    require(disk.radius >= 0.0, "disk radius must be >= 0");
    require(disk.center_row - disk.radius >= 0.0 &&
                disk.center_col - disk.radius >= 0.0 &&
                disk.center_row + disk.radius <=
                    static_cast<double>(height - 1) &&
                disk.center_col + disk.radius <=
                    static_cast<double>(width - 1),
            "disk exceeds the image bounds");
  }
}

}  // namespace

SynthOutput generate(const SynthSpec& spec) {
  require(spec.height >= 1 && spec.width >= 1,
          "synthetic image must be at least 1x1");
  require(spec.class_count >= 2, "synthetic scene needs at least 2 classes");
  require(spec.samples >= 1, "synthetic stack needs at least one sample");
  check_class(spec.background_class, spec.class_count, "background class");
  for (const SynthRegion& region : spec.regions) {
    check_class(region.true_class, spec.class_count, "region class");
    check_class(region.decoy_class, spec.class_count, "decoy class");
    require(region.aleatoric_softness >= 0.0 &&
                region.aleatoric_softness <= 1.0,
            "aleatoric softness must lie in [0, 1]");
    require(region.epistemic_flip_rate >= 0.0 &&
                region.epistemic_flip_rate <= 1.0,
            "epistemic flip rate must lie in [0, 1]");
    validate_geometry(region, spec.height, spec.width);
  }

  const std::size_t pixels = spec.height * spec.width;
  std::vector<std::int32_t> gt(pixels, spec.background_class);
  // -1 = background; otherwise the index of the last region covering the pixel
  std::vector<std::ptrdiff_t> owner(pixels, -1);
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    const SynthRegion& region = spec.regions[i];
    for (std::size_t r = 0; r < spec.height; ++r) {
      for (std::size_t c = 0; c < spec.width; ++c) {
        const bool inside = std::visit(
            [&](const auto& geom) { return covers(geom, r, c); },
            region.geometry);
        if (inside) {
          gt[r * spec.width + c] = region.true_class;
          owner[r * spec.width + c] = static_cast<std::ptrdiff_t>(i);
        }
      }
    }
  }

  // One flip decision per (region, sample), shared across the region.
  std::mt19937_64 rng(spec.seed);
  std::vector<std::uint8_t> flipped(spec.regions.size() * spec.samples, 0);
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    for (std::size_t t = 0; t < spec.samples; ++t) {
      flipped[i * spec.samples + t] =
          uniform01(rng) < spec.regions[i].epistemic_flip_rate ? 1 : 0;
    }
  }

  const std::size_t classes = static_cast<std::size_t>(spec.class_count);
  std::vector<double> values(spec.samples * classes * pixels, 0.0);
  const auto at_index = [&](std::size_t t, std::size_t k, std::size_t px) {
    return (t * classes + k) * pixels + px;
  };
  for (std::size_t px = 0; px < pixels; ++px) {
    const std::ptrdiff_t region_idx = owner[px];
    for (std::size_t t = 0; t < spec.samples; ++t) {
      std::int32_t favored = spec.background_class;
      double alpha = 0.0;
      if (region_idx >= 0) {
        const SynthRegion& region =
            spec.regions[static_cast<std::size_t>(region_idx)];
        favored = flipped[static_cast<std::size_t>(region_idx) * spec.samples +
                          t]
                      ? region.decoy_class
                      : region.true_class;
        alpha = region.aleatoric_softness;
      }
      const double off = alpha / static_cast<double>(spec.class_count);
      const double on =
          1.0 - off * static_cast<double>(spec.class_count - 1);
      for (std::size_t k = 0; k < classes; ++k)
        values[at_index(t, k, px)] =
            k == static_cast<std::size_t>(favored) ? on : off;
    }
  }

  return SynthOutput{
      ClassMap(spec.height, spec.width, spec.class_count, std::move(gt)),
      ProbStack(spec.samples, spec.class_count, spec.height, spec.width,
                std::move(values))};
}

ScalarMap misaligned_uncertainty(const ScalarMap& umap, std::uint64_t seed) {
  std::vector<double> values(umap.values().begin(), umap.values().end());
  std::mt19937_64 rng(seed);
  for (std::size_t i = values.size() - 1; i > 0; --i) {
    const std::size_t j = bounded(rng, i + 1);
    std::swap(values[i], values[j]);
  }
  return ScalarMap(umap.height(), umap.width(), std::move(values));
}

}  // namespace ueval
