#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ueval/tensor.hpp"

namespace ueval {

enum class EdgePolicy {
  kDropPartial,     // only full w×w windows are evaluated
  kIncludePartial,  // edge windows are clipped to the image bounds
};

/// How patches are traversed and when a patch counts as accurate.
struct PatchConfig {
  std::size_t window = 4;
  std::size_t stride = 0;  // 0 means "same as window" (non-overlapping tiling)
  double accuracy_threshold = 0.5;
  EdgePolicy edge_policy = EdgePolicy::kDropPartial;

  std::size_t effective_stride() const { return stride == 0 ? window : stride; }
};

/// One window of the traversal: top-left corner plus clipped extent.
struct Window {
  std::size_t top;
  std::size_t left;
  std::size_t height;
  std::size_t width;
};

/// The uncertainty threshold, either as a fraction t of the observed
/// uncertainty range (u_th = u_min + t(u_max - u_min)), as the mean
/// uncertainty over the supplied maps, or as an absolute value.
struct ThresholdSpec {
  enum class Mode { kInterpolated, kValidationMean, kAbsolute };

  Mode mode = Mode::kValidationMean;
  double value = 0.0;  // t for kInterpolated, u_th for kAbsolute

  static ThresholdSpec interpolated(double t);
  static ThresholdSpec validation_mean() { return {Mode::kValidationMean, 0}; }
  static ThresholdSpec absolute(double u_th);
};

/// Tie handling for "is this patch uncertain". Interior sweep points use
/// mean >= u_th. kAlways/kNever realize the sweep endpoints, where every
/// patch is uncertain (t=0) or certain (t=1) by definition; a rounded patch
/// mean can land marginally outside [u_min, u_max], so the endpoint
/// semantics cannot be left to the comparison.
enum class UncertainRule { kMeanAtLeast, kMeanAbove, kAlways, kNever };

enum class PatchOutcome : std::uint8_t {
  kAccurateCertain,
  kAccurateUncertain,
  kInaccurateCertain,
  kInaccurateUncertain,
  kSkipped,  // every ground-truth pixel in the patch is ignored
};

/// The 2×2 patch confusion: the four counts plus the per-patch outcome
/// lattice they were tallied from. grid_height × grid_width cells cover the
/// enumerated windows in row-major order; skipped cells carry no accuracy or
/// uncertainty bit and are excluded from all four counts.
struct PatchConfusion {
  std::uint64_t n_ac = 0;
  std::uint64_t n_au = 0;
  std::uint64_t n_ic = 0;
  std::uint64_t n_iu = 0;
  std::uint64_t skipped_patches = 0;

  std::size_t grid_height = 0;
  std::size_t grid_width = 0;
  std::vector<PatchOutcome> cells;

  std::uint64_t evaluated_patches() const { return n_ac + n_au + n_ic + n_iu; }

  /// Accuracy bits of the evaluated cells, in enumeration order.
  std::vector<std::uint8_t> accuracy_grid() const;
  /// Uncertainty bits of the evaluated cells, in enumeration order.
  std::vector<std::uint8_t> uncertainty_grid() const;

  /// Re-tallies the cells; true iff they reproduce the stored counts.
  bool counts_match_cells() const;

  /// Adds the other confusion's counts and appends its cells. The merged
  /// value keeps count/cell consistency but loses the spatial lattice
  /// (grid dimensions reset to 0). Used for dataset-level micro-averaging.
  PatchConfusion& merge(const PatchConfusion& other);

  static PatchConfusion from_counts(std::uint64_t ac, std::uint64_t au,
                                    std::uint64_t ic, std::uint64_t iu,
                                    std::uint64_t skipped = 0);
};

/// The three conditional metrics. A missing value means the corresponding
/// denominator was zero (e.g. no certain patch exists at threshold 0).
struct ConditionalMetrics {
  std::optional<double> p_accurate_given_certain;
  std::optional<double> p_uncertain_given_inaccurate;
  std::optional<double> pavpu;
};

/// One sweep point: threshold fraction t, the resolved u_th, the patch
/// counts at that threshold, and the metrics (UNDEFINED where a denominator
/// vanished).
struct SweepPoint {
  double t;
  double u_th;
  std::uint64_t n_ac;
  std::uint64_t n_au;
  std::uint64_t n_ic;
  std::uint64_t n_iu;
  ConditionalMetrics metrics;
};

struct SweepCurve {
  double u_min;
  double u_max;
  std::vector<SweepPoint> points;
};

/// Row-major window list for an image of the given size. With kDropPartial
/// the list is empty when no full window fits.
std::vector<Window> enumerate_patches(std::size_t height, std::size_t width,
                                      const PatchConfig& cfg);

/// Fraction of non-ignored pixels in the window where pred == gt, or empty
/// when the window holds no scorable pixel.
std::optional<double> patch_accuracy(const ClassMap& pred, const ClassMap& gt,
                                     const Window& window);

/// Arithmetic mean of the uncertainty values in the window. Ignore labels
/// do not apply to uncertainty maps.
double patch_uncertainty(const ScalarMap& umap, const Window& window);

/// Resolves a ThresholdSpec against one or more uncertainty maps (pixel
/// extrema or pooled mean over all maps). Throws on an empty map set.
double resolve_threshold(std::span<const ScalarMap> maps,
                         const ThresholdSpec& spec);

/// Classifies every enumerated patch: accurate iff patch accuracy >=
/// cfg.accuracy_threshold, uncertain per `rule` against u_th. Patches whose
/// ground truth is entirely ignored are skipped.
PatchConfusion classify_patches(const ClassMap& pred, const ClassMap& gt,
                                const ScalarMap& umap, const PatchConfig& cfg,
                                double u_th,
                                UncertainRule rule = UncertainRule::kMeanAtLeast);

/// Eq.-per-eq ratios over the four counts; zero denominators yield empty
/// optionals rather than errors.
ConditionalMetrics conditional_metrics(const PatchConfusion& confusion);

/// Evaluates the metrics over a grid of threshold fractions on one image.
/// t values must be sorted, within [0, 1], and non-empty. Every patch is
/// uncertain at the t=0 point and certain at the t=1 point; interior points
/// use the mean >= u_th rule.
SweepCurve threshold_sweep(const ClassMap& pred, const ClassMap& gt,
                           const ScalarMap& umap, const PatchConfig& cfg,
                           std::span<const double> t_grid);

/// Dataset-level sweep: u_min/u_max come from the pooled map set and the
/// per-threshold counts are summed over images before the ratios are taken.
SweepCurve threshold_sweep(std::span<const ClassMap> preds,
                           std::span<const ClassMap> gts,
                           std::span<const ScalarMap> umaps,
                           const PatchConfig& cfg,
                           std::span<const double> t_grid);

/// 0, 1/(n-1), ..., 1: the default 11-point grid matches a 10% threshold
/// granularity.
std::vector<double> uniform_t_grid(std::size_t points = 11);

}  // namespace ueval
