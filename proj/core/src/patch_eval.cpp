#include "ueval/patch_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ueval {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_same_shape(std::size_t h1, std::size_t w1, std::size_t h2,
                        std::size_t w2, const char* what) {
  if (h1 != h2 || w1 != w2) {
    throw std::invalid_argument(std::string(what) + ": " +
                                std::to_string(h1) + "x" + std::to_string(w1) +
                                " vs " + std::to_string(h2) + "x" +
                                std::to_string(w2));
  }
}

std::vector<std::size_t> window_starts(std::size_t extent, std::size_t window,
                                       std::size_t stride, EdgePolicy policy) {
  std::vector<std::size_t> starts;
  if (policy == EdgePolicy::kDropPartial) {
    for (std::size_t s = 0; s + window <= extent; s += stride)
      starts.push_back(s);
  } else {
    for (std::size_t s = 0; s < extent; s += stride) starts.push_back(s);
  }
  return starts;
}

}  // namespace

ThresholdSpec ThresholdSpec::interpolated(double t) {
  if (!(t >= 0.0 && t <= 1.0))
    throw std::invalid_argument("threshold fraction t must lie in [0, 1], got " +
                                std::to_string(t));
  return {Mode::kInterpolated, t};
}

ThresholdSpec ThresholdSpec::absolute(double u_th) {
  if (!(u_th >= 0.0))
    throw std::invalid_argument("absolute uncertainty threshold must be >= 0, got " +
                                std::to_string(u_th));
  return {Mode::kAbsolute, u_th};
}

std::vector<std::uint8_t> PatchConfusion::accuracy_grid() const {
  std::vector<std::uint8_t> grid;
  grid.reserve(cells.size());
  for (PatchOutcome cell : cells) {
    if (cell == PatchOutcome::kSkipped) continue;
    grid.push_back(cell == PatchOutcome::kAccurateCertain ||
                           cell == PatchOutcome::kAccurateUncertain
                       ? 1
                       : 0);
  }
  return grid;
}

std::vector<std::uint8_t> PatchConfusion::uncertainty_grid() const {
  std::vector<std::uint8_t> grid;
  grid.reserve(cells.size());
  for (PatchOutcome cell : cells) {
    if (cell == PatchOutcome::kSkipped) continue;
    grid.push_back(cell == PatchOutcome::kAccurateUncertain ||
                           cell == PatchOutcome::kInaccurateUncertain
                       ? 1
                       : 0);
  }
  return grid;
}

bool PatchConfusion::counts_match_cells() const {
  std::uint64_t ac = 0, au = 0, ic = 0, iu = 0, skipped = 0;
  for (PatchOutcome cell : cells) {
    switch (cell) {
      case PatchOutcome::kAccurateCertain: ++ac; break;
      case PatchOutcome::kAccurateUncertain: ++au; break;
      case PatchOutcome::kInaccurateCertain: ++ic; break;
      case PatchOutcome::kInaccurateUncertain: ++iu; break;
      case PatchOutcome::kSkipped: ++skipped; break;
    }
  }
  return ac == n_ac && au == n_au && ic == n_ic && iu == n_iu &&
         skipped == skipped_patches;
}

PatchConfusion& PatchConfusion::merge(const PatchConfusion& other) {
  n_ac += other.n_ac;
  n_au += other.n_au;
  n_ic += other.n_ic;
  n_iu += other.n_iu;
  skipped_patches += other.skipped_patches;
  cells.insert(cells.end(), other.cells.begin(), other.cells.end());
  grid_height = 0;
  grid_width = 0;
  return *this;
}

PatchConfusion PatchConfusion::from_counts(std::uint64_t ac, std::uint64_t au,
                                           std::uint64_t ic, std::uint64_t iu,
                                           std::uint64_t skipped) {
  PatchConfusion conf;
  conf.n_ac = ac;
  conf.n_au = au;
  conf.n_ic = ic;
  conf.n_iu = iu;
  conf.skipped_patches = skipped;
  conf.cells.reserve(ac + au + ic + iu + skipped);
  conf.cells.insert(conf.cells.end(), ac, PatchOutcome::kAccurateCertain);
  conf.cells.insert(conf.cells.end(), au, PatchOutcome::kAccurateUncertain);
  conf.cells.insert(conf.cells.end(), ic, PatchOutcome::kInaccurateCertain);
  conf.cells.insert(conf.cells.end(), iu, PatchOutcome::kInaccurateUncertain);
  conf.cells.insert(conf.cells.end(), skipped, PatchOutcome::kSkipped);
  return conf;
}

std::vector<Window> enumerate_patches(std::size_t height, std::size_t width,
                                      const PatchConfig& cfg) {
  require(height >= 1 && width >= 1, "image dimensions must be at least 1x1");
  require(cfg.window >= 1, "patch window must be >= 1");
  require(cfg.effective_stride() >= 1, "patch stride must be >= 1");

  const std::size_t stride = cfg.effective_stride();
  const auto tops = window_starts(height, cfg.window, stride, cfg.edge_policy);
  const auto lefts = window_starts(width, cfg.window, stride, cfg.edge_policy);

  std::vector<Window> windows;
  windows.reserve(tops.size() * lefts.size());
  for (std::size_t top : tops) {
    const std::size_t h = std::min(cfg.window, height - top);
    for (std::size_t left : lefts) {
      const std::size_t w = std::min(cfg.window, width - left);
      windows.push_back(Window{top, left, h, w});
    }
  }
  return windows;
}

std::optional<double> patch_accuracy(const ClassMap& pred, const ClassMap& gt,
                                     const Window& window) {
  require_same_shape(pred.height(), pred.width(), gt.height(), gt.width(),
                     "prediction and ground-truth shapes differ");
  require(window.top + window.height <= gt.height() &&
              window.left + window.width <= gt.width(),
          "window exceeds image bounds");

  std::uint64_t scorable = 0;
  std::uint64_t correct = 0;
  for (std::size_t r = window.top; r < window.top + window.height; ++r) {
    for (std::size_t c = window.left; c < window.left + window.width; ++c) {
      if (gt.is_ignored(r, c)) continue;
      ++scorable;
      if (pred.at(r, c) == gt.at(r, c)) ++correct;
    }
  }
  if (scorable == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(scorable);
}

double patch_uncertainty(const ScalarMap& umap, const Window& window) {
  require(window.top + window.height <= umap.height() &&
              window.left + window.width <= umap.width(),
          "window exceeds image bounds");
  double sum = 0.0;
  for (std::size_t r = window.top; r < window.top + window.height; ++r)
    for (std::size_t c = window.left; c < window.left + window.width; ++c)
      sum += umap.at(r, c);
  return sum / static_cast<double>(window.height * window.width);
}

double resolve_threshold(std::span<const ScalarMap> maps,
                         const ThresholdSpec& spec) {
  if (spec.mode == ThresholdSpec::Mode::kAbsolute) return spec.value;
  require(!maps.empty(), "threshold resolution needs at least one map");

  if (spec.mode == ThresholdSpec::Mode::kValidationMean) {
    double sum = 0.0;
    std::uint64_t count = 0;
    for (const ScalarMap& map : maps) {
      for (double v : map.values()) sum += v;
      count += map.pixel_count();
    }
    return sum / static_cast<double>(count);
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const ScalarMap& map : maps) {
    for (double v : map.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  return lo + spec.value * (hi - lo);
}

PatchConfusion classify_patches(const ClassMap& pred, const ClassMap& gt,
                                const ScalarMap& umap, const PatchConfig& cfg,
                                double u_th, UncertainRule rule) {
  require_same_shape(pred.height(), pred.width(), gt.height(), gt.width(),
                     "prediction and ground-truth shapes differ");
  require_same_shape(umap.height(), umap.width(), gt.height(), gt.width(),
                     "uncertainty map and ground-truth shapes differ");

  const std::size_t stride = cfg.effective_stride();
  const auto tops =
      window_starts(gt.height(), cfg.window, stride, cfg.edge_policy);
  const auto lefts =
      window_starts(gt.width(), cfg.window, stride, cfg.edge_policy);

  PatchConfusion conf;
  conf.grid_height = tops.size();
  conf.grid_width = lefts.size();
  conf.cells.reserve(tops.size() * lefts.size());

  for (std::size_t top : tops) {
    const std::size_t h = std::min(cfg.window, gt.height() - top);
    for (std::size_t left : lefts) {
      const std::size_t w = std::min(cfg.window, gt.width() - left);
      const Window window{top, left, h, w};
      const auto accuracy = patch_accuracy(pred, gt, window);
      if (!accuracy) {
        ++conf.skipped_patches;
        conf.cells.push_back(PatchOutcome::kSkipped);
        continue;
      }
      const bool accurate = *accuracy >= cfg.accuracy_threshold;
      bool uncertain = false;
      switch (rule) {
        case UncertainRule::kMeanAtLeast:
          uncertain = patch_uncertainty(umap, window) >= u_th;
          break;
        case UncertainRule::kMeanAbove:
          uncertain = patch_uncertainty(umap, window) > u_th;
          break;
        case UncertainRule::kAlways:
          uncertain = true;
          break;
        case UncertainRule::kNever:
          uncertain = false;
          break;
      }
      if (accurate && !uncertain) {
        ++conf.n_ac;
        conf.cells.push_back(PatchOutcome::kAccurateCertain);
      } else if (accurate) {
        ++conf.n_au;
        conf.cells.push_back(PatchOutcome::kAccurateUncertain);
      } else if (!uncertain) {
        ++conf.n_ic;
        conf.cells.push_back(PatchOutcome::kInaccurateCertain);
      } else {
        ++conf.n_iu;
        conf.cells.push_back(PatchOutcome::kInaccurateUncertain);
      }
    }
  }
  return conf;
}

ConditionalMetrics conditional_metrics(const PatchConfusion& confusion) {
  ConditionalMetrics metrics;
  const std::uint64_t certain = confusion.n_ac + confusion.n_ic;
  if (certain > 0)
    metrics.p_accurate_given_certain =
        static_cast<double>(confusion.n_ac) / static_cast<double>(certain);
  const std::uint64_t inaccurate = confusion.n_ic + confusion.n_iu;
  if (inaccurate > 0)
    metrics.p_uncertain_given_inaccurate =
        static_cast<double>(confusion.n_iu) / static_cast<double>(inaccurate);
  const std::uint64_t total = confusion.evaluated_patches();
  if (total > 0)
    metrics.pavpu = static_cast<double>(confusion.n_ac + confusion.n_iu) /
                    static_cast<double>(total);
  return metrics;
}

SweepCurve threshold_sweep(const ClassMap& pred, const ClassMap& gt,
                           const ScalarMap& umap, const PatchConfig& cfg,
                           std::span<const double> t_grid) {
  return threshold_sweep(std::span<const ClassMap>(&pred, 1),
                         std::span<const ClassMap>(&gt, 1),
                         std::span<const ScalarMap>(&umap, 1), cfg, t_grid);
}

SweepCurve threshold_sweep(std::span<const ClassMap> preds,
                           std::span<const ClassMap> gts,
                           std::span<const ScalarMap> umaps,
                           const PatchConfig& cfg,
                           std::span<const double> t_grid) {
  require(!t_grid.empty(), "threshold sweep needs a non-empty t grid");
  require(preds.size() == gts.size() && gts.size() == umaps.size(),
          "sweep needs the same number of predictions, ground truths and "
          "uncertainty maps");
  require(!preds.empty(), "threshold sweep needs at least one image");
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    require(t_grid[i] >= 0.0 && t_grid[i] <= 1.0,
            "t grid values must lie in [0, 1]");
    if (i > 0)
      require(t_grid[i] > t_grid[i - 1], "t grid must be strictly increasing");
  }

  double u_min = std::numeric_limits<double>::infinity();
  double u_max = -std::numeric_limits<double>::infinity();
  for (const ScalarMap& umap : umaps) {
    for (double v : umap.values()) {
      u_min = std::min(u_min, v);
      u_max = std::max(u_max, v);
    }
  }

  SweepCurve curve;
  curve.u_min = u_min;
  curve.u_max = u_max;
  curve.points.reserve(t_grid.size());
  for (double t : t_grid) {
    const double u_th = u_min + t * (u_max - u_min);
    // The endpoints are all-uncertain / all-certain by definition; rounded
    // patch means can stray past u_min or u_max, so they are not left to
    // the comparison.
    UncertainRule rule = UncertainRule::kMeanAtLeast;
    if (t == 0.0) rule = UncertainRule::kAlways;
    if (t == 1.0) rule = UncertainRule::kNever;
    PatchConfusion total;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      total.merge(
          classify_patches(preds[i], gts[i], umaps[i], cfg, u_th, rule));
    }
    SweepPoint point;
    point.t = t;
    point.u_th = u_th;
    point.n_ac = total.n_ac;
    point.n_au = total.n_au;
    point.n_ic = total.n_ic;
    point.n_iu = total.n_iu;
    point.metrics = conditional_metrics(total);
    curve.points.push_back(point);
  }
  return curve;
}

std::vector<double> uniform_t_grid(std::size_t points) {
  if (points < 2)
    throw std::invalid_argument("a t grid needs at least 2 points");
  std::vector<double> grid(points);
  for (std::size_t i = 0; i < points; ++i)
    grid[i] = static_cast<double>(i) / static_cast<double>(points - 1);
  grid.back() = 1.0;
  return grid;
}

}  // namespace ueval
