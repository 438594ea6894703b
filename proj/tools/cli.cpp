#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>
#include <json.hpp>

#include "ueval/calibration.hpp"
#include "ueval/io.hpp"
#include "ueval/patch_eval.hpp"
#include "ueval/seg_metrics.hpp"
#include "ueval/synth.hpp"
#include "ueval/tensor.hpp"
#include "ueval/uncertainty.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace ueval::cli {

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Shortest representation that parses back to the identical double.
std::string fmt_double(double v) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, result.ptr);
}

std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string fmt_percent(double fraction) { return fmt_fixed(fraction * 100.0, 2); }

std::string fmt_metric(const std::optional<double>& v) {
  return v ? fmt_fixed(*v, 4) : std::string("undefined");
}

json json_metric(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

ThresholdSpec parse_threshold_spec(const std::string& text) {
  if (text == "mean") return ThresholdSpec::validation_mean();
  if (text.rfind("t=", 0) == 0)
    return ThresholdSpec::interpolated(std::stod(text.substr(2)));
  if (text.rfind("abs=", 0) == 0)
    return ThresholdSpec::absolute(std::stod(text.substr(4)));
  throw std::invalid_argument(
      "uncertainty threshold must be 'mean', 't=<frac>' or 'abs=<val>', got '" +
      text + "'");
}

std::string threshold_validator(const std::string& text) {
  try {
    parse_threshold_spec(text);
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

// Class maps read together must agree on class_count before they can meet in
// a confusion matrix; re-wrap them over the widest inferred id range.
void normalize_class_counts(std::vector<ClassMap>& maps) {
  std::int32_t classes = 2;
  for (const ClassMap& map : maps)
    classes = std::max(classes, map.class_count());
  for (ClassMap& map : maps) {
    if (map.class_count() == classes) continue;
    std::vector<std::int32_t> values(map.values().begin(),
                                     map.values().end());
    map = ClassMap(map.height(), map.width(), classes, std::move(values),
                   map.ignore_id());
  }
}

struct MapReadFlags {
  std::optional<std::int32_t> classes;
  std::optional<std::int32_t> ignore;
};

ClassMap read_gt(const fs::path& path, const MapReadFlags& flags) {
  TensorReadOptions options;
  options.class_count = flags.classes;
  options.ignore_id = flags.ignore;
  return read_class_map(path, options);
}

ClassMap read_pred(const fs::path& path, const MapReadFlags& flags) {
  TensorReadOptions options;
  options.class_count = flags.classes;
  return read_class_map(path, options);
}

PgmImage outcome_grid_to_pgm(const PatchConfusion& conf, bool uncertainty) {
  PgmImage image;
  image.height = conf.grid_height;
  image.width = conf.grid_width;
  image.maxval = 255;
  image.pixels.resize(conf.cells.size(), 0);
  for (std::size_t i = 0; i < conf.cells.size(); ++i) {
    const PatchOutcome cell = conf.cells[i];
    bool white = false;
    if (uncertainty) {
      white = cell == PatchOutcome::kAccurateUncertain ||
              cell == PatchOutcome::kInaccurateUncertain;
    } else {
      white = cell == PatchOutcome::kAccurateCertain ||
              cell == PatchOutcome::kAccurateUncertain;
    }
    image.pixels[i] = white ? 255 : 0;
  }
  return image;
}

constexpr const char* kTieRuleNote =
    "uncertain iff mean patch uncertainty >= u_th; sweep endpoints are "
    "all-uncertain (t=0) and all-certain (t=1) by definition";

void write_sweep_csv(std::ostream& out, const SweepCurve& curve) {
  out << "t,u_th,n_ac,n_au,n_ic,n_iu,p_acc_given_cert,p_unc_given_inacc,pavpu\n";
  for (const SweepPoint& point : curve.points) {
    out << fmt_double(point.t) << ',' << fmt_double(point.u_th) << ','
        << point.n_ac << ',' << point.n_au << ',' << point.n_ic << ','
        << point.n_iu << ',';
    if (point.metrics.p_accurate_given_certain)
      out << fmt_double(*point.metrics.p_accurate_given_certain);
    out << ',';
    if (point.metrics.p_uncertain_given_inaccurate)
      out << fmt_double(*point.metrics.p_uncertain_given_inaccurate);
    out << ',';
    if (point.metrics.pavpu) out << fmt_double(*point.metrics.pavpu);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// synth configuration (flat INI: global keys, then one [region] per section)

std::int64_t config_int(const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": '" + value +
                      "' is not an integer");
  }
}

double config_real(const std::string& value, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": '" + value +
                      "' is not a number");
  }
}

std::string trim(std::string s) {
  const auto front = s.find_first_not_of(" \t\r");
  const auto back = s.find_last_not_of(" \t\r");
  if (front == std::string::npos) return {};
  return s.substr(front, back - front + 1);
}

SynthSpec parse_synth_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());

  struct RegionDraft {
    std::map<std::string, std::pair<std::string, int>> kv;  // value, line
  };
  std::map<std::string, std::pair<std::string, int>> globals;
  std::vector<RegionDraft> regions;
  bool in_region = false;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line != "[region]")
        throw ConfigError("line " + std::to_string(line_no) +
                          ": unknown section '" + line +
                          "', only [region] is allowed");
      regions.emplace_back();
      in_region = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) +
                        ": expected 'key = value'");
    auto& target = in_region ? regions.back().kv : globals;
    if (!target.emplace(key, std::make_pair(value, line_no)).second)
      throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" +
                        key + "'");
  }

  const auto take = [](auto& kv, const std::string& key)
      -> std::optional<std::pair<std::string, int>> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto value = it->second;
    kv.erase(it);
    return value;
  };
  const auto require_key = [&](auto& kv, const std::string& key,
                               const char* where) {
    auto v = take(kv, key);
    if (!v)
      throw ConfigError(std::string("missing required key '") + key + "' in " +
                        where);
    return *v;
  };

  SynthSpec spec;
  if (auto v = take(globals, "seed"))
    spec.seed = static_cast<std::uint64_t>(config_int(v->first, v->second));
  {
    auto h = require_key(globals, "height", "the global section");
    auto w = require_key(globals, "width", "the global section");
    auto c = require_key(globals, "classes", "the global section");
    spec.height = static_cast<std::size_t>(config_int(h.first, h.second));
    spec.width = static_cast<std::size_t>(config_int(w.first, w.second));
    spec.class_count = static_cast<std::int32_t>(config_int(c.first, c.second));
  }
  if (auto v = take(globals, "samples"))
    spec.samples = static_cast<std::size_t>(config_int(v->first, v->second));
  if (auto v = take(globals, "background"))
    spec.background_class =
        static_cast<std::int32_t>(config_int(v->first, v->second));
  if (!globals.empty())
    throw ConfigError("line " + std::to_string(globals.begin()->second.second) +
                      ": unknown key '" + globals.begin()->first + "'");

  for (std::size_t i = 0; i < regions.size(); ++i) {
    auto& kv = regions[i].kv;
    const std::string where = "region " + std::to_string(i + 1);
    SynthRegion region;
    const auto shape = require_key(kv, "shape", where.c_str());
    const auto cls = require_key(kv, "class", where.c_str());
    region.true_class = static_cast<std::int32_t>(config_int(cls.first, cls.second));
    if (auto v = take(kv, "decoy"))
      region.decoy_class = static_cast<std::int32_t>(config_int(v->first, v->second));
    else
      region.decoy_class = spec.class_count > 0
                               ? (region.true_class + 1) % spec.class_count
                               : 0;
    if (auto v = take(kv, "alpha"))
      region.aleatoric_softness = config_real(v->first, v->second);
    if (auto v = take(kv, "epsilon"))
      region.epistemic_flip_rate = config_real(v->first, v->second);

    if (shape.first == "rect" || shape.first == "rectangle") {
      RectGeometry rect;
      auto top = require_key(kv, "top", where.c_str());
      auto left = require_key(kv, "left", where.c_str());
      auto height = require_key(kv, "height", where.c_str());
      auto width = require_key(kv, "width", where.c_str());
      rect.top = static_cast<std::size_t>(config_int(top.first, top.second));
      rect.left = static_cast<std::size_t>(config_int(left.first, left.second));
      rect.height = static_cast<std::size_t>(config_int(height.first, height.second));
      rect.width = static_cast<std::size_t>(config_int(width.first, width.second));
      region.geometry = rect;
    } else if (shape.first == "disk") {
      DiskGeometry disk;
      auto row = require_key(kv, "row", where.c_str());
      auto col = require_key(kv, "col", where.c_str());
      auto radius = require_key(kv, "radius", where.c_str());
      disk.center_row = config_real(row.first, row.second);
      disk.center_col = config_real(col.first, col.second);
      disk.radius = config_real(radius.first, radius.second);
      region.geometry = disk;
    } else {
      throw ConfigError("line " + std::to_string(shape.second) +
                        ": shape must be 'rect' or 'disk', got '" +
                        shape.first + "'");
    }
    if (!kv.empty())
      throw ConfigError("line " + std::to_string(kv.begin()->second.second) +
                        ": unknown key '" + kv.begin()->first + "' in " + where);
    spec.regions.push_back(region);
  }
  return spec;
}

// ---------------------------------------------------------------------------
// subcommand runners

struct UncertArgs {
  std::string stack_path;
  std::string measure = "both";
  std::string out_dir;
  std::string format = "text";
};

void print_map_stats(std::ostream& out, const char* name,
                     const ScalarMap& map) {
  double lo = map.values()[0], hi = map.values()[0], sum = 0.0;
  for (double v : map.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  out << name << ": min " << fmt_fixed(lo, 6) << "  mean "
      << fmt_fixed(sum / static_cast<double>(map.pixel_count()), 6) << "  max "
      << fmt_fixed(hi, 6) << "\n";
}

json map_stats_json(const ScalarMap& map) {
  double lo = map.values()[0], hi = map.values()[0], sum = 0.0;
  for (double v : map.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  return json{{"min", lo},
              {"mean", sum / static_cast<double>(map.pixel_count())},
              {"max", hi}};
}

int run_uncert(const UncertArgs& args, std::ostream& out) {
  const ProbStack stack = read_prob_stack(args.stack_path);
  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);

  const ClassMap pred = argmax_prediction(stack);
  write_tensor(pred, dir / "pred.uet");

  json summary;
  summary["samples"] = stack.samples();
  summary["classes"] = stack.class_count();
  summary["height"] = stack.height();
  summary["width"] = stack.width();

  std::optional<ScalarMap> entropy, mi;
  if (args.measure == "entropy" || args.measure == "both") {
    entropy = predictive_entropy(stack);
    write_tensor(*entropy, dir / "entropy.uet");
    summary["entropy"] = map_stats_json(*entropy);
  }
  if (args.measure == "mi" || args.measure == "both") {
    mi = mutual_information(stack);
    write_tensor(*mi, dir / "mi.uet");
    summary["mutual_information"] = map_stats_json(*mi);
  }

  if (args.format == "json") {
    out << summary.dump(2) << "\n";
  } else {
    out << "stack: T=" << stack.samples() << " C=" << stack.class_count()
        << " " << stack.height() << "x" << stack.width() << "\n";
    if (entropy) print_map_stats(out, "predictive entropy", *entropy);
    if (mi) print_map_stats(out, "mutual information", *mi);
    out << "wrote pred.uet";
    if (entropy) out << ", entropy.uet";
    if (mi) out << ", mi.uet";
    out << " to " << args.out_dir << "\n";
  }
  return kExitSuccess;
}

struct SegScoreArgs {
  std::vector<std::string> files;
  MapReadFlags flags;
  std::string format = "text";
};

int run_segscore(const SegScoreArgs& args, std::ostream& out,
                 std::ostream& err) {
  if (args.files.size() < 2 || args.files.size() % 2 != 0) {
    err << "usage error: segscore expects PRED GT file pairs\n";
    return kExitUsage;
  }
  std::vector<ClassMap> maps;
  maps.reserve(args.files.size());
  for (std::size_t i = 0; i < args.files.size(); i += 2) {
    maps.push_back(read_pred(args.files[i], args.flags));
    maps.push_back(read_gt(args.files[i + 1], args.flags));
  }
  normalize_class_counts(maps);

  SegConfusion confusion(maps.front().class_count());
  for (std::size_t i = 0; i < maps.size(); i += 2)
    accumulate_confusion(maps[i], maps[i + 1], confusion);

  const double pa = pixel_accuracy(confusion);
  const double ma = mean_accuracy(confusion);
  const double iou = mean_iou(confusion);
  if (args.format == "json") {
    out << json{{"pixel_accuracy", pa},
                {"mean_accuracy", ma},
                {"mean_iou", iou},
                {"pixels", confusion.total()}}
               .dump(2)
        << "\n";
  } else {
    out << "pixel accuracy  " << fmt_percent(pa) << "\n"
        << "mean accuracy   " << fmt_percent(ma) << "\n"
        << "mean IoU        " << fmt_percent(iou) << "\n";
  }
  return kExitSuccess;
}

struct PatchArgs {
  std::vector<std::string> files;
  PatchConfig config;
  std::string threshold = "mean";
  std::string edge = "drop";
  MapReadFlags flags;
  std::string out_dir;
  std::string format = "text";
};

struct PatchInputs {
  std::vector<ClassMap> preds;
  std::vector<ClassMap> gts;
  std::vector<ScalarMap> umaps;
};

PatchInputs read_patch_inputs(const std::vector<std::string>& files,
                              const MapReadFlags& flags) {
  PatchInputs inputs;
  for (std::size_t i = 0; i < files.size(); i += 3) {
    inputs.preds.push_back(read_pred(files[i], flags));
    inputs.gts.push_back(read_gt(files[i + 1], flags));
    inputs.umaps.push_back(read_scalar_map(files[i + 2]));
  }
  std::vector<ClassMap> all;
  all.reserve(inputs.preds.size() + inputs.gts.size());
  for (auto& m : inputs.preds) all.push_back(std::move(m));
  for (auto& m : inputs.gts) all.push_back(std::move(m));
  normalize_class_counts(all);
  inputs.preds.assign(all.begin(),
                      all.begin() + static_cast<std::ptrdiff_t>(inputs.umaps.size()));
  inputs.gts.assign(all.begin() + static_cast<std::ptrdiff_t>(inputs.umaps.size()),
                    all.end());
  return inputs;
}

int run_patch_eval(const PatchArgs& args, std::ostream& out,
                   std::ostream& err) {
  if (args.files.size() < 3 || args.files.size() % 3 != 0) {
    err << "usage error: patch-eval expects PRED GT UMAP file triples\n";
    return kExitUsage;
  }
  PatchArgs resolved = args;
  resolved.config.edge_policy = args.edge == "include"
                                    ? EdgePolicy::kIncludePartial
                                    : EdgePolicy::kDropPartial;
  const PatchInputs inputs = read_patch_inputs(args.files, args.flags);
  const ThresholdSpec spec = parse_threshold_spec(args.threshold);
  const double u_th = resolve_threshold(inputs.umaps, spec);

  PatchConfusion total;
  std::vector<PatchConfusion> per_image;
  per_image.reserve(inputs.preds.size());
  for (std::size_t i = 0; i < inputs.preds.size(); ++i) {
    per_image.push_back(classify_patches(inputs.preds[i], inputs.gts[i],
                                         inputs.umaps[i], resolved.config,
                                         u_th));
    total.merge(per_image.back());
  }

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    char name[64];
    for (std::size_t i = 0; i < per_image.size(); ++i) {
      if (per_image[i].cells.empty()) continue;
      std::snprintf(name, sizeof(name), "accuracy_map_%03zu.pgm", i);
      write_pgm(fs::path(args.out_dir) / name,
                outcome_grid_to_pgm(per_image[i], false));
      std::snprintf(name, sizeof(name), "uncertainty_map_%03zu.pgm", i);
      write_pgm(fs::path(args.out_dir) / name,
                outcome_grid_to_pgm(per_image[i], true));
    }
  }

  const ConditionalMetrics metrics = conditional_metrics(total);
  if (args.format == "json") {
    out << json{{"window", resolved.config.window},
                {"stride", resolved.config.effective_stride()},
                {"accuracy_threshold", resolved.config.accuracy_threshold},
                {"edge_policy", args.edge},
                {"threshold_mode", args.threshold},
                {"u_th", u_th},
                {"images", inputs.preds.size()},
                {"n_ac", total.n_ac},
                {"n_au", total.n_au},
                {"n_ic", total.n_ic},
                {"n_iu", total.n_iu},
                {"skipped_patches", total.skipped_patches},
                {"p_accurate_given_certain",
                 json_metric(metrics.p_accurate_given_certain)},
                {"p_uncertain_given_inaccurate",
                 json_metric(metrics.p_uncertain_given_inaccurate)},
                {"pavpu", json_metric(metrics.pavpu)},
                {"tie_rule", kTieRuleNote}}
               .dump(2)
        << "\n";
  } else {
    out << "patches: " << total.evaluated_patches() << " evaluated, "
        << total.skipped_patches << " skipped (u_th " << fmt_double(u_th)
        << ")\n"
        << "counts: n_ac " << total.n_ac << ", n_au " << total.n_au
        << ", n_ic " << total.n_ic << ", n_iu " << total.n_iu << "\n"
        << "p(accurate|certain)    " << fmt_metric(metrics.p_accurate_given_certain)
        << "\n"
        << "p(uncertain|inaccurate) "
        << fmt_metric(metrics.p_uncertain_given_inaccurate) << "\n"
        << "PAvPU                  " << fmt_metric(metrics.pavpu) << "\n";
  }

  const bool all_undefined = !metrics.p_accurate_given_certain &&
                             !metrics.p_uncertain_given_inaccurate &&
                             !metrics.pavpu;
  return all_undefined ? kExitUndefined : kExitSuccess;
}

struct SweepArgs {
  std::vector<std::string> files;
  PatchConfig config;
  std::string edge = "drop";
  std::size_t grid = 11;
  MapReadFlags flags;
  std::string out_dir;
  std::string format = "text";
};

int run_sweep(const SweepArgs& args, std::ostream& out, std::ostream& err) {
  if (args.files.size() < 3 || args.files.size() % 3 != 0) {
    err << "usage error: sweep expects PRED GT UMAP file triples\n";
    return kExitUsage;
  }
  SweepArgs resolved = args;
  resolved.config.edge_policy = args.edge == "include"
                                    ? EdgePolicy::kIncludePartial
                                    : EdgePolicy::kDropPartial;
  const PatchInputs inputs = read_patch_inputs(args.files, args.flags);
  const std::vector<double> t_grid = uniform_t_grid(args.grid);
  const SweepCurve curve =
      threshold_sweep(inputs.preds, inputs.gts, inputs.umaps, resolved.config,
                      t_grid);

  if (!args.out_dir.empty()) {
    fs::create_directories(args.out_dir);
    std::ofstream csv(fs::path(args.out_dir) / "sweep.csv",
                      std::ios::binary | std::ios::trunc);
    write_sweep_csv(csv, curve);
  }

  bool any_defined = false;
  for (const SweepPoint& point : curve.points) {
    any_defined = any_defined || point.metrics.p_accurate_given_certain ||
                  point.metrics.p_uncertain_given_inaccurate ||
                  point.metrics.pavpu;
  }

  if (args.format == "csv") {
    write_sweep_csv(out, curve);
  } else if (args.format == "json") {
    json points = json::array();
    for (const SweepPoint& point : curve.points) {
      points.push_back(
          {{"t", point.t},
           {"u_th", point.u_th},
           {"n_ac", point.n_ac},
           {"n_au", point.n_au},
           {"n_ic", point.n_ic},
           {"n_iu", point.n_iu},
           {"p_accurate_given_certain",
            json_metric(point.metrics.p_accurate_given_certain)},
           {"p_uncertain_given_inaccurate",
            json_metric(point.metrics.p_uncertain_given_inaccurate)},
           {"pavpu", json_metric(point.metrics.pavpu)}});
    }
    out << json{{"window", resolved.config.window},
                {"stride", resolved.config.effective_stride()},
                {"accuracy_threshold", resolved.config.accuracy_threshold},
                {"edge_policy", args.edge},
                {"u_min", curve.u_min},
                {"u_max", curve.u_max},
                {"tie_rule", kTieRuleNote},
                {"points", points}}
               .dump(2)
        << "\n";
  } else {
    out << "t      u_th        p(acc|cert)  p(unc|inacc)  PAvPU\n";
    for (const SweepPoint& point : curve.points) {
      out << fmt_fixed(point.t, 2) << "   " << fmt_fixed(point.u_th, 6)
          << "    " << fmt_metric(point.metrics.p_accurate_given_certain)
          << "       " << fmt_metric(point.metrics.p_uncertain_given_inaccurate)
          << "        " << fmt_metric(point.metrics.pavpu) << "\n";
    }
  }
  return any_defined ? kExitSuccess : kExitUndefined;
}

struct CalibArgs {
  std::string stack_path;
  std::string gt_path;
  int bins = 15;
  MapReadFlags flags;
  std::string format = "text";
};

int run_calib(const CalibArgs& args, std::ostream& out) {
  const ProbStack stack = read_prob_stack(args.stack_path);
  MapReadFlags flags = args.flags;
  if (!flags.classes) flags.classes = stack.class_count();
  const ClassMap gt = read_gt(args.gt_path, flags);

  const CalibrationBins before = bin_confidences(stack, gt, args.bins);
  const double ece_before = ece(before);
  const double mce_before = mce(before);

  const ProbStack collapsed = sample_mean_stack(stack);
  const TemperatureResult fit = temperature_scale(collapsed, gt);
  const CalibrationBins after =
      bin_confidences(fit.rescaled, gt, args.bins);
  const CalibrationReport report{ece(after), mce(after), fit.temperature,
                                 fit.nll_after};

  if (args.format == "json") {
    out << json{{"bins", args.bins},
                {"samples", before.total},
                {"ece", report.ece},
                {"mce", report.mce},
                {"temperature", report.temperature},
                {"nll", report.nll},
                {"ece_unscaled", ece_before},
                {"mce_unscaled", mce_before},
                {"nll_unscaled", fit.nll_before}}
               .dump(2)
        << "\n";
  } else {
    out << "bins " << args.bins << ", samples " << before.total << "\n"
        << "unscaled: ECE " << fmt_fixed(ece_before, 4) << "  MCE "
        << fmt_fixed(mce_before, 4) << "  NLL " << fmt_fixed(fit.nll_before, 4)
        << "\n"
        << "scaled:   ECE " << fmt_fixed(report.ece, 4) << "  MCE "
        << fmt_fixed(report.mce, 4) << "  NLL " << fmt_fixed(report.nll, 4)
        << "  (T* = " << fmt_fixed(report.temperature, 3) << ")\n";
  }
  return kExitSuccess;
}

struct SynthArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string format = "text";
};

int run_synth(const SynthArgs& args, std::ostream& out) {
  SynthSpec spec = parse_synth_config(args.config_path);
  if (args.seed) spec.seed = *args.seed;
  const SynthOutput result = generate(spec);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  write_tensor(result.gt, dir / "gt.uet");
  write_tensor(result.stack, dir / "stack.uet");

  if (args.format == "json") {
    out << json{{"seed", spec.seed},
                {"height", spec.height},
                {"width", spec.width},
                {"classes", spec.class_count},
                {"samples", spec.samples},
                {"regions", spec.regions.size()}}
               .dump(2)
        << "\n";
  } else {
    out << "generated " << spec.height << "x" << spec.width << " scene, C="
        << spec.class_count << ", T=" << spec.samples << ", "
        << spec.regions.size() << " region(s), seed " << spec.seed << "\n"
        << "wrote gt.uet, stack.uet to " << args.out_dir << "\n";
  }
  return kExitSuccess;
}

void add_map_flags(CLI::App* sub, MapReadFlags& flags) {
  sub->add_option("--classes", flags.classes,
                  "class count for class maps (inferred when omitted)");
  sub->add_option("--ignore", flags.ignore,
                  "ground-truth ignore id, excluded from accuracy");
}

void add_patch_flags(CLI::App* sub, PatchConfig& config, std::string& edge) {
  sub->add_option("--window", config.window, "patch window size")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--stride", config.stride,
                  "patch stride (defaults to the window size)");
  sub->add_option("--acc-th", config.accuracy_threshold,
                  "patch accuracy threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sub->add_option("--edge", edge, "partial edge patches: drop or include")
      ->check(CLI::IsMember({"drop", "include"}))
      ->capture_default_str();
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App app{"pixel-wise uncertainty evaluation for semantic segmentation",
               "ueval"};
  app.require_subcommand(1);

  UncertArgs uncert_args;
  auto* uncert = app.add_subcommand(
      "uncert", "compute prediction and uncertainty maps from a sample stack");
  uncert->add_option("stack", uncert_args.stack_path, "probability stack (UET)")
      ->required();
  uncert->add_option("--measure", uncert_args.measure,
                     "uncertainty measure: entropy, mi or both")
      ->check(CLI::IsMember({"entropy", "mi", "both"}))
      ->capture_default_str();
  uncert->add_option("--out-dir", uncert_args.out_dir, "output directory")
      ->required();
  uncert->add_option("--format", uncert_args.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  SegScoreArgs seg_args;
  auto* segscore = app.add_subcommand(
      "segscore", "pixel accuracy, mean accuracy and mean IoU");
  segscore->add_option("files", seg_args.files, "PRED GT file pairs")
      ->required();
  add_map_flags(segscore, seg_args.flags);
  segscore->add_option("--format", seg_args.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  PatchArgs patch_args;
  auto* patch = app.add_subcommand(
      "patch-eval",
      "patch confusion counts and the three conditional metrics");
  patch->add_option("files", patch_args.files, "PRED GT UMAP file triples")
      ->required();
  add_patch_flags(patch, patch_args.config, patch_args.edge);
  patch
      ->add_option("--u-th", patch_args.threshold,
                   "uncertainty threshold: mean, t=<frac> or abs=<val>")
      ->check(threshold_validator)
      ->capture_default_str();
  add_map_flags(patch, patch_args.flags);
  patch->add_option("--out-dir", patch_args.out_dir,
                    "directory for binary accuracy/uncertainty maps (PGM)");
  patch->add_option("--format", patch_args.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand(
      "sweep", "metrics over a grid of uncertainty threshold fractions");
  sweep->add_option("files", sweep_args.files, "PRED GT UMAP file triples")
      ->required();
  add_patch_flags(sweep, sweep_args.config, sweep_args.edge);
  sweep->add_option("--grid", sweep_args.grid, "number of t grid points")
      ->check(CLI::Range(static_cast<std::size_t>(2),
                         static_cast<std::size_t>(100000)))
      ->capture_default_str();
  add_map_flags(sweep, sweep_args.flags);
  sweep->add_option("--out-dir", sweep_args.out_dir,
                    "directory for the sweep.csv curve");
  sweep->add_option("--format", sweep_args.format, "text, json or csv")
      ->check(CLI::IsMember({"text", "json", "csv"}));

  CalibArgs calib_args;
  auto* calib = app.add_subcommand(
      "calib", "ECE, MCE and temperature scaling against a ground truth");
  calib->add_option("stack", calib_args.stack_path, "probability stack (UET)")
      ->required();
  calib->add_option("gt", calib_args.gt_path, "ground-truth class map")
      ->required();
  calib->add_option("--bins", calib_args.bins, "confidence bin count")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  add_map_flags(calib, calib_args.flags);
  calib->add_option("--format", calib_args.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  SynthArgs synth_args;
  auto* synth = app.add_subcommand(
      "synth", "generate a synthetic scene from a config file");
  synth->add_option("config", synth_args.config_path, "scene config (INI)")
      ->required();
  synth->add_option("--seed", synth_args.seed, "override the config seed");
  synth->add_option("--out-dir", synth_args.out_dir, "output directory")
      ->required();
  synth->add_option("--format", synth_args.format, "text or json")
      ->check(CLI::IsMember({"text", "json"}));

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("ueval");
  for (const std::string& arg : args) argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitSuccess;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*uncert) return run_uncert(uncert_args, out);
    if (*segscore) return run_segscore(seg_args, out, err);
    if (*patch) return run_patch_eval(patch_args, out, err);
    if (*sweep) return run_sweep(sweep_args, out, err);
    if (*calib) return run_calib(calib_args, out);
    if (*synth) return run_synth(synth_args, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  err << "usage error: no subcommand selected\n";
  return kExitUsage;
}

}  // namespace ueval::cli
