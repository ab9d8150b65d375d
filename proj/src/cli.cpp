#include "gscale/cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI/CLI11.hpp>
#include <nlohmann/json.hpp>

#include "gscale/baselines.hpp"
#include "gscale/evalkit.hpp"
#include "gscale/solver.hpp"
#include "gscale/synth.hpp"

namespace gscale {

namespace fs = std::filesystem;

SceneEstimate solve_document(const DetectionDocument& doc, const ToolkitConfig& config) {
  const double v0 = doc.horizon();
  const FilterResult filtered = filter_detections(doc.detections, v0, config.filter);
  if (filtered.kept.empty()) {
    throw InputError("no detections left after filtering (" +
                     std::to_string(filtered.rejected.size()) + " rejected)");
  }

  SceneEstimate est;
  if (config.method == "scalenet") {
    est = solve_scene({v0, doc.calibration.fov_rad, doc.principal_v(), filtered.kept},
                      config.priors, config.solver);
  } else if (config.method == "pgm") {
    est = pgm_full(v0, filtered.kept, config.priors, config.pgm);
  } else if (config.method == "pgm-fixed") {
    est = pgm_fixed_height(v0, filtered.kept, config.priors, config.solver.cam_height_min,
                           config.solver.cam_height_max);
  } else {
    throw InputError("unknown method '" + config.method + "' (valid: " + method_list() + ")");
  }

  for (auto& k : est.object_indices) k = filtered.kept_indices[k];
  for (auto& x : est.excluded) x.index = filtered.kept_indices[x.index];
  for (const auto& r : filtered.rejected) est.excluded.push_back({r.index, r.reason});
  std::sort(est.excluded.begin(), est.excluded.end(),
            [](const Exclusion& a, const Exclusion& b) { return a.index < b.index; });
  return est;
}

std::vector<double> document_upright_ratios(const DetectionDocument& doc,
                                            const SceneEstimate& estimate,
                                            double head_extension) {
  std::vector<double> out;
  for (std::size_t k : estimate.object_indices) {
    double r = 1.0;
    if (k < doc.detections.size()) {
      const auto& b = doc.detections[k];
      if (b.category == Category::Person && b.keypoints) {
        try {
          r = upright_ratio(*b.keypoints, head_extension).ratio;
        } catch (const std::invalid_argument&) {
        }
      }
    }
    out.push_back(r);
  }
  return out;
}

void write_file_atomic(const fs::path& path, std::string_view contents) {
  static std::atomic<unsigned> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter++);
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + path.string());
    f.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!f) throw InputError("cannot write " + path.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw InputError("cannot write " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

namespace {

/// Prefixes a file name onto input errors raised while handling it.
template <typename Fn>
auto with_file(const fs::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

ToolkitConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  return parse_config(read_file(path));
}

void emit(const std::string& target, std::string_view text, std::ostream& out) {
  if (target.empty() || target == "-") {
    out << text;
  } else {
    write_file_atomic(target, text);
  }
}

std::vector<fs::path> json_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

// --------------------------------------------------------------------------
// Subcommands

struct SolveArgs {
  std::vector<std::string> inputs;
  std::string method;
  std::string config;
  std::string output;
  std::string overlay;
  unsigned jobs{0};
};

int run_solve(const SolveArgs& a, std::ostream& out, std::ostream& err) {
  ToolkitConfig cfg = load_config(a.config);
  if (!a.method.empty()) {
    if (!is_method(a.method))
      throw InputError("unknown method '" + a.method + "' (valid: " + method_list() + ")");
    cfg.method = a.method;
  }
  const std::string hash = config_hash(cfg);

  auto solve_one = [&](const fs::path& in, const std::string& out_path,
                       const std::string& svg_path) {
    with_file(in, [&] {
      const DetectionDocument doc = parse_document(read_file(in));
      ResultsDocument res{solve_document(doc, cfg), hash};
      emit(out_path, emit_results(res), out);
      if (!svg_path.empty()) write_file_atomic(svg_path, emit_overlay(doc, res.estimate, cfg.overlay));
      return 0;
    });
  };

  const bool dir_mode = a.inputs.size() > 1 || fs::is_directory(a.inputs.front());
  if (!dir_mode) {
    solve_one(a.inputs.front(), a.output, a.overlay);
    return 0;
  }

  std::vector<fs::path> files;
  for (const auto& in : a.inputs) {
    if (fs::is_directory(in)) {
      auto more = json_files(in);
      files.insert(files.end(), more.begin(), more.end());
    } else {
      files.emplace_back(in);
    }
  }
  if (a.output.empty()) throw InputError("--output must name a directory for several inputs");
  fs::create_directories(a.output);
  if (!a.overlay.empty()) fs::create_directories(a.overlay);

  std::mutex err_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<int> status{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      const fs::path& in = files[i];
      const std::string stem = in.stem().string();
      try {
        solve_one(in, (fs::path(a.output) / (stem + ".result.json")).string(),
                  a.overlay.empty() ? "" : (fs::path(a.overlay) / (stem + ".svg")).string());
      } catch (const std::invalid_argument& e) {
        std::lock_guard lock(err_mutex);
        err << "error: " << e.what() << "\n";
        int expected = status.load();
        while (expected < 1 && !status.compare_exchange_weak(expected, 1)) {
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(err_mutex);
        err << "internal error: " << in.string() << ": " << e.what() << "\n";
        status = 2;
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned n = std::min<std::size_t>(a.jobs ? a.jobs : hw, std::max<std::size_t>(1, files.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  return status;
}

struct SynthArgs {
  std::uint64_t seed{0};
  int count{1};
  int objects{5};
  std::string height_mode{"sampled"};
  double person_fraction{1.0};
  double image_w{640};
  double image_h{480};
  double depth_min{SceneRanges{}.depth_min_m};
  double depth_max{SceneRanges{}.depth_max_m};
  NoiseModel noise;
  std::string output;
};

int run_synth(const SynthArgs& a, std::ostream& out) {
  SceneRanges ranges;
  ranges.person_fraction = a.person_fraction;
  ranges.image_w_px = a.image_w;
  ranges.image_h_px = a.image_h;
  ranges.depth_min_m = a.depth_min;
  ranges.depth_max_m = a.depth_max;
  if (a.height_mode == "sampled") ranges.height_mode = HeightMode::Sampled;
  else if (a.height_mode == "prior-mean") ranges.height_mode = HeightMode::PriorMean;
  else if (a.height_mode == "offset") ranges.height_mode = HeightMode::Offset;
  else throw InputError("unknown height mode '" + a.height_mode + "' (valid: sampled, prior-mean, offset)");
  if (!(a.noise.box_sigma >= 0 && a.noise.horizon_sigma >= 0 && a.noise.fov_sigma_rad >= 0 &&
        a.noise.height_outlier_rate >= 0 && a.noise.height_outlier_rate <= 1))
    throw InputError("noise parameters must be >= 0 and the outlier rate <= 1");
  if (a.count < 1) throw InputError("--count must be >= 1");

  auto make = [&](std::uint64_t seed) {
    const SceneSpec scene = sample_scene(ranges, a.objects, seed, a.noise);
    const Observation obs = render_detections(scene, a.noise);
    DetectionDocument doc;
    doc.image_w_px = obs.image_w_px;
    doc.image_h_px = obs.image_h_px;
    doc.calibration.fov_rad = obs.fov_rad;
    doc.calibration.v0 = obs.v0;
    doc.calibration.principal_v = obs.principal_v;
    doc.detections = obs.boxes;
    doc.ground_truth = ground_truth(scene);
    doc.scene = scene;
    return emit_document(doc);
  };

  if (a.count == 1) {
    emit(a.output, make(a.seed), out);
    return 0;
  }
  if (a.output.empty() || a.output == "-")
    throw InputError("--output must name a directory when --count > 1");
  fs::create_directories(a.output);
  for (int i = 0; i < a.count; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    write_file_atomic(fs::path(a.output) / ("scene_" + std::to_string(seed) + ".json"), make(seed));
  }
  return 0;
}

struct EvalArgs {
  std::string results;
  std::string truth;
  std::string output;
  std::string curve;
  std::vector<double> thresholds;
  bool upright{false};
};

int run_eval(const EvalArgs& a, std::ostream& out) {
  using Json = nlohmann::ordered_json;
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (fs::is_directory(a.results)) {
    if (!fs::is_directory(a.truth))
      throw InputError("--truth must be a directory when --results is one");
    for (const auto& r : json_files(a.results)) {
      std::string stem = r.stem().string();
      if (const auto pos = stem.rfind(".result"); pos != std::string::npos) stem.erase(pos);
      const fs::path t = fs::path(a.truth) / (stem + ".json");
      if (!fs::exists(t)) throw InputError("no truth document for " + r.string());
      pairs.emplace_back(r, t);
    }
    if (pairs.empty()) throw InputError("no result files in " + a.results);
  } else {
    pairs.emplace_back(a.results, a.truth);
  }

  std::vector<MetricReport> reports;
  Json scenes = Json::array();
  for (const auto& [rp, tp] : pairs) {
    const ResultsDocument res = with_file(rp, [&] { return parse_results(read_file(rp)); });
    const DetectionDocument truth = with_file(tp, [&] { return parse_document(read_file(tp)); });
    if (!truth.ground_truth) throw InputError(tp.string() + ": ground_truth: required for eval");
    std::vector<double> ratios;
    if (a.upright) ratios = document_upright_ratios(truth, res.estimate);
    MetricReport m = a.upright ? compute_metrics(res.estimate, *truth.ground_truth,
                                                 std::span<const double>(ratios))
                               : compute_metrics(res.estimate, *truth.ground_truth);
    Json s;
    s["name"] = rp.stem().string();
    s["method"] = res.estimate.method;
    s["e_hcam"] = m.e_hcam;
    s["e_hobj"] = m.e_hobj;
    s["e_hobj_mean"] = m.e_hobj_mean ? Json(*m.e_hobj_mean) : Json(nullptr);
    s["lvt"] = m.lvt;
    s["abs_residuals"] = m.abs_residuals;
    scenes.push_back(std::move(s));
    reports.push_back(std::move(m));
  }

  const AggregateReport agg = aggregate(reports);
  auto summary = [](const Summary& s) {
    return Json{{"mean", s.mean}, {"std", s.std}, {"median", s.median}};
  };
  Json root;
  root["schema_version"] = kSchemaVersion;
  root["scenes"] = std::move(scenes);
  root["aggregate"] = {{"scenes", agg.scenes},
                       {"e_hcam", summary(agg.e_hcam)},
                       {"e_hobj", agg.e_hobj ? summary(*agg.e_hobj) : Json(nullptr)},
                       {"lvt", summary(agg.lvt)}};
  emit(a.output, root.dump(2) + "\n", out);

  if (!a.curve.empty()) {
    std::vector<double> residuals;
    for (const auto& m : reports)
      residuals.insert(residuals.end(), m.abs_residuals.begin(), m.abs_residuals.end());
    if (residuals.empty()) throw InputError("no residuals to build a threshold curve from");
    std::string csv = "threshold,fraction\n";
    for (const auto& [t, f] : threshold_curve(residuals, a.thresholds)) {
      char line[96];
      std::snprintf(line, sizeof line, "%.6g,%.6f\n", t, f);
      csv += line;
    }
    write_file_atomic(a.curve, csv);
  }
  return 0;
}

struct OverlayArgs {
  std::string document;
  std::string results;
  std::string config;
  std::string output;
};

int run_overlay(const OverlayArgs& a, std::ostream& out) {
  const ToolkitConfig cfg = load_config(a.config);
  const DetectionDocument doc =
      with_file(a.document, [&] { return parse_document(read_file(a.document)); });
  const ResultsDocument res =
      with_file(a.results, [&] { return parse_results(read_file(a.results)); });
  emit(a.output, emit_overlay(doc, res.estimate, cfg.overlay), out);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Metric scene scale from a single image's detections and horizon.", "gscale"};

  bool print_config = false;
  std::string top_config;
  app.add_flag("--print-config", print_config, "Print every configuration setting and exit");
  app.add_option("--config", top_config, "Configuration file for --print-config");

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Estimate camera and object heights for documents");
  s->add_option("inputs", solve.inputs, "Detection documents or directories")->required();
  s->add_option("--method", solve.method, "scalenet, pgm or pgm-fixed");
  s->add_option("--config", solve.config, "Configuration file");
  s->add_option("-o,--output", solve.output, "Results file, or directory for several inputs");
  s->add_option("--overlay", solve.overlay, "SVG overlay file, or directory for several inputs");
  s->add_option("-j,--jobs", solve.jobs, "Parallel workers for several inputs");

  SynthArgs synth;
  auto* y = app.add_subcommand("synth", "Generate synthetic detection documents");
  y->add_option("--seed", synth.seed, "Random seed")->required();
  y->add_option("--count", synth.count, "Number of documents (seeds seed..seed+count-1)");
  y->add_option("--objects", synth.objects, "Objects per scene");
  y->add_option("--height-mode", synth.height_mode, "sampled, prior-mean or offset");
  y->add_option("--person-fraction", synth.person_fraction, "Probability an object is a person");
  y->add_option("--image-width", synth.image_w, "Image width in pixels");
  y->add_option("--image-height", synth.image_h, "Image height in pixels");
  y->add_option("--depth-min", synth.depth_min, "Nearest object distance (m)");
  y->add_option("--depth-max", synth.depth_max, "Farthest object distance (m)");
  y->add_option("--box-sigma", synth.noise.box_sigma, "Box noise std-dev (normalized)");
  y->add_option("--horizon-sigma", synth.noise.horizon_sigma, "Horizon noise std-dev");
  y->add_option("--fov-sigma", synth.noise.fov_sigma_rad, "Field of view noise std-dev (rad)");
  y->add_option("--outlier-rate", synth.noise.height_outlier_rate, "Fraction of height outliers");
  y->add_option("-o,--output", synth.output, "Output file, or directory with --count");

  EvalArgs eval;
  eval.thresholds = {0.0005, 0.001, 0.002, 0.005, 0.01, 0.02, 0.05, 0.1};
  auto* e = app.add_subcommand("eval", "Score results against ground truth");
  e->add_option("--results", eval.results, "Results file or directory")->required();
  e->add_option("--truth", eval.truth, "Detection document(s) with ground_truth")->required();
  e->add_option("-o,--output", eval.output, "Metric report file");
  e->add_option("--curve", eval.curve, "Threshold curve CSV file");
  e->add_option("--thresholds", eval.thresholds, "Residual thresholds for the curve");
  e->add_flag("--upright", eval.upright, "Compare upright heights using keypoint ratios");

  OverlayArgs overlay;
  auto* o = app.add_subcommand("overlay", "Draw detections and estimates as SVG");
  o->add_option("document", overlay.document, "Detection document")->required();
  o->add_option("results", overlay.results, "Results file")->required();
  o->add_option("--config", overlay.config, "Configuration file");
  o->add_option("-o,--output", overlay.output, "SVG file");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (print_config) {
      out << dump_config(load_config(top_config));
      return 0;
    }
    if (s->parsed()) return run_solve(solve, out, err);
    if (y->parsed()) return run_synth(synth, out);
    if (e->parsed()) return run_eval(eval, out);
    if (o->parsed()) return run_overlay(overlay, out);
    err << "error: a subcommand is required\n\n" << app.help();
    return 1;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  } catch (const fs::filesystem_error& ex) {
    err << "error: " << ex.what() << "\n";
    return 1;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return 2;
  }
}

}  // namespace gscale
