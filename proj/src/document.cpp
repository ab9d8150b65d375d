#include "gscale/io.hpp"

#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

namespace gscale {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
  throw SchemaError(path + ": " + msg);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

std::string at(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void expect_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path.empty() ? "<document>" : path, "expected an object");
}

void reject_unknown(const Json& j, const std::string& path,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!keys.count(key)) fail(join(path, key), "unknown field");
  }
}

const Json& require(const Json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) fail(join(path, key), "required field missing");
  return *it;
}

double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) fail(path, "expected a finite number");
  return x;
}

double number(const Json& j, const std::string& path, const char* key) {
  return as_number(require(j, path, key), join(path, key));
}

std::optional<double> optional_number(const Json& j, const std::string& path, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) return std::nullopt;
  return as_number(*it, join(path, key));
}

std::string string_field(const Json& j, const std::string& path, const char* key) {
  const Json& v = require(j, path, key);
  if (!v.is_string()) fail(join(path, key), "expected a string");
  return v.get<std::string>();
}

bool bool_field(const Json& j, const std::string& path, const char* key) {
  const Json& v = require(j, path, key);
  if (!v.is_boolean()) fail(join(path, key), "expected true or false");
  return v.get<bool>();
}

const Json& array_field(const Json& j, const std::string& path, const char* key) {
  const Json& v = require(j, path, key);
  if (!v.is_array()) fail(join(path, key), "expected an array");
  return v;
}

/// Loss values may be infinite; JSON carries those as null.
Json loose_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double as_loose_number(const Json& j, const std::string& path) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!j.is_number()) fail(path, "expected a number or null");
  return j.get<double>();
}

std::vector<double> loose_numbers(const Json& j, const std::string& path, const char* key) {
  const Json& a = array_field(j, path, key);
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i)
    out.push_back(as_loose_number(a[i], at(join(path, key), i)));
  return out;
}

std::vector<double> numbers(const Json& j, const std::string& path, const char* key) {
  const Json& a = array_field(j, path, key);
  std::vector<double> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back(as_number(a[i], at(join(path, key), i)));
  return out;
}

Category parse_category(const std::string& s, const std::string& path) {
  if (s == "person") return Category::Person;
  if (s == "car") return Category::Car;
  if (s == "other") return Category::Other;
  fail(path, "unknown category '" + s + "' (expected person, car or other)");
}

Json parse_json(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    fail("<document>", std::string("malformed JSON: ") + e.what());
  }
}

void check_schema_version(const Json& root) {
  const Json& v = require(root, "", "schema_version");
  if (!v.is_number_integer()) fail("schema_version", "expected an integer");
  if (v.get<long long>() != kSchemaVersion)
    fail("schema_version", "unsupported version " + v.dump() + " (expected " +
                               std::to_string(kSchemaVersion) + ")");
}

// --------------------------------------------------------------------------
// Detection documents

struct Frame {
  double scale{1.0};
  bool v_up{false};

  double u(double x) const { return x * scale; }
  double v(double x) const { return v_up ? 1.0 - x * scale : x * scale; }
};

KeypointSet parse_keypoints(const Json& j, const std::string& path, const Frame& frame) {
  if (!j.is_array() || j.size() != kNumKeypoints)
    fail(path, "expected an array of " + std::to_string(kNumKeypoints) + " [u, v, visibility]");
  KeypointSet kps;
  for (std::size_t k = 0; k < j.size(); ++k) {
    const std::string p = at(path, k);
    const Json& e = j[k];
    if (!e.is_array() || e.size() != 3) fail(p, "expected [u, v, visibility]");
    const double vis = as_number(e[2], at(p, 2));
    if (vis != 0 && vis != 1 && vis != 2) fail(at(p, 2), "visibility must be 0, 1 or 2");
    kps.points[k] = {frame.u(as_number(e[0], at(p, 0))), frame.v(as_number(e[1], at(p, 1))),
                     vis == 2};
  }
  return kps;
}

DetectionBox parse_detection(const Json& j, const std::string& path, const Frame& frame) {
  expect_object(j, path);
  reject_unknown(j, path,
                 {"u_left", "u_right", "v_top", "v_bottom", "category", "weight", "keypoints"});
  DetectionBox b;
  b.u_left = frame.u(number(j, path, "u_left"));
  b.u_right = frame.u(number(j, path, "u_right"));
  b.v_top = frame.v(number(j, path, "v_top"));
  b.v_bottom = frame.v(number(j, path, "v_bottom"));
  b.category = parse_category(string_field(j, path, "category"), join(path, "category"));
  b.weight = optional_number(j, path, "weight").value_or(1.0);
  if (const auto it = j.find("keypoints"); it != j.end())
    b.keypoints = parse_keypoints(*it, join(path, "keypoints"), frame);
  if (!(b.u_left < b.u_right)) fail(path, "u_left must be left of u_right");
  if (!(b.v_top < b.v_bottom)) fail(path, "v_top must be above v_bottom");
  if (!(b.weight > 0)) fail(join(path, "weight"), "must be positive");
  return b;
}

SceneSpec parse_scene(const Json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, path, {"seed", "camera", "objects"});
  SceneSpec s;
  const Json& seed = require(j, path, "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0))
    fail(join(path, "seed"), "expected a non-negative integer");
  s.seed = seed.get<std::uint64_t>();

  const std::string cp = join(path, "camera");
  const Json& cam = require(j, path, "camera");
  expect_object(cam, cp);
  reject_unknown(cam, cp,
                 {"pitch_rad", "fov_rad", "focal_px", "cam_height_m", "image_w_px",
                  "image_h_px", "principal_v_px"});
  s.camera.pitch_rad = number(cam, cp, "pitch_rad");
  s.camera.fov_rad = number(cam, cp, "fov_rad");
  s.camera.focal_px = number(cam, cp, "focal_px");
  s.camera.cam_height_m = number(cam, cp, "cam_height_m");
  s.camera.image_w_px = number(cam, cp, "image_w_px");
  s.camera.image_h_px = number(cam, cp, "image_h_px");
  s.camera.principal_v_px = number(cam, cp, "principal_v_px");

  const Json& objs = array_field(j, path, "objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    const std::string op = at(join(path, "objects"), i);
    expect_object(objs[i], op);
    reject_unknown(objs[i], op, {"depth_m", "lateral_m", "height_m", "width_m", "category"});
    GroundObject o;
    o.depth_m = number(objs[i], op, "depth_m");
    o.lateral_m = number(objs[i], op, "lateral_m");
    o.height_m = number(objs[i], op, "height_m");
    o.width_m = number(objs[i], op, "width_m");
    o.category = parse_category(string_field(objs[i], op, "category"), join(op, "category"));
    s.objects.push_back(o);
  }
  return s;
}

Json emit_box(const DetectionBox& b) {
  Json j;
  j["u_left"] = b.u_left;
  j["u_right"] = b.u_right;
  j["v_top"] = b.v_top;
  j["v_bottom"] = b.v_bottom;
  j["category"] = to_string(b.category);
  j["weight"] = b.weight;
  if (b.keypoints) {
    Json kps = Json::array();
    for (const auto& p : b.keypoints->points) kps.push_back(Json::array({p.u, p.v, p.visible ? 2 : 0}));
    j["keypoints"] = std::move(kps);
  }
  return j;
}

// --------------------------------------------------------------------------
// Results

Json emit_layer(const LayerState& l) {
  Json j;
  j["cam_height_m"] = loose_number(l.cam_height_m);
  auto arr = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(loose_number(x));
    return a;
  };
  j["heights_m"] = arr(l.heights_m);
  j["v_top"] = arr(l.v_top);
  j["residuals"] = arr(l.residuals);
  j["reprojection_loss"] = loose_number(l.reprojection_loss);
  j["prior_loss"] = loose_number(l.prior_loss);
  j["total_loss"] = loose_number(l.total_loss);
  return j;
}

LayerState parse_layer(const Json& j, const std::string& path) {
  expect_object(j, path);
  reject_unknown(j, path,
                 {"cam_height_m", "heights_m", "v_top", "residuals", "reprojection_loss",
                  "prior_loss", "total_loss"});
  LayerState l;
  l.cam_height_m = as_loose_number(require(j, path, "cam_height_m"), join(path, "cam_height_m"));
  l.heights_m = loose_numbers(j, path, "heights_m");
  l.v_top = loose_numbers(j, path, "v_top");
  l.residuals = loose_numbers(j, path, "residuals");
  l.reprojection_loss =
      as_loose_number(require(j, path, "reprojection_loss"), join(path, "reprojection_loss"));
  l.prior_loss = as_loose_number(require(j, path, "prior_loss"), join(path, "prior_loss"));
  l.total_loss = as_loose_number(require(j, path, "total_loss"), join(path, "total_loss"));
  return l;
}

std::size_t as_index(const Json& j, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    fail(path, "expected a non-negative integer");
  return j.get<std::size_t>();
}

}  // namespace

// --------------------------------------------------------------------------

double DetectionDocument::horizon() const {
  if (calibration.v0) return *calibration.v0;
  const double f = focal_from_fov(calibration.fov_rad, 1.0);
  return principal_v() + f * std::tan(calibration.pitch_rad.value_or(0.0));
}

SceneInput DetectionDocument::scene_input() const {
  return {horizon(), calibration.fov_rad, principal_v(), detections};
}

DetectionDocument parse_document(std::string_view json_text) {
  const Json root = parse_json(json_text);
  expect_object(root, "");
  reject_unknown(root, "",
                 {"schema_version", "image", "units", "v_axis", "calibration", "detections",
                  "ground_truth", "scene"});
  check_schema_version(root);

  DetectionDocument doc;
  const Json& image = require(root, "", "image");
  expect_object(image, "image");
  reject_unknown(image, "image", {"width", "height"});
  doc.image_w_px = number(image, "image", "width");
  doc.image_h_px = number(image, "image", "height");
  if (!(doc.image_w_px > 0)) fail("image.width", "must be positive");
  if (!(doc.image_h_px > 0)) fail("image.height", "must be positive");

  Frame frame;
  if (const auto it = root.find("units"); it != root.end()) {
    if (!it->is_string()) fail("units", "expected a string");
    const auto units = it->get<std::string>();
    if (units == "pixels") frame.scale = 1.0 / doc.image_h_px;
    else if (units != "normalized")
      fail("units", "unknown unit '" + units + "' (expected normalized or pixels)");
  }
  if (const auto it = root.find("v_axis"); it != root.end()) {
    if (!it->is_string()) fail("v_axis", "expected a string");
    const auto axis = it->get<std::string>();
    if (axis == "up") frame.v_up = true;
    else if (axis != "down") fail("v_axis", "unknown axis '" + axis + "' (expected down or up)");
  }

  const Json& cal = require(root, "", "calibration");
  expect_object(cal, "calibration");
  reject_unknown(cal, "calibration", {"fov_rad", "v0", "pitch_rad", "principal_v"});
  doc.calibration.fov_rad = number(cal, "calibration", "fov_rad");
  if (!(doc.calibration.fov_rad > 0 && doc.calibration.fov_rad < std::numbers::pi))
    fail("calibration.fov_rad", "must lie in (0, pi)");
  const auto v0 = optional_number(cal, "calibration", "v0");
  const auto pitch = optional_number(cal, "calibration", "pitch_rad");
  if (v0.has_value() == pitch.has_value())
    fail("calibration", "exactly one of v0 and pitch_rad is required");
  if (v0) doc.calibration.v0 = frame.v(*v0);
  doc.calibration.pitch_rad = pitch;
  if (const auto pv = optional_number(cal, "calibration", "principal_v"))
    doc.calibration.principal_v = frame.v(*pv);

  const Json& dets = array_field(root, "", "detections");
  for (std::size_t i = 0; i < dets.size(); ++i)
    doc.detections.push_back(parse_detection(dets[i], at("detections", i), frame));

  if (const auto it = root.find("ground_truth"); it != root.end()) {
    expect_object(*it, "ground_truth");
    reject_unknown(*it, "ground_truth", {"cam_height_m", "heights_m"});
    GroundTruth gt;
    gt.cam_height_m = number(*it, "ground_truth", "cam_height_m");
    gt.heights_m = numbers(*it, "ground_truth", "heights_m");
    doc.ground_truth = gt;
  }
  if (const auto it = root.find("scene"); it != root.end()) doc.scene = parse_scene(*it, "scene");
  return doc;
}

std::string emit_document(const DetectionDocument& doc) {
  Json root;
  root["schema_version"] = kSchemaVersion;
  root["image"] = {{"width", doc.image_w_px}, {"height", doc.image_h_px}};
  root["units"] = "normalized";
  root["v_axis"] = "down";
  Json cal;
  cal["fov_rad"] = doc.calibration.fov_rad;
  if (doc.calibration.v0) cal["v0"] = *doc.calibration.v0;
  if (doc.calibration.pitch_rad) cal["pitch_rad"] = *doc.calibration.pitch_rad;
  if (doc.calibration.principal_v) cal["principal_v"] = *doc.calibration.principal_v;
  root["calibration"] = std::move(cal);
  Json dets = Json::array();
  for (const auto& b : doc.detections) dets.push_back(emit_box(b));
  root["detections"] = std::move(dets);
  if (doc.ground_truth) {
    root["ground_truth"] = {{"cam_height_m", doc.ground_truth->cam_height_m},
                            {"heights_m", doc.ground_truth->heights_m}};
  }
  if (doc.scene) {
    const auto& c = doc.scene->camera;
    Json scene;
    scene["seed"] = doc.scene->seed;
    scene["camera"] = {{"pitch_rad", c.pitch_rad},       {"fov_rad", c.fov_rad},
                       {"focal_px", c.focal_px},         {"cam_height_m", c.cam_height_m},
                       {"image_w_px", c.image_w_px},     {"image_h_px", c.image_h_px},
                       {"principal_v_px", c.principal_v_px}};
    Json objs = Json::array();
    for (const auto& o : doc.scene->objects) {
      objs.push_back({{"depth_m", o.depth_m},
                      {"lateral_m", o.lateral_m},
                      {"height_m", o.height_m},
                      {"width_m", o.width_m},
                      {"category", to_string(o.category)}});
    }
    scene["objects"] = std::move(objs);
    root["scene"] = std::move(scene);
  }
  return root.dump(2) + "\n";
}

std::string fnv1a64_tag(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string emit_results(const ResultsDocument& r) {
  const auto& e = r.estimate;
  Json root;
  root["schema_version"] = kSchemaVersion;
  root["method"] = e.method;
  root["config_hash"] = r.config_hash;
  root["cam_height_m"] = loose_number(e.cam_height_m);
  root["object_indices"] = e.object_indices;
  Json heights = Json::array();
  for (double h : e.heights_m) heights.push_back(loose_number(h));
  root["heights_m"] = std::move(heights);
  Json layers = Json::array();
  for (const auto& l : e.layers) layers.push_back(emit_layer(l));
  root["layers"] = std::move(layers);
  Json excluded = Json::array();
  for (const auto& x : e.excluded) excluded.push_back({{"index", x.index}, {"reason", x.reason}});
  root["excluded"] = std::move(excluded);
  root["converged"] = e.converged;
  root["ill_posed"] = e.ill_posed;
  root["iterations"] = e.iterations;
  return root.dump(2) + "\n";
}

ResultsDocument parse_results(std::string_view json_text) {
  const Json root = parse_json(json_text);
  expect_object(root, "");
  reject_unknown(root, "",
                 {"schema_version", "method", "config_hash", "cam_height_m", "object_indices",
                  "heights_m", "layers", "excluded", "converged", "ill_posed", "iterations"});
  check_schema_version(root);

  ResultsDocument r;
  auto& e = r.estimate;
  e.method = string_field(root, "", "method");
  r.config_hash = string_field(root, "", "config_hash");
  if (r.config_hash.size() != 24 || r.config_hash.rfind("fnv1a64:", 0) != 0 ||
      r.config_hash.find_first_not_of("0123456789abcdef", 8) != std::string::npos)
    fail("config_hash", "expected fnv1a64: followed by 16 lowercase hex digits");
  e.cam_height_m = as_loose_number(require(root, "", "cam_height_m"), "cam_height_m");
  const Json& idx = array_field(root, "", "object_indices");
  for (std::size_t i = 0; i < idx.size(); ++i)
    e.object_indices.push_back(as_index(idx[i], at("object_indices", i)));
  e.heights_m = loose_numbers(root, "", "heights_m");
  if (e.heights_m.size() != e.object_indices.size())
    fail("heights_m", "length differs from object_indices");
  const Json& layers = array_field(root, "", "layers");
  for (std::size_t i = 0; i < layers.size(); ++i)
    e.layers.push_back(parse_layer(layers[i], at("layers", i)));
  const Json& excl = array_field(root, "", "excluded");
  for (std::size_t i = 0; i < excl.size(); ++i) {
    const std::string p = at("excluded", i);
    expect_object(excl[i], p);
    reject_unknown(excl[i], p, {"index", "reason"});
    e.excluded.push_back({as_index(require(excl[i], p, "index"), join(p, "index")),
                          string_field(excl[i], p, "reason")});
  }
  e.converged = bool_field(root, "", "converged");
  e.ill_posed = bool_field(root, "", "ill_posed");
  const Json& it = require(root, "", "iterations");
  if (!it.is_number_integer()) fail("iterations", "expected an integer");
  e.iterations = it.get<int>();
  return r;
}

}  // namespace gscale
