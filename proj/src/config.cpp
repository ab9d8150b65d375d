#include "gscale/config.hpp"

#include <charconv>
#include <set>
#include <sstream>

#include <toml++/toml.hpp>

namespace gscale {

namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw InputError("config " + key + ": " + msg);
}

void reject_unknown(const toml::table& t, const std::string& prefix,
                    const std::set<std::string>& allowed) {
  for (const auto& [k, v] : t) {
    const std::string key(k.str());
    if (!allowed.count(key)) fail(prefix.empty() ? key : prefix + "." + key, "unknown key");
  }
}

const toml::table* section(const toml::table& root, const std::string& name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) fail(name, "expected a [" + name + "] table");
  return n->as_table();
}

void read(const toml::table& t, const std::string& prefix, const char* key, double& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if (!n->is_number()) fail(prefix + "." + key, "expected a number");
  out = n->value<double>().value();
}

void read(const toml::table& t, const std::string& prefix, const char* key, int& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if (!n->is_integer()) fail(prefix + "." + key, "expected an integer");
  out = static_cast<int>(n->value<std::int64_t>().value());
}

void read(const toml::table& t, const std::string& prefix, const char* key, bool& out) {
  const toml::node* n = t.get(key);
  if (!n) return;
  if (!n->is_boolean()) fail(prefix + "." + key, "expected true or false");
  out = n->value<bool>().value();
}

std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".ei") == std::string::npos) s += ".0";
  return s;
}

Category category_of(const std::string& name) {
  if (name == "person") return Category::Person;
  if (name == "car") return Category::Car;
  return Category::Other;
}

}  // namespace

bool is_method(std::string_view name) {
  for (auto m : kMethods)
    if (m == name) return true;
  return false;
}

std::string method_list() {
  std::string out;
  for (auto m : kMethods) {
    if (!out.empty()) out += ", ";
    out += m;
  }
  return out;
}

ToolkitConfig parse_config(std::string_view text) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: malformed TOML at line " << e.source().begin.line << ": " << e.description();
    throw InputError(msg.str());
  }
  reject_unknown(root, "", {"method", "prior", "solver", "pgm", "filter", "overlay"});

  ToolkitConfig c;
  if (const toml::node* m = root.get("method")) {
    if (!m->is_string()) fail("method", "expected a string");
    c.method = m->value<std::string>().value();
    if (!is_method(c.method))
      fail("method", "unknown method '" + c.method + "' (valid: " + method_list() + ")");
  }

  if (const toml::table* priors = section(root, "prior")) {
    reject_unknown(*priors, "prior", {"person", "car", "other"});
    for (const auto& [k, v] : *priors) {
      const std::string name(k.str());
      const std::string prefix = "prior." + name;
      if (!v.is_table()) fail(prefix, "expected a table");
      const toml::table& t = *v.as_table();
      reject_unknown(t, prefix, {"mu", "sigma"});
      const Category cat = category_of(name);
      CategoryPrior p = c.priors.has(cat) ? c.priors.get(cat) : CategoryPrior{cat, 0.0, 0.0};
      if (!c.priors.has(cat) && !(t.contains("mu") && t.contains("sigma")))
        fail(prefix, "mu and sigma are both required for a category without a default");
      read(t, prefix, "mu", p.mu_m);
      read(t, prefix, "sigma", p.sigma_m);
      if (!(p.mu_m > 0)) fail(prefix + ".mu", "must be positive");
      if (!(p.sigma_m > 0)) fail(prefix + ".sigma", "must be positive");
      c.priors.set(p);
    }
  }

  if (const toml::table* s = section(root, "solver")) {
    reject_unknown(*s, "solver",
                   {"num_layers", "alpha_reprojection", "alpha_prior", "damping",
                    "max_backtracks", "tolerance", "prior_mode", "cam_height_min",
                    "cam_height_max", "height_min", "height_max", "use_upright_ratio",
                    "head_extension"});
    auto& r = c.solver;
    read(*s, "solver", "num_layers", r.num_layers);
    read(*s, "solver", "alpha_reprojection", r.alpha_reprojection);
    read(*s, "solver", "alpha_prior", r.alpha_prior);
    read(*s, "solver", "damping", r.damping);
    read(*s, "solver", "max_backtracks", r.max_backtracks);
    read(*s, "solver", "tolerance", r.tolerance);
    read(*s, "solver", "cam_height_min", r.cam_height_min);
    read(*s, "solver", "cam_height_max", r.cam_height_max);
    read(*s, "solver", "height_min", r.height_min);
    read(*s, "solver", "height_max", r.height_max);
    read(*s, "solver", "use_upright_ratio", r.use_upright_ratio);
    read(*s, "solver", "head_extension", r.head_extension);
    if (const toml::node* m = s->get("prior_mode")) {
      const auto mode = m->value<std::string>();
      if (mode == "density") r.prior_mode = PriorMode::Density;
      else if (mode == "log_density") r.prior_mode = PriorMode::LogDensity;
      else fail("solver.prior_mode", "expected \"density\" or \"log_density\"");
    }
    try {
      validate(r);
    } catch (const std::invalid_argument& e) {
      fail("solver", e.what());
    }
  }

  if (const toml::table* p = section(root, "pgm")) {
    reject_unknown(*p, "pgm",
                   {"cam_height_mu", "cam_height_sigma", "max_iterations", "tolerance",
                    "cam_height_min", "cam_height_max"});
    read(*p, "pgm", "cam_height_mu", c.pgm.cam_height_mu);
    read(*p, "pgm", "cam_height_sigma", c.pgm.cam_height_sigma);
    read(*p, "pgm", "max_iterations", c.pgm.max_iterations);
    read(*p, "pgm", "tolerance", c.pgm.tolerance);
    read(*p, "pgm", "cam_height_min", c.pgm.cam_height_min);
    read(*p, "pgm", "cam_height_max", c.pgm.cam_height_max);
    try {
      validate(c.pgm);
    } catch (const std::invalid_argument& e) {
      fail("pgm", e.what());
    }
  }

  if (const toml::table* f = section(root, "filter")) {
    reject_unknown(*f, "filter",
                   {"person_aspect_min", "person_aspect_max", "box_height_min", "box_height_max",
                    "require_amodal"});
    read(*f, "filter", "person_aspect_min", c.filter.person_aspect_min);
    read(*f, "filter", "person_aspect_max", c.filter.person_aspect_max);
    read(*f, "filter", "box_height_min", c.filter.box_height_min);
    read(*f, "filter", "box_height_max", c.filter.box_height_max);
    read(*f, "filter", "require_amodal", c.filter.require_amodal);
  }

  if (const toml::table* o = section(root, "overlay")) {
    reject_unknown(*o, "overlay", {"reference_height_m", "reference_width_m"});
    read(*o, "overlay", "reference_height_m", c.overlay.reference_height_m);
    read(*o, "overlay", "reference_width_m", c.overlay.reference_width_m);
    if (!(c.overlay.reference_height_m > 0)) fail("overlay.reference_height_m", "must be positive");
    if (!(c.overlay.reference_width_m > 0)) fail("overlay.reference_width_m", "must be positive");
  }
  return c;
}

std::string dump_config(const ToolkitConfig& c) {
  std::ostringstream out;
  out << "method = \"" << c.method << "\"\n";
  for (Category cat : {Category::Person, Category::Car, Category::Other}) {
    if (!c.priors.has(cat)) continue;
    const auto& p = c.priors.get(cat);
    out << "\n[prior." << to_string(cat) << "]\n"
        << "mu = " << num(p.mu_m) << "\n"
        << "sigma = " << num(p.sigma_m) << "\n";
  }
  const auto& s = c.solver;
  out << "\n[solver]\n"
      << "num_layers = " << s.num_layers << "\n"
      << "alpha_reprojection = " << num(s.alpha_reprojection) << "\n"
      << "alpha_prior = " << num(s.alpha_prior) << "\n"
      << "damping = " << num(s.damping) << "\n"
      << "max_backtracks = " << s.max_backtracks << "\n"
      << "tolerance = " << num(s.tolerance) << "\n"
      << "prior_mode = \"" << to_string(s.prior_mode) << "\"\n"
      << "cam_height_min = " << num(s.cam_height_min) << "\n"
      << "cam_height_max = " << num(s.cam_height_max) << "\n"
      << "height_min = " << num(s.height_min) << "\n"
      << "height_max = " << num(s.height_max) << "\n"
      << "use_upright_ratio = " << (s.use_upright_ratio ? "true" : "false") << "\n"
      << "head_extension = " << num(s.head_extension) << "\n";
  out << "\n[pgm]\n"
      << "cam_height_mu = " << num(c.pgm.cam_height_mu) << "\n"
      << "cam_height_sigma = " << num(c.pgm.cam_height_sigma) << "\n"
      << "max_iterations = " << c.pgm.max_iterations << "\n"
      << "tolerance = " << num(c.pgm.tolerance) << "\n"
      << "cam_height_min = " << num(c.pgm.cam_height_min) << "\n"
      << "cam_height_max = " << num(c.pgm.cam_height_max) << "\n";
  out << "\n[filter]\n"
      << "person_aspect_min = " << num(c.filter.person_aspect_min) << "\n"
      << "person_aspect_max = " << num(c.filter.person_aspect_max) << "\n"
      << "box_height_min = " << num(c.filter.box_height_min) << "\n"
      << "box_height_max = " << num(c.filter.box_height_max) << "\n"
      << "require_amodal = " << (c.filter.require_amodal ? "true" : "false") << "\n";
  out << "\n[overlay]\n"
      << "reference_height_m = " << num(c.overlay.reference_height_m) << "\n"
      << "reference_width_m = " << num(c.overlay.reference_width_m) << "\n";
  return out.str();
}

std::string config_hash(const ToolkitConfig& c) { return fnv1a64_tag(dump_config(c)); }

}  // namespace gscale
