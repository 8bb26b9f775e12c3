#include "pcls/config_io.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace pcls {

namespace {

Json vec_json(Vec2 v) { return Json::array({v.x, v.y}); }

Json circle_json(const Circle& c) { return {{"center", vec_json(c.center)}, {"radius", c.radius}}; }

Json shape_json(const Shape& shape) {
  return std::visit(
      [](const auto& s) -> Json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Circle>) {
          Json j = {{"type", "circle"}};
          j.update(circle_json(s));
          return j;
        } else if constexpr (std::is_same_v<T, Ellipse>) {
          return {{"type", "ellipse"},
                  {"center", vec_json(s.center)},
                  {"semi_axes", vec_json(s.semi_axes)},
                  {"rotation", s.rotation}};
        } else {
          return {{"type", "disc_difference"}, {"outer", circle_json(s.outer)}, {"inner", circle_json(s.inner)}};
        }
      },
      shape);
}

std::string join(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Reads one JSON object, remembering which keys were consumed so that the
// leftovers can be reported as unknown.
class Section {
 public:
  Section(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError("'" + label() + "' must be an object");
  }

  template <class T>
  void read(const std::string& key, T& target) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    target = convert<T>(*it, join(path_, key));
  }

  const Json* child(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) throw ConfigError("unknown key '" + join(path_, it.key()) + "'");
  }

  template <class T>
  static T convert(const Json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError("'" + where + "' must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("'" + where + "' must be a number");
      return v.get<double>();
    } else if constexpr (std::is_same_v<T, Vec2>) {
      if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
        throw ConfigError("'" + where + "' must be a pair of numbers");
      return Vec2{v[0].get<double>(), v[1].get<double>()};
    } else {
      static_assert(std::is_integral_v<T>);
      if (!v.is_number_integer()) throw ConfigError("'" + where + "' must be an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<long long>() < 0) throw ConfigError("'" + where + "' must be non-negative");
        return static_cast<T>(v.get<long long>());
      } else {
        const long long x = v.get<long long>();
        if (x < std::numeric_limits<T>::min() || x > std::numeric_limits<T>::max())
          throw ConfigError("'" + where + "' is out of range");
        return static_cast<T>(x);
      }
    }
  }

  std::string label() const { return path_.empty() ? "<root>" : path_; }
  const std::string& path() const { return path_; }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

Circle read_circle(const Json& j, const std::string& path) {
  Section s(j, path);
  Circle c;
  s.read("center", c.center);
  s.read("radius", c.radius);
  s.finish();
  return c;
}

Shape read_shape(const Json& j, const std::string& path) {
  Section s(j, path);
  std::string type;
  s.read("type", type);
  if (type == "circle") {
    Circle c;
    s.read("center", c.center);
    s.read("radius", c.radius);
    s.finish();
    return c;
  }
  if (type == "ellipse") {
    Ellipse e;
    s.read("center", e.center);
    s.read("semi_axes", e.semi_axes);
    s.read("rotation", e.rotation);
    s.finish();
    return e;
  }
  if (type == "disc_difference") {
    DiscDifference d;
    if (const Json* o = s.child("outer")) d.outer = read_circle(*o, join(path, "outer"));
    if (const Json* i = s.child("inner")) d.inner = read_circle(*i, join(path, "inner"));
    s.finish();
    return d;
  }
  throw ConfigError("'" + join(path, "type") + "' must be circle, ellipse or disc_difference, got '" + type + "'");
}

// Every leaf path of `doc`, for bare-name override lookup.
void collect_leaves(const Json& doc, const std::string& path, std::vector<std::string>& out) {
  if (doc.is_object() && !doc.empty()) {
    for (auto it = doc.begin(); it != doc.end(); ++it) collect_leaves(it.value(), join(path, it.key()), out);
  } else if (doc.is_array() && !doc.empty() && (doc[0].is_object() || doc[0].is_array())) {
    for (std::size_t k = 0; k < doc.size(); ++k) collect_leaves(doc[k], join(path, std::to_string(k)), out);
  } else {
    out.push_back(path);
  }
}

std::string last_segment(const std::string& path) {
  const auto dot = path.rfind('.');
  return dot == std::string::npos ? path : path.substr(dot + 1);
}

}  // namespace

Json config_to_json(const RunConfig& cfg) {
  Json j;
  j["grid"] = {{"dim", cfg.dim}};
  j["material"] = {{"a1", cfg.material.a1},
                   {"b1", cfg.material.b1},
                   {"c1", cfg.material.c1},
                   {"d1", cfg.material.d1},
                   {"v_air", cfg.material.v_air}};
  j["source"] = {{"kind", to_string(cfg.source.kind)}, {"J1", cfg.source.J1}};
  if (cfg.phantom) {
    Json shapes = Json::array();
    for (const auto& s : cfg.phantom->shapes) shapes.push_back(shape_json(s));
    j["phantom"] = {{"shapes", shapes}};
  } else {
    j["phantom"] = nullptr;
  }
  j["input"] = {{"measurement", cfg.measurement_path}, {"phi_exact", cfg.phi_exact_path}};
  j["generation"] = {{"refine", cfg.generation_refine}};
  const auto& p = cfg.pcls;
  j["pcls"] = {{"sigma", p.sigma},
               {"alpha", p.alpha},
               {"osci_max", p.osci_max},
               {"max_outer_iters", p.max_outer_iters},
               {"phi0",
                {{"kind", p.phi0.kind == InitialGuess::Kind::constant ? "constant" : "random"},
                 {"value", p.phi0.value},
                 {"seed", p.phi0.seed}}}};
  j["newton"] = {{"rel_residual_tol", cfg.newton.rel_residual_tol},
                 {"max_iters", cfg.newton.max_iters},
                 {"damping_min", cfg.newton.damping_min}};
  j["noise"] = {{"level", cfg.noise.level}, {"seed", cfg.noise.seed}};
  const auto& o = cfg.output;
  j["output"] = {{"dir", o.dir},         {"measurement", o.measurement}, {"phi_exact", o.phi_exact},
                 {"phi", o.phi},         {"report", o.report},           {"log", o.log}};
  return j;
}

RunConfig config_from_json(const Json& doc) {
  RunConfig cfg;
  Section root(doc, "");

  if (const Json* g = root.child("grid")) {
    Section s(*g, "grid");
    s.read("dim", cfg.dim);
    s.finish();
  }
  if (const Json* m = root.child("material")) {
    Section s(*m, "material");
    s.read("a1", cfg.material.a1);
    s.read("b1", cfg.material.b1);
    s.read("c1", cfg.material.c1);
    s.read("d1", cfg.material.d1);
    s.read("v_air", cfg.material.v_air);
    s.finish();
  }
  if (const Json* src = root.child("source")) {
    Section s(*src, "source");
    std::string kind = to_string(cfg.source.kind);
    s.read("kind", kind);
    try {
      cfg.source.kind = source_kind_from_string(kind);
    } catch (const std::invalid_argument&) {
      throw ConfigError("'source.kind' must be strip_coils or uniform, got '" + kind + "'");
    }
    s.read("J1", cfg.source.J1);
    s.finish();
  }
  if (const Json* ph = root.child("phantom"); ph && !ph->is_null()) {
    Section s(*ph, "phantom");
    Phantom phantom;
    if (const Json* shapes = s.child("shapes")) {
      if (!shapes->is_array()) throw ConfigError("'phantom.shapes' must be an array");
      for (std::size_t k = 0; k < shapes->size(); ++k)
        phantom.shapes.push_back(read_shape((*shapes)[k], "phantom.shapes." + std::to_string(k)));
    }
    s.finish();
    cfg.phantom = std::move(phantom);
  }
  if (const Json* in = root.child("input")) {
    Section s(*in, "input");
    s.read("measurement", cfg.measurement_path);
    s.read("phi_exact", cfg.phi_exact_path);
    s.finish();
  }
  if (const Json* gen = root.child("generation")) {
    Section s(*gen, "generation");
    s.read("refine", cfg.generation_refine);
    s.finish();
  }
  if (const Json* pc = root.child("pcls")) {
    Section s(*pc, "pcls");
    s.read("sigma", cfg.pcls.sigma);
    s.read("alpha", cfg.pcls.alpha);
    s.read("osci_max", cfg.pcls.osci_max);
    s.read("max_outer_iters", cfg.pcls.max_outer_iters);
    if (const Json* p0 = s.child("phi0")) {
      Section g(*p0, "pcls.phi0");
      std::string kind = cfg.pcls.phi0.kind == InitialGuess::Kind::constant ? "constant" : "random";
      g.read("kind", kind);
      if (kind == "constant")
        cfg.pcls.phi0.kind = InitialGuess::Kind::constant;
      else if (kind == "random")
        cfg.pcls.phi0.kind = InitialGuess::Kind::random;
      else
        throw ConfigError("'pcls.phi0.kind' must be constant or random, got '" + kind + "'");
      g.read("value", cfg.pcls.phi0.value);
      g.read("seed", cfg.pcls.phi0.seed);
      g.finish();
    }
    s.finish();
  }
  if (const Json* nw = root.child("newton")) {
    Section s(*nw, "newton");
    s.read("rel_residual_tol", cfg.newton.rel_residual_tol);
    s.read("max_iters", cfg.newton.max_iters);
    s.read("damping_min", cfg.newton.damping_min);
    s.finish();
  }
  if (const Json* nz = root.child("noise")) {
    Section s(*nz, "noise");
    s.read("level", cfg.noise.level);
    s.read("seed", cfg.noise.seed);
    s.finish();
  }
  if (const Json* out = root.child("output")) {
    Section s(*out, "output");
    s.read("dir", cfg.output.dir);
    s.read("measurement", cfg.output.measurement);
    s.read("phi_exact", cfg.output.phi_exact);
    s.read("phi", cfg.output.phi);
    s.read("report", cfg.output.report);
    s.read("log", cfg.output.log);
    s.finish();
  }
  root.finish();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config '" + path.string() + "'");
  Json doc;
  try {
    doc = Json::parse(is);
  } catch (const Json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

void save_config(const std::filesystem::path& path, const RunConfig& cfg) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os << config_to_json(cfg).dump(2) << '\n';
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must have the form key=value");
  std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  if (key.find('.') == std::string::npos) {
    std::vector<std::string> leaves;
    collect_leaves(doc, "", leaves);
    std::vector<std::string> hits;
    for (const auto& leaf : leaves)
      if (last_segment(leaf) == key) hits.push_back(leaf);
    if (hits.empty() && doc.contains(key)) hits.push_back(key);
    if (hits.empty()) throw ConfigError("unknown key '" + key + "'");
    if (hits.size() > 1) {
      std::string msg = "ambiguous key '" + key + "' (candidates:";
      for (const auto& h : hits) msg += " " + h;
      throw ConfigError(msg + ")");
    }
    key = hits.front();
  }

  // Walk to the parent of the final segment; only existing keys may be set.
  Json* node = &doc;
  std::stringstream parts(key);
  std::string segment;
  std::vector<std::string> segments;
  while (std::getline(parts, segment, '.')) segments.push_back(segment);
  for (std::size_t k = 0; k < segments.size(); ++k) {
    const std::string& seg = segments[k];
    Json* next = nullptr;
    if (node->is_object() && node->contains(seg)) {
      next = &(*node)[seg];
    } else if (node->is_array() && !seg.empty() && seg.find_first_not_of("0123456789") == std::string::npos &&
               std::stoul(seg) < node->size()) {
      next = &(*node)[std::stoul(seg)];
    }
    if (!next) throw ConfigError("unknown key '" + key + "'");
    node = next;
  }

  Json value;
  try {
    value = Json::parse(text);
  } catch (const Json::parse_error&) {
    value = text;
  }
  *node = value;
}

RunConfig resolve_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  Json doc = config_to_json(path.empty() ? RunConfig{} : load_config(path));
  for (const auto& o : overrides) apply_override(doc, o);
  RunConfig cfg = config_from_json(doc);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

Json record_to_json(const IterationRecord& rec) {
  return {{"iteration", rec.iteration}, {"f1", rec.f1},
          {"f", rec.f},                 {"dt", rec.dt},
          {"osci", rec.osci},           {"n_at_bounds", rec.n_at_bounds},
          {"newton_iterations", rec.newton_iterations},
          {"phi_min", rec.phi_min},     {"phi_max", rec.phi_max}};
}

Json report_to_json(const ReconReport& report, const RunConfig& cfg) {
  Json j;
  j["iterations"] = report.iterations;
  j["stop_reason"] = to_string(report.stop_reason);
  j["osci"] = report.osci;
  if (report.mismatch_count) j["mismatch_count"] = *report.mismatch_count;
  j["wall_time_seconds"] = report.wall_time.count();
  j["n_nodes"] = report.final_phi.grid.n_nodes();
  j["f1_history"] = report.f1_history;
  Json records = Json::array();
  for (const auto& rec : report.records) records.push_back(record_to_json(rec));
  j["records"] = std::move(records);
  j["config"] = config_to_json(cfg);
  return j;
}

void write_report(const std::filesystem::path& path, const ReconReport& report, const RunConfig& cfg) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  os << report_to_json(report, cfg).dump(2) << '\n';
  if (!os) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace pcls
