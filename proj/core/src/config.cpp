#include "phystrack/config.hpp"

#include <functional>
#include <map>

#include "phystrack/scenario.hpp"
#include "phystrack/text.hpp"

namespace phystrack {

namespace {

std::string join_numbers(std::initializer_list<double> values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_double(v);
  }
  return out;
}

std::vector<double> numbers(const IniEntry& e, std::size_t expected) {
  std::vector<double> out;
  for (std::string_view tok : split_ws(e.value)) {
    try {
      out.push_back(parse_double(tok));
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(e.line, "key '" + e.key + "': " + ex.what());
    }
  }
  if (out.size() != expected) {
    throw ConfigError(e.line, "key '" + e.key + "' expects " + std::to_string(expected) + " number(s)");
  }
  return out;
}

double number(const IniEntry& e) { return numbers(e, 1)[0]; }

long long integer(const IniEntry& e) {
  try {
    return parse_int(e.value);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(e.line, "key '" + e.key + "': " + ex.what());
  }
}

NoiseSpec noise(const IniEntry& e) {
  const auto v = numbers(e, 2);
  return {v[0], v[1]};
}

GaussianPrior prior(const IniEntry& e) {
  const auto v = numbers(e, 2);
  return {v[0], v[1]};
}

using Handlers = std::map<std::string, std::function<void(const IniEntry&)>, std::less<>>;

void dispatch(const IniDocument& doc, std::string_view section, const Handlers& handlers) {
  const IniSection* s = doc.find(section);
  if (s == nullptr) return;
  for (const IniEntry& e : s->entries) {
    const auto it = handlers.find(e.key);
    if (it == handlers.end()) {
      throw ConfigError(e.line, "unknown key '" + e.key + "' in [" + std::string(section) + "]");
    }
    it->second(e);
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& what) : std::runtime_error("malformed config: " + what) {}
ConfigError::ConfigError(std::size_t line, const std::string& what)
    : std::runtime_error("malformed config: line " + std::to_string(line) + ": " + what) {}

IniDocument IniDocument::parse(std::string_view text) {
  IniDocument doc;
  IniSection* current = nullptr;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t eol = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) throw ConfigError(line_no, "bad section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (doc.find(name) != nullptr) throw ConfigError(line_no, "duplicate section [" + std::string(name) + "]");
      doc.sections_.push_back({std::string(name), {}, line_no});
      current = &doc.sections_.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    if (current == nullptr) throw ConfigError(line_no, "key outside of any [section]");
    const std::string_view key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    current->entries.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
  }
  return doc;
}

std::string IniDocument::format() const {
  std::string out;
  for (const IniSection& s : sections_) {
    if (!out.empty()) out += '\n';
    out += '[' + s.name + "]\n";
    for (const IniEntry& e : s.entries) out += e.key + " = " + e.value + '\n';
  }
  return out;
}

IniSection& IniDocument::section(std::string_view name) {
  for (IniSection& s : sections_) {
    if (s.name == name) return s;
  }
  sections_.push_back({std::string(name), {}, 0});
  return sections_.back();
}

const IniSection* IniDocument::find(std::string_view name) const {
  for (const IniSection& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

void IniDocument::add(std::string_view section_name, std::string_view key, std::string value) {
  section(section_name).entries.push_back({std::string(key), std::move(value), 0});
}

void write_scenario(IniDocument& doc, const Scenario& s) {
  doc.add("scenario", "name", s.name);
  doc.add("scenario", "duration", format_double(s.duration));
  doc.add("scenario", "frame_period", format_double(s.observer.frame_period));
  doc.add("scenario", "occlusion", std::string(to_string(s.occlusion)));
  doc.add("scenario", "camera", join_numbers({s.camera.x(), s.camera.y()}));
  doc.add("scenario", "hand_radius", format_double(s.hand_radius));

  const SceneModel& sc = s.scene;
  doc.add("scene", "object_half_extents", join_numbers({sc.object_half_extents.x(), sc.object_half_extents.y()}));
  doc.add("scene", "object_height", format_double(sc.object_height));
  doc.add("scene", "pusher_radius", format_double(sc.pusher_radius));
  doc.add("scene", "gravity", format_double(sc.gravity));
  for (const Rect2& r : sc.obstacles) {
    doc.add("scene", "obstacle", join_numbers({r.center.x(), r.center.y(), r.half_extents.x(), r.half_extents.y(), r.yaw}));
  }

  const Vec3& p = s.initial_object.position();
  const Quat& q = s.initial_object.orientation();
  doc.add("object", "position", join_numbers({p.x(), p.y(), p.z()}));
  doc.add("object", "orientation", join_numbers({q.w(), q.x(), q.y(), q.z()}));

  doc.add("true_params", "contact_friction", format_double(s.true_params.contact_friction()));
  doc.add("true_params", "support_friction", format_double(s.true_params.support_friction()));
  doc.add("true_params", "restitution", format_double(s.true_params.restitution()));
  doc.add("true_params", "mass", format_double(s.true_params.mass()));

  doc.add("script", "pusher_start", join_numbers({s.pusher_start.x(), s.pusher_start.y(), s.pusher_start.z()}));
  for (const PushSegment& seg : s.script) {
    doc.add("script", "segment", join_numbers({seg.velocity.x(), seg.velocity.y(), seg.duration}));
  }
  doc.section("script");

  const ObserverSpec& o = s.observer;
  doc.add("observer", "noise", join_numbers({o.noise.sigma_pos, o.noise.sigma_rot}));
  doc.add("observer", "outlier_rate", format_double(o.outlier_rate));
  doc.add("observer", "outlier_magnitude", join_numbers({o.outlier_magnitude.sigma_pos, o.outlier_magnitude.sigma_rot}));
  doc.add("observer", "outlier_margin", format_double(o.outlier_margin));
  for (const TimeWindow& w : o.occlusion_windows) doc.add("observer", "window", join_numbers({w.start, w.end}));
}

Scenario read_scenario(const IniDocument& doc, Scenario base) {
  Scenario s = std::move(base);
  dispatch(doc, "scenario",
           {{"name", [&](const IniEntry& e) { s.name = e.value; }},
            {"duration", [&](const IniEntry& e) { s.duration = number(e); }},
            {"frame_period", [&](const IniEntry& e) { s.observer.frame_period = number(e); }},
            {"occlusion",
             [&](const IniEntry& e) {
               try {
                 s.occlusion = occlusion_model_from_string(e.value);
               } catch (const std::invalid_argument& ex) {
                 throw ConfigError(e.line, ex.what());
               }
             }},
            {"camera",
             [&](const IniEntry& e) {
               const auto v = numbers(e, 2);
               s.camera = Vec2(v[0], v[1]);
             }},
            {"hand_radius", [&](const IniEntry& e) { s.hand_radius = number(e); }}});

  bool obstacles_reset = false;
  dispatch(doc, "scene",
           {{"object_half_extents",
             [&](const IniEntry& e) {
               const auto v = numbers(e, 2);
               s.scene.object_half_extents = Vec2(v[0], v[1]);
             }},
            {"object_height", [&](const IniEntry& e) { s.scene.object_height = number(e); }},
            {"pusher_radius", [&](const IniEntry& e) { s.scene.pusher_radius = number(e); }},
            {"gravity", [&](const IniEntry& e) { s.scene.gravity = number(e); }},
            {"obstacle", [&](const IniEntry& e) {
               if (!obstacles_reset) s.scene.obstacles.clear();
               obstacles_reset = true;
               const auto v = numbers(e, 5);
               s.scene.obstacles.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3]), v[4]});
             }}});
  // A [scene] section without obstacle lines means an uncluttered table.
  if (doc.find("scene") != nullptr && !obstacles_reset) s.scene.obstacles.clear();

  dispatch(doc, "object",
           {{"position",
             [&](const IniEntry& e) {
               const auto v = numbers(e, 3);
               s.initial_object.set_position(Vec3(v[0], v[1], v[2]));
             }},
            {"orientation", [&](const IniEntry& e) {
               const auto v = numbers(e, 4);
               try {
                 s.initial_object.set_orientation(Quat(v[0], v[1], v[2], v[3]));
               } catch (const std::invalid_argument& ex) {
                 throw ConfigError(e.line, ex.what());
               }
             }}});

  double cf = s.true_params.contact_friction(), sf = s.true_params.support_friction();
  double re = s.true_params.restitution(), ma = s.true_params.mass();
  dispatch(doc, "true_params",
           {{"contact_friction", [&](const IniEntry& e) { cf = number(e); }},
            {"support_friction", [&](const IniEntry& e) { sf = number(e); }},
            {"restitution", [&](const IniEntry& e) { re = number(e); }},
            {"mass", [&](const IniEntry& e) { ma = number(e); }}});
  s.true_params = PhysicsParams(cf, sf, re, ma);

  if (doc.find("script") != nullptr) s.script.clear();
  dispatch(doc, "script",
           {{"pusher_start",
             [&](const IniEntry& e) {
               const auto v = numbers(e, 3);
               s.pusher_start = Vec3(v[0], v[1], v[2]);
             }},
            {"segment", [&](const IniEntry& e) {
               const auto v = numbers(e, 3);
               s.script.push_back({Vec2(v[0], v[1]), v[2]});
             }}});

  bool windows_reset = false;
  dispatch(doc, "observer",
           {{"noise", [&](const IniEntry& e) { s.observer.noise = noise(e); }},
            {"outlier_rate", [&](const IniEntry& e) { s.observer.outlier_rate = number(e); }},
            {"outlier_magnitude", [&](const IniEntry& e) { s.observer.outlier_magnitude = noise(e); }},
            {"outlier_margin", [&](const IniEntry& e) { s.observer.outlier_margin = number(e); }},
            {"window", [&](const IniEntry& e) {
               if (!windows_reset) s.observer.occlusion_windows.clear();
               windows_reset = true;
               const auto v = numbers(e, 2);
               s.observer.occlusion_windows.push_back({v[0], v[1]});
             }}});
  if (doc.find("observer") != nullptr && !windows_reset) s.observer.occlusion_windows.clear();

  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

void write_filter_config(IniDocument& doc, const FilterConfig& c) {
  doc.add("pbpf", "particles", std::to_string(c.particles));
  doc.add("pbpf", "dt", format_double(c.dt));
  doc.add("pbpf", "substep", format_double(c.substep));
  doc.add("pbpf", "motion_noise", join_numbers({c.motion_noise.sigma_pos, c.motion_noise.sigma_rot}));
  doc.add("pbpf", "obs_noise", join_numbers({c.obs_noise.sigma_pos, c.obs_noise.sigma_rot}));
  const Vec3& s = c.init_noise.sigma_pos;
  doc.add("pbpf", "init_pos_std", join_numbers({s.x(), s.y(), s.z()}));
  doc.add("pbpf", "init_rot_std", format_double(c.init_noise.sigma_rot));
  const ParamPrior& p = c.param_prior;
  doc.add("pbpf", "contact_friction", join_numbers({p.contact_friction.mean, p.contact_friction.std}));
  doc.add("pbpf", "support_friction", join_numbers({p.support_friction.mean, p.support_friction.std}));
  doc.add("pbpf", "restitution", join_numbers({p.restitution.mean, p.restitution.std}));
  doc.add("pbpf", "mass", join_numbers({p.mass.mean, p.mass.std}));
}

FilterConfig read_filter_config(const IniDocument& doc, FilterConfig base) {
  FilterConfig c = std::move(base);
  dispatch(doc, "pbpf",
           {{"particles", [&](const IniEntry& e) { c.particles = static_cast<std::size_t>(std::max(0LL, integer(e))); }},
            {"dt", [&](const IniEntry& e) { c.dt = number(e); }},
            {"substep", [&](const IniEntry& e) { c.substep = number(e); }},
            {"motion_noise", [&](const IniEntry& e) { c.motion_noise = noise(e); }},
            {"obs_noise", [&](const IniEntry& e) { c.obs_noise = noise(e); }},
            {"init_pos_std",
             [&](const IniEntry& e) {
               const auto v = numbers(e, 3);
               c.init_noise.sigma_pos = Vec3(v[0], v[1], v[2]);
             }},
            {"init_rot_std", [&](const IniEntry& e) { c.init_noise.sigma_rot = number(e); }},
            {"contact_friction", [&](const IniEntry& e) { c.param_prior.contact_friction = prior(e); }},
            {"support_friction", [&](const IniEntry& e) { c.param_prior.support_friction = prior(e); }},
            {"restitution", [&](const IniEntry& e) { c.param_prior.restitution = prior(e); }},
            {"mass", [&](const IniEntry& e) { c.param_prior.mass = prior(e); }}});
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[pbpf]: ") + e.what());
  }
  return c;
}

void write_cvpf_config(IniDocument& doc, const CvpfConfig& c) {
  doc.add("cvpf", "particles", std::to_string(c.particles));
  doc.add("cvpf", "dt", format_double(c.dt));
  doc.add("cvpf", "motion_noise", join_numbers({c.motion_noise.sigma_pos, c.motion_noise.sigma_rot}));
  doc.add("cvpf", "obs_noise", join_numbers({c.obs_noise.sigma_pos, c.obs_noise.sigma_rot}));
  const Vec3& s = c.init_noise.sigma_pos;
  doc.add("cvpf", "init_pos_std", join_numbers({s.x(), s.y(), s.z()}));
  doc.add("cvpf", "init_rot_std", format_double(c.init_noise.sigma_rot));
}

CvpfConfig read_cvpf_config(const IniDocument& doc, CvpfConfig base) {
  CvpfConfig c = std::move(base);
  dispatch(doc, "cvpf",
           {{"particles", [&](const IniEntry& e) { c.particles = static_cast<std::size_t>(std::max(0LL, integer(e))); }},
            {"dt", [&](const IniEntry& e) { c.dt = number(e); }},
            {"motion_noise", [&](const IniEntry& e) { c.motion_noise = noise(e); }},
            {"obs_noise", [&](const IniEntry& e) { c.obs_noise = noise(e); }},
            {"init_pos_std",
             [&](const IniEntry& e) {
               const auto v = numbers(e, 3);
               c.init_noise.sigma_pos = Vec3(v[0], v[1], v[2]);
             }},
            {"init_rot_std", [&](const IniEntry& e) { c.init_noise.sigma_rot = number(e); }}});
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[cvpf]: ") + e.what());
  }
  return c;
}

}  // namespace phystrack
