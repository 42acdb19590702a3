#include "phystrack/run_log.hpp"

#include <array>
#include <sstream>

#include "phystrack/text.hpp"

namespace phystrack {

namespace {

constexpr std::string_view kCsvHeader =
    "t,ux,uy,uz,uyaw,gt_px,gt_py,gt_pz,gt_qw,gt_qx,gt_qy,gt_qz,obs_present,obs_px,obs_py,obs_pz,obs_qw,obs_qx,obs_"
    "qy,obs_qz";
constexpr std::size_t kColumns = 20;

void append_numbers(std::string& out, std::initializer_list<double> values, char sep) {
  bool first = true;
  for (double v : values) {
    if (!first) out += sep;
    out += format_double(v);
    first = false;
  }
}

void append_pose(std::string& out, const Pose& p) {
  const Vec3& t = p.position();
  const Quat& q = p.orientation();
  append_numbers(out, {t.x(), t.y(), t.z(), q.w(), q.x(), q.y(), q.z()}, ',');
}

std::vector<double> parse_numbers(std::string_view s, std::size_t expected, std::size_t line) {
  std::vector<double> out;
  for (std::string_view tok : split_ws(s)) {
    try {
      out.push_back(parse_double(tok));
    } catch (const std::invalid_argument& e) {
      throw RunLogParseError(line, e.what());
    }
  }
  if (out.size() != expected) {
    throw RunLogParseError(line, "expected " + std::to_string(expected) + " numbers");
  }
  return out;
}

Pose pose_from(const std::array<double, 7>& v, std::size_t line) {
  try {
    return Pose(Vec3(v[0], v[1], v[2]), Quat(v[3], v[4], v[5], v[6]));
  } catch (const std::invalid_argument& e) {
    throw RunLogParseError(line, e.what());
  }
}

}  // namespace

RunLogParseError::RunLogParseError(std::size_t line, const std::string& what)
    : std::runtime_error("run log line " + std::to_string(line) + ": " + what), line_(line) {}

std::string RunLog::serialize() const {
  std::string out;
  auto header = [&out](std::string_view key, const std::string& value) {
    out += "# ";
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  header("format", std::string(kRunLogFormat));
  header("scenario", scenario_name);
  header("scenario_hash", scenario_hash);
  header("seed", std::to_string(seed));
  header("frame_period", format_double(frame_period));
  {
    std::string v;
    append_numbers(v, {scene.object_half_extents.x(), scene.object_half_extents.y()}, ' ');
    header("object_half_extents", v);
  }
  header("object_height", format_double(scene.object_height));
  header("pusher_radius", format_double(scene.pusher_radius));
  header("gravity", format_double(scene.gravity));
  for (const Rect2& r : scene.obstacles) {
    std::string v;
    append_numbers(v, {r.center.x(), r.center.y(), r.half_extents.x(), r.half_extents.y(), r.yaw}, ' ');
    header("obstacle", v);
  }
  {
    std::string v;
    append_numbers(v, {pusher_start.x(), pusher_start.y(), pusher_start.z()}, ' ');
    header("pusher_start", v);
  }
  out += kCsvHeader;
  out += '\n';
  for (const RunRecord& r : records) {
    append_numbers(out, {r.time, r.control.x(), r.control.y(), r.control.z(), r.control_yaw}, ',');
    out += ',';
    append_pose(out, r.truth);
    if (r.observation) {
      out += ",1,";
      append_pose(out, *r.observation);
    } else {
      out += ",0,,,,,,,";
    }
    out += '\n';
  }
  return out;
}

RunLog RunLog::parse(std::string_view text) {
  RunLog log;
  log.scene.obstacles.clear();
  bool seen_format = false;
  bool seen_columns = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;

    if (line.front() == '#') {
      if (seen_columns) throw RunLogParseError(line_no, "header line after the column row");
      const std::string_view body = line.substr(1);
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) throw RunLogParseError(line_no, "header line without '='");
      const std::string_view key = trim(body.substr(0, eq));
      const std::string_view value = trim(body.substr(eq + 1));
      try {
        if (key == "format") {
          if (value != kRunLogFormat) throw RunLogParseError(line_no, "unsupported format '" + std::string(value) + "'");
          seen_format = true;
        } else if (key == "scenario") {
          log.scenario_name = std::string(value);
        } else if (key == "scenario_hash") {
          log.scenario_hash = std::string(value);
        } else if (key == "seed") {
          log.seed = static_cast<std::uint64_t>(parse_int(value));
        } else if (key == "frame_period") {
          log.frame_period = parse_double(value);
        } else if (key == "object_half_extents") {
          const auto v = parse_numbers(value, 2, line_no);
          log.scene.object_half_extents = Vec2(v[0], v[1]);
        } else if (key == "object_height") {
          log.scene.object_height = parse_double(value);
        } else if (key == "pusher_radius") {
          log.scene.pusher_radius = parse_double(value);
        } else if (key == "gravity") {
          log.scene.gravity = parse_double(value);
        } else if (key == "obstacle") {
          const auto v = parse_numbers(value, 5, line_no);
          log.scene.obstacles.push_back({Vec2(v[0], v[1]), Vec2(v[2], v[3]), v[4]});
        } else if (key == "pusher_start") {
          const auto v = parse_numbers(value, 3, line_no);
          log.pusher_start = Vec3(v[0], v[1], v[2]);
        } else {
          throw RunLogParseError(line_no, "unknown header key '" + std::string(key) + "'");
        }
      } catch (const std::invalid_argument& e) {
        throw RunLogParseError(line_no, e.what());
      }
      continue;
    }

    if (!seen_columns) {
      if (line != kCsvHeader) throw RunLogParseError(line_no, "unexpected column row");
      seen_columns = true;
      continue;
    }

    const auto cells = split(line, ',');
    if (cells.size() != kColumns) {
      throw RunLogParseError(line_no, "expected " + std::to_string(kColumns) + " columns, got " +
                                          std::to_string(cells.size()));
    }
    auto num = [&](std::size_t i) {
      try {
        return parse_double(cells[i]);
      } catch (const std::invalid_argument& e) {
        throw RunLogParseError(line_no, "column " + std::to_string(i + 1) + ": " + e.what());
      }
    };
    RunRecord r;
    r.time = num(0);
    r.control = Vec3(num(1), num(2), num(3));
    r.control_yaw = num(4);
    r.truth = pose_from({num(5), num(6), num(7), num(8), num(9), num(10), num(11)}, line_no);
    const std::string_view present = cells[12];
    if (present == "1") {
      r.observation = pose_from({num(13), num(14), num(15), num(16), num(17), num(18), num(19)}, line_no);
    } else if (present == "0") {
      for (std::size_t i = 13; i < kColumns; ++i) {
        if (!cells[i].empty()) throw RunLogParseError(line_no, "absent observation with non-empty pose columns");
      }
    } else {
      throw RunLogParseError(line_no, "obs_present must be 0 or 1");
    }
    if (!log.records.empty() && !(r.time > log.records.back().time)) {
      throw RunLogParseError(line_no, "timestamps must be strictly increasing");
    }
    log.records.push_back(std::move(r));
  }
  if (!seen_format) throw RunLogParseError(line_no, "missing '# format' header");
  if (!seen_columns) throw RunLogParseError(line_no, "missing column row");
  if (!(log.frame_period > 0.0)) throw RunLogParseError(line_no, "frame_period must be > 0");
  try {
    log.scene.validate();
  } catch (const std::invalid_argument& e) {
    throw RunLogParseError(line_no, e.what());
  }
  return log;
}

std::vector<Vec3> RunLog::pusher_positions() const {
  std::vector<Vec3> out;
  out.reserve(records.size());
  Vec3 p = pusher_start;
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (k > 0) p += records[k].control;
    out.push_back(p);
  }
  return out;
}

Control RunLog::control_between(const std::vector<Vec3>& pusher, std::size_t from, std::size_t to) const {
  Control c;
  c.pusher_start = pusher.at(from);
  c.displacement = pusher.at(to) - pusher.at(from);
  for (std::size_t k = from + 1; k <= to; ++k) c.yaw_delta += records[k].control_yaw;
  c.duration = static_cast<double>(to - from) * frame_period;
  return c;
}

}  // namespace phystrack
