#include "harness/protocol.hpp"

#include <cmath>

#include "common/error.hpp"

namespace wtt::harness {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

int decode_char(char c) {
  if (c >= 'A' && c <= 'Z') return c - 'A';
  if (c >= 'a' && c <= 'z') return c - 'a' + 26;
  if (c >= '0' && c <= '9') return c - '0' + 52;
  if (c == '+') return 62;
  if (c == '/') return 63;
  return -1;
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json point(Vec2 p) { return json::array({p.x, p.y}); }

json polygon(const Polygon& poly) {
  json arr = json::array();
  for (const Vec2& p : poly) arr.push_back(point(p));
  return arr;
}

Vec2 read_point(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error(ErrorKind::Protocol, "expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

Polygon read_polygon(const json& j) {
  Polygon out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw Error(ErrorKind::Protocol, "expected a polygon");
  for (const auto& p : j) out.push_back(read_point(p));
  return out;
}

}  // namespace

std::string base64_encode(const std::uint8_t* data, std::size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  std::size_t k = 0;
  for (; k + 3 <= n; k += 3) {
    const std::uint32_t v = (data[k] << 16) | (data[k + 1] << 8) | data[k + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (n - k == 1) {
    const std::uint32_t v = data[k] << 16;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += "==";
  } else if (n - k == 2) {
    const std::uint32_t v = (data[k] << 16) | (data[k + 1] << 8);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) { return base64_encode(bytes.data(), bytes.size()); }

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  if (text.size() % 4 != 0) throw Error(ErrorKind::Protocol, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t k = 0; k < text.size(); k += 4) {
    int v[4];
    int pad = 0;
    for (int q = 0; q < 4; ++q) {
      const char c = text[k + q];
      if (c == '=' && k + 4 == text.size() && q >= 2) {
        v[q] = 0;
        ++pad;
        continue;
      }
      if (pad) throw Error(ErrorKind::Protocol, "misplaced base64 padding");
      v[q] = decode_char(c);
      if (v[q] < 0) throw Error(ErrorKind::Protocol, "invalid base64 character");
    }
    const std::uint32_t w = (v[0] << 18) | (v[1] << 12) | (v[2] << 6) | v[3];
    out.push_back(static_cast<std::uint8_t>(w >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(w >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(w));
  }
  return out;
}

std::vector<std::uint8_t> quantize_trail(const particles::TrailField& trail) {
  std::vector<std::uint8_t> out;
  out.reserve(trail.size());
  for (double v : trail.values()) out.push_back(quantize_intensity(v));
  return out;
}

FrameView frame_view(const Session& s) {
  FrameView v;
  v.nx = s.config().grid.nx;
  v.ny = s.config().grid.ny;
  v.trail = quantize_trail(s.trail());
  v.solid = s.solid();
  for (const auto& st : s.storms().storms()) v.storms.push_back({st.pos.x, st.pos.y, st.hit ? 1.0 : 0.0});
  const auto& m = s.mode();
  v.x_target = m.x_target;
  v.hit_radius = m.hit_radius;
  v.o_marker = m.o_marker;
  v.lgm_zone = m.lgm_zone;
  if (m.nonameland) v.nonameland = m.nonameland->outline;
  return v;
}

json frame_message(const Session& s, const std::vector<Event>& events) {
  json particles = json::array();
  for (const auto& p : s.tracers()) particles.push_back(json::array({round2(p.pos.x), round2(p.pos.y)}));
  json storms = json::array();
  for (const auto& st : s.storms().storms())
    storms.push_back(json::array({round2(st.pos.x), round2(st.pos.y), st.hit}));

  const auto& m = s.mode();
  json targets = {{"x_target", point(m.x_target)},
                  {"hit_radius", m.hit_radius},
                  {"o_marker", m.o_marker ? point(*m.o_marker) : json(nullptr)},
                  {"lgm_zone", m.lgm_zone.empty() ? json(nullptr) : polygon(m.lgm_zone)},
                  {"nonameland", m.nonameland ? polygon(m.nonameland->outline) : json(nullptr)},
                  {"coverage_success", m.coverage_success}};

  const MetricsRow r = s.metrics();
  json metrics = {{"mean_speed", number_or_null(r.mean_speed)},
                  {"max_divergence", number_or_null(r.max_divergence)},
                  {"storm_hits", r.storm_hits},
                  {"mean_storm_lat", number_or_null(r.mean_storm_lat)},
                  {"lgm_coverage", number_or_null(r.lgm_coverage)}};

  json ev = json::array();
  for (const auto& e : events) ev.push_back({{"step", e.step}, {"kind", e.kind}, {"detail", e.detail}});

  return {{"t", "frame"},
          {"step", s.step_count()},
          {"mode", std::string(modes::to_string(m.mode))},
          {"engine", std::string(to_string(s.engine()))},
          {"grid", {{"nx", s.config().grid.nx}, {"ny", s.config().grid.ny}}},
          {"particles", std::move(particles)},
          {"storms", std::move(storms)},
          {"trail_b64", base64_encode(quantize_trail(s.trail()))},
          {"obstacle_digest", hex64(s.obstacles().digest())},
          {"blocks", blocks_to_json(s.blocks())},
          {"targets", std::move(targets)},
          {"metrics", std::move(metrics)},
          {"events", std::move(ev)}};
}

json snapshot_document(const Session& s) {
  json doc = frame_message(s, {});
  std::vector<std::uint8_t> solid(s.solid().values().begin(), s.solid().values().end());
  doc["solid_b64"] = base64_encode(solid);
  return doc;
}

FrameView frame_view_from_snapshot(const json& snap) {
  try {
    FrameView v;
    v.nx = snap.at("grid").at("nx").get<int>();
    v.ny = snap.at("grid").at("ny").get<int>();
    if (v.nx < 1 || v.ny < 1) throw Error(ErrorKind::Protocol, "snapshot grid must be positive");
    const std::size_t cells = static_cast<std::size_t>(v.nx) * v.ny;
    v.trail = base64_decode(snap.at("trail_b64").get<std::string>());
    if (v.trail.size() != cells) throw Error(ErrorKind::Protocol, "snapshot trail does not match its grid");
    const auto solid = base64_decode(snap.at("solid_b64").get<std::string>());
    if (solid.size() != cells) throw Error(ErrorKind::Protocol, "snapshot solid mask does not match its grid");
    v.solid = SolidMask(v.nx, v.ny, 0);
    std::copy(solid.begin(), solid.end(), v.solid.data());
    for (const auto& st : snap.at("storms")) {
      if (!st.is_array() || st.size() != 3) throw Error(ErrorKind::Protocol, "storm entries are [x, y, hit]");
      v.storms.push_back({st[0].get<double>(), st[1].get<double>(), st[2].get<bool>() ? 1.0 : 0.0});
    }
    const json& t = snap.at("targets");
    v.x_target = read_point(t.at("x_target"));
    v.hit_radius = t.at("hit_radius").get<double>();
    if (!t.at("o_marker").is_null()) v.o_marker = read_point(t.at("o_marker"));
    v.lgm_zone = read_polygon(t.at("lgm_zone"));
    v.nonameland = read_polygon(t.at("nonameland"));
    return v;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Protocol, std::string("malformed snapshot: ") + e.what());
  }
}

json error_message(const std::string& msg) { return {{"t", "error"}, {"msg", msg}}; }

Command parse_command(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error&) {
    throw Error(ErrorKind::Protocol, "message is not valid JSON");
  }
  if (!j.is_object() || !j.contains("t") || !j["t"].is_string())
    throw Error(ErrorKind::Protocol, "message must be an object with a string field 't'");
  const std::string t = j["t"].get<std::string>();
  auto reject_extra = [&](std::initializer_list<const char*> allowed) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) throw Error(ErrorKind::Protocol, "unknown field '" + it.key() + "' in '" + t + "' message");
    }
  };
  if (t == "layout") {
    reject_extra({"t", "blocks"});
    if (!j.contains("blocks")) throw Error(ErrorKind::Protocol, "layout message needs 'blocks'");
    try {
      return LayoutCommand{parse_blocks(j["blocks"], "blocks")};
    } catch (const ConfigError& e) {
      throw Error(ErrorKind::Protocol, e.what());
    }
  }
  if (t == "mode") {
    reject_extra({"t", "mode", "seed"});
    if (!j.contains("mode") || !j["mode"].is_string()) throw Error(ErrorKind::Protocol, "mode message needs 'mode'");
    ModeCommand c{};
    try {
      c.mode = modes::mode_from_string(j["mode"].get<std::string>());
    } catch (const Error&) {
      throw Error(ErrorKind::Protocol, "mode must be 'ice_age' or 'moving_mountains'");
    }
    if (!j.contains("seed") || !j["seed"].is_number_integer() ||
        (!j["seed"].is_number_unsigned() && j["seed"].get<std::int64_t>() < 0))
      throw Error(ErrorKind::Protocol, "mode message needs a non-negative integer 'seed'");
    c.seed = j["seed"].get<std::uint64_t>();
    return c;
  }
  throw Error(ErrorKind::Protocol, "unknown message type '" + t + "'");
}

}  // namespace wtt::harness
