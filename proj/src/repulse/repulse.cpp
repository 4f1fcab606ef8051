#include "repulse/repulse.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace wtt::repulse {

void RepulseParams::validate() const {
  if (!(base_speed > 0.0)) throw ConfigError("repulse.base_speed", "must be > 0");
  if (!(falloff_radius >= 1.0)) throw ConfigError("repulse.falloff_radius", "must be >= 1");
  if (!(force_gain >= 0.0)) throw ConfigError("repulse.force_gain", "must be >= 0");
  if (!(max_force > 0.0)) throw ConfigError("repulse.max_force", "must be > 0");
}

double kernel(double d, double radius) {
  if (d >= radius) return 0.0;
  const double t = 1.0 - d / radius;
  return t * t;
}

Vec2 repulsive_force_at(Vec2 pos, const terrain::HeightField& h, const RepulseParams& p) {
  const double R = p.falloff_radius;
  const int i0 = std::max(0, static_cast<int>(std::floor(pos.x - 0.5 - R)));
  const int i1 = std::min(h.nx() - 1, static_cast<int>(std::ceil(pos.x - 0.5 + R)));
  const int j0 = std::max(0, static_cast<int>(std::floor(pos.y - 0.5 - R)));
  const int j1 = std::min(h.ny() - 1, static_cast<int>(std::ceil(pos.y - 0.5 + R)));
  Vec2 f{};
  for (int j = j0; j <= j1; ++j)
    for (int i = i0; i <= i1; ++i) {
      const double height = h(i, j);
      if (height <= 0.0) continue;
      const Vec2 d = pos - Vec2{i + 0.5, j + 0.5};
      const double r = norm(d);
      if (r <= 0.0 || r >= R) continue;
      f += d * (p.force_gain * height * kernel(r, R) / r);
    }
  const double m = norm(f);
  if (m > p.max_force) f *= p.max_force / m;
  return f;
}

namespace {

Vec2 clamp_speed(Vec2 v, double base) {
  const double s = norm(v);
  if (s == 0.0) return {0.5 * base, 0.0};
  const double c = std::clamp(s, 0.5 * base, 2.0 * base);
  return c == s ? v : v * (c / s);
}

}  // namespace

Walker step_particle_repulsive(Walker w, const terrain::HeightField& h, const RepulseParams& p, double dt) {
  const Vec2 target = Vec2{p.base_speed, 0.0} + repulsive_force_at(w.pos, h, p);
  const double a = dt == 1.0 ? 0.1 : 1.0 - std::pow(0.9, dt);
  w.vel = clamp_speed(w.vel + a * (target - w.vel), p.base_speed);
  w.pos += w.vel * dt;
  return w;
}

Vec2 field_velocity(Vec2 pos, const terrain::HeightField& h, const RepulseParams& p) {
  return clamp_speed(Vec2{p.base_speed, 0.0} + repulsive_force_at(pos, h, p), p.base_speed);
}

}  // namespace wtt::repulse
