#pragma once

#include "common/vec2.hpp"
#include "terrain/terrain.hpp"

namespace wtt::repulse {

// The first prototype's steering model: raised cells push self-propelled
// particles away, with no flow field behind them.
struct RepulseParams {
  double base_speed = 0.5;     // cells per step, eastward drift
  double force_gain = 0.0005;  // cells/step per mm of height
  double falloff_radius = 4.0; // cells
  double max_force = 0.4;      // cells/step

  void validate() const;
};

// (1 - d/R)^2 inside R, zero outside.
double kernel(double d, double radius);

Vec2 repulsive_force_at(Vec2 pos, const terrain::HeightField& h, const RepulseParams& p);

struct Walker {
  Vec2 pos;
  Vec2 vel;  // cells per step
};

// One step of length dt (in steps). The velocity relaxes toward drift + force
// at a rate giving the 0.9 / 0.1 blend per unit step, then its speed is
// clamped to [0.5, 2] x base_speed. Edge exits are left to the caller.
Walker step_particle_repulsive(Walker w, const terrain::HeightField& h, const RepulseParams& p, double dt = 1.0);

// Velocity a particle held at pos settles to. Time-invariant for a fixed field.
Vec2 field_velocity(Vec2 pos, const terrain::HeightField& h, const RepulseParams& p);

}  // namespace wtt::repulse
