#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "terrain/terrain.hpp"

using namespace wtt;
using namespace wtt::terrain;

namespace {

DepthFrame uniform_frame(int w, int h, std::uint16_t d) {
  return DepthFrame{w, h, std::vector<std::uint16_t>(static_cast<std::size_t>(w) * h, d)};
}

// Frame pixel at grid cell (i, j); frames are stored north row first.
std::uint16_t& px(DepthFrame& f, int i, int j) { return f.values[static_cast<std::size_t>(f.height - 1 - j) * f.width + i]; }

// Sort the clipped window and take element n/2.
Field2D<double> brute_median(const Field2D<double>& in, int r) {
  Field2D<double> out(in.nx(), in.ny());
  for (int j = 0; j < in.ny(); ++j)
    for (int i = 0; i < in.nx(); ++i) {
      std::vector<double> w;
      for (int dj = -r; dj <= r; ++dj)
        for (int di = -r; di <= r; ++di)
          if (in.in_bounds(i + di, j + dj)) w.push_back(in(i + di, j + dj));
      std::sort(w.begin(), w.end());
      out(i, j) = w[w.size() / 2];
    }
  return out;
}

ReliefClass piecewise(double h, double lo, double hi, double ice) {
  if (h < lo) return ReliefClass::Empty;
  if (h < hi) return ReliefClass::LowMountain;
  if (h < ice) return ReliefClass::HighMountain;
  return ReliefClass::IceSheet;
}

bool inside_rotated_rect(double px_, double py, const BlockSpec& b) {
  // Project onto the block's own axes.
  const double ax = std::cos(b.rotation), ay = std::sin(b.rotation);
  const double dx = px_ - b.center.x, dy = py - b.center.y;
  const double along = dx * ax + dy * ay;
  const double across = -dx * ay + dy * ax;
  return std::abs(along) <= b.width / 2 && std::abs(across) <= b.height / 2;
}

}  // namespace

TEST_CASE("uniform frame at table depth gives an all-zero height field") {
  const Calibration cal;
  const HeightField h = ingest_depth_frame(uniform_frame(32, 18, 1000), cal, 32, 18);
  for (double v : h.values()) CHECK(v == 0.0);
}

TEST_CASE("a hovering hand reads as table surface") {
  Calibration cal;
  cal.denoise_radius = 0;
  DepthFrame f = uniform_frame(16, 9, 1000);
  px(f, 5, 4) = static_cast<std::uint16_t>(cal.near_mm - 1);
  const HeightField h = ingest_depth_frame(f, cal, 16, 9);
  CHECK(h(5, 4) == 0.0);
}

TEST_CASE("hand immunity: pixels nearer than the window never change the result") {
  Calibration cal;
  DepthFrame f = uniform_frame(40, 24, 1000);
  for (int j = 5; j < 12; ++j)
    for (int i = 8; i < 20; ++i) px(f, i, j) = 880;  // a block
  const HeightField clean = ingest_depth_frame(f, cal, 40, 24);
  Rng rng(3);
  DepthFrame hands = f;
  for (int k = 0; k < 200; ++k) {
    const int i = static_cast<int>(rng.below(40)), j = static_cast<int>(rng.below(24));
    // Only replace table pixels; a hand over a block occludes it, which is a different effect.
    if (px(hands, i, j) == 1000) px(hands, i, j) = static_cast<std::uint16_t>(rng.below(800));
  }
  // A near pixel is clamped to table depth, which is what the table pixel already was.
  const HeightField with_hands = ingest_depth_frame(hands, cal, 40, 24);
  CHECK(with_hands == clean);
}

TEST_CASE("salt noise is removed by the median filter and matches a brute-force median") {
  Calibration cal;
  cal.denoise_radius = 1;
  DepthFrame f = uniform_frame(12, 10, 1000);
  px(f, 6, 5) = 850;
  const HeightField h = ingest_depth_frame(f, cal, 12, 10);
  CHECK(h(6, 5) == 0.0);

  Rng rng(11);
  Field2D<double> noisy(23, 17);
  for (double& v : noisy.values()) v = std::floor(rng.uniform(0.0, 200.0));
  for (int r : {0, 1, 2, 3}) CHECK(median_filter(noisy, r) == brute_median(noisy, r));
}

TEST_CASE("ingestion is idempotent on clean frames") {
  Calibration cal;
  DepthFrame f = uniform_frame(64, 36, 1000);
  for (int j = 10; j < 20; ++j)
    for (int i = 10; i < 30; ++i) px(f, i, j) = 910;
  const HeightField a = ingest_depth_frame(f, cal, 32, 18);
  const HeightField b = ingest_depth_frame(f, cal, 32, 18);
  CHECK(a == b);
}

TEST_CASE("area-average resampling preserves the mean and block averages") {
  Field2D<double> in(8, 4, 0.0);
  for (int j = 0; j < 4; ++j)
    for (int i = 0; i < 8; ++i) in(i, j) = i + 10.0 * j;
  const Field2D<double> out = resample_area_average(in, 4, 2);
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 4; ++i) {
      const double expect = (in(2 * i, 2 * j) + in(2 * i + 1, 2 * j) + in(2 * i, 2 * j + 1) + in(2 * i + 1, 2 * j + 1)) / 4;
      CHECK(out(i, j) == doctest::Approx(expect).epsilon(1e-12));
    }
  // Non-integer ratio: the overall mean is preserved.
  const Field2D<double> odd = resample_area_average(in, 3, 3);
  double m_in = 0, m_out = 0;
  for (double v : in.values()) m_in += v / in.size();
  for (double v : odd.values()) m_out += v / odd.size();
  CHECK(m_out == doctest::Approx(m_in).epsilon(1e-12));
}

TEST_CASE("frame rows run north to south") {
  Calibration cal;
  cal.denoise_radius = 0;
  DepthFrame f = uniform_frame(4, 4, 1000);
  f.values[0] = 900;  // first stored pixel: north-west corner
  const HeightField h = ingest_depth_frame(f, cal, 4, 4);
  CHECK(h(0, 3) == 100.0);
  CHECK(h(0, 0) == 0.0);
}

TEST_CASE("malformed frames are rejected") {
  DepthFrame f = uniform_frame(4, 4, 1000);
  f.values.pop_back();
  CHECK_THROWS_AS(ingest_depth_frame(f, Calibration{}, 4, 4), Error);
  Calibration bad;
  bad.near_mm = 1100;
  CHECK_THROWS_AS(ingest_depth_frame(uniform_frame(4, 4, 1000), bad, 4, 4), ConfigError);
}

TEST_CASE("pgm round trip and malformed headers") {
  const auto dir = std::filesystem::temp_directory_path() / "wtt_pgm_test";
  std::filesystem::create_directories(dir);
  DepthFrame f = uniform_frame(5, 3, 1000);
  for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = static_cast<std::uint16_t>(300 * k + 7);
  write_pgm16((dir / "frame_0001.pgm").string(), f);
  write_pgm16((dir / "frame_0000.pgm").string(), uniform_frame(5, 3, 1000));
  const DepthFrame g = read_pgm16((dir / "frame_0001.pgm").string());
  CHECK(g.width == 5);
  CHECK(g.height == 3);
  CHECK(g.values == f.values);
  const auto seq = list_depth_sequence(dir.string());
  REQUIRE(seq.size() == 2);
  CHECK(std::filesystem::path(seq[0]).filename() == "frame_0000.pgm");

  {
    std::ofstream bad(dir / "short.pgm", std::ios::binary);
    bad << "P5\n# comment\n4 4\n65535\n";
    bad.write("\x01\x02\x03", 3);
  }
  CHECK_THROWS_AS(read_pgm16((dir / "short.pgm").string()), Error);
  {
    std::ofstream bad(dir / "p2.pgm", std::ios::binary);
    bad << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(read_pgm16((dir / "p2.pgm").string()), Error);
  CHECK_THROWS_AS(read_pgm16((dir / "missing.pgm").string()), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("classification uses half-open intervals") {
  const Thresholds t;
  CHECK(classify_relief(0.0, t) == ReliefClass::Empty);
  CHECK(classify_relief(t.high, t) == ReliefClass::HighMountain);
  CHECK(classify_relief(t.low, t) == ReliefClass::LowMountain);
  CHECK(classify_relief(t.ice, t) == ReliefClass::IceSheet);
}

TEST_CASE("classification sweep matches the piecewise rule and is monotone") {
  const Thresholds t{20, 60, 120};
  int prev = 0;
  for (int k = 0; k <= 2000; ++k) {
    const double h = k * 0.1;
    const ReliefClass c = classify_relief(h, t);
    CHECK(c == piecewise(h, 20, 60, 120));
    CHECK(static_cast<int>(c) >= prev);
    prev = static_cast<int>(c);
  }
}

TEST_CASE("non-monotone thresholds are a configuration error") {
  CHECK_THROWS_AS((Thresholds{60, 20, 120}.validate()), ConfigError);
  CHECK_THROWS_AS((Thresholds{0, 20, 120}.validate()), ConfigError);
  CHECK_THROWS_AS(obstacles_from_height(HeightField(4, 4, 0.0), Thresholds{20, 120, 60}, 0.8), ConfigError);
}

TEST_CASE("relief class names") {
  CHECK(relief_class_from_string("ice") == ReliefClass::IceSheet);
  CHECK(relief_class_from_string("high") == ReliefClass::HighMountain);
  CHECK(relief_class_from_string("low") == ReliefClass::LowMountain);
  CHECK(to_string(ReliefClass::IceSheet) == "ice");
  CHECK_THROWS_AS(relief_class_from_string("lava"), Error);
}

TEST_CASE("rasterize: empty list and a single axis-aligned ice block") {
  const ClassHeights ch;
  const HeightField empty = rasterize_blocks({}, 40, 30, ch);
  for (double v : empty.values()) CHECK(v == 0.0);

  BlockSpec b{ReliefClass::IceSheet, {20, 15}, 10, 6, 0.0};
  const HeightField h = rasterize_blocks({b}, 40, 30, ch);
  int covered = 0;
  for (int j = 0; j < 30; ++j)
    for (int i = 0; i < 40; ++i) {
      const bool in = i >= 15 && i < 25 && j >= 12 && j < 18;
      CHECK(h(i, j) == (in ? ch.ice : 0.0));
      covered += in;
    }
  CHECK(covered == 60);
}

TEST_CASE("rasterize: overlapping rotated blocks match a per-cell brute force") {
  const ClassHeights ch;
  const std::vector<BlockSpec> blocks{
      {ReliefClass::LowMountain, {30.3, 20.1}, 24, 18, 0.4},
      {ReliefClass::HighMountain, {38.7, 24.6}, 20, 10, -1.1},
      {ReliefClass::IceSheet, {12.2, 8.9}, 9, 15, 2.3},
  };
  const HeightField h = rasterize_blocks(blocks, 64, 40, ch);
  int overlap = 0;
  for (int j = 0; j < 40; ++j)
    for (int i = 0; i < 64; ++i) {
      double expect = 0.0;
      int hits = 0;
      for (const auto& b : blocks)
        if (inside_rotated_rect(i + 0.5, j + 0.5, b)) {
          expect = std::max(expect, ch.at(b.cls));
          ++hits;
        }
      overlap += hits > 1;
      CHECK(h(i, j) == expect);
    }
  CHECK(overlap > 0);
}

TEST_CASE("rasterize is order independent") {
  const ClassHeights ch;
  std::vector<BlockSpec> blocks{
      {ReliefClass::LowMountain, {10, 10}, 12, 8, 0.3},
      {ReliefClass::IceSheet, {14, 12}, 10, 10, 1.0},
      {ReliefClass::HighMountain, {12, 9}, 6, 14, -0.2},
  };
  const HeightField ref = rasterize_blocks(blocks, 32, 24, ch);
  std::sort(blocks.begin(), blocks.end(), [](const BlockSpec& a, const BlockSpec& b) { return a.center.x < b.center.x; });
  do {
    CHECK(rasterize_blocks(blocks, 32, 24, ch) == ref);
  } while (std::next_permutation(blocks.begin(), blocks.end(),
                                 [](const BlockSpec& a, const BlockSpec& b) { return a.center.x < b.center.x; }));
}

TEST_CASE("a block leaving the grid is clamped with a warning") {
  EventLog log;
  const HeightField h = rasterize_blocks({{ReliefClass::IceSheet, {1, 1}, 10, 10, 0.0}}, 20, 20, ClassHeights{}, &log);
  CHECK(log.count("warning") == 1);
  CHECK(h(0, 0) == ClassHeights{}.ice);
  CHECK_THROWS_AS(rasterize_blocks({{ReliefClass::Empty, {5, 5}, 2, 2, 0.0}}, 20, 20, ClassHeights{}), Error);
}

TEST_CASE("obstacles: zero field, ice cell and a checkerboard") {
  const Thresholds t;
  const ObstacleField zero = obstacles_from_height(HeightField(10, 10, 0.0), t, 0.8);
  for (double v : zero.blockage.values()) CHECK(v == 0.0);
  for (double v : zero.drag.values()) CHECK(v == 0.0);

  HeightField h(10, 8, 0.0);
  const ClassHeights ch;
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 10; ++i) h(i, j) = (i + j) % 2 ? ch.low : ch.high;
  h(0, 0) = ch.ice;
  const ObstacleField o = obstacles_from_height(h, t, 0.8);
  CHECK(o.blockage(0, 0) == 1.0);
  for (int j = 0; j < 8; ++j)
    for (int i = 0; i < 10; ++i) {
      const ReliefClass c = piecewise(h(i, j), t.low, t.high, t.ice);
      const bool solid = c == ReliefClass::HighMountain || c == ReliefClass::IceSheet;
      CHECK(o.blockage(i, j) == (solid ? 1.0 : 0.0));
      CHECK(o.drag(i, j) == (c == ReliefClass::LowMountain ? 0.8 : 0.0));
    }
}

TEST_CASE("obstacle property: blockage is binary and drag only on low mountains") {
  Rng rng(5);
  HeightField h(30, 20);
  for (double& v : h.values()) v = rng.uniform(0.0, 200.0);
  const Thresholds t;
  const ObstacleField o = obstacles_from_height(h, t, 0.5);
  for (int j = 0; j < 20; ++j)
    for (int i = 0; i < 30; ++i) {
      CHECK((o.blockage(i, j) == 0.0 || o.blockage(i, j) == 1.0));
      if (o.drag(i, j) > 0.0) CHECK(classify_relief(h(i, j), t) == ReliefClass::LowMountain);
    }
  CHECK(o.digest() == obstacles_from_height(h, t, 0.5).digest());
  CHECK(o.digest() != obstacles_from_height(h, t, 0.6).digest());
}
