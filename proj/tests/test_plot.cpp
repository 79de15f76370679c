#include <gtest/gtest.h>

#include <sstream>

#include "illum/io.hpp"
#include "illum/plot.hpp"
#include "illum/question.hpp"
#include "illum/reachability.hpp"
#include "support.hpp"

using namespace illum;
using namespace illum::testing;

namespace {

// Volume of box ∩ (pixel column x pixel row x everything else), as a fraction
// of the bounding box volume, computed in the original units.
double pixel_share(const Box& b, const Box& bounding, VarIndex xv, VarIndex yv, std::size_t col, std::size_t row,
                   std::size_t w, std::size_t h) {
  std::vector<Interval> cut;
  for (std::size_t k = 0; k < bounding.dim(); ++k) {
    const auto& full = bounding.axis(k);
    Interval slab = full;
    if (bounding.var(k) == xv) {
      double step = full.width() / double(w);
      slab = {full.lo + step * double(col), full.lo + step * double(col + 1)};
    } else if (bounding.var(k) == yv) {
      double step = full.width() / double(h);
      std::size_t r = h - 1 - row;
      slab = {full.lo + step * double(r), full.lo + step * double(r + 1)};
    }
    const Interval& bi = *b.find(bounding.var(k));
    double lo = std::max(slab.lo, bi.lo), hi = std::min(slab.hi, bi.hi);
    if (hi <= lo) return 0.0;
    cut.push_back({lo, hi});
  }
  return box_volume(Box(bounding.vars(), cut)) / box_volume(bounding);
}

}  // namespace

TEST(Plot, CpuProjectionMatchesVolumeOracle) {
  std::string base = std::string(ILLUM_SOURCE_DIR) + "/packs/cpu";
  auto pack = load_pack(base + ".json", base + "_labels.json");
  auto model = load_model(base + "_model.json", pack.space());
  ReachOptions ro;
  ro.epsilon = 0.25;
  ro.analysis.max_boxes = 4000;
  auto rs = build_reachset(parse_question("when_do_you usr_busy?"), pack, model, ro, 9);
  ASSERT_FALSE(rs.pairs.empty());

  // through the dump format, as the CLI sees it
  auto dump = reach_dump_from_json(reach_to_json(rs, pack));
  Box bounding = dump.space.input_bounding();
  VarIndex xv = dump.space.require("freemem"), yv = dump.space.require("freeswap");
  const std::size_t w = 16, h = 12;
  auto p = project_boxes(dump.inputs, bounding, xv, yv, w, h);

  double total = 0.0;
  for (const auto& b : dump.inputs) total += box_volume(b) / box_volume(bounding);
  EXPECT_NEAR(p.total(), total, 1e-9 * std::max(1.0, total));

  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c) {
      double want = 0.0;
      for (const auto& b : dump.inputs) want += pixel_share(b, bounding, xv, yv, c, r, w, h);
      ASSERT_NEAR(p.at(c, r), want, 1e-12) << c << "," << r;
    }
}

TEST(Plot, UnitSquareQuadrant) {
  Box bounding({0, 1}, {{0, 1}, {0, 1}});
  Box q({0, 1}, {{0.5, 1}, {0.5, 1}});
  auto p = project_boxes({q}, bounding, 0, 1, 2, 2);
  // row 0 is the top
  EXPECT_DOUBLE_EQ(p.at(1, 0), 0.25);
  EXPECT_DOUBLE_EQ(p.at(0, 0) + p.at(0, 1) + p.at(1, 1), 0.0);

  std::ostringstream pgm;
  write_pgm(pgm, p);
  EXPECT_EQ(pgm.str(), "P2\n2 2\n255\n255 0\n255 255\n");
  std::ostringstream csv;
  write_projection_csv(csv, p);
  EXPECT_EQ(csv.str(), "0,0.25\n0,0\n");
  EXPECT_THROW(project_boxes({q}, bounding, 0, 1, 0, 2), Error);
}
