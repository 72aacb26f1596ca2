#include "zipr/decomposition.hpp"
#include "zipr/generators.hpp"

#include <gtest/gtest.h>

#include <map>
#include <set>

using namespace zipr;

namespace {

std::string error_code(const SurfaceMesh& m, const Segmentation& seg) {
  try {
    apply_segmentation(m, seg);
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

void expect_partition(const Decomposition& d) {
  std::vector<int> count(d.mesh.num_faces(), 0);
  for (const CylinderPart& p : d.parts)
    for (int f : p.faces) ++count[f];
  for (int c : count) EXPECT_EQ(c, 1);

  // every transition edge sits on exactly two parts' loops
  std::map<int, std::set<int>> owners;
  for (const CylinderPart& p : d.parts)
    for (const PartLoop& l : p.loops)
      if (l.role == LoopRole::Transition)
        for (int h : l.halfedges) owners[d.mesh.edge_of(h)].insert(p.id);
  for (int e = 0; e < d.mesh.num_edges(); ++e) {
    if (d.edge_is_transition[e])
      EXPECT_EQ(owners[e].size(), 2u);
    else
      EXPECT_EQ(owners.count(e), 0u);
  }
}

void expect_arcs_cover_loop(const Decomposition& d, const CylinderPart& p) {
  const auto arcs = interface_intervals(p);
  const PartLoop& loop = p.loops[p.transition_loop];
  std::vector<int> joined;
  double prev_end = 0.0;
  for (const InterfaceArc& a : arcs) {
    EXPECT_DOUBLE_EQ(a.start, prev_end);
    EXPECT_GT(a.end, a.start);
    prev_end = a.end;
    joined.insert(joined.end(), a.halfedges.begin(), a.halfedges.end());
    for (int h : a.halfedges) EXPECT_EQ(d.face_part[d.mesh.twin(h) / 3], a.neighbor);
  }
  EXPECT_EQ(joined, loop.halfedges);
  EXPECT_NEAR(prev_end, loop.length, 1e-12 * loop.length);
}

}  // namespace

TEST(ApplySegmentation, StraightTubeIsOnePart) {
  const Decomposition d = apply_segmentation(make_tube(12, 6, 1, 2), {});
  ASSERT_EQ(d.parts.size(), 1u);
  EXPECT_EQ(d.parts[0].loops.size(), 2u);
  for (const PartLoop& l : d.parts[0].loops) EXPECT_EQ(l.role, LoopRole::Open);
  EXPECT_EQ(d.parts[0].transition_loop, -1);
  EXPECT_EQ(d.traversal, std::vector<int>{0});
}

TEST(ApplySegmentation, SphereIsNotAnnulus) {
  try {
    apply_segmentation(make_uv_sphere(8, 6), {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "not_annulus");
    EXPECT_NE(std::string(e.what()).find("part 0"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("0 boundary loops"), std::string::npos);
  }
}

TEST(ApplySegmentation, TShapeThreeAnnuli) {
  const Fixture fx = make_t_shape(16, 8);
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  ASSERT_EQ(d.parts.size(), 3u);
  for (const CylinderPart& p : d.parts) {
    EXPECT_EQ(p.euler_characteristic, 0);
    ASSERT_EQ(p.loops.size(), 2u);
    EXPECT_EQ(p.loops[p.open_loop].role, LoopRole::Open);
    ASSERT_GE(p.transition_loop, 0);
    EXPECT_EQ(p.loops[p.transition_loop].role, LoopRole::Transition);
    // each lune touches the two others
    EXPECT_EQ(d.neighbors[p.id].size(), 2u);
    expect_arcs_cover_loop(d, p);
  }
  expect_partition(d);
}

TEST(ApplySegmentation, TShapeWithoutHolesMissesOpenBoundary) {
  Fixture fx = make_t_shape(16, 8);
  fx.seg.open_sites.clear();
  // lunes are disks, not annuli
  EXPECT_EQ(error_code(fx.mesh, fx.seg), "not_annulus");
}

TEST(ApplySegmentation, ChainOfThreeNeedsOpenMiddle) {
  // the middle part has two shared loops and no open boundary
  Fixture fx = make_tube_chain(12, 15, 3, 1, 3);
  EXPECT_EQ(error_code(fx.mesh, fx.seg), "missing_open_boundary");
  // a hole turns the middle part into a pair of pants
  fx.seg.open_sites.push_back({OpenSite::Type::Hole, {7 * 12 + 5}});
  EXPECT_EQ(error_code(fx.mesh, fx.seg), "not_annulus");
}

TEST(ApplySegmentation, ThreeChainMiddleHasTwoArcs) {
  const Fixture fx = make_three_chain(24, 20);
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  ASSERT_EQ(d.parts.size(), 3u);
  expect_partition(d);
  int middle = -1;
  for (const CylinderPart& p : d.parts)
    if (d.neighbors[p.id].size() == 2) middle = p.id;
  ASSERT_GE(middle, 0);
  const auto arcs = interface_intervals(d.parts[middle]);
  ASSERT_EQ(arcs.size(), 2u);
  EXPECT_NE(arcs[0].neighbor, arcs[1].neighbor);
  for (const CylinderPart& p : d.parts) expect_arcs_cover_loop(d, p);
  const auto& ends = d.neighbors;
  const int a = ends[middle][0], c = ends[middle][1];
  EXPECT_TRUE(validate_traversal(d, {a, middle, c}).ok);
  EXPECT_FALSE(validate_traversal(d, {a, c, middle}).ok);
  EXPECT_EQ(d.traversal.size(), 3u);
  EXPECT_EQ(d.traversal[1], middle);
}

TEST(ApplySegmentation, TwoPartChain) {
  const Fixture fx = make_tube_chain(12, 8, 2, 1, 3);
  const Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  ASSERT_EQ(d.parts.size(), 2u);
  for (const CylinderPart& p : d.parts) {
    const auto arcs = interface_intervals(p);
    ASSERT_EQ(arcs.size(), 1u);
    EXPECT_TRUE(arcs[0].closed);
    EXPECT_EQ(arcs[0].neighbor, 1 - p.id);
  }
  EXPECT_TRUE(validate_traversal(d, {0, 1}).ok);
  EXPECT_TRUE(validate_traversal(d, {1, 0}).ok);
}

TEST(ApplySegmentation, MissingLoopEdge) {
  Fixture fx = make_tube_chain(12, 8, 2, 1, 3);
  fx.seg.loops[0].erase(fx.seg.loops[0].begin() + 3);
  EXPECT_EQ(error_code(fx.mesh, fx.seg), "path_not_connected");
}

TEST(ValidateTraversal, ChainOrders) {
  // Chain A-B-C as three lunes of a T where only two adjacencies are used.
  const Fixture fx = make_t_shape(16, 8);
  Decomposition d = apply_segmentation(fx.mesh, fx.seg);
  EXPECT_TRUE(validate_traversal(d, {0, 1, 2}).ok);
  EXPECT_TRUE(validate_traversal(d, {2, 0, 1}).ok);
  d.neighbors = {{1}, {0, 2}, {1}};
  EXPECT_TRUE(validate_traversal(d, {0, 1, 2}).ok);
  const TraversalCheck bad = validate_traversal(d, {0, 2, 1});
  EXPECT_FALSE(bad.ok);
  EXPECT_EQ(bad.first, 0);
  EXPECT_EQ(bad.second, 2);
  EXPECT_FALSE(validate_traversal(d, {0, 1}).ok);
  EXPECT_FALSE(validate_traversal(d, {0, 1, 1}).ok);
}

TEST(ApplySegmentation, HoleOnLoopRejected) {
  Fixture fx = make_tube_chain(12, 8, 2, 1, 3);
  fx.seg.open_sites.push_back({OpenSite::Type::Hole, {fx.seg.loops[0][2]}});
  EXPECT_EQ(error_code(fx.mesh, fx.seg), "bad_segmentation");
}

TEST(SegmentationJson, RoundTrip) {
  const Fixture fx = make_t_shape(16, 8);
  Segmentation seg = fx.seg;
  seg.traversal = {2, 0, 1};
  seg.names = {"green", "red", "blue"};
  const Segmentation back = segmentation_from_json(to_json(seg));
  EXPECT_EQ(back.loops, seg.loops);
  EXPECT_EQ(back.traversal, seg.traversal);
  EXPECT_EQ(back.names, seg.names);
  ASSERT_EQ(back.open_sites.size(), 3u);
  EXPECT_EQ(back.open_sites[1].ids, seg.open_sites[1].ids);
  EXPECT_THROW(segmentation_from_json(nlohmann::json::parse(R"({"open_sites":[{"type":"x","ids":[1]}]})")), Error);
}
