#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "dstg/metrics.hpp"
#include "dstg/stgraph.hpp"

using namespace dstg;

namespace {

VideoSample frames_of_boxes(const std::vector<std::vector<Box>>& frames,
                            int width = 256, int height = 256) {
  VideoSample s;
  s.video_id = "t";
  s.width = width;
  s.height = height;
  s.num_frames = static_cast<int>(frames.size());
  for (const auto& frame : frames) {
    std::vector<RegionRecord> regions;
    for (const auto& b : frame)
      regions.push_back({b, RegionSource::ground_truth, 0});
    s.regions.push_back(std::move(regions));
  }
  return s;
}

}  // namespace

TEST_SUITE("stgraph") {

TEST_CASE("two regions in a frame see each other once") {
  const VideoSample s = frames_of_boxes({{Box{0, 0, 10, 10}, Box{50, 50, 60, 60}}});
  GraphConfig cfg;
  cfg.node_budget = 4;
  const DualGraph g = build_dual_graph(s, cfg);
  CHECK(g.num_valid == 2);
  CHECK(g.spatial_adj[0] == std::vector<int>{1});
  CHECK(g.spatial_adj[1] == std::vector<int>{0});
}

TEST_CASE("single-frame video has empty temporal adjacency") {
  const VideoSample s = frames_of_boxes({{Box{0, 0, 10, 10}, Box{5, 5, 15, 15}}});
  GraphConfig cfg;
  cfg.node_budget = 4;
  const DualGraph g = build_dual_graph(s, cfg);
  for (int i = 0; i < g.num_valid; ++i) CHECK(g.temporal_adj[static_cast<std::size_t>(i)].empty());
}

TEST_CASE("middle of a 3-frame identical track links to prev and next") {
  const Box b{10, 10, 30, 30};
  const Box far{200, 200, 220, 220};
  const VideoSample s = frames_of_boxes({{b, far}, {b, far}, {b, far}});
  GraphConfig cfg;
  cfg.k_temporal = 2;
  cfg.temporal_window = 2;
  cfg.node_budget = 8;
  const DualGraph g = build_dual_graph(s, cfg);

  // Node 2 is the track box at frame 1; brute-force the IoU ranking.
  const int middle = 2;
  REQUIRE(g.nodes[middle].frame == 1);
  REQUIRE(g.nodes[middle].region == 0);
  struct Cand { Scalar neg_iou; int abs_dt; int frame; int region; int node; };
  std::vector<Cand> cands;
  for (std::size_t j = 0; j < g.nodes.size(); ++j) {
    if (!g.nodes[j].valid || g.nodes[j].frame == 1) continue;
    const Box& bj = s.regions[static_cast<std::size_t>(g.nodes[j].frame)]
                             [static_cast<std::size_t>(g.nodes[j].region)].box;
    cands.push_back({-box_iou(b, bj), std::abs(g.nodes[j].frame - 1),
                     g.nodes[j].frame, g.nodes[j].region, static_cast<int>(j)});
  }
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& c) {
    return std::tie(a.neg_iou, a.abs_dt, a.frame, a.region) <
           std::tie(c.neg_iou, c.abs_dt, c.frame, c.region);
  });
  const std::vector<int> expect = {cands[0].node, cands[1].node};
  CHECK(g.temporal_adj[middle] == expect);
  // And those are exactly the same track's prev/next frame boxes.
  const std::set<int> got(g.temporal_adj[middle].begin(), g.temporal_adj[middle].end());
  CHECK(got == std::set<int>{0, 4});
}

TEST_CASE("pad_to_budget appends masked nodes only") {
  const VideoSample s = frames_of_boxes(
      {{Box{0, 0, 10, 10}, Box{20, 20, 40, 40}},
       {Box{0, 0, 10, 10}, Box{20, 20, 40, 40}, Box{100, 100, 120, 120}}});
  GraphConfig cfg;
  cfg.node_budget = 16;
  const DualGraph g = build_dual_graph(s, cfg);
  CHECK(g.budget() == 16);
  CHECK(g.num_valid == 5);
  int masked = 0;
  for (const auto& n : g.nodes)
    if (!n.valid) ++masked;
  CHECK(masked == 11);
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    for (int j : g.spatial_adj[i]) CHECK(g.nodes[static_cast<std::size_t>(j)].valid);
    for (int j : g.temporal_adj[i]) CHECK(g.nodes[static_cast<std::size_t>(j)].valid);
    if (!g.nodes[i].valid) {
      CHECK(g.spatial_adj[i].empty());
      CHECK(g.temporal_adj[i].empty());
    }
  }

  // Padding an exactly-full graph changes nothing.
  DualGraph same = pad_to_budget(g, 16);
  CHECK(same.budget() == 16);
  CHECK_THROWS_AS(pad_to_budget(same, 4), std::invalid_argument);
}

TEST_CASE("neighbor structure is valid on generated videos") {
  GeneratorConfig gcfg;
  GraphConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const VideoSample s = generate_video(gcfg, seed);
    const DualGraph g = build_dual_graph(s, cfg);
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!g.nodes[i].valid) continue;
      for (int j : g.spatial_adj[i]) {
        CHECK(j != static_cast<int>(i));
        CHECK(g.nodes[static_cast<std::size_t>(j)].frame == g.nodes[i].frame);
      }
      CHECK(g.spatial_adj[i].size() <= static_cast<std::size_t>(cfg.k_spatial));
      for (int j : g.temporal_adj[i]) {
        const int dt = std::abs(g.nodes[static_cast<std::size_t>(j)].frame - g.nodes[i].frame);
        CHECK(dt >= 1);
        CHECK(dt <= cfg.temporal_window);
      }
      CHECK(g.temporal_adj[i].size() <= static_cast<std::size_t>(cfg.k_temporal));
    }
  }
}

TEST_CASE("permuting regions relabels but preserves neighbor sets") {
  GeneratorConfig gcfg;
  const VideoSample s = generate_video(gcfg, 17);
  GraphConfig cfg;
  const DualGraph g = build_dual_graph(s, cfg);

  // Reverse region order within every frame.
  VideoSample rev = s;
  for (auto& frame : rev.regions) std::reverse(frame.begin(), frame.end());
  const DualGraph g2 = build_dual_graph(rev, cfg);

  // node (f, r) in s corresponds to (f, n_f - 1 - r) in rev.
  std::map<std::pair<int, int>, int> node_of;
  for (std::size_t i = 0; i < g2.nodes.size(); ++i)
    if (g2.nodes[i].valid)
      node_of[{g2.nodes[i].frame, g2.nodes[i].region}] = static_cast<int>(i);
  auto mapped = [&](int i) {
    const auto& n = g.nodes[static_cast<std::size_t>(i)];
    const int nf = static_cast<int>(s.regions[static_cast<std::size_t>(n.frame)].size());
    return node_of.at({n.frame, nf - 1 - n.region});
  };
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!g.nodes[i].valid) continue;
    std::set<int> a, b;
    for (int j : g.spatial_adj[i]) a.insert(mapped(j));
    for (int j : g2.spatial_adj[static_cast<std::size_t>(mapped(static_cast<int>(i)))])
      b.insert(j);
    CHECK(a == b);
  }
}

TEST_CASE("zero-region samples are rejected") {
  VideoSample s;
  s.num_frames = 2;
  s.regions.resize(2);
  GraphConfig cfg;
  CHECK_THROWS_AS(build_dual_graph(s, cfg), std::invalid_argument);
}

}
