#include "dstg/stgraph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dstg/metrics.hpp"

namespace dstg {

DualGraph build_dual_graph(const VideoSample& sample, const GraphConfig& cfg) {
  if (cfg.k_spatial < 1 || cfg.k_temporal < 1)
    throw std::invalid_argument("graph neighbor counts must be >= 1");

  DualGraph g;
  std::vector<Box> boxes;
  std::vector<std::vector<int>> nodes_of_frame(
      static_cast<std::size_t>(sample.num_frames));
  for (int f = 0; f < sample.num_frames; ++f) {
    const auto& frame_regions = sample.regions[static_cast<std::size_t>(f)];
    for (int r = 0; r < static_cast<int>(frame_regions.size()); ++r) {
      nodes_of_frame[static_cast<std::size_t>(f)].push_back(
          static_cast<int>(g.nodes.size()));
      g.nodes.push_back({f, r, true});
      boxes.push_back(frame_regions[static_cast<std::size_t>(r)].box);
    }
  }
  if (g.nodes.empty())
    throw std::invalid_argument("build_dual_graph: sample has no regions");
  g.num_valid = static_cast<int>(g.nodes.size());
  g.spatial_adj.resize(g.nodes.size());
  g.temporal_adj.resize(g.nodes.size());

  for (int i = 0; i < g.num_valid; ++i) {
    const int f = g.nodes[static_cast<std::size_t>(i)].frame;
    const Box& bi = boxes[static_cast<std::size_t>(i)];

    // Spatial: same-frame regions by center distance, ties by node index.
    std::vector<std::pair<Scalar, int>> spatial;
    for (int j : nodes_of_frame[static_cast<std::size_t>(f)]) {
      if (j == i) continue;
      const Box& bj = boxes[static_cast<std::size_t>(j)];
      const Scalar dx = bi.cx() - bj.cx(), dy = bi.cy() - bj.cy();
      spatial.emplace_back(dx * dx + dy * dy, j);
    }
    std::sort(spatial.begin(), spatial.end());
    for (int k = 0; k < cfg.k_spatial && k < static_cast<int>(spatial.size()); ++k)
      g.spatial_adj[static_cast<std::size_t>(i)].push_back(spatial[static_cast<std::size_t>(k)].second);

    // Temporal: IoU descending, |dt| ascending, frame, then region index.
    struct Cand {
      Scalar neg_iou;
      int abs_dt;
      int frame;
      int region;
      int node;
    };
    std::vector<Cand> temporal;
    for (int dt = -cfg.temporal_window; dt <= cfg.temporal_window; ++dt) {
      if (dt == 0) continue;
      const int f2 = f + dt;
      if (f2 < 0 || f2 >= sample.num_frames) continue;
      for (int j : nodes_of_frame[static_cast<std::size_t>(f2)]) {
        const Box& bj = boxes[static_cast<std::size_t>(j)];
        temporal.push_back({-box_iou(bi, bj), std::abs(dt), f2,
                            g.nodes[static_cast<std::size_t>(j)].region, j});
      }
    }
    std::sort(temporal.begin(), temporal.end(), [](const Cand& a, const Cand& b) {
      if (a.neg_iou != b.neg_iou) return a.neg_iou < b.neg_iou;
      if (a.abs_dt != b.abs_dt) return a.abs_dt < b.abs_dt;
      if (a.frame != b.frame) return a.frame < b.frame;
      return a.region < b.region;
    });
    for (int k = 0; k < cfg.k_temporal && k < static_cast<int>(temporal.size()); ++k)
      g.temporal_adj[static_cast<std::size_t>(i)].push_back(temporal[static_cast<std::size_t>(k)].node);
  }

  return pad_to_budget(std::move(g), cfg.node_budget);
}

DualGraph pad_to_budget(DualGraph g, int n) {
  if (static_cast<int>(g.nodes.size()) > n)
    throw std::invalid_argument("pad_to_budget: node count exceeds budget");
  g.nodes.resize(static_cast<std::size_t>(n));
  g.spatial_adj.resize(static_cast<std::size_t>(n));
  g.temporal_adj.resize(static_cast<std::size_t>(n));
  return g;
}

std::vector<std::vector<int>> union_adjacency(const DualGraph& g) {
  std::vector<std::vector<int>> adj(g.nodes.size());
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    auto& out = adj[i];
    out = g.spatial_adj[i];
    out.insert(out.end(), g.temporal_adj[i].begin(), g.temporal_adj[i].end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }
  return adj;
}

}  // namespace dstg
