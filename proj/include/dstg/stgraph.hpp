#pragma once

#include <vector>

#include "dstg/synthdata.hpp"
#include "dstg/types.hpp"

namespace dstg {

struct GraphConfig {
  int k_spatial = 4;
  int k_temporal = 4;
  int temporal_window = 2;  // neighbors from frames t +- 1..w
  int node_budget = 256;
};

// Spatial and temporal graphs over one video's regions, padded to a fixed
// node budget with masked nodes. Node order is (frame asc, region asc),
// matching VideoFeatures columns.
struct DualGraph {
  struct Node {
    int frame = -1;
    int region = -1;
    bool valid = false;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<int>> spatial_adj;   // <= k_spatial, same frame
  std::vector<std::vector<int>> temporal_adj;  // <= k_temporal, nearby frames
  int num_valid = 0;

  int budget() const { return static_cast<int>(nodes.size()); }
};

// Spatial neighbors: same-frame regions by smallest center distance.
// Temporal neighbors: regions within the window ranked by box IoU, ties by
// smaller |dt|, then frame, then region index. Deterministic; throws on a
// sample without regions or one that overflows the budget.
DualGraph build_dual_graph(const VideoSample& sample, const GraphConfig& cfg);

// Append masked nodes up to n; masked nodes keep empty adjacency and are
// never referenced by a neighbor list. Throws when the graph already
// exceeds n.
DualGraph pad_to_budget(DualGraph g, int n);

// Spatial and temporal neighbor sets merged per node (sorted, deduped);
// the decoder's self-attention view of the graph.
std::vector<std::vector<int>> union_adjacency(const DualGraph& g);

}  // namespace dstg
