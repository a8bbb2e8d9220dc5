#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "dstg/featurize.hpp"
#include "dstg/metrics.hpp"
#include "dstg/model.hpp"
#include "dstg/objectives.hpp"
#include "dstg/stgraph.hpp"
#include "dstg/synthdata.hpp"

namespace dstg {

struct LinkConfig {
  Scalar theta_keep = 0.5;   // frames whose best score falls below are dropped
  int min_segment_len = 2;   // shorter runs are discarded
  int num_seeds = 5;         // top regions by score that each start a DP pass
  Scalar nms_threshold = 0.4;
};

struct Tube {
  std::vector<FrameRegion> entries;           // sorted, one region per frame
  std::vector<std::pair<int, int>> segments;  // derived half-open frame runs
  Scalar score = 0;                           // mean correspondence over entries
  Scalar link_reward_total = 0;               // DP objective of the linking path
};

// Eq.-style pairwise linking reward: c_i + c_j minus the normalized spatial
// and temporal embedding distances.
Scalar link_reward(Scalar c_i, Scalar c_j, const Vec& hs_i, const Vec& hs_j,
                   const Vec& ht_i, const Vec& ht_j);

// Plain per-node scoring table for one (video, expression); the boundary
// between the differentiable model and the linking stage.
struct ScoredVideo {
  int num_frames = 0;
  std::vector<std::vector<int>> frame_nodes;  // valid node ids per frame
  std::vector<FrameRegion> node_regions;      // per node
  std::vector<Scalar> c;
  std::vector<Vec> hs, ht;
};

// Dynamic-programming linker: per seed, pick one region per kept frame
// maximizing the summed reward over consecutive kept frames; frames whose
// best score is below theta_keep are dropped first, splitting tubes into
// segments; short segments are discarded. Deterministic, ties to the lower
// region index.
std::vector<Tube> build_tubes(const ScoredVideo& sv, const LinkConfig& cfg);

// Greedy tube-level NMS: keep the best-scoring tube, drop tubes whose vIoU
// against a kept tube exceeds the threshold. Canonical (score desc, entries
// lexicographic) order makes the result independent of input order.
std::vector<Tube> tube_nms(std::vector<Tube> tubes, const VideoSample& sample,
                           Scalar threshold);

BoxTrack tube_to_track(const Tube& tube, const VideoSample& sample);

struct GroundingResult {
  std::string video_id;
  int expression_idx = 0;
  std::vector<Tube> tubes;  // descending score, NMS applied
  std::vector<std::tuple<int, int, Scalar>> region_scores;  // (frame, region, c)
};

struct GroundConfig {
  GraphConfig graph;
  FeatureConfig features;
  LinkConfig link;
  AblationFlags flags;
};

// Full proposal-free pipeline: featurize, build graphs, encode, decode,
// score, link, NMS.
GroundingResult ground(const VideoSample& sample, int expression_idx,
                       const ModelParameters& params, const Vocabulary& vocab,
                       const GroundConfig& cfg);

// Linking plus NMS on externally supplied scores; also the oracle-score
// test surface.
GroundingResult ground_with_scores(const VideoSample& sample, int expression_idx,
                                   const ScoredVideo& sv, const LinkConfig& cfg);

// Baseline that picks a random temporal window and a random region per frame.
GroundingResult ground_random_anchor(const VideoSample& sample, int expression_idx,
                                     Rng& rng);

}  // namespace dstg
