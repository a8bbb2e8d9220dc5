#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "dstg/synthdata.hpp"
#include "dstg/types.hpp"

namespace dstg {

struct FeatureConfig {
  int d_a = 32;  // appearance
  int d_m = 16;  // motion
  int d_p = 8;   // positional embedding (learned projection of the 5-vector)
  Scalar noise_sigma = 0.05;
  int motion_window = 5;  // odd, centered at t
};

std::vector<std::string> validate_feature_config(const FeatureConfig& cfg);

// One-hot attribute blocks (category, color, size, texture) zero-padded to
// d_a, plus noise of scale noise_sigma clamped to +-3 sigma per coordinate.
Vec make_appearance_feat(Category category, const Appearance& attrs,
                         const FeatureConfig& cfg, std::uint64_t seed);

// Kinematic descriptor of the source track around frame t: mean velocity,
// speed, heading, per-axis velocity spread, mean |acceleration| and the raw
// per-offset deltas; zero-padded where the window leaves the track.
Vec make_motion_feat(const std::map<int, Box>& track, int t,
                     const FeatureConfig& cfg);

// The normalized geometry 5-vector (x0/W, y0/H, x1/W, y1/H, w*h/(W*H)).
Vec5 make_pos_input(const Box& box, Scalar W, Scalar H);

// Linear map applied to the 5-vector; `proj` is d_p x 5 (learned elsewhere).
Vec make_pos_embed(const Box& box, Scalar W, Scalar H, const Mat& proj);

// Per-video features in flat node order (frame ascending, region ascending).
struct VideoFeatures {
  Mat appearance;  // d_a x num_regions
  Mat motion;      // d_m x num_regions
  Mat pos_input;   // 5   x num_regions
  std::vector<FrameRegion> node_regions;
};

VideoFeatures featurize_sample(const VideoSample& sample, const FeatureConfig& cfg);

}  // namespace dstg
