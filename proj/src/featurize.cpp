#include "dstg/featurize.hpp"

#include <cmath>

#include "dstg/manifest.hpp"
#include "dstg/rng.hpp"

namespace dstg {

std::vector<std::string> validate_feature_config(const FeatureConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.d_a < 4 || cfg.d_m < 4 || cfg.d_p < 4)
    out.push_back("feature dimensions must be >= 4");
  if (cfg.noise_sigma < 0) out.push_back("noise_sigma must be >= 0");
  if (cfg.motion_window < 1 || cfg.motion_window % 2 == 0)
    out.push_back("motion_window must be odd and >= 1");
  return out;
}

Vec make_appearance_feat(Category category, const Appearance& attrs,
                         const FeatureConfig& cfg, std::uint64_t seed) {
  Vec f = Vec::Zero(cfg.d_a);
  // Block layout: category(4) | color(8) | size(3) | texture(4).
  const int slots[] = {static_cast<int>(category), 4 + static_cast<int>(attrs.color),
                       12 + static_cast<int>(attrs.size),
                       15 + static_cast<int>(attrs.texture)};
  for (int s : slots)
    if (s < cfg.d_a) f[s] = 1.0;
  if (cfg.noise_sigma > 0) {
    Rng rng(seed);
    const Scalar cap = 3.0 * cfg.noise_sigma;
    for (int i = 0; i < cfg.d_a; ++i)
      f[i] += std::clamp(cfg.noise_sigma * rng.gaussian(), -cap, cap);
  }
  return f;
}

Vec make_motion_feat(const std::map<int, Box>& track, int t,
                     const FeatureConfig& cfg) {
  const int half = cfg.motion_window / 2;
  // Per-frame deltas of the box center across the window; a delta exists
  // only when both endpoints are in the track.
  std::vector<std::pair<bool, Eigen::Vector2d>> deltas;
  for (int f = t - half; f < t + half; ++f) {
    auto a = track.find(f), b = track.find(f + 1);
    if (a != track.end() && b != track.end()) {
      deltas.emplace_back(true, Eigen::Vector2d(b->second.cx() - a->second.cx(),
                                                b->second.cy() - a->second.cy()));
    } else {
      deltas.emplace_back(false, Eigen::Vector2d::Zero());
    }
  }

  Eigen::Vector2d mean_v = Eigen::Vector2d::Zero();
  int defined = 0;
  for (const auto& [ok, d] : deltas)
    if (ok) {
      mean_v += d;
      ++defined;
    }
  if (defined > 0) mean_v /= defined;

  Eigen::Vector2d var = Eigen::Vector2d::Zero();
  for (const auto& [ok, d] : deltas)
    if (ok) var += (d - mean_v).cwiseAbs2();
  if (defined > 0) var /= defined;

  Eigen::Vector2d accel = Eigen::Vector2d::Zero();
  int accel_n = 0;
  for (std::size_t i = 0; i + 1 < deltas.size(); ++i) {
    if (deltas[i].first && deltas[i + 1].first) {
      accel += (deltas[i + 1].second - deltas[i].second).cwiseAbs();
      ++accel_n;
    }
  }
  if (accel_n > 0) accel /= accel_n;

  const Scalar speed = mean_v.norm();
  const Scalar heading = speed > 1e-9 ? std::atan2(mean_v.y(), mean_v.x()) : 0.0;

  std::vector<Scalar> raw;
  raw.reserve(8 + 2 * deltas.size());
  raw.push_back(mean_v.x());
  raw.push_back(mean_v.y());
  raw.push_back(speed);
  raw.push_back(heading);
  raw.push_back(std::sqrt(var.x()));
  raw.push_back(std::sqrt(var.y()));
  raw.push_back(accel.x());
  raw.push_back(accel.y());
  for (const auto& [ok, d] : deltas) {
    raw.push_back(d.x());
    raw.push_back(d.y());
  }

  Vec f = Vec::Zero(cfg.d_m);
  for (int i = 0; i < cfg.d_m && i < static_cast<int>(raw.size()); ++i)
    f[i] = raw[static_cast<std::size_t>(i)];
  return f;
}

Vec5 make_pos_input(const Box& box, Scalar W, Scalar H) {
  Vec5 p;
  p << box.x0 / W, box.y0 / H, box.x1 / W, box.y1 / H,
      box.width() * box.height() / (W * H);
  return p;
}

Vec make_pos_embed(const Box& box, Scalar W, Scalar H, const Mat& proj) {
  return proj * make_pos_input(box, W, H);
}

VideoFeatures featurize_sample(const VideoSample& sample, const FeatureConfig& cfg) {
  VideoFeatures out;
  int total = 0;
  for (const auto& fr : sample.regions) total += static_cast<int>(fr.size());
  out.appearance.resize(cfg.d_a, total);
  out.motion.resize(cfg.d_m, total);
  out.pos_input.resize(5, total);
  out.node_regions.reserve(static_cast<std::size_t>(total));

  // Ground-truth tracks per object; jitters inherit the source track so a
  // detector-noise copy carries the same motion evidence.
  std::map<int, std::map<int, Box>> tracks;
  for (int f = 0; f < sample.num_frames; ++f)
    for (const auto& reg : sample.regions[static_cast<std::size_t>(f)])
      if (reg.source == RegionSource::ground_truth)
        tracks[reg.object_id][f] = reg.box;

  const std::uint64_t video_tag = fnv1a64(sample.video_id);
  int col = 0;
  for (int f = 0; f < sample.num_frames; ++f) {
    const auto& frame_regions = sample.regions[static_cast<std::size_t>(f)];
    for (int r = 0; r < static_cast<int>(frame_regions.size()); ++r, ++col) {
      const RegionRecord& reg = frame_regions[static_cast<std::size_t>(r)];
      out.node_regions.emplace_back(f, r);
      const std::uint64_t region_seed =
          video_tag ^ (static_cast<std::uint64_t>(f) * 0x9e3779b97f4a7c15ULL) ^
          (static_cast<std::uint64_t>(r) * 0xd1b54a32d192ed03ULL);
      if (reg.object_id >= 0) {
        const SceneObject* obj = sample.object_by_id(reg.object_id);
        out.appearance.col(col) =
            make_appearance_feat(obj->category, obj->appearance, cfg, region_seed);
        out.motion.col(col) = make_motion_feat(tracks[reg.object_id], f, cfg);
      } else {
        // Background false positives: no attributes, a static one-frame track.
        Vec f_app = Vec::Zero(cfg.d_a);
        if (cfg.noise_sigma > 0) {
          Rng rng(region_seed);
          const Scalar cap = 3.0 * cfg.noise_sigma;
          for (int i = 0; i < cfg.d_a; ++i)
            f_app[i] = std::clamp(cfg.noise_sigma * rng.gaussian(), -cap, cap);
        }
        out.appearance.col(col) = f_app;
        std::map<int, Box> track{{f, reg.box}};
        out.motion.col(col) = make_motion_feat(track, f, cfg);
      }
      out.pos_input.col(col) = make_pos_input(reg.box, sample.width, sample.height);
    }
  }
  return out;
}

}  // namespace dstg
