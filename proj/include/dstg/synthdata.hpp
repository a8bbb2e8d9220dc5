#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dstg/rng.hpp"
#include "dstg/types.hpp"

namespace dstg {

enum class Category { person, animal, vehicle, shape };
enum class Color { red, blue, green, yellow, black, white, orange, purple };
enum class SizeClass { small, medium, large };
enum class Texture { plain, striped, spotted, checkered };
enum class Action { walk, run, dance, wave, stand, spin };
enum class PathKind { linear, sinusoidal, circular };
enum class RegionSource { ground_truth, jittered, background };
enum class DistractorLabel { neutral, spatial_distractor, temporal_distractor };

const char* to_string(Category v);
const char* to_string(Color v);
const char* to_string(SizeClass v);
const char* to_string(Texture v);
const char* to_string(Action v);
const char* to_string(PathKind v);
const char* to_string(RegionSource v);
const char* to_string(DistractorLabel v);
const char* to_string(CaseKind v);
const char* to_string(EvalSplit v);

Category category_from(const std::string& s);
Color color_from(const std::string& s);
SizeClass size_from(const std::string& s);
Texture texture_from(const std::string& s);
Action action_from(const std::string& s);
PathKind path_from(const std::string& s);
RegionSource source_from(const std::string& s);
DistractorLabel label_from(const std::string& s);
CaseKind case_kind_from(const std::string& s);
EvalSplit split_from(const std::string& s);

struct Appearance {
  Color color = Color::red;
  SizeClass size = SizeClass::medium;
  Texture texture = Texture::plain;

  bool operator==(const Appearance&) const = default;
};

// Number of matching attributes out of {color, size, texture}.
int shared_attributes(const Appearance& a, const Appearance& b);

// Deterministic parametric path for one motion segment; all units are
// pixels and frames. The box center at frame t is a closed-form function
// of these parameters, clamped so the box stays inside the canvas.
struct TrajectorySpec {
  PathKind kind = PathKind::linear;
  Scalar start_x = 0, start_y = 0;
  Scalar dir_x = 1, dir_y = 0;
  Scalar speed = 0;
  Scalar amplitude = 0;
  Scalar period = 8;
  Scalar phase = 0;
};

struct MotionSegment {
  Action action = Action::stand;
  int start_frame = 0;
  int end_frame = 0;  // exclusive
  TrajectorySpec traj;
};

struct SceneObject {
  int object_id = 0;
  Category category = Category::person;
  Appearance appearance;
  std::vector<MotionSegment> motion_program;

  const MotionSegment* segment_at(int frame) const;
  bool performs(Action a) const;
};

Scalar size_to_side(SizeClass s);
Box trajectory_box(const MotionSegment& seg, Scalar side, int frame, Scalar W,
                   Scalar H);

struct RegionRecord {
  Box box;
  RegionSource source = RegionSource::background;
  int object_id = -1;  // -1 for background
};

struct TubeRef {
  std::vector<FrameRegion> entries;  // sorted, at most one region per frame
  std::vector<std::pair<int, int>> segments() const;
};

struct ReferringCase {
  std::vector<std::string> expression;
  CaseKind kind = CaseKind::single_target_single_segment;
  std::vector<int> target_object_ids;
  Action queried_action = Action::stand;
  std::vector<TubeRef> target_tubes;  // aligned with target_object_ids
  // Only non-neutral labels are stored; everything else is neutral.
  std::map<FrameRegion, DistractorLabel> distractor_labels;
};

struct VideoSample {
  std::string video_id;
  int width = 0, height = 0;
  int num_frames = 0;
  Scalar fps = 6.0;
  std::vector<SceneObject> objects;
  std::vector<std::vector<RegionRecord>> regions;  // per frame
  std::vector<ReferringCase> expressions;

  const SceneObject* object_by_id(int id) const;
};

struct GeneratorConfig {
  int width = 256, height = 256;
  int min_frames = 16, max_frames = 24;  // whole range must stay in [16, 64]
  int min_objects = 3, max_objects = 4;  // whole range must stay in [2, 8]
  Scalar fps = 6.0;
  int node_budget = 256;
  Scalar jitter_noise = 0.15;
  int jitters_per_gt = 1;
  int background_per_frame = 2;
  int min_gap = 3, max_gap = 8;  // occlusion gap for discontinuous cases
  int max_same_category = 4;
  int cases_per_video = 1;
  std::array<Scalar, 3> case_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};
  int min_segment_frames = 4;
  Scalar p_absent_outside = 0.6;  // else the target stands outside its segment
};

// Empty when the config is usable; otherwise one message per problem,
// including the flattened-region vs node-budget check.
std::vector<std::string> validate_config(const GeneratorConfig& cfg);

// Pure function of (config, seed); throws std::invalid_argument when
// validate_config is non-empty.
VideoSample generate_video(const GeneratorConfig& cfg, std::uint64_t seed);

// Template-based sentence for the case's target attributes: always at least
// one appearance phrase (color plus one more attribute) and one action
// phrase, 5..22 tokens.
std::vector<std::string> render_expression(const ReferringCase& c,
                                           const std::vector<SceneObject>& objects,
                                           std::uint64_t seed);

// Dataset-integrity gate; empty iff every invariant holds.
std::vector<std::string> validate_sample(const VideoSample& sample);

// The label the attribute-overlap rule assigns to a region of `obj` at
// `frame`, relative to the case's queried appearance and action.
DistractorLabel rule_label(const SceneObject& obj, int frame,
                           const Appearance& queried_attrs, Action queried_action);

}  // namespace dstg
