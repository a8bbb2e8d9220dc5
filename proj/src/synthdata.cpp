#include "dstg/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <stdexcept>

#include "dstg/metrics.hpp"

namespace dstg {

namespace {

template <class E>
E enum_from(const std::string& s, const std::vector<std::pair<const char*, E>>& table,
            const char* what) {
  for (const auto& [name, v] : table)
    if (s == name) return v;
  throw std::invalid_argument(std::string("unknown ") + what + ": " + s);
}

const std::vector<std::pair<const char*, Category>>& category_table() {
  static const std::vector<std::pair<const char*, Category>> t = {
      {"person", Category::person},
      {"animal", Category::animal},
      {"vehicle", Category::vehicle},
      {"shape", Category::shape}};
  return t;
}
const std::vector<std::pair<const char*, Color>>& color_table() {
  static const std::vector<std::pair<const char*, Color>> t = {
      {"red", Color::red},       {"blue", Color::blue},
      {"green", Color::green},   {"yellow", Color::yellow},
      {"black", Color::black},   {"white", Color::white},
      {"orange", Color::orange}, {"purple", Color::purple}};
  return t;
}
const std::vector<std::pair<const char*, SizeClass>>& size_table() {
  static const std::vector<std::pair<const char*, SizeClass>> t = {
      {"small", SizeClass::small},
      {"medium", SizeClass::medium},
      {"large", SizeClass::large}};
  return t;
}
const std::vector<std::pair<const char*, Texture>>& texture_table() {
  static const std::vector<std::pair<const char*, Texture>> t = {
      {"plain", Texture::plain},
      {"striped", Texture::striped},
      {"spotted", Texture::spotted},
      {"checkered", Texture::checkered}};
  return t;
}
const std::vector<std::pair<const char*, Action>>& action_table() {
  static const std::vector<std::pair<const char*, Action>> t = {
      {"walk", Action::walk}, {"run", Action::run},
      {"dance", Action::dance}, {"wave", Action::wave},
      {"stand", Action::stand}, {"spin", Action::spin}};
  return t;
}
const std::vector<std::pair<const char*, PathKind>>& path_table() {
  static const std::vector<std::pair<const char*, PathKind>> t = {
      {"linear", PathKind::linear},
      {"sinusoidal", PathKind::sinusoidal},
      {"circular", PathKind::circular}};
  return t;
}
const std::vector<std::pair<const char*, RegionSource>>& source_table() {
  static const std::vector<std::pair<const char*, RegionSource>> t = {
      {"gt", RegionSource::ground_truth},
      {"jit", RegionSource::jittered},
      {"bg", RegionSource::background}};
  return t;
}
const std::vector<std::pair<const char*, DistractorLabel>>& label_table() {
  static const std::vector<std::pair<const char*, DistractorLabel>> t = {
      {"neutral", DistractorLabel::neutral},
      {"spatial", DistractorLabel::spatial_distractor},
      {"temporal", DistractorLabel::temporal_distractor}};
  return t;
}
const std::vector<std::pair<const char*, CaseKind>>& case_kind_table() {
  static const std::vector<std::pair<const char*, CaseKind>> t = {
      {"single_target_single_segment", CaseKind::single_target_single_segment},
      {"single_target_discontinuous", CaseKind::single_target_discontinuous},
      {"multi_target", CaseKind::multi_target}};
  return t;
}
const std::vector<std::pair<const char*, EvalSplit>>& split_table() {
  static const std::vector<std::pair<const char*, EvalSplit>> t = {
      {"all", EvalSplit::all},
      {"vg_easy", EvalSplit::vg_easy},
      {"sg_hard", EvalSplit::sg_hard},
      {"tg_hard", EvalSplit::tg_hard}};
  return t;
}

template <class E>
const char* enum_name(E v, const std::vector<std::pair<const char*, E>>& table) {
  for (const auto& [name, e] : table)
    if (e == v) return name;
  return "?";
}

}  // namespace

const char* to_string(Category v) { return enum_name(v, category_table()); }
const char* to_string(Color v) { return enum_name(v, color_table()); }
const char* to_string(SizeClass v) { return enum_name(v, size_table()); }
const char* to_string(Texture v) { return enum_name(v, texture_table()); }
const char* to_string(Action v) { return enum_name(v, action_table()); }
const char* to_string(PathKind v) { return enum_name(v, path_table()); }
const char* to_string(RegionSource v) { return enum_name(v, source_table()); }
const char* to_string(DistractorLabel v) { return enum_name(v, label_table()); }
const char* to_string(CaseKind v) { return enum_name(v, case_kind_table()); }
const char* to_string(EvalSplit v) { return enum_name(v, split_table()); }

Category category_from(const std::string& s) { return enum_from(s, category_table(), "category"); }
Color color_from(const std::string& s) { return enum_from(s, color_table(), "color"); }
SizeClass size_from(const std::string& s) { return enum_from(s, size_table(), "size"); }
Texture texture_from(const std::string& s) { return enum_from(s, texture_table(), "texture"); }
Action action_from(const std::string& s) { return enum_from(s, action_table(), "action"); }
PathKind path_from(const std::string& s) { return enum_from(s, path_table(), "path"); }
RegionSource source_from(const std::string& s) { return enum_from(s, source_table(), "source"); }
DistractorLabel label_from(const std::string& s) { return enum_from(s, label_table(), "label"); }
CaseKind case_kind_from(const std::string& s) { return enum_from(s, case_kind_table(), "case kind"); }
EvalSplit split_from(const std::string& s) { return enum_from(s, split_table(), "split"); }

int shared_attributes(const Appearance& a, const Appearance& b) {
  return int(a.color == b.color) + int(a.size == b.size) +
         int(a.texture == b.texture);
}

const MotionSegment* SceneObject::segment_at(int frame) const {
  for (const auto& seg : motion_program)
    if (frame >= seg.start_frame && frame < seg.end_frame) return &seg;
  return nullptr;
}

bool SceneObject::performs(Action a) const {
  return std::any_of(motion_program.begin(), motion_program.end(),
                     [a](const MotionSegment& s) { return s.action == a; });
}

Scalar size_to_side(SizeClass s) {
  switch (s) {
    case SizeClass::small: return 16;
    case SizeClass::medium: return 32;
    case SizeClass::large: return 48;
  }
  return 32;
}

Box trajectory_box(const MotionSegment& seg, Scalar side, int frame, Scalar W,
                   Scalar H) {
  const TrajectorySpec& tr = seg.traj;
  const Scalar tau = static_cast<Scalar>(frame - seg.start_frame);
  Scalar cx = tr.start_x, cy = tr.start_y;
  switch (tr.kind) {
    case PathKind::linear:
      cx += tr.dir_x * tr.speed * tau;
      cy += tr.dir_y * tr.speed * tau;
      break;
    case PathKind::sinusoidal: {
      const Scalar wobble =
          tr.amplitude * std::sin(2.0 * M_PI * tau / tr.period + tr.phase);
      cx += tr.dir_x * tr.speed * tau - tr.dir_y * wobble;
      cy += tr.dir_y * tr.speed * tau + tr.dir_x * wobble;
      break;
    }
    case PathKind::circular: {
      const Scalar ang = 2.0 * M_PI * tau / tr.period + tr.phase;
      cx += tr.amplitude * std::cos(ang);
      cy += tr.amplitude * std::sin(ang);
      break;
    }
  }
  const Scalar half = side / 2;
  cx = std::clamp(cx, half, W - half);
  cy = std::clamp(cy, half, H - half);
  return Box{cx - half, cy - half, cx + half, cy + half};
}

std::vector<std::pair<int, int>> TubeRef::segments() const {
  std::vector<std::pair<int, int>> segs;
  for (std::size_t i = 0; i < entries.size();) {
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].first == entries[j - 1].first + 1) ++j;
    segs.emplace_back(entries[i].first, entries[j - 1].first + 1);
    i = j;
  }
  return segs;
}

const SceneObject* VideoSample::object_by_id(int id) const {
  for (const auto& o : objects)
    if (o.object_id == id) return &o;
  return nullptr;
}

DistractorLabel rule_label(const SceneObject& obj, int frame,
                           const Appearance& queried_attrs,
                           Action queried_action) {
  const MotionSegment* seg = obj.segment_at(frame);
  if (!seg) return DistractorLabel::neutral;
  const int shared = shared_attributes(obj.appearance, queried_attrs);
  const bool same_action = seg->action == queried_action;
  if (shared >= 2 && !same_action) return DistractorLabel::spatial_distractor;
  if (same_action && shared <= 1) return DistractorLabel::temporal_distractor;
  return DistractorLabel::neutral;
}

std::vector<std::string> validate_config(const GeneratorConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.width <= 0 || cfg.height <= 0) out.push_back("canvas must be positive");
  if (cfg.min_frames < 16 || cfg.max_frames > 64 || cfg.min_frames > cfg.max_frames)
    out.push_back("frame range must lie within [16, 64]");
  if (cfg.min_objects < 2 || cfg.max_objects > 8 || cfg.min_objects > cfg.max_objects)
    out.push_back("object range must lie within [2, 8]");
  if (cfg.jitters_per_gt < 0 || cfg.background_per_frame < 0)
    out.push_back("region counts must be non-negative");
  if (cfg.min_gap < 1 || cfg.min_gap > cfg.max_gap)
    out.push_back("gap range invalid");
  if (cfg.cases_per_video < 1 || cfg.cases_per_video > 3)
    out.push_back("cases_per_video must be in [1, 3]");
  if (cfg.min_segment_frames < 2) out.push_back("min_segment_frames must be >= 2");
  const int worst = cfg.max_frames * (cfg.max_objects * (1 + cfg.jitters_per_gt) +
                                      cfg.background_per_frame);
  if (worst > cfg.node_budget) {
    std::ostringstream ss;
    ss << "flattened region count " << worst << " exceeds node budget "
       << cfg.node_budget;
    out.push_back(ss.str());
  }
  return out;
}

namespace {

const std::vector<Action>& queryable_actions() {
  static const std::vector<Action> a = {Action::walk, Action::run, Action::dance,
                                        Action::wave, Action::spin};
  return a;
}

TrajectorySpec action_preset(Action a, Rng& rng) {
  TrajectorySpec tr;
  switch (a) {
    case Action::walk:
      tr.kind = PathKind::linear;
      tr.speed = rng.uniform(1.0, 2.0);
      break;
    case Action::run:
      tr.kind = PathKind::linear;
      tr.speed = rng.uniform(3.5, 5.0);
      break;
    case Action::dance:
      tr.kind = PathKind::sinusoidal;
      tr.speed = rng.uniform(0.3, 0.8);
      tr.amplitude = rng.uniform(6.0, 10.0);
      tr.period = rng.uniform(6.0, 10.0);
      tr.phase = rng.uniform(0.0, 2.0 * M_PI);
      break;
    case Action::wave:
      tr.kind = PathKind::sinusoidal;
      tr.speed = 0;
      tr.amplitude = rng.uniform(1.5, 2.5);
      tr.period = rng.uniform(3.0, 5.0);
      tr.phase = rng.uniform(0.0, 2.0 * M_PI);
      break;
    case Action::stand:
      tr.kind = PathKind::linear;
      tr.speed = 0;
      break;
    case Action::spin:
      tr.kind = PathKind::circular;
      tr.amplitude = rng.uniform(4.0, 7.0);
      tr.period = rng.uniform(8.0, 12.0);
      tr.phase = rng.uniform(0.0, 2.0 * M_PI);
      break;
  }
  return tr;
}

// Sample a trajectory whose unclamped path keeps the whole box inside the
// canvas for every frame of [t0, t1); shrinks motion scale when crowded.
TrajectorySpec plan_trajectory(Action a, Rng& rng, Scalar side, int t0, int t1,
                               Scalar W, Scalar H) {
  const Scalar half = side / 2;
  for (int round = 0; round < 4; ++round) {
    for (int attempt = 0; attempt < 12; ++attempt) {
      TrajectorySpec tr = action_preset(a, rng);
      const Scalar shrink = std::pow(0.5, round);
      tr.speed *= shrink;
      tr.amplitude *= shrink;
      const Scalar ang = rng.uniform(0.0, 2.0 * M_PI);
      tr.dir_x = std::cos(ang);
      tr.dir_y = std::sin(ang);
      const Scalar margin = half + 2.0;
      tr.start_x = rng.uniform(margin, W - margin);
      tr.start_y = rng.uniform(margin, H - margin);
      MotionSegment probe{a, t0, t1, tr};
      bool ok = true;
      for (int f = t0; f < t1 && ok; ++f) {
        // Re-derive the unclamped center to detect clipping.
        Box b = trajectory_box(probe, side, f, 1e9, 1e9);
        const Scalar cx = b.cx(), cy = b.cy();
        ok = cx >= half && cx <= W - half && cy >= half && cy <= H - half;
      }
      if (ok) return tr;
    }
  }
  TrajectorySpec tr;  // static fallback, center of canvas
  tr.kind = PathKind::linear;
  tr.speed = 0;
  tr.start_x = W / 2;
  tr.start_y = H / 2;
  return tr;
}

std::pair<int, int> plan_single_segment(int T, int min_seg, Rng& rng) {
  const int lo = std::min(std::max(min_seg, static_cast<int>(std::lround(0.4 * T))), T);
  const int hi = std::max(lo, static_cast<int>(std::lround(0.7 * T)));
  const int len = lo + static_cast<int>(rng.uniform_int(hi - lo + 1));
  const int a0 = static_cast<int>(rng.uniform_int(T - len + 1));
  return {a0, a0 + len};
}

struct DiscontinuousPlan {
  std::pair<int, int> first, second;
};

DiscontinuousPlan plan_discontinuous(int T, int min_seg, int min_gap, int max_gap,
                                     Rng& rng) {
  const int gap_hi = std::min(max_gap, T - 2 * min_seg);
  const int gap = min_gap + static_cast<int>(rng.uniform_int(std::max(1, gap_hi - min_gap + 1)));
  const int budget = T - gap;
  const int l1 = min_seg + static_cast<int>(rng.uniform_int(budget - 2 * min_seg + 1));
  const int l2_max = budget - l1;
  const int l2 = min_seg + static_cast<int>(rng.uniform_int(l2_max - min_seg + 1));
  const int slack = T - (l1 + gap + l2);
  const int a0 = static_cast<int>(rng.uniform_int(slack + 1));
  return {{a0, a0 + l1}, {a0 + l1 + gap, a0 + l1 + gap + l2}};
}

Appearance random_appearance(Rng& rng) {
  Appearance a;
  a.color = static_cast<Color>(rng.uniform_int(8));
  a.size = static_cast<SizeClass>(rng.uniform_int(3));
  a.texture = static_cast<Texture>(rng.uniform_int(4));
  return a;
}

// Appearance sharing exactly `shared` of 3 attributes with `base`.
Appearance appearance_with_overlap(const Appearance& base, int shared, Rng& rng) {
  Appearance a = base;
  std::vector<int> attrs = {0, 1, 2};
  rng.shuffle(attrs);
  const int to_change = 3 - shared;
  for (int i = 0; i < to_change; ++i) {
    switch (attrs[static_cast<std::size_t>(i)]) {
      case 0: {
        auto c = static_cast<Color>(rng.uniform_int(7));
        a.color = c == base.color ? static_cast<Color>(7) : c;
        break;
      }
      case 1: {
        auto s = static_cast<SizeClass>(rng.uniform_int(2));
        a.size = s == base.size ? static_cast<SizeClass>(2) : s;
        break;
      }
      case 2: {
        auto t = static_cast<Texture>(rng.uniform_int(3));
        a.texture = t == base.texture ? static_cast<Texture>(3) : t;
        break;
      }
    }
  }
  return a;
}

Category pick_category(Rng& rng, std::map<Category, int>& counts, int cap,
                       Category preferred, Scalar p_preferred) {
  Category c = preferred;
  if (rng.uniform() >= p_preferred)
    c = static_cast<Category>(rng.uniform_int(4));
  for (int tries = 0; tries < 8 && counts[c] >= cap; ++tries)
    c = static_cast<Category>(rng.uniform_int(4));
  ++counts[c];
  return c;
}

Action pick_other_action(Action avoid, Rng& rng, bool allow_stand) {
  std::vector<Action> pool;
  for (Action a : queryable_actions())
    if (a != avoid) pool.push_back(a);
  if (allow_stand) pool.push_back(Action::stand);
  return rng.pick(pool);
}

}  // namespace

std::vector<std::string> render_expression(const ReferringCase& c,
                                           const std::vector<SceneObject>& objects,
                                           std::uint64_t seed) {
  const SceneObject* target = nullptr;
  for (const auto& o : objects)
    if (!c.target_object_ids.empty() && o.object_id == c.target_object_ids[0])
      target = &o;
  if (!target) throw std::invalid_argument("render_expression: case has no target");

  Rng rng(seed);
  const Appearance& ap = target->appearance;
  const std::string color = to_string(ap.color);
  const std::string size = to_string(ap.size);
  const std::string texture = to_string(ap.texture);
  const std::string category = to_string(target->category);
  static const std::map<Action, const char*> ing = {
      {Action::walk, "walking"},   {Action::run, "running"},
      {Action::dance, "dancing"},  {Action::wave, "waving"},
      {Action::stand, "standing"}, {Action::spin, "spinning"}};
  const std::string action = ing.at(c.queried_action);

  // Mention color plus at least one more appearance attribute so that every
  // labeled distractor is excluded by either an attribute or the action.
  const int mention = static_cast<int>(rng.uniform_int(3));  // 0: +size, 1: +texture, 2: both
  const bool say_size = mention == 0 || mention == 2;
  const bool say_texture = mention == 1 || mention == 2;

  std::vector<std::string> t;
  t.push_back(rng.uniform() < 0.5 ? "the" : "a");
  if (say_size) t.push_back(size);
  t.push_back(color);
  if (say_texture) t.push_back(texture);
  t.push_back(category);
  if (rng.uniform() < 0.3) t.push_back("that");
  t.push_back("is");
  t.push_back(action);
  const int filler = static_cast<int>(rng.uniform_int(3));
  static const std::vector<std::vector<std::string>> tails = {
      {"in", "the", "video"},
      {"on", "the", "screen"},
      {"in", "this", "scene"},
      {"during", "the", "clip"},
      {"somewhere", "in", "the", "frame"}};
  for (int i = 0; i < filler; ++i) {
    const auto& tail = tails[static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(tails.size())))];
    t.insert(t.end(), tail.begin(), tail.end());
  }
  if (t.size() < 5) t.insert(t.end(), {"in", "the", "video"});
  while (t.size() > 22) t.pop_back();
  return t;
}

namespace {

struct CasePlan {
  CaseKind kind;
  std::vector<int> target_ids;
  Action action;
};

}  // namespace

VideoSample generate_video(const GeneratorConfig& cfg, std::uint64_t seed) {
  {
    auto issues = validate_config(cfg);
    if (!issues.empty()) {
      std::string msg = "invalid generator config:";
      for (const auto& s : issues) msg += " " + s + ";";
      throw std::invalid_argument(msg);
    }
  }

  Rng rng(seed);
  VideoSample sample;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "v%016llx", static_cast<unsigned long long>(seed));
    sample.video_id = buf;
  }
  sample.width = cfg.width;
  sample.height = cfg.height;
  sample.fps = cfg.fps;
  const int T = cfg.min_frames +
                static_cast<int>(rng.uniform_int(cfg.max_frames - cfg.min_frames + 1));
  sample.num_frames = T;
  const Scalar W = cfg.width, H = cfg.height;

  // --- scene construction for the primary case -----------------------
  const Scalar mix_total = cfg.case_mix[0] + cfg.case_mix[1] + cfg.case_mix[2];
  CaseKind kind;
  {
    const Scalar u = rng.uniform() * mix_total;
    kind = u < cfg.case_mix[0] ? CaseKind::single_target_single_segment
           : u < cfg.case_mix[0] + cfg.case_mix[1]
               ? CaseKind::single_target_discontinuous
               : CaseKind::multi_target;
  }
  const Action queried = rng.pick(queryable_actions());
  const Appearance queried_attrs = random_appearance(rng);
  std::map<Category, int> category_counts;
  const Category target_category =
      pick_category(rng, category_counts, cfg.max_same_category,
                    static_cast<Category>(rng.uniform_int(4)), 1.0);

  int next_id = 0;
  std::vector<int> target_ids;

  auto add_target = [&](const std::vector<std::pair<int, int>>& action_segments,
                        bool stand_outside) {
    SceneObject obj;
    obj.object_id = next_id++;
    obj.category = target_category;
    obj.appearance = queried_attrs;
    for (const auto& [s, e] : action_segments) {
      MotionSegment seg{queried, s, e, {}};
      seg.traj = plan_trajectory(queried, rng, size_to_side(queried_attrs.size), s, e, W, H);
      obj.motion_program.push_back(seg);
    }
    if (stand_outside && action_segments.size() == 1) {
      const auto [a0, a1] = action_segments[0];
      const Scalar side = size_to_side(queried_attrs.size);
      if (a0 > 0) {
        Box b = trajectory_box(obj.motion_program[0], side, a0, W, H);
        MotionSegment pre{Action::stand, 0, a0, {}};
        pre.traj.start_x = b.cx();
        pre.traj.start_y = b.cy();
        obj.motion_program.insert(obj.motion_program.begin(), pre);
      }
      if (a1 < T) {
        Box b = trajectory_box(obj.motion_program.back(), side, a1 - 1, W, H);
        MotionSegment post{Action::stand, a1, T, {}};
        post.traj.start_x = b.cx();
        post.traj.start_y = b.cy();
        obj.motion_program.push_back(post);
      }
    }
    target_ids.push_back(obj.object_id);
    sample.objects.push_back(std::move(obj));
  };

  int num_targets = 1;
  if (kind == CaseKind::multi_target) {
    const int room = cfg.max_objects - 2;  // keep space for both distractors
    num_targets = std::min(room, 2 + static_cast<int>(rng.uniform_int(2)));
    num_targets = std::max(2, num_targets);
  }
  if (kind == CaseKind::multi_target) {
    // Group activity: all targets act over the same window.
    const auto seg = plan_single_segment(T, cfg.min_segment_frames, rng);
    for (int k = 0; k < num_targets; ++k) add_target({seg}, false);
  } else if (kind == CaseKind::single_target_discontinuous) {
    const auto plan = plan_discontinuous(T, cfg.min_segment_frames, cfg.min_gap,
                                         cfg.max_gap, rng);
    add_target({plan.first, plan.second}, false);
  } else {
    const auto seg = plan_single_segment(T, cfg.min_segment_frames, rng);
    const bool absent = rng.uniform() < cfg.p_absent_outside;
    add_target({seg}, !absent);
  }
  // Same-category duplicates count toward the per-class cap.
  category_counts[target_category] += num_targets - 1;

  const int object_count =
      std::max(num_targets + 2,
               cfg.min_objects +
                   static_cast<int>(rng.uniform_int(cfg.max_objects - cfg.min_objects + 1)));

  auto add_full_video_object = [&](const Appearance& ap, Category cat, Action act) {
    SceneObject obj;
    obj.object_id = next_id++;
    obj.category = cat;
    obj.appearance = ap;
    MotionSegment seg{act, 0, T, {}};
    seg.traj = plan_trajectory(act, rng, size_to_side(ap.size), 0, T, W, H);
    obj.motion_program.push_back(seg);
    sample.objects.push_back(std::move(obj));
  };

  // Spatial distractor: appearance-affinitive, never the queried action.
  {
    const int shared = 2 + static_cast<int>(rng.uniform_int(2));
    const Appearance ap = appearance_with_overlap(queried_attrs, shared, rng);
    const Category cat = pick_category(rng, category_counts, cfg.max_same_category,
                                       target_category, 0.7);
    add_full_video_object(ap, cat, pick_other_action(queried, rng, false));
  }
  // Temporal distractor: motion-affinitive, dissimilar appearance.
  {
    const int shared = static_cast<int>(rng.uniform_int(2));
    const Appearance ap = appearance_with_overlap(queried_attrs, shared, rng);
    const Category cat = pick_category(rng, category_counts, cfg.max_same_category,
                                       target_category, 0.5);
    add_full_video_object(ap, cat, queried);
  }
  // Neutral extras.
  while (static_cast<int>(sample.objects.size()) < object_count) {
    const Appearance ap =
        appearance_with_overlap(queried_attrs, static_cast<int>(rng.uniform_int(2)), rng);
    const Category cat = pick_category(rng, category_counts, cfg.max_same_category,
                                       static_cast<Category>(rng.uniform_int(4)), 0.6);
    add_full_video_object(ap, cat, pick_other_action(queried, rng, true));
  }

  // --- regions --------------------------------------------------------
  // Per frame: GT boxes (object id ascending), then jitters, then background.
  std::map<std::pair<int, int>, int> gt_region_of;  // (object, frame) -> region idx
  sample.regions.assign(static_cast<std::size_t>(T), {});
  for (int f = 0; f < T; ++f) {
    auto& frame_regions = sample.regions[static_cast<std::size_t>(f)];
    std::vector<std::pair<int, Box>> gt_boxes;
    for (const auto& obj : sample.objects) {
      const MotionSegment* seg = obj.segment_at(f);
      if (!seg) continue;
      gt_boxes.emplace_back(obj.object_id,
                            trajectory_box(*seg, size_to_side(obj.appearance.size), f, W, H));
    }
    for (const auto& [oid, box] : gt_boxes) {
      gt_region_of[{oid, f}] = static_cast<int>(frame_regions.size());
      frame_regions.push_back({box, RegionSource::ground_truth, oid});
    }
    for (const auto& [oid, box] : gt_boxes) {
      for (int j = 0; j < cfg.jitters_per_gt; ++j) {
        Box jb = box;
        for (int attempt = 0; attempt < 16; ++attempt) {
          const Scalar w = box.width(), h = box.height();
          const Scalar dx = rng.uniform(-cfg.jitter_noise, cfg.jitter_noise) * w;
          const Scalar dy = rng.uniform(-cfg.jitter_noise, cfg.jitter_noise) * h;
          const Scalar sw = w * (1.0 + rng.uniform(-cfg.jitter_noise, cfg.jitter_noise));
          const Scalar sh = h * (1.0 + rng.uniform(-cfg.jitter_noise, cfg.jitter_noise));
          Scalar cx = std::clamp(box.cx() + dx, sw / 2, W - sw / 2);
          Scalar cy = std::clamp(box.cy() + dy, sh / 2, H - sh / 2);
          Box cand{cx - sw / 2, cy - sh / 2, cx + sw / 2, cy + sh / 2};
          if (box_iou(cand, box) >= 0.5) {
            jb = cand;
            break;
          }
        }
        frame_regions.push_back({jb, RegionSource::jittered, oid});
      }
    }
    for (int j = 0; j < cfg.background_per_frame; ++j) {
      const Scalar side = rng.uniform(12.0, 56.0);
      const Scalar cx = rng.uniform(side / 2, W - side / 2);
      const Scalar cy = rng.uniform(side / 2, H - side / 2);
      frame_regions.push_back(
          {Box{cx - side / 2, cy - side / 2, cx + side / 2, cy + side / 2},
           RegionSource::background, -1});
    }
  }

  // --- cases ------------------------------------------------------------
  auto build_case = [&](CaseKind case_kind, const std::vector<int>& ids, Action act,
                        const Appearance& attrs) {
    ReferringCase rc;
    rc.kind = case_kind;
    rc.target_object_ids = ids;
    rc.queried_action = act;
    for (int oid : ids) {
      const SceneObject* obj = sample.object_by_id(oid);
      TubeRef tube;
      for (const auto& seg : obj->motion_program) {
        if (seg.action != act) continue;
        for (int f = seg.start_frame; f < seg.end_frame; ++f)
          tube.entries.emplace_back(f, gt_region_of.at({oid, f}));
      }
      std::sort(tube.entries.begin(), tube.entries.end());
      rc.target_tubes.push_back(std::move(tube));
    }
    // Frames covered by each target's own tube are positives, not distractors.
    std::set<std::pair<int, int>> covered;  // (object, frame)
    for (std::size_t k = 0; k < ids.size(); ++k)
      for (const auto& [f, r] : rc.target_tubes[k].entries) covered.insert({ids[k], f});
    for (int f = 0; f < T; ++f) {
      const auto& frame_regions = sample.regions[static_cast<std::size_t>(f)];
      for (int r = 0; r < static_cast<int>(frame_regions.size()); ++r) {
        const RegionRecord& reg = frame_regions[static_cast<std::size_t>(r)];
        if (reg.object_id < 0) continue;
        if (covered.count({reg.object_id, f})) continue;
        const SceneObject* obj = sample.object_by_id(reg.object_id);
        const DistractorLabel lbl = rule_label(*obj, f, attrs, act);
        if (lbl != DistractorLabel::neutral) rc.distractor_labels[{f, r}] = lbl;
      }
    }
    rc.expression = render_expression(rc, sample.objects, rng.next_u64());
    sample.expressions.push_back(std::move(rc));
  };

  build_case(kind, target_ids, queried, queried_attrs);

  // Extra cases re-target an existing non-target object when its labels
  // stay well formed; skipped otherwise so the sample remains valid.
  for (int extra = 1; extra < cfg.cases_per_video; ++extra) {
    std::vector<const SceneObject*> candidates;
    for (const auto& obj : sample.objects) {
      if (std::find(target_ids.begin(), target_ids.end(), obj.object_id) !=
          target_ids.end())
        continue;
      if (obj.motion_program.size() == 1 &&
          obj.motion_program[0].action != Action::stand)
        candidates.push_back(&obj);
    }
    if (candidates.empty()) break;
    const SceneObject* pick =
        candidates[static_cast<std::size_t>(rng.uniform_int(
            static_cast<std::int64_t>(candidates.size())))];
    build_case(CaseKind::single_target_single_segment, {pick->object_id},
               pick->motion_program[0].action, pick->appearance);
    if (sample.expressions.back().distractor_labels.empty()) {
      sample.expressions.pop_back();
      break;
    }
  }

  return sample;
}

namespace {

void check_case(const VideoSample& s, std::size_t case_idx, const ReferringCase& c,
                std::vector<std::string>& out) {
  auto fail = [&](const std::string& msg) {
    std::ostringstream ss;
    ss << "case " << case_idx << ": " << msg;
    out.push_back(ss.str());
  };

  if (c.expression.size() < 5 || c.expression.size() > 22)
    fail("expression length outside [5, 22]");
  if (c.target_tubes.size() != c.target_object_ids.size())
    fail("tube/target arity mismatch");
  if (c.kind == CaseKind::multi_target && c.target_tubes.size() < 2)
    fail("multi_target case with fewer than 2 tubes");

  for (std::size_t k = 0; k < c.target_tubes.size(); ++k) {
    const TubeRef& tube = c.target_tubes[k];
    std::set<int> frames_seen;
    for (const auto& [f, r] : tube.entries) {
      if (f < 0 || f >= s.num_frames ||
          r >= static_cast<int>(s.regions[static_cast<std::size_t>(std::max(0, std::min(f, s.num_frames - 1)))].size()) ||
          r < 0 || f >= s.num_frames) {
        std::ostringstream ss;
        ss << "tube " << k << " references missing region (" << f << ", " << r << ")";
        fail(ss.str());
        continue;
      }
      if (!frames_seen.insert(f).second) fail("tube has two regions in one frame");
      const RegionRecord& reg = s.regions[static_cast<std::size_t>(f)][static_cast<std::size_t>(r)];
      if (reg.source != RegionSource::ground_truth ||
          (k < c.target_object_ids.size() && reg.object_id != c.target_object_ids[k]))
        fail("tube entry is not a ground-truth region of its target");
    }
    if (!std::is_sorted(tube.entries.begin(), tube.entries.end()))
      fail("tube entries not sorted");
    if (c.kind == CaseKind::single_target_discontinuous && tube.segments().size() < 2)
      fail("discontinuous case with a single segment");
  }

  if (c.distractor_labels.empty()) fail("case has no labeled distractors");

  if (c.target_object_ids.empty()) {
    fail("case has no targets");
    return;
  }
  const SceneObject* target = s.object_by_id(c.target_object_ids[0]);
  if (!target) {
    fail("target object id unknown");
    return;
  }
  // Aggregate rule violations per (case, object) so one corrupted object
  // yields one violation.
  std::set<int> bad_objects;
  for (const auto& [fr, lbl] : c.distractor_labels) {
    const auto [f, r] = fr;
    if (f < 0 || f >= s.num_frames ||
        r >= static_cast<int>(s.regions[static_cast<std::size_t>(f)].size())) {
      fail("distractor label references missing region");
      continue;
    }
    const RegionRecord& reg = s.regions[static_cast<std::size_t>(f)][static_cast<std::size_t>(r)];
    if (reg.object_id < 0) {
      fail("distractor label on a background region");
      continue;
    }
    const SceneObject* obj = s.object_by_id(reg.object_id);
    const DistractorLabel expect =
        rule_label(*obj, f, target->appearance, c.queried_action);
    if (expect != lbl) bad_objects.insert(reg.object_id);
  }
  for (int oid : bad_objects) {
    std::ostringstream ss;
    ss << "object " << oid << " labels violate the attribute-overlap rule";
    fail(ss.str());
  }
}

}  // namespace

std::vector<std::string> validate_sample(const VideoSample& s) {
  std::vector<std::string> out;
  if (s.width <= 0 || s.height <= 0) out.push_back("non-positive canvas");
  if (s.num_frames < 2) out.push_back("num_frames must be >= 2");
  if (static_cast<int>(s.regions.size()) != s.num_frames)
    out.push_back("regions not indexed per frame");

  std::set<int> ids;
  for (const auto& obj : s.objects) {
    if (!ids.insert(obj.object_id).second) {
      std::ostringstream ss;
      ss << "duplicate object_id " << obj.object_id;
      out.push_back(ss.str());
    }
    int prev_end = -1;
    bool sorted = true, in_range = true;
    for (const auto& seg : obj.motion_program) {
      if (seg.start_frame < prev_end) sorted = false;
      if (seg.start_frame < 0 || seg.end_frame > s.num_frames ||
          seg.start_frame >= seg.end_frame)
        in_range = false;
      prev_end = seg.end_frame;
    }
    if (!sorted) {
      std::ostringstream ss;
      ss << "object " << obj.object_id << " motion segments overlap or are unsorted";
      out.push_back(ss.str());
    }
    if (!in_range) {
      std::ostringstream ss;
      ss << "object " << obj.object_id << " motion segment outside [0, num_frames)";
      out.push_back(ss.str());
    }
  }

  for (std::size_t f = 0; f < s.regions.size(); ++f) {
    for (std::size_t r = 0; r < s.regions[f].size(); ++r) {
      const Box& b = s.regions[f][r].box;
      if (!(b.x0 < b.x1 && b.y0 < b.y1) || b.x0 < 0 || b.y0 < 0 ||
          b.x1 > s.width || b.y1 > s.height) {
        std::ostringstream ss;
        ss << "region (" << f << ", " << r << ") box invalid or out of bounds";
        out.push_back(ss.str());
      }
    }
  }

  for (std::size_t i = 0; i < s.expressions.size(); ++i)
    check_case(s, i, s.expressions[i], out);
  return out;
}

}  // namespace dstg
