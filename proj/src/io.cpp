#include "dstg/io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace dstg {

using nlohmann::json;

namespace {

json box_to_json(const Box& b) { return json::array({b.x0, b.y0, b.x1, b.y1}); }

Box box_from_json(const json& j) {
  return Box{j.at(0).get<Scalar>(), j.at(1).get<Scalar>(), j.at(2).get<Scalar>(),
             j.at(3).get<Scalar>()};
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

}  // namespace

json sample_to_json(const VideoSample& s) {
  json objects = json::array();
  for (const auto& o : s.objects) {
    json motion = json::array();
    for (const auto& seg : o.motion_program) {
      motion.push_back({{"action", to_string(seg.action)},
                        {"start", seg.start_frame},
                        {"end", seg.end_frame},
                        {"path", to_string(seg.traj.kind)},
                        {"start_x", seg.traj.start_x},
                        {"start_y", seg.traj.start_y},
                        {"dir_x", seg.traj.dir_x},
                        {"dir_y", seg.traj.dir_y},
                        {"speed", seg.traj.speed},
                        {"amplitude", seg.traj.amplitude},
                        {"period", seg.traj.period},
                        {"phase", seg.traj.phase}});
    }
    objects.push_back({{"object_id", o.object_id},
                       {"category", to_string(o.category)},
                       {"color", to_string(o.appearance.color)},
                       {"size", to_string(o.appearance.size)},
                       {"texture", to_string(o.appearance.texture)},
                       {"motion", motion}});
  }

  json regions = json::array();
  for (const auto& frame : s.regions) {
    json fr = json::array();
    for (const auto& r : frame)
      fr.push_back({{"box", box_to_json(r.box)},
                    {"source", to_string(r.source)},
                    {"object_id", r.object_id}});
    regions.push_back(std::move(fr));
  }

  json expressions = json::array();
  for (const auto& c : s.expressions) {
    json tubes = json::array();
    for (const auto& tube : c.target_tubes) {
      json entries = json::array();
      for (const auto& [f, r] : tube.entries) entries.push_back(json::array({f, r}));
      tubes.push_back(std::move(entries));
    }
    json distractors = json::array();
    for (const auto& [fr, lbl] : c.distractor_labels)
      distractors.push_back(json::array({fr.first, fr.second, to_string(lbl)}));
    expressions.push_back({{"tokens", c.expression},
                           {"case_kind", to_string(c.kind)},
                           {"queried_action", to_string(c.queried_action)},
                           {"target_object_ids", c.target_object_ids},
                           {"target_tubes", tubes},
                           {"distractors", distractors}});
  }

  return json{{"video_id", s.video_id}, {"width", s.width},
              {"height", s.height},     {"num_frames", s.num_frames},
              {"fps", s.fps},           {"objects", objects},
              {"regions", regions},     {"expressions", expressions}};
}

VideoSample sample_from_json(const json& j) {
  VideoSample s;
  s.video_id = j.at("video_id").get<std::string>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.num_frames = j.at("num_frames").get<int>();
  s.fps = j.at("fps").get<Scalar>();
  for (const auto& jo : j.at("objects")) {
    SceneObject o;
    o.object_id = jo.at("object_id").get<int>();
    o.category = category_from(jo.at("category").get<std::string>());
    o.appearance.color = color_from(jo.at("color").get<std::string>());
    o.appearance.size = size_from(jo.at("size").get<std::string>());
    o.appearance.texture = texture_from(jo.at("texture").get<std::string>());
    for (const auto& jm : jo.at("motion")) {
      MotionSegment seg;
      seg.action = action_from(jm.at("action").get<std::string>());
      seg.start_frame = jm.at("start").get<int>();
      seg.end_frame = jm.at("end").get<int>();
      seg.traj.kind = path_from(jm.at("path").get<std::string>());
      seg.traj.start_x = jm.at("start_x").get<Scalar>();
      seg.traj.start_y = jm.at("start_y").get<Scalar>();
      seg.traj.dir_x = jm.at("dir_x").get<Scalar>();
      seg.traj.dir_y = jm.at("dir_y").get<Scalar>();
      seg.traj.speed = jm.at("speed").get<Scalar>();
      seg.traj.amplitude = jm.at("amplitude").get<Scalar>();
      seg.traj.period = jm.at("period").get<Scalar>();
      seg.traj.phase = jm.at("phase").get<Scalar>();
      o.motion_program.push_back(seg);
    }
    s.objects.push_back(std::move(o));
  }
  for (const auto& jf : j.at("regions")) {
    std::vector<RegionRecord> frame;
    for (const auto& jr : jf) {
      RegionRecord r;
      r.box = box_from_json(jr.at("box"));
      r.source = source_from(jr.at("source").get<std::string>());
      r.object_id = jr.at("object_id").get<int>();
      frame.push_back(r);
    }
    s.regions.push_back(std::move(frame));
  }
  for (const auto& jc : j.at("expressions")) {
    ReferringCase c;
    c.expression = jc.at("tokens").get<std::vector<std::string>>();
    c.kind = case_kind_from(jc.at("case_kind").get<std::string>());
    c.queried_action = action_from(jc.at("queried_action").get<std::string>());
    c.target_object_ids = jc.at("target_object_ids").get<std::vector<int>>();
    for (const auto& jt : jc.at("target_tubes")) {
      TubeRef tube;
      for (const auto& je : jt)
        tube.entries.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
      c.target_tubes.push_back(std::move(tube));
    }
    for (const auto& jd : jc.at("distractors")) {
      c.distractor_labels[{jd.at(0).get<int>(), jd.at(1).get<int>()}] =
          label_from(jd.at(2).get<std::string>());
    }
    s.expressions.push_back(std::move(c));
  }
  return s;
}

void write_dataset(const std::string& path, const std::vector<VideoSample>& samples,
                   const RunManifest& manifest) {
  auto out = open_out(path);
  out << json{{"schema", kDatasetSchema}, {"manifest", manifest.to_json()}}.dump()
      << "\n";
  for (const auto& s : samples) out << sample_to_json(s).dump() << "\n";
}

std::vector<VideoSample> read_dataset(const std::string& path, RunManifest* manifest) {
  auto in = open_in(path);
  std::vector<VideoSample> samples;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (first) {
      first = false;
      if (j.contains("schema")) {
        if (j.at("schema").get<std::string>() != kDatasetSchema)
          throw std::runtime_error("unexpected dataset schema in " + path);
        if (manifest && j.contains("manifest"))
          *manifest = RunManifest::from_json(j.at("manifest"));
        continue;
      }
    }
    samples.push_back(sample_from_json(j));
  }
  return samples;
}

json grounding_to_json(const GroundingResult& r, const VideoSample& sample) {
  json tubes = json::array();
  for (const auto& tube : r.tubes) {
    json entries = json::array(), boxes = json::array(), segs = json::array();
    for (const auto& [f, reg] : tube.entries) {
      entries.push_back(json::array({f, reg}));
      boxes.push_back(box_to_json(
          sample.regions[static_cast<std::size_t>(f)][static_cast<std::size_t>(reg)].box));
    }
    for (const auto& [s0, s1] : tube.segments) segs.push_back(json::array({s0, s1}));
    tubes.push_back({{"score", tube.score},
                     {"link_reward_total", tube.link_reward_total},
                     {"entries", entries},
                     {"boxes", boxes},
                     {"segments", segs}});
  }
  json scores = json::array();
  for (const auto& [f, reg, c] : r.region_scores)
    scores.push_back(json::array({f, reg, c}));
  return json{{"video_id", r.video_id},
              {"expression_idx", r.expression_idx},
              {"tubes", tubes},
              {"region_scores", scores}};
}

void write_predictions(const std::string& path,
                       const std::vector<GroundingResult>& results,
                       const std::vector<VideoSample>& samples,
                       const RunManifest& manifest) {
  std::map<std::string, const VideoSample*> by_id;
  for (const auto& s : samples) by_id[s.video_id] = &s;
  auto out = open_out(path);
  out << json{{"schema", kPredictionSchema}, {"manifest", manifest.to_json()}}.dump()
      << "\n";
  for (const auto& r : results) {
    auto it = by_id.find(r.video_id);
    if (it == by_id.end())
      throw std::runtime_error("prediction for unknown video " + r.video_id);
    out << grounding_to_json(r, *it->second).dump() << "\n";
  }
}

std::vector<CasePrediction> read_predictions(const std::string& path,
                                             RunManifest* manifest) {
  auto in = open_in(path);
  std::vector<CasePrediction> preds;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (first) {
      first = false;
      if (j.contains("schema")) {
        if (j.at("schema").get<std::string>() != kPredictionSchema)
          throw std::runtime_error("unexpected prediction schema in " + path);
        if (manifest && j.contains("manifest"))
          *manifest = RunManifest::from_json(j.at("manifest"));
        continue;
      }
    }
    CasePrediction p;
    p.video_id = j.at("video_id").get<std::string>();
    p.expression_idx = j.at("expression_idx").get<int>();
    for (const auto& jt : j.at("tubes")) {
      BoxTrack track;
      const auto& entries = jt.at("entries");
      const auto& boxes = jt.at("boxes");
      for (std::size_t i = 0; i < entries.size(); ++i)
        track.entries.emplace_back(entries[i].at(0).get<int>(),
                                   box_from_json(boxes[i]));
      p.tubes.push_back(std::move(track));
    }
    preds.push_back(std::move(p));
  }
  return preds;
}

std::vector<GroundingResult> read_grounding_results(const std::string& path,
                                                    RunManifest* manifest) {
  auto in = open_in(path);
  std::vector<GroundingResult> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (first) {
      first = false;
      if (j.contains("schema")) {
        if (manifest && j.contains("manifest"))
          *manifest = RunManifest::from_json(j.at("manifest"));
        continue;
      }
    }
    GroundingResult r;
    r.video_id = j.at("video_id").get<std::string>();
    r.expression_idx = j.at("expression_idx").get<int>();
    for (const auto& jt : j.at("tubes")) {
      Tube tube;
      for (const auto& je : jt.at("entries"))
        tube.entries.emplace_back(je.at(0).get<int>(), je.at(1).get<int>());
      for (const auto& js : jt.at("segments"))
        tube.segments.emplace_back(js.at(0).get<int>(), js.at(1).get<int>());
      tube.score = jt.at("score").get<Scalar>();
      tube.link_reward_total = jt.at("link_reward_total").get<Scalar>();
      r.tubes.push_back(std::move(tube));
    }
    for (const auto& js : j.at("region_scores"))
      r.region_scores.emplace_back(js.at(0).get<int>(), js.at(1).get<int>(),
                                   js.at(2).get<Scalar>());
    out.push_back(std::move(r));
  }
  return out;
}

json report_to_json(const EvalReport& report, const RunManifest& manifest) {
  auto at_map = [](const std::map<Scalar, Scalar>& m) {
    json out = json::object();
    char key[8];
    for (const auto& [r, v] : m) {
      std::snprintf(key, sizeof(key), "%.1f", r);
      out[key] = v;
    }
    return out;
  };
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"video_id", row.video_id},
                    {"expression_idx", row.expression_idx},
                    {"case_kind", to_string(row.kind)},
                    {"viou", row.viou},
                    {"tiou", row.tiou},
                    {"viou_at", at_map(row.viou_at)},
                    {"tiou_at", at_map(row.tiou_at)},
                    {"missing_prediction", row.missing_prediction}});
  }
  return json{{"schema", kReportSchema},
              {"manifest", manifest.to_json()},
              {"split", to_string(report.split)},
              {"m_viou", report.m_viou},
              {"viou_at", at_map(report.viou_at)},
              {"m_tiou", report.m_tiou},
              {"tiou_at", at_map(report.tiou_at)},
              {"num_cases", report.num_cases},
              {"num_missing", report.num_missing},
              {"rows", rows}};
}

void write_report(const std::string& path, const EvalReport& report,
                  const RunManifest& manifest) {
  auto out = open_out(path);
  out << report_to_json(report, manifest).dump(2) << "\n";
}

void write_train_log(const std::string& path, const std::vector<TrainLogEntry>& log,
                     const RunManifest& manifest) {
  auto out = open_out(path);
  out << json{{"schema", "trainlog/1"}, {"manifest", manifest.to_json()}}.dump()
      << "\n";
  for (const auto& e : log) {
    out << json{{"step", e.step},
                {"l_c", e.loss.l_c},
                {"l_d", e.loss.l_d},
                {"l_total", e.loss.l_total},
                {"lambda", e.loss.lambda}}
               .dump()
        << "\n";
  }
}

// --- checkpoint -----------------------------------------------------------

void save_checkpoint(const std::string& path, const Checkpoint& ckpt,
                     const RunManifest& manifest) {
  json tensors = json::array();
  std::vector<const Mat*> order;
  ckpt.params.for_each_tensor([&](const std::string& name, const Mat& m) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
    order.push_back(&m);
  });
  json header{{"schema", "ckpt/1"},
              {"manifest", manifest.to_json()},
              {"config", train_config_to_json(ckpt.config)},
              {"vocab", ckpt.vocab.tokens},
              {"step", ckpt.step},
              {"rng_state", ckpt.rng_state},
              {"tensors", tensors}};
  const std::string header_str = header.dump();

  auto out = open_out(path);
  out.write(kCheckpointMagic, 8);
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  for (const Mat* m : order)
    out.write(reinterpret_cast<const char*>(m->data()),
              static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(m->size())));
}

Checkpoint load_checkpoint(const std::string& path, RunManifest* manifest) {
  auto in = open_in(path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    throw std::runtime_error("not a checkpoint file: " + path);
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  json header = json::parse(header_str);

  Checkpoint ckpt;
  ckpt.config = train_config_from_json(header.at("config"));
  ckpt.step = header.at("step").get<long>();
  const auto rng = header.at("rng_state").get<std::vector<std::uint64_t>>();
  std::copy(rng.begin(), rng.end(), ckpt.rng_state.begin());
  ckpt.vocab.tokens.clear();
  ckpt.vocab.index.clear();
  for (const auto& t : header.at("vocab")) {
    const std::string tok = t.get<std::string>();
    ckpt.vocab.index.emplace(tok, static_cast<int>(ckpt.vocab.tokens.size()));
    ckpt.vocab.tokens.push_back(tok);
  }
  if (manifest && header.contains("manifest"))
    *manifest = RunManifest::from_json(header.at("manifest"));

  Rng init(0);
  ckpt.params = ModelParameters::init(ckpt.config.model, ckpt.vocab.size(), init);
  std::vector<Mat*> order;
  ckpt.params.for_each_tensor([&](const std::string&, Mat& m) { order.push_back(&m); });
  const auto& tensors = header.at("tensors");
  if (tensors.size() != order.size())
    throw std::runtime_error("checkpoint tensor count mismatch");
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Index rows = tensors[i].at("rows").get<Index>();
    const Index cols = tensors[i].at("cols").get<Index>();
    order[i]->resize(rows, cols);
    in.read(reinterpret_cast<char*>(order[i]->data()),
            static_cast<std::streamsize>(sizeof(Scalar) * static_cast<std::size_t>(rows * cols)));
  }
  if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  return ckpt;
}

json graph_to_json(const DualGraph& g) {
  json nodes = json::array();
  for (const auto& n : g.nodes)
    nodes.push_back({{"frame", n.frame}, {"region", n.region}, {"valid", n.valid}});
  return json{{"nodes", nodes},
              {"spatial_adj", g.spatial_adj},
              {"temporal_adj", g.temporal_adj},
              {"num_valid", g.num_valid}};
}

// --- configs ---------------------------------------------------------------

json generator_config_to_json(const GeneratorConfig& c) {
  return json{{"width", c.width},
              {"height", c.height},
              {"min_frames", c.min_frames},
              {"max_frames", c.max_frames},
              {"min_objects", c.min_objects},
              {"max_objects", c.max_objects},
              {"fps", c.fps},
              {"node_budget", c.node_budget},
              {"jitter_noise", c.jitter_noise},
              {"jitters_per_gt", c.jitters_per_gt},
              {"background_per_frame", c.background_per_frame},
              {"min_gap", c.min_gap},
              {"max_gap", c.max_gap},
              {"max_same_category", c.max_same_category},
              {"cases_per_video", c.cases_per_video},
              {"case_mix", c.case_mix},
              {"min_segment_frames", c.min_segment_frames},
              {"p_absent_outside", c.p_absent_outside}};
}

GeneratorConfig generator_config_from_json(const json& j) {
  GeneratorConfig c;
  c.width = j.value("width", c.width);
  c.height = j.value("height", c.height);
  c.min_frames = j.value("min_frames", c.min_frames);
  c.max_frames = j.value("max_frames", c.max_frames);
  c.min_objects = j.value("min_objects", c.min_objects);
  c.max_objects = j.value("max_objects", c.max_objects);
  c.fps = j.value("fps", c.fps);
  c.node_budget = j.value("node_budget", c.node_budget);
  c.jitter_noise = j.value("jitter_noise", c.jitter_noise);
  c.jitters_per_gt = j.value("jitters_per_gt", c.jitters_per_gt);
  c.background_per_frame = j.value("background_per_frame", c.background_per_frame);
  c.min_gap = j.value("min_gap", c.min_gap);
  c.max_gap = j.value("max_gap", c.max_gap);
  c.max_same_category = j.value("max_same_category", c.max_same_category);
  c.cases_per_video = j.value("cases_per_video", c.cases_per_video);
  if (j.contains("case_mix")) {
    const auto m = j.at("case_mix").get<std::vector<Scalar>>();
    for (std::size_t i = 0; i < 3 && i < m.size(); ++i) c.case_mix[i] = m[i];
  }
  c.min_segment_frames = j.value("min_segment_frames", c.min_segment_frames);
  c.p_absent_outside = j.value("p_absent_outside", c.p_absent_outside);
  return c;
}

json train_config_to_json(const TrainConfig& c) {
  return json{{"lambda", c.lambda},
              {"negative_ratio", c.negative_ratio},
              {"max_positives", c.max_positives},
              {"learning_rate", c.learning_rate},
              {"steps", c.steps},
              {"seed", c.seed},
              {"flags",
               {{"sgb", c.flags.sgb},
                {"tgb", c.flags.tgb},
                {"scl", c.flags.scl},
                {"tcl", c.flags.tcl},
                {"sa", c.flags.sa},
                {"ca", c.flags.ca}}},
              {"model",
               {{"d_a", c.model.d_a},
                {"d_m", c.model.d_m},
                {"d_p", c.model.d_p},
                {"d_h", c.model.d_h},
                {"d_c", c.model.d_c},
                {"d_tok", c.model.d_tok},
                {"d_lstm", c.model.d_lstm},
                {"graph_layers", c.model.graph_layers},
                {"leaky_slope", c.model.leaky_slope},
                {"dropout", c.model.dropout},
                {"max_tokens", c.model.max_tokens},
                {"pad_to_length", c.model.pad_to_length},
                {"pool_tokens", c.model.pool_tokens},
                {"eq3_literal", c.model.eq3_literal}}},
              {"graph",
               {{"k_spatial", c.graph.k_spatial},
                {"k_temporal", c.graph.k_temporal},
                {"temporal_window", c.graph.temporal_window},
                {"node_budget", c.graph.node_budget}}},
              {"features",
               {{"d_a", c.features.d_a},
                {"d_m", c.features.d_m},
                {"d_p", c.features.d_p},
                {"noise_sigma", c.features.noise_sigma},
                {"motion_window", c.features.motion_window}}},
              {"link",
               {{"theta_keep", c.link.theta_keep},
                {"min_segment_len", c.link.min_segment_len},
                {"num_seeds", c.link.num_seeds},
                {"nms_threshold", c.link.nms_threshold}}}};
}

TrainConfig train_config_from_json(const json& j) {
  TrainConfig c;
  c.lambda = j.value("lambda", c.lambda);
  c.negative_ratio = j.value("negative_ratio", c.negative_ratio);
  c.max_positives = j.value("max_positives", c.max_positives);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.steps = j.value("steps", c.steps);
  c.seed = j.value("seed", c.seed);
  if (j.contains("flags")) {
    const auto& f = j.at("flags");
    c.flags.sgb = f.value("sgb", true);
    c.flags.tgb = f.value("tgb", true);
    c.flags.scl = f.value("scl", true);
    c.flags.tcl = f.value("tcl", true);
    c.flags.sa = f.value("sa", true);
    c.flags.ca = f.value("ca", true);
  }
  if (j.contains("model")) {
    const auto& m = j.at("model");
    c.model.d_a = m.value("d_a", c.model.d_a);
    c.model.d_m = m.value("d_m", c.model.d_m);
    c.model.d_p = m.value("d_p", c.model.d_p);
    c.model.d_h = m.value("d_h", c.model.d_h);
    c.model.d_c = m.value("d_c", c.model.d_c);
    c.model.d_tok = m.value("d_tok", c.model.d_tok);
    c.model.d_lstm = m.value("d_lstm", c.model.d_lstm);
    c.model.graph_layers = m.value("graph_layers", c.model.graph_layers);
    c.model.leaky_slope = m.value("leaky_slope", c.model.leaky_slope);
    c.model.dropout = m.value("dropout", c.model.dropout);
    c.model.max_tokens = m.value("max_tokens", c.model.max_tokens);
    c.model.pad_to_length = m.value("pad_to_length", c.model.pad_to_length);
    c.model.pool_tokens = m.value("pool_tokens", c.model.pool_tokens);
    c.model.eq3_literal = m.value("eq3_literal", c.model.eq3_literal);
  }
  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    c.graph.k_spatial = g.value("k_spatial", c.graph.k_spatial);
    c.graph.k_temporal = g.value("k_temporal", c.graph.k_temporal);
    c.graph.temporal_window = g.value("temporal_window", c.graph.temporal_window);
    c.graph.node_budget = g.value("node_budget", c.graph.node_budget);
  }
  if (j.contains("features")) {
    const auto& f = j.at("features");
    c.features.d_a = f.value("d_a", c.features.d_a);
    c.features.d_m = f.value("d_m", c.features.d_m);
    c.features.d_p = f.value("d_p", c.features.d_p);
    c.features.noise_sigma = f.value("noise_sigma", c.features.noise_sigma);
    c.features.motion_window = f.value("motion_window", c.features.motion_window);
  }
  if (j.contains("link")) {
    const auto& l = j.at("link");
    c.link.theta_keep = l.value("theta_keep", c.link.theta_keep);
    c.link.min_segment_len = l.value("min_segment_len", c.link.min_segment_len);
    c.link.num_seeds = l.value("num_seeds", c.link.num_seeds);
    c.link.nms_threshold = l.value("nms_threshold", c.link.nms_threshold);
  }
  // Keep the model's feature dimensions in lockstep with the featurizer.
  c.model.d_a = c.features.d_a;
  c.model.d_m = c.features.d_m;
  c.model.d_p = c.features.d_p;
  return c;
}

json ablation_to_json(const std::vector<AblationRow>& rows,
                      const RunManifest& manifest) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"name", r.name},
                   {"flags",
                    {{"sgb", r.flags.sgb},
                     {"tgb", r.flags.tgb},
                     {"scl", r.flags.scl},
                     {"tcl", r.flags.tcl},
                     {"sa", r.flags.sa},
                     {"ca", r.flags.ca}}},
                   {"m_viou", r.m_viou},
                   {"per_seed", r.per_seed}});
  }
  return json{{"schema", "ablation/1"}, {"manifest", manifest.to_json()}, {"rows", out}};
}

}  // namespace dstg
