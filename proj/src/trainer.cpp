#include "dstg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dstg {

std::vector<std::string> validate_train_config(const TrainConfig& cfg) {
  std::vector<std::string> out;
  if (!cfg.flags.sgb && !cfg.flags.tgb)
    out.push_back("at least one of SGB/TGB must be enabled");
  if (cfg.lambda < 0) out.push_back("lambda must be >= 0");
  if (cfg.negative_ratio < 0) out.push_back("negative_ratio must be >= 0");
  if (cfg.learning_rate <= 0) out.push_back("learning_rate must be > 0");
  if (cfg.steps < 0) out.push_back("steps must be >= 0");
  for (auto& s : validate_feature_config(cfg.features)) out.push_back(s);
  return out;
}

Scalar median(std::vector<Scalar> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

namespace {

struct PreparedCase {
  int video = 0;
  int expression = 0;
  std::vector<int> token_ids;
  CaseNodeLabels labels;
};

struct PreparedData {
  std::vector<VideoFeatures> features;  // per video
  std::vector<DualGraph> graphs;        // per video
  std::vector<PreparedCase> cases;
};

PreparedData prepare(const std::vector<VideoSample>& data, const TrainConfig& cfg,
                     const Vocabulary& vocab) {
  PreparedData p;
  p.features.reserve(data.size());
  p.graphs.reserve(data.size());
  for (std::size_t v = 0; v < data.size(); ++v) {
    p.features.push_back(featurize_sample(data[v], cfg.features));
    p.graphs.push_back(build_dual_graph(data[v], cfg.graph));
    for (std::size_t e = 0; e < data[v].expressions.size(); ++e) {
      PreparedCase c;
      c.video = static_cast<int>(v);
      c.expression = static_cast<int>(e);
      c.token_ids = prepare_token_ids(data[v].expressions[e].expression, vocab,
                                      cfg.model.max_tokens, cfg.model.pad_to_length);
      c.labels = label_nodes(data[v], data[v].expressions[e], p.graphs[v]);
      p.cases.push_back(std::move(c));
    }
  }
  return p;
}

}  // namespace

Checkpoint train(const std::vector<VideoSample>& data, const TrainConfig& cfg,
                 std::vector<TrainLogEntry>* log) {
  {
    auto issues = validate_train_config(cfg);
    if (!issues.empty()) {
      std::string msg = "invalid train config:";
      for (const auto& s : issues) msg += " " + s + ";";
      throw std::invalid_argument(msg);
    }
  }
  if (data.empty()) throw std::invalid_argument("train: empty dataset");

  std::vector<std::vector<std::string>> corpus;
  for (const auto& s : data)
    for (const auto& e : s.expressions) corpus.push_back(e.expression);
  Vocabulary vocab = build_vocab(corpus);

  Rng master(cfg.seed);
  ModelParameters params = ModelParameters::init(cfg.model, vocab.size(), master);
  PreparedData prep = prepare(data, cfg, vocab);
  if (prep.cases.empty()) throw std::invalid_argument("train: no referring cases");

  PairConfig pair_cfg{cfg.negative_ratio, cfg.max_positives};
  ad::Tape tape;
  Rng train_rng = master.fork(0x7261696e);

  long step = 0;
  for (long epoch = 0; step < cfg.steps; ++epoch) {
    std::vector<int> order(prep.cases.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng epoch_rng = master.fork(0xe90c0000ULL + static_cast<std::uint64_t>(epoch));
    epoch_rng.shuffle(order);

    for (int idx : order) {
      if (step >= cfg.steps) break;
      const PreparedCase& c = prep.cases[static_cast<std::size_t>(idx)];
      const VideoSample& sample = data[static_cast<std::size_t>(c.video)];
      const DualGraph& graph = prep.graphs[static_cast<std::size_t>(c.video)];
      const ReferringCase& rcase =
          sample.expressions[static_cast<std::size_t>(c.expression)];

      tape.clear();
      BoundModel bound = bind(tape, params, true);
      ForwardResult fwd =
          forward_case(tape, bound, cfg.model, cfg.flags, graph,
                       prep.features[static_cast<std::size_t>(c.video)],
                       c.token_ids, true, &train_rng);
      const auto pairs = sample_pairs(rcase, graph, c.labels, pair_cfg, train_rng);
      LossValues loss = total_loss(tape, fwd, graph, c.labels, pairs, cfg.lambda,
                                   cfg.flags);
      if (!std::isfinite(loss.breakdown.l_total)) {
        std::ostringstream ss;
        ss << "training diverged at step " << step;
        throw TrainingDiverged(step, ss.str());
      }
      tape.backward(loss.total);
      ModelParameters grads = gradients(tape, bound, params);

      std::vector<Mat*> targets;
      params.for_each_tensor(
          [&](const std::string&, Mat& m) { targets.push_back(&m); });
      std::size_t ti = 0;
      grads.for_each_tensor([&](const std::string&, Mat& g) {
        *targets[ti++] -= cfg.learning_rate * g;
      });

      if (log) log->push_back({step, loss.breakdown});
      ++step;
    }
    if (prep.cases.empty()) break;
  }

  Checkpoint ckpt;
  ckpt.params = std::move(params);
  ckpt.config = cfg;
  ckpt.vocab = std::move(vocab);
  ckpt.step = step;
  ckpt.rng_state = train_rng.state();
  return ckpt;
}

// --- gradient check ----------------------------------------------------

namespace {

// Hand-built 2-frame, 4-region instance exercising every loss path: one
// target with a jittered copy, a spatial and a temporal distractor.
VideoSample tiny_instance() {
  VideoSample s;
  s.video_id = "gradcheck";
  s.width = 64;
  s.height = 64;
  s.num_frames = 2;
  s.fps = 6;

  SceneObject target;
  target.object_id = 0;
  target.category = Category::person;
  target.appearance = {Color::red, SizeClass::small, Texture::plain};
  target.motion_program = {{Action::walk, 0, 2, {PathKind::linear, 20, 20, 1, 0, 2, 0, 8, 0}}};
  SceneObject spatial;
  spatial.object_id = 1;
  spatial.category = Category::person;
  spatial.appearance = {Color::red, SizeClass::small, Texture::striped};
  spatial.motion_program = {{Action::stand, 0, 2, {PathKind::linear, 44, 20, 1, 0, 0, 0, 8, 0}}};
  SceneObject temporal;
  temporal.object_id = 2;
  temporal.category = Category::animal;
  temporal.appearance = {Color::blue, SizeClass::large, Texture::spotted};
  temporal.motion_program = {{Action::walk, 0, 2, {PathKind::linear, 20, 44, 1, 0, 2, 0, 8, 0}}};
  s.objects = {target, spatial, temporal};

  auto box_of = [&](const SceneObject& o, int f) {
    return trajectory_box(o.motion_program[0], size_to_side(o.appearance.size), f,
                          s.width, s.height);
  };
  for (int f = 0; f < 2; ++f) {
    std::vector<RegionRecord> frame;
    frame.push_back({box_of(target, f), RegionSource::ground_truth, 0});
    frame.push_back({box_of(spatial, f), RegionSource::ground_truth, 1});
    frame.push_back({box_of(temporal, f), RegionSource::ground_truth, 2});
    Box jit = box_of(target, f);
    jit.x0 += 1;
    jit.x1 += 1;
    frame.push_back({jit, RegionSource::jittered, 0});
    s.regions.push_back(std::move(frame));
  }

  ReferringCase c;
  c.kind = CaseKind::single_target_single_segment;
  c.target_object_ids = {0};
  c.queried_action = Action::walk;
  c.target_tubes = {{{{0, 0}, {1, 0}}}};
  for (int f = 0; f < 2; ++f) {
    c.distractor_labels[{f, 1}] = DistractorLabel::spatial_distractor;
    c.distractor_labels[{f, 2}] = DistractorLabel::temporal_distractor;
  }
  c.expression = {"the", "red", "small", "person", "is", "walking"};
  s.expressions.push_back(std::move(c));
  return s;
}

}  // namespace

GradCheckReport grad_check(const TrainConfig& cfg, const std::string* corrupt_tensor) {
  VideoSample sample = tiny_instance();
  GraphConfig gcfg = cfg.graph;
  gcfg.node_budget = 10;  // 8 regions + 2 masked pads
  const DualGraph graph = build_dual_graph(sample, gcfg);
  const VideoFeatures features = featurize_sample(sample, cfg.features);

  std::vector<std::vector<std::string>> corpus = {sample.expressions[0].expression};
  Vocabulary vocab = build_vocab(corpus);
  Rng init_rng(cfg.seed);
  ModelParameters params = ModelParameters::init(cfg.model, vocab.size(), init_rng);
  const auto token_ids = prepare_token_ids(sample.expressions[0].expression, vocab,
                                           cfg.model.max_tokens, cfg.model.pad_to_length);
  const CaseNodeLabels labels = label_nodes(sample, sample.expressions[0], graph);
  PairConfig pair_cfg{cfg.negative_ratio, cfg.max_positives};
  Rng pair_rng(cfg.seed ^ 0x9a195);
  const auto pairs =
      sample_pairs(sample.expressions[0], graph, labels, pair_cfg, pair_rng);

  // Dropout masks must be identical across evaluations, so every pass uses a
  // freshly seeded rng.
  auto eval_loss = [&](const ModelParameters& p, ad::Tape& tape, BoundModel* bound_out,
                       bool with_grad) {
    BoundModel bound = bind(tape, p, with_grad);
    Rng dropout_rng(cfg.seed ^ 0xd20);
    ForwardResult fwd = forward_case(tape, bound, cfg.model, cfg.flags, graph,
                                     features, token_ids, true, &dropout_rng);
    LossValues loss =
        total_loss(tape, fwd, graph, labels, pairs, cfg.lambda, cfg.flags);
    if (bound_out) *bound_out = bound;
    return loss;
  };

  ad::Tape tape;
  BoundModel bound;
  LossValues loss = eval_loss(params, tape, &bound, true);
  tape.backward(loss.total);
  ModelParameters analytic = gradients(tape, bound, params);

  if (corrupt_tensor) {
    analytic.for_each_tensor([&](const std::string& name, Mat& g) {
      if (name == *corrupt_tensor) g = (1.05 * g).eval() + Mat::Constant(g.rows(), g.cols(), 0.01);
    });
  }

  const Scalar h = 1e-5;
  GradCheckReport report;

  std::vector<std::pair<std::string, Mat*>> tensors;
  params.for_each_tensor([&](const std::string& name, Mat& m) {
    tensors.emplace_back(name, &m);
  });
  std::vector<std::pair<std::string, const Mat*>> analytic_tensors;
  analytic.for_each_tensor([&](const std::string& name, Mat& m) {
    analytic_tensors.emplace_back(name, &m);
  });

  for (std::size_t t = 0; t < tensors.size(); ++t) {
    Mat& m = *tensors[t].second;
    const Mat& g = *analytic_tensors[t].second;
    Scalar worst = 0;
    for (Index i = 0; i < m.size(); ++i) {
      const Scalar saved = m(i);
      m(i) = saved + h;
      ad::Tape tp;
      const Scalar up = eval_loss(params, tp, nullptr, false).breakdown.l_total;
      m(i) = saved - h;
      tp.clear();
      ad::Tape tm;
      const Scalar dn = eval_loss(params, tm, nullptr, false).breakdown.l_total;
      m(i) = saved;
      const Scalar numeric = (up - dn) / (2 * h);
      const Scalar rel =
          std::abs(g(i) - numeric) / std::max(1e-6, std::abs(g(i)) + std::abs(numeric));
      worst = std::max(worst, rel);
    }
    report.per_tensor[tensors[t].first] = worst;
    report.max_rel_err = std::max(report.max_rel_err, worst);
  }
  return report;
}

// --- evaluation helpers --------------------------------------------------

std::vector<CaseGroundTruth> dataset_ground_truths(
    const std::vector<VideoSample>& samples) {
  std::vector<CaseGroundTruth> out;
  for (const auto& s : samples) {
    for (std::size_t e = 0; e < s.expressions.size(); ++e) {
      CaseGroundTruth gt;
      gt.video_id = s.video_id;
      gt.expression_idx = static_cast<int>(e);
      gt.kind = s.expressions[e].kind;
      for (const auto& tube : s.expressions[e].target_tubes) {
        BoxTrack track;
        for (const auto& [f, r] : tube.entries)
          track.entries.emplace_back(
              f, s.regions[static_cast<std::size_t>(f)][static_cast<std::size_t>(r)].box);
        gt.tubes.push_back(std::move(track));
      }
      out.push_back(std::move(gt));
    }
  }
  return out;
}

CasePrediction to_case_prediction(const GroundingResult& result,
                                  const VideoSample& sample) {
  CasePrediction p;
  p.video_id = result.video_id;
  p.expression_idx = result.expression_idx;
  for (const auto& tube : result.tubes)
    p.tubes.push_back(tube_to_track(tube, sample));
  return p;
}

EvalReport evaluate_model(const std::vector<VideoSample>& samples,
                          const ModelParameters& params, const Vocabulary& vocab,
                          const GroundConfig& cfg, EvalSplit split) {
  std::vector<CasePrediction> preds;
  for (const auto& s : samples) {
    for (std::size_t e = 0; e < s.expressions.size(); ++e) {
      GroundingResult r = ground(s, static_cast<int>(e), params, vocab, cfg);
      preds.push_back(to_case_prediction(r, s));
    }
  }
  return match_and_score(preds, dataset_ground_truths(samples), split);
}

std::vector<AblationRow> run_ablation(const std::vector<VideoSample>& data,
                                      const TrainConfig& base,
                                      const std::vector<std::uint64_t>& seeds,
                                      Scalar holdout_fraction) {
  const std::size_t holdout =
      std::max<std::size_t>(1, static_cast<std::size_t>(
                                   std::lround(holdout_fraction * data.size())));
  const std::size_t split_at = data.size() > holdout ? data.size() - holdout : 1;
  std::vector<VideoSample> train_set(data.begin(), data.begin() + static_cast<long>(split_at));
  std::vector<VideoSample> eval_set(data.begin() + static_cast<long>(split_at), data.end());

  // Table rows: encoder branches, contrastive terms, decoder attention.
  std::vector<AblationRow> rows = {
      {"SGB", {true, false, false, false, false, false}, 0, {}},
      {"SGB+TGB", {true, true, false, false, false, false}, 0, {}},
      {"SGB+SCL", {true, false, true, false, false, false}, 0, {}},
      {"TGB+TCL", {false, true, false, true, false, false}, 0, {}},
      {"SGB+TGB+SCL+TCL", {true, true, true, true, false, false}, 0, {}},
      {"SGB+TGB+SCL+TCL+SA", {true, true, true, true, true, false}, 0, {}},
      {"DSTG", {true, true, true, true, true, true}, 0, {}},
  };

  for (auto& row : rows) {
    for (std::uint64_t seed : seeds) {
      TrainConfig cfg = base;
      cfg.flags = row.flags;
      cfg.seed = seed;
      Checkpoint ckpt = train(train_set, cfg);
      GroundConfig gcfg = cfg.ground_config();
      EvalReport report = evaluate_model(eval_set, ckpt.params, ckpt.vocab, gcfg,
                                         EvalSplit::all);
      row.per_seed.push_back(report.m_viou);
    }
    row.m_viou = median(row.per_seed);
  }
  return rows;
}

}  // namespace dstg
