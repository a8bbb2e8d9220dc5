#include <doctest.h>

#include <cmath>

#include "dstg/featurize.hpp"
#include "dstg/objectives.hpp"
#include "dstg/trainer.hpp"

using namespace dstg;

namespace {

// Unit vector at angle theta; distance between two of them is sin(dtheta/2).
Vec unit2(Scalar theta) {
  Vec v(2);
  v << std::cos(theta), std::sin(theta);
  return v;
}

Vec at_distance(const Vec& anchor, Scalar d) {
  const Scalar theta = 2.0 * std::asin(d);
  const Scalar base = std::atan2(anchor[1], anchor[0]);
  return unit2(base + theta);
}

}  // namespace

TEST_SUITE("objectives") {

TEST_CASE("matching loss hand cases") {
  CHECK(matching_loss(0.5, 1) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(matching_loss(1.0 - 1e-9, 1) < 1e-6);
  CHECK(matching_loss(0.75, 0) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  // Clipping keeps the loss finite at the boundary.
  CHECK(std::isfinite(matching_loss(0.0, 1)));
  CHECK(std::isfinite(matching_loss(1.0, 0)));

  // The tape version agrees.
  ad::Tape t;
  CHECK(t.val_scalar(matching_loss(t, t.scalar(0.5), 1)) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(t.val_scalar(matching_loss(t, t.scalar(0.75), 0)) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("embedding distance hand cases") {
  Vec u(3);
  u << 1, 2, 3;
  CHECK(embedding_distance(u, u) == 0.0);
  CHECK(embedding_distance(u, Vec(-u)) == doctest::Approx(1.0).epsilon(1e-12));
  Vec a(2), b(2);
  a << 1, 0;
  b << 0, 1;
  CHECK(embedding_distance(a, b) ==
        doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
  // Zero vector: normalized to zero, distance to any unit vector is 0.5.
  CHECK(embedding_distance(Vec::Zero(2), b) == doctest::Approx(0.5));

  ad::Tape t;
  CHECK(t.val_scalar(embedding_distance(t, t.leaf(a), t.leaf(b))) ==
        doctest::Approx(std::sqrt(2.0) / 2).epsilon(1e-12));
}

TEST_CASE("consistency loss corner and arithmetic cases") {
  Vec anchor = unit2(0.3);
  // Perfect separation: positives identical, negatives antipodal.
  CHECK(consistency_loss(anchor, anchor, {anchor}, {anchor}, {Vec(-anchor)},
                         {Vec(-anchor)}) == doctest::Approx(0.0).epsilon(1e-12));
  // Worst case: positives antipodal, negatives identical.
  CHECK(consistency_loss(anchor, anchor, {Vec(-anchor)}, {Vec(-anchor)}, {anchor},
                         {anchor}) == doctest::Approx(4.0).epsilon(1e-12));
  // m = n = 1 with distances (0.2 pos, 0.9 neg) spatial, (0.3, 0.8) temporal.
  const Scalar expect = 0.2 + (1 - 0.9) + 0.3 + (1 - 0.8);
  CHECK(consistency_loss(anchor, anchor, {at_distance(anchor, 0.2)},
                         {at_distance(anchor, 0.3)}, {at_distance(anchor, 0.9)},
                         {at_distance(anchor, 0.8)}) ==
        doctest::Approx(expect).epsilon(1e-9));
  // Empty sets contribute nothing.
  CHECK(consistency_loss(anchor, anchor, {}, {}, {}, {}) == 0.0);
}

namespace {

struct LossFixture {
  VideoSample sample;
  DualGraph graph;
  VideoFeatures feats;
  ModelParameters params;
  CaseNodeLabels labels;
  std::vector<TrainingPair> pairs;
  std::vector<int> tokens;

  explicit LossFixture(std::uint64_t seed) {
    GeneratorConfig gcfg;
    sample = generate_video(gcfg, seed);
    GraphConfig g;
    graph = build_dual_graph(sample, g);
    FeatureConfig fcfg;
    feats = featurize_sample(sample, fcfg);
    ModelConfig mcfg;
    Rng rng(3);
    params = ModelParameters::init(mcfg, 20, rng);
    labels = label_nodes(sample, sample.expressions[0], graph);
    PairConfig pcfg;
    Rng prng(7);
    pairs = sample_pairs(sample.expressions[0], graph, labels, pcfg, prng);
    tokens = {2, 3, 4, 5};
  }

  LossValues loss(Scalar lambda, ad::Tape& tape, const AblationFlags& flags = {}) {
    BoundModel bound = bind(tape, params, false);
    ForwardResult fwd = forward_case(tape, bound, params.cfg, flags, graph, feats,
                                     tokens, false, nullptr);
    return total_loss(tape, fwd, graph, labels, pairs, lambda, flags);
  }
};

}  // namespace

TEST_CASE("total loss composes per the objective formula") {
  LossFixture fx(11);
  ad::Tape t0, t1, t2;
  const LossValues at0 = fx.loss(0.0, t0);
  const LossValues at02 = fx.loss(0.2, t1);
  const LossValues at04 = fx.loss(0.4, t2);

  // lambda = 0 collapses to the matching term exactly.
  CHECK(at0.breakdown.l_total == at0.breakdown.l_c);
  CHECK(at0.breakdown.l_d == 0.0);

  // Composition: L_total = L_c + lambda * L_d, with L_c unchanged by lambda.
  CHECK(at02.breakdown.l_c == at0.breakdown.l_c);
  CHECK(at02.breakdown.l_total ==
        doctest::Approx(at02.breakdown.l_c + 0.2 * at02.breakdown.l_d).epsilon(1e-12));
  // Doubling lambda moves only the consistency contribution.
  CHECK(at04.breakdown.l_c == at02.breakdown.l_c);
  CHECK(at04.breakdown.l_d == at02.breakdown.l_d);
  CHECK(at04.breakdown.l_total ==
        doctest::Approx(at02.breakdown.l_c + 0.4 * at02.breakdown.l_d).epsilon(1e-12));

  CHECK(at02.breakdown.l_d >= 0.0);
  CHECK(at02.breakdown.l_d <= 4.0 * static_cast<Scalar>(fx.pairs.size()));
}

TEST_CASE("scl/tcl flags drop their branch terms") {
  LossFixture fx(13);
  ad::Tape t0, t1, t2;
  AblationFlags scl_only;
  scl_only.tcl = false;
  AblationFlags tcl_only;
  tcl_only.scl = false;
  const Scalar both = fx.loss(1.0, t0).breakdown.l_d;
  const Scalar s_only = fx.loss(1.0, t1, scl_only).breakdown.l_d;
  const Scalar t_only = fx.loss(1.0, t2, tcl_only).breakdown.l_d;
  CHECK(both == doctest::Approx(s_only + t_only).epsilon(1e-9));
}

TEST_CASE("label_nodes marks targets, jitters and distractors") {
  LossFixture fx(17);
  const ReferringCase& c = fx.sample.expressions[0];
  int targets = 0, positives = 0, spatial = 0, temporal = 0, background = 0;
  for (std::size_t i = 0; i < fx.graph.nodes.size(); ++i) {
    if (!fx.graph.nodes[i].valid) {
      CHECK(fx.labels.y[i] == 0);
      continue;
    }
    targets += fx.labels.is_target_entry[i];
    positives += fx.labels.y[i];
    spatial += fx.labels.label[i] == DistractorLabel::spatial_distractor;
    temporal += fx.labels.label[i] == DistractorLabel::temporal_distractor;
    background += fx.labels.is_background[i];
  }
  int tube_entries = 0;
  for (const auto& tube : c.target_tubes)
    tube_entries += static_cast<int>(tube.entries.size());
  CHECK(targets == tube_entries);
  // Jittered copies double the positive count.
  CHECK(positives == 2 * tube_entries);
  CHECK(spatial > 0);
  CHECK(temporal > 0);
  CHECK(background > 0);
}

TEST_CASE("sample_pairs honors the negative ratio") {
  LossFixture fx(19);
  PairConfig cfg;
  cfg.negative_ratio = 5;
  cfg.max_positives = 2;
  Rng rng(5);
  const auto pairs =
      sample_pairs(fx.sample.expressions[0], fx.graph, fx.labels, cfg, rng);
  REQUIRE(!pairs.empty());
  for (const auto& p : pairs) {
    CHECK(p.positives.size() <= 2);
    // Want = ratio * positives; pools are large enough in generated videos.
    CHECK(p.negatives.size() <= 5 * p.positives.size());
    CHECK(p.negatives.size() >= 1);
    for (int q : p.negatives) {
      const bool is_neg = fx.labels.label[static_cast<std::size_t>(q)] !=
                              DistractorLabel::neutral ||
                          fx.labels.is_background[static_cast<std::size_t>(q)];
      CHECK(is_neg);
      CHECK(fx.labels.y[static_cast<std::size_t>(q)] == 0);
    }
    for (int q : p.positives) CHECK(fx.labels.is_target_entry[static_cast<std::size_t>(q)]);
  }
}

TEST_CASE("two positives at ratio five draw ten negatives") {
  // Hand-built labels: 3 target entries so each anchor has 2 positives.
  DualGraph g;
  const int n = 40;
  g.nodes.resize(n);
  g.spatial_adj.resize(n);
  g.temporal_adj.resize(n);
  CaseNodeLabels labels;
  labels.y.assign(n, 0);
  labels.label.assign(n, DistractorLabel::neutral);
  labels.is_target_entry.assign(n, 0);
  labels.is_background.assign(n, 0);
  for (int i = 0; i < n; ++i) g.nodes[static_cast<std::size_t>(i)] = {i / 4, i % 4, true};
  g.num_valid = n;
  for (int i : {0, 1, 2}) {
    labels.is_target_entry[static_cast<std::size_t>(i)] = 1;
    labels.y[static_cast<std::size_t>(i)] = 1;
  }
  for (int i = 3; i < 20; ++i)
    labels.label[static_cast<std::size_t>(i)] =
        i % 2 ? DistractorLabel::spatial_distractor
              : DistractorLabel::temporal_distractor;
  for (int i = 20; i < n; ++i) labels.is_background[static_cast<std::size_t>(i)] = 1;

  ReferringCase c;
  c.target_object_ids = {0};
  PairConfig cfg;
  cfg.negative_ratio = 5;
  Rng rng(9);
  const auto pairs = sample_pairs(c, g, labels, cfg, rng);
  REQUIRE(pairs.size() == 3);
  for (const auto& p : pairs) {
    CHECK(p.positives.size() == 2);
    CHECK(p.negatives.size() == 10);
  }
}

TEST_CASE("without labeled distractors negatives fall back to background") {
  DualGraph g;
  const int n = 12;
  g.nodes.resize(n);
  g.spatial_adj.resize(n);
  g.temporal_adj.resize(n);
  g.num_valid = n;
  CaseNodeLabels labels;
  labels.y.assign(n, 0);
  labels.label.assign(n, DistractorLabel::neutral);
  labels.is_target_entry.assign(n, 0);
  labels.is_background.assign(n, 0);
  for (int i = 0; i < n; ++i) g.nodes[static_cast<std::size_t>(i)] = {i / 3, i % 3, true};
  labels.is_target_entry[0] = labels.is_target_entry[1] = 1;
  for (int i = 2; i < n; ++i) labels.is_background[static_cast<std::size_t>(i)] = 1;

  ReferringCase c;
  PairConfig cfg;
  Rng rng(4);
  const auto pairs = sample_pairs(c, g, labels, cfg, rng);
  for (const auto& p : pairs)
    for (int q : p.negatives)
      CHECK(labels.is_background[static_cast<std::size_t>(q)] == 1);
}

TEST_CASE("sample_pairs is deterministic under a fixed seed") {
  LossFixture fx(23);
  PairConfig cfg;
  Rng r1(42), r2(42);
  const auto a = sample_pairs(fx.sample.expressions[0], fx.graph, fx.labels, cfg, r1);
  const auto b = sample_pairs(fx.sample.expressions[0], fx.graph, fx.labels, cfg, r2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].anchor == b[i].anchor);
    CHECK(a[i].positives == b[i].positives);
    CHECK(a[i].negatives == b[i].negatives);
  }
}

TEST_CASE("consistency loss decreases under gradient descent on a frozen case") {
  GeneratorConfig gcfg;
  TrainConfig cfg;
  cfg.steps = 50;
  cfg.learning_rate = 0.02;
  cfg.lambda = 0.5;
  cfg.model.dropout = 0.0;  // keep the objective deterministic
  std::vector<VideoSample> data = {generate_video(gcfg, 101)};
  std::vector<TrainLogEntry> log;
  train(data, cfg, &log);
  REQUIRE(log.size() == 50);
  // One case means every step optimizes the same objective; allow plateaus
  // but no real increases.
  for (std::size_t i = 1; i < log.size(); ++i)
    CHECK(log[i].loss.l_d <= log[i - 1].loss.l_d + 1e-6);
  CHECK(log.back().loss.l_d < log.front().loss.l_d);
}

}
