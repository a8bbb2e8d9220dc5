#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "dstg/io.hpp"
#include "dstg/trainer.hpp"

using namespace dstg;

namespace {

TrainConfig small_train_config() {
  TrainConfig cfg;
  cfg.model.d_a = 8;
  cfg.model.d_m = 6;
  cfg.model.d_p = 4;
  cfg.model.d_h = 6;
  cfg.model.d_c = 5;
  cfg.model.d_tok = 6;
  cfg.model.d_lstm = 5;
  cfg.features.d_a = 8;
  cfg.features.d_m = 6;
  cfg.features.d_p = 4;
  return cfg;
}

std::vector<VideoSample> small_dataset(int n, std::uint64_t base_seed = 500,
                                       GeneratorConfig cfg = {}) {
  std::vector<VideoSample> out;
  for (int i = 0; i < n; ++i)
    out.push_back(generate_video(cfg, base_seed + static_cast<std::uint64_t>(i)));
  return out;
}

bool params_equal(const ModelParameters& a, const ModelParameters& b) {
  bool equal = true;
  std::vector<const Mat*> av, bv;
  a.for_each_tensor([&](const std::string&, const Mat& m) { av.push_back(&m); });
  b.for_each_tensor([&](const std::string&, const Mat& m) { bv.push_back(&m); });
  if (av.size() != bv.size()) return false;
  for (std::size_t i = 0; i < av.size(); ++i)
    if (av[i]->rows() != bv[i]->rows() || av[i]->cols() != bv[i]->cols() ||
        (*av[i] - *bv[i]).cwiseAbs().maxCoeff() != 0.0)
      equal = false;
  return equal;
}

}  // namespace

TEST_SUITE("trainer") {

TEST_CASE("config validation catches bad settings") {
  TrainConfig cfg;
  cfg.flags.sgb = cfg.flags.tgb = false;
  CHECK(!validate_train_config(cfg).empty());
  cfg = TrainConfig{};
  cfg.lambda = -1;
  CHECK(!validate_train_config(cfg).empty());
  CHECK(validate_train_config(TrainConfig{}).empty());
}

TEST_CASE("zero steps returns the initialization") {
  auto data = small_dataset(2);
  TrainConfig cfg = small_train_config();
  cfg.steps = 0;
  const Checkpoint ckpt = train(data, cfg);
  CHECK(ckpt.step == 0);

  std::vector<std::vector<std::string>> corpus;
  for (const auto& s : data)
    for (const auto& e : s.expressions) corpus.push_back(e.expression);
  const Vocabulary vocab = build_vocab(corpus);
  Rng rng(cfg.seed);
  const ModelParameters init = ModelParameters::init(cfg.model, vocab.size(), rng);
  CHECK(params_equal(ckpt.params, init));
}

TEST_CASE("training is deterministic given the seed") {
  auto data = small_dataset(3);
  TrainConfig cfg = small_train_config();
  cfg.steps = 12;
  const Checkpoint a = train(data, cfg);
  const Checkpoint b = train(data, cfg);
  CHECK(params_equal(a.params, b.params));

  cfg.seed = 999;
  const Checkpoint c = train(data, cfg);
  CHECK(!params_equal(a.params, c.params));
}

TEST_CASE("matching loss drops over 300 steps on 20 easy videos") {
  GeneratorConfig gcfg;
  gcfg.case_mix = {1, 0, 0};
  auto data = small_dataset(20, 900, gcfg);
  TrainConfig cfg;
  cfg.steps = 300;
  std::vector<TrainLogEntry> log;
  train(data, cfg, &log);
  REQUIRE(log.size() == 300);
  Scalar first = 0, last = 0;
  for (int i = 0; i < 20; ++i) {
    first += log[static_cast<std::size_t>(i)].loss.l_c;
    last += log[log.size() - 20 + static_cast<std::size_t>(i)].loss.l_c;
  }
  CHECK(last < first);
}

TEST_CASE("gradients match finite differences for both lambdas") {
  TrainConfig cfg = small_train_config();
  SUBCASE("lambda 0.2") {
    cfg.lambda = 0.2;
    const GradCheckReport report = grad_check(cfg);
    CAPTURE(report.max_rel_err);
    CHECK(report.max_rel_err < 1e-4);
  }
  SUBCASE("lambda 0") {
    cfg.lambda = 0.0;
    const GradCheckReport report = grad_check(cfg);
    CHECK(report.max_rel_err < 1e-4);
  }
}

TEST_CASE("the harness notices a corrupted gradient") {
  TrainConfig cfg = small_train_config();
  const std::string tensor = "w_h";
  const GradCheckReport report = grad_check(cfg, &tensor);
  CHECK(report.per_tensor.at("w_h") > 1e-2);
}

TEST_CASE("checkpoint save-load-save is byte identical") {
  auto data = small_dataset(2);
  TrainConfig cfg = small_train_config();
  cfg.steps = 4;
  const Checkpoint ckpt = train(data, cfg);

  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "dstg_ckpt_test";
  fs::create_directories(dir);
  const std::string p1 = (dir / "a.bin").string();
  const std::string p2 = (dir / "b.bin").string();
  RunManifest manifest = RunManifest::make("test ckpt");
  save_checkpoint(p1, ckpt, manifest);
  RunManifest loaded_manifest;
  const Checkpoint loaded = load_checkpoint(p1, &loaded_manifest);
  save_checkpoint(p2, loaded, loaded_manifest);

  std::ifstream f1(p1, std::ios::binary), f2(p2, std::ios::binary);
  std::string b1((std::istreambuf_iterator<char>(f1)), {});
  std::string b2((std::istreambuf_iterator<char>(f2)), {});
  CHECK(b1 == b2);
  CHECK(params_equal(ckpt.params, loaded.params));
  CHECK(loaded.vocab.tokens == ckpt.vocab.tokens);
  CHECK(loaded.step == ckpt.step);
  CHECK(loaded.rng_state == ckpt.rng_state);
}

TEST_CASE("disabling cross-attention severs the expression pathway") {
  auto data = small_dataset(2);
  TrainConfig cfg = small_train_config();
  cfg.steps = 4;
  cfg.flags.ca = false;
  const Checkpoint ckpt = train(data, cfg);

  const VideoSample& s = data[0];
  const VideoFeatures feats = featurize_sample(s, cfg.features);
  const DualGraph graph = build_dual_graph(s, cfg.graph);

  auto gammas = [&](const std::vector<int>& tokens, const AblationFlags& flags) {
    ad::Tape tape;
    BoundModel bound = bind(tape, ckpt.params, false);
    ForwardResult fwd = forward_case(tape, bound, cfg.model, flags, graph, feats,
                                     tokens, false, nullptr);
    std::vector<Scalar> g;
    for (std::size_t i = 0; i < graph.nodes.size(); ++i)
      g.push_back(tape.val_scalar(fwd.gamma[i]));
    return g;
  };

  AblationFlags no_ca = cfg.flags;
  const auto g1 = gammas({2, 3, 4}, no_ca);
  const auto g2 = gammas({5, 6}, no_ca);
  CHECK(g1 == g2);  // uniform attention regardless of the expression

  AblationFlags with_ca = cfg.flags;
  with_ca.ca = true;
  CHECK(gammas({2, 3, 4}, with_ca) != gammas({5, 6}, with_ca));
}

TEST_CASE("divergence is reported with its step") {
  auto data = small_dataset(2);
  TrainConfig cfg = small_train_config();
  cfg.steps = 40;
  cfg.learning_rate = 1e18;  // drive the parameters to overflow
  cfg.lambda = 0.2;
  try {
    train(data, cfg);
    // Saturated losses may keep the run finite; that is acceptable.
  } catch (const TrainingDiverged& e) {
    CHECK(e.step() >= 0);
    CHECK(std::string(e.what()).find("diverged") != std::string::npos);
  }
}

TEST_CASE("run_ablation emits the seven table rows end to end") {
  GeneratorConfig gcfg;
  auto data = small_dataset(8, 1200, gcfg);
  TrainConfig base = small_train_config();
  base.steps = 10;
  const auto rows = run_ablation(data, base, {1});
  REQUIRE(rows.size() == 7);
  CHECK(rows[0].name == "SGB");
  CHECK(rows.back().name == "DSTG");
  for (const auto& r : rows) {
    CHECK(r.per_seed.size() == 1);
    CHECK(r.m_viou >= 0.0);
    CHECK(r.m_viou <= 1.0);
  }
  // Row 1 runs with the temporal branch disabled end to end.
  CHECK(!rows[0].flags.tgb);
  CHECK(rows[0].flags.sgb);
}

TEST_CASE("median helper") {
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(median({}) == 0);
}

}
