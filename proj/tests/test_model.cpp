#include <doctest.h>

#include <cmath>

#include "dstg/featurize.hpp"
#include "dstg/model.hpp"
#include "dstg/synthdata.hpp"

using namespace dstg;

namespace {

VideoSample tiny_sample(std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.min_frames = 16;
  cfg.max_frames = 16;
  return generate_video(cfg, seed);
}

DualGraph tiny_graph(const VideoSample& s, int budget = 256) {
  GraphConfig cfg;
  cfg.node_budget = budget;
  return build_dual_graph(s, cfg);
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("edge_scores reduces to the bias under zero weights") {
  ad::Tape t;
  Mat attn = Mat::Zero(5, 1);
  attn(4, 0) = 0.7;
  ad::Value e = edge_scores(t, t.leaf(Mat::Ones(2, 1)),
                            {t.leaf(Mat::Ones(2, 1)), t.leaf(Mat::Zero(2, 1))},
                            t.leaf(attn));
  CHECK(t.val(e)(0) == doctest::Approx(0.7));
  CHECK(t.val(e)(1) == doctest::Approx(0.7));
}

TEST_CASE("edge_scores equals the hand dot product") {
  ad::Tape t;
  // attn head = [a_self; a_nei], inputs x_i = (1, 0), x_j = (0, 1).
  Mat attn(5, 1);
  attn << 0.3, -0.2, 0.5, 0.9, 0.1;
  Mat xi(2, 1), xj(2, 1);
  xi << 1, 0;
  xj << 0, 1;
  ad::Value e = edge_scores(t, t.leaf(xi), {t.leaf(xj)}, t.leaf(attn));
  // 0.3*1 + (-0.2)*0 + 0.5*0 + 0.9*1 + bias 0.1
  CHECK(t.val(e)(0) == doctest::Approx(0.3 + 0.9 + 0.1).epsilon(1e-15));
}

TEST_CASE("identical neighbors get identical scores") {
  ad::Tape t;
  Rng rng(3);
  Mat attn(7, 1);
  for (Index i = 0; i < 7; ++i) attn(i) = rng.uniform(-1, 1);
  Mat x(3, 1), n(3, 1);
  x << 0.2, -0.4, 1.0;
  n << 0.9, 0.1, -0.3;
  ad::Value e = edge_scores(t, t.leaf(x), {t.leaf(n), t.leaf(n)}, t.leaf(attn));
  CHECK(t.val(e)(0) == t.val(e)(1));
}

TEST_CASE("normalize_attention hand cases") {
  ad::Tape t;
  ad::Value flat = normalize_attention(t.leaf((Mat(2, 1) << 1.3, 1.3).finished()), 0.2);
  CHECK(t.val(flat)(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.val(flat)(1) == doctest::Approx(0.5).epsilon(1e-12));

  ad::Value single = normalize_attention(t.leaf(Mat::Constant(1, 1, -3.0)), 0.2);
  CHECK(t.val(single)(0) == doctest::Approx(1.0));

  // Non-negative scores pass LeakyReLU unchanged: softmax(0, ln 3).
  ad::Value pair = normalize_attention(
      t.leaf((Mat(2, 1) << 0.0, std::log(3.0)).finished()), 0.2);
  CHECK(t.val(pair)(0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(t.val(pair)(1) == doctest::Approx(0.75).epsilon(1e-12));

  const Scalar sum = t.val(pair).sum();
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("update_node forms sigmoid of message plus residual") {
  ad::Tape t;
  // Zero message and zero residual: sigmoid(0) = 0.5 per coordinate.
  ad::Value h0 = update_node(t, t.leaf(Mat::Ones(1, 1)),
                             {t.leaf(Mat::Zero(3, 1))}, t.leaf(Mat::Zero(3, 1)));
  for (Index i = 0; i < 3; ++i) CHECK(t.val(h0)(i) == 0.5);

  // Single neighbor with alpha = 1: h = sigmoid(v + residual).
  Mat v(2, 1), res(2, 1);
  v << 0.4, -1.2;
  res << 0.1, 0.2;
  ad::Value h1 = update_node(t, t.leaf(Mat::Ones(1, 1)), {t.leaf(v)}, t.leaf(res));
  CHECK(t.val(h1)(0) == doctest::Approx(sigmoid(0.5)).epsilon(1e-15));
  CHECK(t.val(h1)(1) == doctest::Approx(sigmoid(-1.0)).epsilon(1e-15));

  // Two neighbors against a 64-bit hand computation.
  Mat a(2, 1), b(2, 1), alpha(2, 1);
  a << 0.25, -0.5;
  b << 1.5, 0.75;
  alpha << 0.3, 0.7;
  ad::Value h2 = update_node(t, t.leaf(alpha), {t.leaf(a), t.leaf(b)}, t.leaf(res));
  const Scalar e0 = 1.0 / (1.0 + std::exp(-(0.3 * 0.25 + 0.7 * 1.5 + 0.1)));
  const Scalar e1 = 1.0 / (1.0 + std::exp(-(0.3 * -0.5 + 0.7 * 0.75 + 0.2)));
  CHECK(t.val(h2)(0) == doctest::Approx(e0).epsilon(1e-12));
  CHECK(t.val(h2)(1) == doctest::Approx(e1).epsilon(1e-12));
}

TEST_CASE("encode matches an independent straight-line implementation") {
  const VideoSample s = tiny_sample(21);
  const DualGraph g = tiny_graph(s);
  FeatureConfig fcfg;
  const VideoFeatures feats = featurize_sample(s, fcfg);
  ModelConfig cfg;
  Rng rng(5);
  const ModelParameters p = ModelParameters::init(cfg, 10, rng);

  ad::Tape tape;
  const BoundModel bound = bind(tape, p, false);
  const EncodeResult enc = encode(tape, bound, cfg, AblationFlags{}, g, feats);

  // Reference: plain Eigen loops, no tape, same math.
  auto leaky = [&](Mat m) {
    for (Index i = 0; i < m.size(); ++i)
      if (m(i) <= 0) m(i) *= cfg.leaky_slope;
    return m;
  };
  auto run_branch = [&](const Mat& base, const std::vector<GraphLayerParams>& layers,
                        const std::vector<std::vector<int>>& adj) {
    std::vector<Mat> x(g.nodes.size());
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      if (!g.nodes[i].valid) continue;
      Mat in(base.rows() + cfg.d_p, 1);
      in << base.col(static_cast<Index>(i)),
          p.pos_proj * feats.pos_input.col(static_cast<Index>(i));
      x[i] = in;
    }
    for (const auto& layer : layers) {
      std::vector<Mat> next(g.nodes.size());
      const Index d_in = layer.proj.cols();
      const Mat a_self = layer.attn.topRows(d_in);
      const Mat a_nei = layer.attn.middleRows(d_in, d_in);
      const Scalar bias = layer.attn(2 * d_in, 0);
      for (std::size_t i = 0; i < g.nodes.size(); ++i) {
        if (!g.nodes[i].valid) continue;
        const Mat pi = layer.proj * x[i];
        if (adj[i].empty()) {
          next[i] = leaky((1.0 / (1.0 + (-pi.array()).exp())).matrix());
          continue;
        }
        Vec e(static_cast<Index>(adj[i].size()));
        for (std::size_t k = 0; k < adj[i].size(); ++k) {
          const Scalar raw = (a_self.transpose() * x[i])(0, 0) +
                             (a_nei.transpose() * x[static_cast<std::size_t>(adj[i][k])])(0, 0) +
                             bias;
          e(static_cast<Index>(k)) = raw > 0 ? raw : cfg.leaky_slope * raw;
        }
        const Vec ex = (e.array() - e.maxCoeff()).exp();
        const Vec alpha = ex / ex.sum();
        Mat msg = Mat::Zero(pi.rows(), 1);
        for (std::size_t k = 0; k < adj[i].size(); ++k)
          msg += alpha(static_cast<Index>(k)) *
                 (layer.proj * x[static_cast<std::size_t>(adj[i][k])]);
        next[i] = leaky((1.0 / (1.0 + (-(msg + pi).array()).exp())).matrix());
      }
      x = std::move(next);
    }
    return x;
  };
  const auto ref_s = run_branch(feats.appearance, p.spatial, g.spatial_adj);
  const auto ref_t = run_branch(feats.motion, p.temporal, g.temporal_adj);

  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!g.nodes[i].valid) {
      CHECK(tape.val(enc.h_s[i]).norm() == 0.0);
      continue;
    }
    CHECK((tape.val(enc.h_s[i]) - ref_s[i]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((tape.val(enc.h_t[i]) - ref_t[i]).cwiseAbs().maxCoeff() < 1e-10);
    Mat cat(2 * cfg.d_h, 1);
    cat << ref_s[i], ref_t[i];
    CHECK((tape.val(enc.h[i]) - cat).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("isolated node passes through the residual projection") {
  VideoSample s;
  s.video_id = "iso";
  s.width = s.height = 64;
  s.num_frames = 2;
  s.regions.resize(2);
  s.regions[0].push_back({Box{10, 10, 20, 20}, RegionSource::ground_truth, 0});
  GraphConfig gcfg;
  gcfg.node_budget = 3;
  const DualGraph g = build_dual_graph(s, gcfg);
  REQUIRE(g.num_valid == 1);
  REQUIRE(g.spatial_adj[0].empty());

  FeatureConfig fcfg;
  const VideoFeatures feats = featurize_sample(s, fcfg);
  ModelConfig cfg;
  Rng rng(6);
  const ModelParameters p = ModelParameters::init(cfg, 4, rng);

  ad::Tape tape;
  const BoundModel bound = bind(tape, p, false);
  const EncodeResult enc = encode(tape, bound, cfg, AblationFlags{}, g, feats);

  Mat x(cfg.spatial_in(), 1);
  x << feats.appearance.col(0), p.pos_proj * feats.pos_input.col(0);
  Mat h = x;
  for (const auto& layer : p.spatial) {
    Mat pre = layer.proj * h;
    h = (1.0 / (1.0 + (-pre.array()).exp())).matrix();
    for (Index i = 0; i < h.size(); ++i)
      if (h(i) <= 0) h(i) *= cfg.leaky_slope;
  }
  CHECK((tape.val(enc.h_s[0]) - h).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("encode is permutation equivariant") {
  const VideoSample s = tiny_sample(31);
  FeatureConfig fcfg;
  fcfg.noise_sigma = 0;  // keep features a pure function of the region
  const VideoFeatures feats = featurize_sample(s, fcfg);
  ModelConfig cfg;
  Rng rng(7);
  const ModelParameters p = ModelParameters::init(cfg, 10, rng);
  GraphConfig gcfg;
  const DualGraph g = build_dual_graph(s, gcfg);

  ad::Tape tape;
  const EncodeResult enc = encode(tape, bind(tape, p, false), cfg, {}, g, feats);

  VideoSample rev = s;
  for (auto& frame : rev.regions) std::reverse(frame.begin(), frame.end());
  const VideoFeatures rfeats = featurize_sample(rev, fcfg);
  const DualGraph rg = build_dual_graph(rev, gcfg);
  ad::Tape rtape;
  const EncodeResult renc = encode(rtape, bind(rtape, p, false), cfg, {}, rg, rfeats);

  // Permutation map from original nodes to reversed nodes.
  std::map<std::pair<int, int>, int> node_of;
  for (std::size_t i = 0; i < rg.nodes.size(); ++i)
    if (rg.nodes[i].valid)
      node_of[{rg.nodes[i].frame, rg.nodes[i].region}] = static_cast<int>(i);
  int compared = 0;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    if (!g.nodes[i].valid) continue;
    const int nf = static_cast<int>(s.regions[static_cast<std::size_t>(g.nodes[i].frame)].size());
    const int j = node_of.at({g.nodes[i].frame, nf - 1 - g.nodes[i].region});
    CHECK((tape.val(enc.h_s[i]) - rtape.val(renc.h_s[static_cast<std::size_t>(j)]))
              .cwiseAbs().maxCoeff() < 1e-12);
    CHECK((tape.val(enc.h_t[i]) - rtape.val(renc.h_t[static_cast<std::size_t>(j)]))
              .cwiseAbs().maxCoeff() < 1e-12);
    ++compared;
  }
  CHECK(compared == g.num_valid);
}

TEST_CASE("cross_modal_attend matches analytic softmax") {
  // Three one-hot nodes and a compatibility vector (0, 0, ln 2).
  VideoSample s;
  s.num_frames = 1;
  DualGraph g;
  g.nodes = {{0, 0, true}, {0, 1, true}, {0, 2, true}, {-1, -1, false}};
  g.spatial_adj.resize(4);
  g.temporal_adj.resize(4);
  g.num_valid = 3;

  ad::Tape t;
  std::vector<ad::Value> h = {
      t.leaf((Mat(3, 1) << 1, 0, 0).finished()),
      t.leaf((Mat(3, 1) << 0, 1, 0).finished()),
      t.leaf((Mat(3, 1) << 0, 0, 1).finished()),
      t.leaf(Mat::Zero(3, 1))};
  Mat wc(3, 1);
  wc << 0.0, 0.0, std::log(2.0);
  ad::Value r = t.leaf(Mat::Ones(1, 1));

  const CrossModalResult cm =
      cross_modal_attend(t, h, g, r, t.leaf(wc), false, true);
  CHECK(t.val_scalar(cm.gamma[0]) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(t.val_scalar(cm.gamma[1]) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(t.val_scalar(cm.gamma[2]) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(t.val_scalar(cm.gamma[3]) == 0.0);  // masked

  Scalar sum = 0;
  for (int i = 0; i < 3; ++i) sum += t.val_scalar(cm.gamma[i]);
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

  // Attended embedding is gamma_i * h_i.
  CHECK(t.val(cm.h_att[2])(2, 0) == doctest::Approx(0.5).epsilon(1e-12));

  // Uniform weights when every compatibility agrees.
  std::vector<ad::Value> same = {h[0], h[0], h[0], t.leaf(Mat::Zero(3, 1))};
  const CrossModalResult uniform =
      cross_modal_attend(t, same, g, r, t.leaf(wc), false, true);
  for (int i = 0; i < 3; ++i)
    CHECK(t.val_scalar(uniform.gamma[i]) == doctest::Approx(1.0 / 3).epsilon(1e-12));

  // A single unmasked node takes all the weight.
  DualGraph g1;
  g1.nodes = {{0, 0, true}, {-1, -1, false}};
  g1.spatial_adj.resize(2);
  g1.temporal_adj.resize(2);
  g1.num_valid = 1;
  const CrossModalResult one = cross_modal_attend(
      t, {h[0], t.leaf(Mat::Zero(3, 1))}, g1, r, t.leaf(wc), false, true);
  CHECK(t.val_scalar(one.gamma[0]) == doctest::Approx(1.0));
}

TEST_CASE("eq3 literal composition is exposed but breaks normalization") {
  DualGraph g;
  g.nodes = {{0, 0, true}, {0, 1, true}};
  g.spatial_adj.resize(2);
  g.temporal_adj.resize(2);
  g.num_valid = 2;
  ad::Tape t;
  std::vector<ad::Value> h = {t.leaf((Mat(2, 1) << 1, 0).finished()),
                              t.leaf((Mat(2, 1) << 0, 1).finished())};
  Mat wc(2, 1);
  wc << 0.4, -0.3;
  ad::Value r = t.leaf(Mat::Ones(1, 1));
  const CrossModalResult lit = cross_modal_attend(t, h, g, r, t.leaf(wc), true, true);
  const Scalar sum = t.val_scalar(lit.gamma[0]) + t.val_scalar(lit.gamma[1]);
  CHECK(sum > 1.0);  // sigmoid of softmax outputs exceeds a distribution
}

TEST_CASE("correspondence_score hand cases") {
  ad::Tape t;
  // Orthogonal projections give sigmoid(0) = 0.5.
  Mat wh = Mat::Zero(2, 2), wr = Mat::Zero(2, 2);
  wh(0, 0) = 1;
  wr(1, 1) = 1;
  ad::Value h = t.leaf((Mat(2, 1) << 1, 0).finished());
  ad::Value r = t.leaf((Mat(2, 1) << 0, 1).finished());
  CHECK(t.val_scalar(correspondence_score(t, h, r, t.leaf(wh), t.leaf(wr))) ==
        doctest::Approx(0.5).epsilon(1e-15));

  // Dot product ln 3 gives 0.75.
  Mat wh2 = Mat::Identity(2, 2), wr2 = Mat::Identity(2, 2);
  ad::Value h2 = t.leaf((Mat(2, 1) << std::log(3.0), 0).finished());
  ad::Value r2 = t.leaf((Mat(2, 1) << 1, 0).finished());
  CHECK(t.val_scalar(correspondence_score(t, h2, r2, t.leaf(wh2), t.leaf(wr2))) ==
        doctest::Approx(0.75).epsilon(1e-12));

  // Scaling h scales the pre-sigmoid dot: monotone for positive dot.
  ad::Value h3 = t.leaf((Mat(2, 1) << 2 * std::log(3.0), 0).finished());
  CHECK(t.val_scalar(correspondence_score(t, h3, r2, t.leaf(wh2), t.leaf(wr2))) >
        0.75);
}

TEST_CASE("branch ablations sever the other modality") {
  const VideoSample s = tiny_sample(47);
  FeatureConfig fcfg;
  VideoFeatures feats = featurize_sample(s, fcfg);
  ModelConfig cfg;
  Rng rng(9);
  const ModelParameters p = ModelParameters::init(cfg, 12, rng);
  GraphConfig gcfg;
  const DualGraph g = build_dual_graph(s, gcfg);
  const std::vector<int> tokens = {2, 3, 4};

  auto run = [&](const AblationFlags& flags, const VideoFeatures& f) {
    ad::Tape tape;
    const ForwardResult fwd = forward_case(tape, bind(tape, p, false), cfg, flags,
                                           g, f, tokens, false, nullptr);
    std::vector<Scalar> c;
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
      if (g.nodes[i].valid) c.push_back(tape.val_scalar(fwd.c[i]));
    return c;
  };

  AblationFlags no_tgb;
  no_tgb.tgb = false;
  VideoFeatures scrambled = feats;
  Rng noise(11);
  for (Index i = 0; i < scrambled.motion.size(); ++i)
    scrambled.motion(i) = noise.uniform(-5, 5);
  CHECK(run(no_tgb, feats) == run(no_tgb, scrambled));

  AblationFlags no_sgb;
  no_sgb.sgb = false;
  VideoFeatures scrambled_app = feats;
  for (Index i = 0; i < scrambled_app.appearance.size(); ++i)
    scrambled_app.appearance(i) = noise.uniform(-5, 5);
  CHECK(run(no_sgb, feats) == run(no_sgb, scrambled_app));

  // With both branches live, motion scrambling must change the output.
  CHECK(run(AblationFlags{}, feats) != run(AblationFlags{}, scrambled));
}

}
