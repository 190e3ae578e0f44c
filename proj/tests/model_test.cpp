#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "pf/model.hpp"
#include "pf/synth.hpp"

using namespace pf;

namespace {

// Small enough for finite differences: 8x8 input, two conv stages, latent 4.
ArchitectureSpec tiny_arch() {
  ArchitectureSpec s;
  s.input_size = 8;
  s.encoder = {{LayerKind::conv, 3, 2, 2, Activation::relu, "conv1"},
               {LayerKind::conv, 3, 3, 2, Activation::relu, "conv2"},
               {LayerKind::dense, 0, 4, 1, Activation::identity, "latent"}};
  s.decoder = {{LayerKind::dense, 0, 0, 1, Activation::relu, "project"},
               {LayerKind::deconv, 3, 2, 2, Activation::relu, "deconv1"},
               {LayerKind::deconv, 3, 1, 2, Activation::sigmoid, "deconv2"}};
  return s;
}

Parameter<double>& param(Model<double>& m, const std::string& id) {
  for (auto& p : m.params)
    if (p.id() == id) return p;
  throw std::runtime_error("no parameter " + id);
}

Tensor<double> random_batch(std::size_t b, std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::random_tensor({b, 1, side, side}, rng, 0.0, 1.0);
}

}  // namespace

TEST(Architecture, CcaeTraceAt256) {
  const auto rows = trace_shapes(ccae_architecture(256, 128));
  const std::vector<std::pair<std::string, Shape>> expected = {
      {"conv1", {16, 128, 128}}, {"conv2", {32, 64, 64}},   {"conv3", {64, 32, 32}},  {"conv4", {128, 16, 16}},
      {"latent", {128}},         {"project", {128, 16, 16}}, {"deconv1", {64, 32, 32}}, {"deconv2", {32, 64, 64}},
      {"deconv3", {16, 128, 128}}, {"deconv4", {1, 256, 256}}};
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].layer, expected[i].first);
    EXPECT_EQ(rows[i].output, expected[i].second) << rows[i].layer;
  }
}

TEST(Architecture, AytekinTrace) {
  const auto rows = trace_shapes(aytekin_architecture(256));
  const std::vector<Shape> expected = {{32, 128, 128}, {64, 64, 64},   {128, 32, 32},  {2048},       {128, 32, 32},
                                       {128, 64, 64},  {64, 128, 128}, {32, 256, 256}, {1, 256, 256}};
  ASSERT_EQ(rows.size(), expected.size());
  for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i].output, expected[i]) << rows[i].layer;
}

TEST(Architecture, JsonRoundTripAndInvalidSpecs) {
  const auto spec = ccae_architecture(64, 32);
  EXPECT_EQ(ArchitectureSpec::from_json(spec.to_json()).to_json(), spec.to_json());
  EXPECT_EQ(spec.latent_length(), 32);

  auto bad = tiny_arch();
  bad.decoder.back().units = 2;  // two output channels
  EXPECT_THROW(trace_shapes(bad), Error);
  bad = tiny_arch();
  bad.decoder.pop_back();  // output 4x4 != 8x8
  EXPECT_THROW(trace_shapes(bad), Error);
  EXPECT_THROW(ccae_architecture(64, 1), Error);
  EXPECT_THROW(parse_variant("c"), Error);
}

TEST(Architecture, ParameterCountMatchesTensors) {
  auto m = build_ccae<float>(Variant::a, 128, 0, 64);
  std::size_t n = 0;
  for (const auto& p : m.params) n += p.value().size();
  EXPECT_EQ(n, parameter_count(m.arch));
}

TEST(Model, ForwardShapes) {
  auto m = build_model<double>(Variant::a, tiny_arch(), 3);
  const auto x = random_batch(5, 8, 1);
  EXPECT_EQ(encode(m, x).shape(), (Shape{5, 4}));
  const auto rec = decode(m, encode(m, x));
  EXPECT_EQ(rec.shape(), x.shape());
  for (double v : rec.data()) EXPECT_TRUE(v > 0 && v < 1);
  EXPECT_THROW(encode(m, random_batch(2, 16, 1)), Error);
}

TEST(Model, SeedDeterminesInitialization) {
  auto a = build_model<double>(Variant::a, tiny_arch(), 7);
  auto b = build_model<double>(Variant::a, tiny_arch(), 7);
  auto c = build_model<double>(Variant::a, tiny_arch(), 8);
  bool differs = false;
  for (std::size_t i = 0; i < a.params.size(); ++i) {
    for (std::size_t j = 0; j < a.params[i].value().size(); ++j) {
      EXPECT_EQ(a.params[i].value()[j], b.params[i].value()[j]);
      differs |= a.params[i].value()[j] != c.params[i].value()[j];
    }
  }
  EXPECT_TRUE(differs);
}

TEST(Model, ZeroLatentLayerGivesZeroLatents) {
  auto m = build_model<double>(Variant::a, tiny_arch(), 1);
  param(m, "latent.weight").value().fill(0.0);
  param(m, "latent.bias").value().fill(0.0);
  const auto y = encode(m, random_batch(3, 8, 2));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
  // Variant b cannot normalize a zero latent.
  m.variant = Variant::b;
  EXPECT_THROW(model_loss(m, random_batch(3, 8, 2)), Error);
}

TEST(Loss, VariantADecomposes) {
  auto m = build_model<double>(Variant::a, tiny_arch(), 11);
  const auto x = random_batch(6, 8, 4);
  const auto y = encode(m, x);
  const auto rec = decode(m, y);
  double mse = 0, penalty = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - rec[i]) * (x[i] - rec[i]);
  mse /= static_cast<double>(x.size());
  for (std::size_t b = 0; b < 6; ++b) {
    double s = 0;
    for (std::size_t j = 0; j < 4; ++j) s += y[b * 4 + j] * y[b * 4 + j];
    penalty += s / 4;
  }
  penalty /= 6;
  EXPECT_NEAR(loss_ccae_a(m, x), mse + penalty, 1e-10);

  m.variant = Variant::plain;
  EXPECT_NEAR(model_loss(m, x), mse, 1e-12);
}

TEST(Loss, VariantBDecodesNormalizedLatent) {
  auto m = build_model<double>(Variant::b, tiny_arch(), 12);
  const auto x = random_batch(4, 8, 5);
  const auto code = normalize_latent_b(encode(m, x));
  const auto rec = decode(m, code);
  double mse = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mse += (x[i] - rec[i]) * (x[i] - rec[i]);
  EXPECT_NEAR(loss_ccae_b(m, x), mse / static_cast<double>(x.size()), 1e-12);
  const auto feats = latent_features(m, x);
  for (std::size_t i = 0; i < feats.size(); ++i) EXPECT_NEAR(feats[i], code[i], 1e-12);
}

TEST(Loss, GradientsMatchFiniteDifferences) {
  for (Variant v : {Variant::a, Variant::b, Variant::plain, Variant::aytekin}) {
    auto m = build_model<double>(v, tiny_arch(), 21);
    if (v == Variant::aytekin) m.norm = RowNorm::unit_ball;
    // Zero biases put unreached deconv outputs exactly on the relu kink.
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.05, 0.2);
    for (auto& p : m.params)
      if (p.id().ends_with(".bias"))
        for (auto& b : p.value().data()) b = u(rng);
    const auto x = random_batch(3, 8, 6);
    std::vector<Parameter<double>*> params;
    for (auto& p : m.params) params.push_back(&p);
    const double err = oracle::gradient_check(params, [&](Graph<double>& g, std::vector<Var>&) {
      // forward() registers the model parameters itself; the oracle's own param
      // nodes are unused leaves.
      return loss_node(g, m, forward(g, m, x));
    });
    EXPECT_LT(err, 1e-4) << to_string(v);
  }
}

TEST(NormalizeLatent, InvolutionAndGuard) {
  std::mt19937_64 rng(3);
  const auto y = oracle::random_tensor({50, 16}, rng, -2.0, 2.0);
  const auto once = normalize_latent_b(y);
  const auto twice = normalize_latent_b(once);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(twice[i], y[i], 1e-10);
  // Unit-ball normalization is idempotent instead.
  const auto u = normalize_latent_b(y, RowNorm::unit_ball);
  const auto uu = normalize_latent_b(u, RowNorm::unit_ball);
  for (std::size_t i = 0; i < y.size(); ++i) EXPECT_NEAR(uu[i], u[i], 1e-12);

  Tensor<double> zero(Shape{2, 3});
  zero[0] = 1;
  try {
    normalize_latent_b(zero);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::numeric);
  }
}

TEST(Train, ZeroLearningRateLeavesParameters) {
  auto m = build_model<double>(Variant::a, tiny_arch(), 5);
  const auto before = m.params;
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  cfg.lr = 0;
  const auto r = train(m, random_batch(10, 8, 7), cfg);
  ASSERT_EQ(r.loss_curve.size(), 2u);
  EXPECT_NEAR(r.loss_curve[0], r.loss_curve[1], 1e-12);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    for (std::size_t j = 0; j < m.params[i].value().size(); ++j)
      EXPECT_EQ(m.params[i].value()[j], before[i].value()[j]);
}

TEST(Train, LossDecreasesAndRunsAreBitIdentical) {
  const auto data = random_batch(16, 8, 9);
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 4;
  cfg.lr = 1e-2;
  cfg.seed = 4;
  auto m1 = build_model<double>(Variant::a, tiny_arch(), 2);
  auto m2 = build_model<double>(Variant::a, tiny_arch(), 2);
  const auto r1 = train(m1, data, cfg);
  const auto r2 = train(m2, data, cfg);
  EXPECT_LT(r1.loss_curve.back(), r1.loss_curve.front());
  EXPECT_EQ(r1.loss_curve, r2.loss_curve);
  for (std::size_t i = 0; i < m1.params.size(); ++i)
    for (std::size_t j = 0; j < m1.params[i].value().size(); ++j)
      ASSERT_EQ(m1.params[i].value()[j], m2.params[i].value()[j]);
}

TEST(Train, ConfigValidation) {
  auto m = build_model<double>(Variant::a, tiny_arch(), 5);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_THROW(train(m, random_batch(2, 8, 1), cfg), Error);
  cfg = TrainConfig{};
  cfg.lr = std::nan("");
  EXPECT_THROW(train(m, random_batch(2, 8, 1), cfg), Error);
}

TEST(Checkpoint, RoundTripPreservesModel) {
  const auto dir = std::filesystem::temp_directory_path() / "pf_model_test";
  std::filesystem::create_directories(dir);
  auto m = build_model<double>(Variant::b, tiny_arch(), 31);
  save_checkpoint(m, dir / "m.pft");
  auto back = load_checkpoint<double>(dir / "m.pft");
  EXPECT_EQ(back.variant, Variant::b);
  EXPECT_EQ(back.seed, 31u);
  EXPECT_EQ(back.arch.to_json(), m.arch.to_json());
  const auto x = random_batch(2, 8, 3);
  const auto a = latent_features(m, x), b = latent_features(back, x);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  // The container stores float64, so a float model can be loaded from it.
  const auto f = load_checkpoint<float>(dir / "m.pft");
  EXPECT_EQ(f.params[0].value()[0], static_cast<float>(m.params[0].value()[0]));
  std::ofstream(dir / "junk.pft") << "not a container";
  EXPECT_THROW(load_checkpoint<double>(dir / "junk.pft"), Error);
  std::filesystem::remove_all(dir);
}

TEST(ResizeBaseline, ShapeAndRange) {
  std::vector<GrayImage> imgs(3, GrayImage(40, 40));
  imgs[1].pixels.assign(1600, 255);
  const auto f = resize_baseline(imgs, 32);
  EXPECT_EQ(f.shape(), (Shape{3, 1024}));
  EXPECT_EQ(f[0], 0.0);
  EXPECT_NEAR(f[1024], 1.0, 1e-12);
}

TEST(ResizeBaseline, SyntheticClassesAreSeparable) {
  SynthConfig cfg;
  cfg.size = 128;
  std::vector<GrayImage> imgs;
  std::vector<int> label;
  for (std::size_t i = 0; i < 48; ++i) {
    auto s = generate_sample(cfg, i);
    imgs.push_back(std::move(s.image));
    label.push_back(static_cast<int>(s.label));
  }
  const auto f = resize_baseline(imgs, 32);
  double inter = 0, intra = 0;
  long n_inter = 0, n_intra = 0;
  for (std::size_t i = 0; i < imgs.size(); ++i)
    for (std::size_t j = i + 1; j < imgs.size(); ++j) {
      double d = 0;
      for (std::size_t c = 0; c < 1024; ++c) d += (f[i * 1024 + c] - f[j * 1024 + c]) * (f[i * 1024 + c] - f[j * 1024 + c]);
      d = std::sqrt(d);
      if (label[i] == label[j]) {
        intra += d;
        ++n_intra;
      } else {
        inter += d;
        ++n_inter;
      }
    }
  EXPECT_GT(inter / n_inter, intra / n_intra);
}
