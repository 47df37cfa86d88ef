#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "udabench/models/bundle.hpp"

using namespace udabench;
using namespace udabench::models;

namespace {

Tensor random_input(Rng& rng, std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

ModelDims small_dims(std::size_t classes = 3) {
  ModelDims d;
  d.input_dim = 4;
  d.trunk_width = 8;
  d.classifier_hidden = {6, 5};
  d.discriminator_hidden = 7;
  d.num_classes = classes;
  return d;
}

}  // namespace

TEST(Models, TrunkParameterCountByHand) {
  Rng rng(1);
  ParamSet trunk = build_trunk(2, 16, rng);
  EXPECT_EQ(trunk.parameter_count(), 2u * 16 + 16 + 16 * 16 + 16);
  // 32 + 16 + 256 + 16
  EXPECT_EQ(trunk.parameter_count(), 320u);
  EXPECT_EQ((MlpSpec{{2, 16, 16}}.parameter_count()), 320u);
}

TEST(Models, ClassifierAndDiscriminatorCountsMatchFormula) {
  Rng rng(2);
  EXPECT_EQ(build_classifier(8, 3, {6, 5}, rng).parameter_count(), (MlpSpec{{8, 6, 5, 3}}.parameter_count()));
  EXPECT_EQ(build_discriminator(8, 7, rng).parameter_count(), (MlpSpec{{8, 7, 7, 1}}.parameter_count()));
}

TEST(Models, BiasesStartAtZeroAndWeightsWithinKaimingBound) {
  Rng rng(3);
  ParamSet trunk = build_trunk(5, 9, rng);
  EXPECT_EQ(trunk.at("fc1.bias").value.frobenius_sq(), 0.0);
  const double bound = std::sqrt(6.0 / 5.0);
  for (double v : trunk.at("fc1.weight").value.data()) EXPECT_LE(std::abs(v), bound);
}

TEST(Models, ZeroInputForwardIsFinite) {
  Rng rng(4);
  ParamSet trunk = build_trunk(2, 16, rng);
  Graph g;
  Var out = trunk_forward(g, trunk, g.input(Tensor(3, 2)));
  EXPECT_TRUE(out.value().all_finite());
  // Zero biases → everything zero.
  EXPECT_EQ(out.value().frobenius_sq(), 0.0);
}

TEST(Models, SameSeedGivesIdenticalWeights) {
  Rng a(42), b(42);
  ParamSet ta = build_trunk(2, 16, a), tb = build_trunk(2, 16, b);
  ParamSet da = build_discriminator(16, 8, a), db = build_discriminator(16, 8, b);
  for (const auto& p : ta) EXPECT_TRUE(p.value == tb.at(p.name).value) << p.name;
  for (const auto& p : da) EXPECT_TRUE(p.value == db.at(p.name).value) << p.name;
}

TEST(Models, DiscriminatorDepthAndOutputShape) {
  Rng rng(5);
  ModelDims dims = small_dims();
  for (FeatureLayer fl : {FeatureLayer::fl0, FeatureLayer::fl6}) {
    ModelBundle b = build_bundle(dims, rng);
    b.layer = fl;
    add_discriminator(b, b.feature_width(), rng);
    EXPECT_EQ(b.discriminator->size(), 6u);  // 3 linear layers
    Graph g;
    Taps t = forward_with_taps(g, b, g.input(random_input(rng, 5, dims.input_dim)), false, rng);
    Var d = discriminator_forward(g, *b.discriminator, t.features);
    EXPECT_EQ(d.rows(), 5u);
    EXPECT_EQ(d.cols(), 1u);
  }
}

TEST(Models, PredictionRowsAreProbabilities) {
  Rng rng(6);
  ModelBundle b = build_bundle(small_dims(3), rng);
  Graph g;
  Taps t = forward_with_taps(g, b, g.input(random_input(rng, 10, 4)), true, rng);
  const Tensor& p = t.preds[0].value();
  ASSERT_EQ(p.cols(), 3u);
  for (std::size_t i = 0; i < p.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < p.cols(); ++j) {
      EXPECT_GE(p(i, j), 0.0);
      s += p(i, j);
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(Models, FeatureTapWidths) {
  Rng rng(7);
  ModelDims dims = small_dims(3);
  ModelBundle b = build_bundle(dims, rng);
  Tensor x = random_input(rng, 4, 4);
  for (FeatureLayer fl : {FeatureLayer::fl0, FeatureLayer::fl6, FeatureLayer::fl8}) {
    b.layer = fl;
    Graph g;
    Taps t = forward_with_taps(g, b, g.input(x), false, rng);
    EXPECT_EQ(t.features.cols(), b.feature_width());
  }
  const std::size_t expected[] = {8, 5, 3};
  int i = 0;
  for (FeatureLayer fl : {FeatureLayer::fl0, FeatureLayer::fl6, FeatureLayer::fl8}) {
    b.layer = fl;
    EXPECT_EQ(b.feature_width(), expected[i++]);
  }
}

TEST(Models, Fl8FeaturesArePredictions) {
  Rng rng(8);
  ModelBundle b = build_bundle(small_dims(), rng);
  b.layer = FeatureLayer::fl8;
  Graph g;
  Taps t = forward_with_taps(g, b, g.input(random_input(rng, 4, 4)), false, rng);
  EXPECT_EQ(t.features.id, t.preds[0].id);
}

TEST(Models, Fl8RejectedWhenAlgorithmCannotUseIt) {
  Rng rng(9);
  ModelBundle b = build_bundle(small_dims(), rng);
  b.layer = FeatureLayer::fl8;
  b.allow_fl8 = false;
  Graph g;
  EXPECT_THROW(forward_with_taps(g, b, g.input(random_input(rng, 4, 4)), false, rng), ConfigError);
}

TEST(Models, WrongInputWidthIsStructuralError) {
  Rng rng(10);
  ModelBundle b = build_bundle(small_dims(), rng);
  Graph g;
  EXPECT_THROW(forward_with_taps(g, b, g.input(random_input(rng, 4, 3)), false, rng), StructuralError);
}

TEST(Models, EvaluationModeIsDeterministic) {
  Rng rng(11);
  ModelBundle b = build_bundle(small_dims(), rng);
  Tensor x = random_input(rng, 6, 4);
  Graph g1, g2;
  Rng r1(1), r2(2);
  Taps a = forward_with_taps(g1, b, g1.input(x), false, r1);
  Taps c = forward_with_taps(g2, b, g2.input(x), false, r2);
  EXPECT_TRUE(a.preds[0].value() == c.preds[0].value());
}

TEST(Models, TrainingModeDropoutVariesWithStream) {
  Rng rng(12);
  ModelBundle b = build_bundle(small_dims(), rng);
  Tensor x = random_input(rng, 6, 4);
  Graph g1, g2;
  Rng r1(1), r2(2);
  Taps a = forward_with_taps(g1, b, g1.input(x), true, r1);
  Taps c = forward_with_taps(g2, b, g2.input(x), true, r2);
  EXPECT_FALSE(a.preds[0].value() == c.preds[0].value());
}

TEST(Models, Fl6ClassifiersShareHiddenLayers) {
  Rng rng(13);
  ModelBundle b = build_bundle(small_dims(), rng);
  add_classifier(b, rng);
  b.layer = FeatureLayer::fl6;
  EXPECT_EQ(classifier_params(b, 1).size(), 2u);
  EXPECT_EQ(generator_params(b).size(), 8u);
  b.layer = FeatureLayer::fl0;
  EXPECT_EQ(classifier_params(b, 1).size(), 6u);
  EXPECT_EQ(generator_params(b).size(), 4u);
}

TEST(Models, ResidualBlockStartsAtZero) {
  Rng rng(14);
  ParamSet block = build_residual_block(3, rng);
  Graph g;
  Var out = residual_forward(g, block, g.input(random_input(rng, 4, 3)));
  EXPECT_EQ(out.value().frobenius_sq(), 0.0);
}

TEST(Models, WeightFileRoundTrip) {
  Rng rng(15);
  ModelBundle b = build_bundle(small_dims(), rng);
  add_discriminator(b, b.feature_width(), rng);
  const auto path = std::filesystem::temp_directory_path() / "udabench_models_roundtrip.udaw";
  save_weights(path.string(), b);
  Rng other(99);
  ModelBundle c = build_bundle(small_dims(), other);
  add_discriminator(c, c.feature_width(), other);
  load_weights(path.string(), c);
  auto na = named_tensors(b), nc = named_tensors(c);
  ASSERT_EQ(na.size(), nc.size());
  for (std::size_t i = 0; i < na.size(); ++i) {
    EXPECT_EQ(na[i].first, nc[i].first);
    EXPECT_TRUE(na[i].second == nc[i].second) << na[i].first;
  }
  std::filesystem::remove(path);
}

TEST(Models, WeightFileBadMagicNamesExpected) {
  const auto path = std::filesystem::temp_directory_path() / "udabench_models_bad.udaw";
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE0000";
  }
  Rng rng(16);
  ModelBundle b = build_bundle(small_dims(), rng);
  try {
    load_weights(path.string(), b);
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("UDAW"), std::string::npos);
    EXPECT_EQ(e.position(), 0u);
  }
  std::filesystem::remove(path);
}

TEST(Models, WeightFileShapeMismatchRejected) {
  Rng rng(17);
  ModelBundle b = build_bundle(small_dims(3), rng);
  const auto path = std::filesystem::temp_directory_path() / "udabench_models_shape.udaw";
  save_weights(path.string(), b);
  ModelBundle c = build_bundle(small_dims(4), rng);
  EXPECT_THROW(load_weights(path.string(), c), FormatError);
  std::filesystem::remove(path);
}

TEST(Models, ParseFeatureLayer) {
  EXPECT_EQ(parse_feature_layer("FL6"), FeatureLayer::fl6);
  EXPECT_EQ(to_string(parse_feature_layer("fl8")), "FL8");
  EXPECT_THROW(parse_feature_layer("FL3"), ConfigError);
}
