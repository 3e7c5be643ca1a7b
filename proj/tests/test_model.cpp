#include <gtest/gtest.h>

#include <algorithm>

#include "nervus/error.hpp"
#include "nervus/grad/gradcheck.hpp"
#include "nervus/grad/ops.hpp"
#include "nervus/model/assembly.hpp"
#include "nervus/model/checkpoint.hpp"
#include "synth.hpp"

namespace g = nervus::grad;
namespace m = nervus::model;
using g::Tape;
using g::Tensor;
using nervus::LabelKind;
using nervus::LabelSpec;
using nervus::Mode;
using nervus::Rng;
using nervus::Task;

namespace {

Tensor random_tensor(g::Shape shape, Rng& rng) {
  std::vector<float> values(g::numel_of(shape));
  for (float& v : values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return Tensor(std::move(shape), std::move(values));
}

std::vector<float> values_of(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

LabelSpec binary(const std::string& name) { return {name, LabelKind::kClassification, 2}; }

m::ModelSpec both_spec(int in_channels = 1) {
  m::ModelSpec spec;
  spec.task = Task::kClassification;
  spec.labels = {binary("cancer"), binary("pneumonia")};
  spec.modality = m::Modality::kBoth;
  spec.mlp = m::MlpSpec{3, {8, 6}, 0.2f};
  spec.cnn = m::CnnSpec{in_channels, 2, 4};
  return spec;
}

void fill(Tensor t, float value) { std::fill(t.mutable_data().begin(), t.mutable_data().end(), value); }

}  // namespace

TEST(Spec, ValidationRejectsInconsistentSpecs) {
  m::ModelSpec ok = both_spec();
  EXPECT_NO_THROW(ok.validate());
  auto broken = [&](auto edit) {
    m::ModelSpec s = both_spec();
    edit(s);
    return s;
  };
  EXPECT_THROW(broken([](auto& s) { s.labels.clear(); }).validate(), nervus::ConfigError);
  EXPECT_THROW(broken([](auto& s) { s.mlp.reset(); }).validate(), nervus::ConfigError);
  EXPECT_THROW(broken([](auto& s) { s.modality = m::Modality::kTabular; }).validate(), nervus::ConfigError);
  EXPECT_THROW(broken([](auto& s) { s.labels[0].class_count = 1; }).validate(), nervus::ConfigError);
  EXPECT_THROW(broken([](auto& s) { s.labels[0].kind = LabelKind::kRegression; }).validate(), nervus::ConfigError);
  EXPECT_THROW(broken([](auto& s) {
                 s.task = Task::kDeepSurv;
                 s.labels = {{"a", LabelKind::kSurvival, 1}, {"b", LabelKind::kSurvival, 1}};
               }).validate(),
               nervus::ConfigError);
}

TEST(Assembly, TabularOnlyBinaryHasNoMixer) {
  Rng rng(1);
  m::ModelAssembly model = m::build_model(Task::kClassification, {binary("y")}, m::Modality::kTabular,
                                          m::MlpSpec{4, {256, 256}, 0.2f}, std::nullopt, rng);
  EXPECT_FALSE(model.cnn().has_value());
  ASSERT_EQ(model.heads().size(), 1u);
  EXPECT_EQ(model.heads()[0].weight.shape(), (g::Shape{256, 2}));

  Tape tape(Tape::Recording::kOff);
  Tensor x = random_tensor({5, 4}, rng);
  Tensor features = model.features(tape, std::nullopt, x, Mode::kEval, rng);
  Tensor direct = model.mlp()->forward(tape, x, Mode::kEval, rng);
  EXPECT_EQ(values_of(features), values_of(direct));
}

TEST(Assembly, BothModalitiesTwoLabels) {
  Rng rng(2);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  EXPECT_EQ(model.spec().mixed_width(), 8u + 6u);
  Tape tape(Tape::Recording::kOff);
  const auto outputs = model.forward(tape, random_tensor({5, 1, 8, 8}, rng), random_tensor({5, 3}, rng),
                                     Mode::kEval, rng);
  ASSERT_EQ(outputs.size(), 2u);
  for (const Tensor& out : outputs) EXPECT_EQ(out.shape(), (g::Shape{5, 2}));
}

TEST(Assembly, SurvivalHeadEmitsOneRiskPerSample) {
  Rng rng(3);
  m::ModelAssembly model = m::build_model(Task::kDeepSurv, {{"death", LabelKind::kSurvival, 1}},
                                          m::Modality::kBoth, m::MlpSpec{2, {4}, 0.0f}, m::CnnSpec{1, 1, 2}, rng);
  Tape tape(Tape::Recording::kOff);
  const auto outputs = model.forward(tape, random_tensor({7, 1, 4, 4}, rng), random_tensor({7, 2}, rng),
                                     Mode::kEval, rng);
  ASSERT_EQ(outputs.size(), 1u);
  EXPECT_EQ(outputs[0].shape(), (g::Shape{7, 1}));
}

TEST(Assembly, MissingBlocksAreRejected) {
  Rng rng(4);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  Tape tape;
  EXPECT_THROW(model.forward(tape, std::nullopt, random_tensor({2, 3}, rng), Mode::kEval, rng), nervus::ConfigError);
  EXPECT_THROW(model.forward(tape, random_tensor({2, 1, 8, 8}, rng), random_tensor({2, 4}, rng), Mode::kEval, rng),
               nervus::ShapeError);
  EXPECT_THROW(model.forward(tape, random_tensor({2, 3, 8, 8}, rng), random_tensor({2, 3}, rng), Mode::kEval, rng),
               nervus::ShapeError);
  EXPECT_THROW(model.forward(tape, random_tensor({2, 1, 2, 2}, rng), random_tensor({2, 3}, rng), Mode::kEval, rng),
               nervus::ShapeError);
}

TEST(Mlp, ZeroWeightsGiveZeroFeaturesAndEvalIsDeterministic) {
  Rng rng(5);
  m::MlpExtractor mlp(m::MlpSpec{3, {5, 4}, 0.5f}, rng);
  Tape tape(Tape::Recording::kOff);
  Tensor x = random_tensor({3, 3}, rng);
  const std::vector<float> first = values_of(mlp.forward(tape, x, Mode::kEval, rng));
  EXPECT_EQ(values_of(mlp.forward(tape, x, Mode::kEval, rng)), first);
  for (const m::Linear& layer : mlp.layers()) {
    fill(layer.weight, 0.0f);
    fill(layer.bias, 0.0f);
  }
  const Tensor zeros = mlp.forward(tape, x, Mode::kTrain, rng);
  for (float v : zeros.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Cnn, WidthsAndZeroWeights) {
  EXPECT_EQ((m::CnnSpec{1, 3, 16}).feature_width(), 64u);
  Rng rng(6);
  m::CnnExtractor cnn(m::CnnSpec{1, 3, 16}, rng);
  Tape tape(Tape::Recording::kOff);
  Tensor images = random_tensor({2, 1, 16, 16}, rng);
  EXPECT_EQ(cnn.forward(tape, images).shape(), (g::Shape{2, 64}));
  for (const m::Conv2d& block : cnn.blocks()) {
    fill(block.weight, 0.0f);
    fill(block.bias, 0.0f);
  }
  const Tensor zeros = cnn.forward(tape, images);
  for (float v : zeros.data()) EXPECT_EQ(v, 0.0f);
}

TEST(Mixer, ConcatenatesImageFirstOrPassesThrough) {
  Rng rng(7);
  Tape tape(Tape::Recording::kOff);
  Tensor image = random_tensor({3, 64}, rng);
  Tensor tab = random_tensor({3, 16}, rng);
  Tensor mixed = m::mix_features(tape, image, tab);
  EXPECT_EQ(mixed.shape(), (g::Shape{3, 80}));
  EXPECT_EQ(mixed.data()[64], tab.data()[0]);
  EXPECT_EQ(mixed.data()[0], image.data()[0]);
  EXPECT_TRUE(m::mix_features(tape, std::nullopt, tab).same_storage(tab));
  EXPECT_TRUE(m::mix_features(tape, image, std::nullopt).same_storage(image));
  EXPECT_THROW(m::mix_features(tape, image, random_tensor({2, 16}, rng)), nervus::ShapeError);
}

TEST(Mixer, GradientsReachBothExtractors) {
  Rng rng(8);
  m::ModelSpec spec = both_spec();
  spec.mlp->dropout = 0.0f;
  spec.labels = {{"v", LabelKind::kRegression, 1}};
  spec.task = Task::kRegression;
  m::ModelAssembly model = m::ModelAssembly::build(spec, rng);
  Tensor images = random_tensor({2, 1, 8, 8}, rng);
  Tensor tab = random_tensor({2, 3}, rng);
  std::vector<Tensor> checked{model.parameter("cnn.conv1.bias"), model.parameter("mlp.fc1.bias"),
                              model.parameter("head.v.weight")};
  Rng unused(0);
  const auto result = g::finite_diff_check(
      [&](Tape& t) { return g::sum(t, model.forward(t, images, tab, Mode::kEval, unused)[0]); }, checked);
  EXPECT_LT(result.max_relative_error, 1e-3);

  Tape tape;
  tape.backward(g::sum(tape, model.forward(tape, images, tab, Mode::kEval, unused)[0]));
  auto nonzero = [](const Tensor& t) {
    return std::any_of(t.grad().begin(), t.grad().end(), [](float v) { return v != 0.0f; });
  };
  EXPECT_TRUE(nonzero(model.parameter("cnn.conv0.weight")));
  EXPECT_TRUE(nonzero(model.parameter("mlp.fc0.weight")));
}

TEST(Heads, ZeroingOneHeadChangesOnlyItsLabel) {
  Rng rng(9);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  Tape tape(Tape::Recording::kOff);
  Tensor images = random_tensor({5, 1, 8, 8}, rng);
  Tensor tab = random_tensor({5, 3}, rng);
  const auto before = model.forward(tape, images, tab, Mode::kEval, rng);
  fill(model.parameter("head.cancer.weight"), 0.0f);
  fill(model.parameter("head.cancer.bias"), 0.0f);
  const auto after = model.forward(tape, images, tab, Mode::kEval, rng);
  EXPECT_EQ(values_of(after[1]), values_of(before[1]));
  EXPECT_NE(values_of(after[0]), values_of(before[0]));
  for (float v : after[0].data()) EXPECT_EQ(v, 0.0f);
}

TEST(Registry, CountMatchesClosedFormAndNamesAreOrdered) {
  Rng rng(10);
  for (const m::ModelSpec& spec : {both_spec(), both_spec(3)}) {
    m::ModelAssembly model = m::ModelAssembly::build(spec, rng);
    std::size_t enumerated = 0;
    for (const auto& p : model.parameters()) enumerated += p.tensor.numel();
    EXPECT_EQ(enumerated, m::parameter_count(spec));
    EXPECT_EQ(model.parameter_count(), enumerated);
  }
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  std::vector<std::string> names;
  for (const auto& p : model.parameters()) names.push_back(p.name);
  EXPECT_EQ(names.front(), "cnn.conv0.weight");
  EXPECT_EQ(names.back(), "head.pneumonia.bias");
  EXPECT_THROW(model.parameter("head.missing.weight"), nervus::ConfigError);
}

TEST(Assembly, CloneIsIndependent) {
  Rng rng(11);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  m::ModelAssembly copy = model.clone();
  const std::vector<float> original = values_of(model.parameter("mlp.fc0.weight"));
  fill(copy.parameter("mlp.fc0.weight"), 3.0f);
  EXPECT_EQ(values_of(model.parameter("mlp.fc0.weight")), original);
}

TEST(Adaptation, SumsInputChannels) {
  Tensor w({1, 3, 1, 1}, {0.2f, 0.3f, 0.5f});
  EXPECT_FLOAT_EQ(m::adapt_first_layer(w).item(), 1.0f);
  Tensor zero({2, 3, 3, 3}, std::vector<float>(54, 0.0f));
  const Tensor adapted = m::adapt_first_layer(zero);
  EXPECT_EQ(adapted.shape(), (g::Shape{2, 1, 3, 3}));
  for (float v : adapted.data()) EXPECT_EQ(v, 0.0f);
  EXPECT_THROW(m::adapt_first_layer(Tensor({1, 2, 1, 1}, {1, 1})), nervus::ShapeError);
}

TEST(Adaptation, ReplicatedGrayResponseIsPreserved) {
  Rng rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor w = random_tensor({4, 3, 3, 3}, rng);
    Tensor b = random_tensor({4}, rng);
    Tensor gray = random_tensor({1, 1, 6, 6}, rng);
    std::vector<float> rgb;
    for (int c = 0; c < 3; ++c) rgb.insert(rgb.end(), gray.data().begin(), gray.data().end());
    Tape tape(Tape::Recording::kOff);
    const Tensor a = g::conv2d(tape, Tensor({1, 3, 6, 6}, rgb), w, b, 1, 1);
    const Tensor c = g::conv2d(tape, gray, m::adapt_first_layer(w), b, 1, 1);
    for (std::size_t i = 0; i < a.numel(); ++i) EXPECT_NEAR(a.data()[i], c.data()[i], 1e-5);
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  synth::TempDir dir("ckpt");
  Rng rng(13);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  const auto path = dir.path() / "a.nvs";
  nervus::data::TabularStats stats{{1.5, -2.0, 0.0}, {0.5, 1.0, 1e-8}};
  m::save_checkpoint(model, path, 7, 0.25, &stats);

  const m::Checkpoint ck = m::read_checkpoint(path);
  EXPECT_EQ(ck.meta.epoch, 7);
  EXPECT_EQ(ck.meta.val_loss, 0.25);
  EXPECT_EQ(ck.meta.spec, both_spec());
  ASSERT_TRUE(ck.meta.tabular_stats.has_value());
  EXPECT_EQ(*ck.meta.tabular_stats, stats);

  m::ModelAssembly loaded = m::load_checkpoint(path, both_spec());
  for (const auto& p : model.parameters()) {
    EXPECT_EQ(values_of(loaded.parameter(p.name)), values_of(p.tensor)) << p.name;
  }
  m::save_checkpoint(loaded, dir.path() / "b.nvs", 7, 0.25, &stats);
  EXPECT_EQ(synth::read_bytes(path), synth::read_bytes(dir.path() / "b.nvs"));

  Tape tape(Tape::Recording::kOff);
  Tensor images = random_tensor({3, 1, 8, 8}, rng);
  Tensor tab = random_tensor({3, 3}, rng);
  const auto x = model.forward(tape, images, tab, Mode::kEval, rng);
  const auto y = loaded.forward(tape, images, tab, Mode::kEval, rng);
  for (std::size_t l = 0; l < x.size(); ++l) EXPECT_EQ(values_of(x[l]), values_of(y[l]));
}

TEST(Checkpoint, ContainerLayout) {
  Rng rng(14);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  const auto bytes = m::encode_checkpoint(model, 1, 0.5);
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "NVS1");
  const std::uint32_t meta_len = bytes[4] | (bytes[5] << 8) | (bytes[6] << 16) | (static_cast<std::uint32_t>(bytes[7]) << 24);
  EXPECT_EQ(bytes.size(), 8 + meta_len + 4 * model.parameter_count());
  EXPECT_EQ(m::encode_checkpoint(model, 1, 0.5), bytes);
}

TEST(Checkpoint, CorruptFilesAreRejectedAndLeaveTheModelUntouched) {
  Rng rng(15);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  const auto bytes = m::encode_checkpoint(model, 1, 0.5);
  const std::vector<float> before = values_of(model.parameter("head.cancer.weight"));

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.end() - 6);
  EXPECT_THROW(m::decode_checkpoint(truncated), nervus::FormatError);
  std::vector<std::uint8_t> bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_THROW(m::decode_checkpoint(bad_magic), nervus::FormatError);
  std::vector<std::uint8_t> trailing = bytes;
  trailing.push_back(0);
  EXPECT_THROW(m::decode_checkpoint(trailing), nervus::FormatError);
  EXPECT_THROW(m::decode_checkpoint(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 12)), nervus::FormatError);

  // A checkpoint whose last tensor does not fit must not partially overwrite.
  m::ModelSpec other = both_spec();
  other.labels[1].class_count = 3;
  Rng rng2(99);
  m::ModelAssembly different = m::ModelAssembly::build(other, rng2);
  m::Checkpoint ck = m::decode_checkpoint(m::encode_checkpoint(different, 1, 0.5));
  EXPECT_THROW(m::restore_parameters(model, ck), nervus::ShapeError);
  EXPECT_EQ(values_of(model.parameter("head.cancer.weight")), before);
}

TEST(Checkpoint, VersionAndWidthMismatches) {
  synth::TempDir dir("ckpt-mismatch");
  Rng rng(16);
  m::ModelAssembly model = m::ModelAssembly::build(both_spec(), rng);
  const auto path = dir.path() / "m.nvs";
  m::save_checkpoint(model, path, 1, 0.5);
  m::ModelSpec wider = both_spec();
  wider.mlp->hidden = {9, 6};
  try {
    m::load_checkpoint(path, wider);
    FAIL() << "hidden-width mismatch accepted";
  } catch (const nervus::ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("mlp.fc0"), std::string::npos) << e.what();
  }

  auto bytes = m::encode_checkpoint(model, 1, 0.5);
  const std::string text(bytes.begin(), bytes.end());
  const std::string key = "\"format_version\":1";
  const auto at = text.find(key);
  ASSERT_NE(at, std::string::npos);
  bytes[at + key.size() - 1] = '9';
  EXPECT_THROW(m::decode_checkpoint(bytes), nervus::FormatError);
  EXPECT_THROW(m::read_checkpoint(dir.path() / "absent.nvs"), nervus::IoError);
}

TEST(Checkpoint, ThreeChannelWeightsLoadIntoGrayModel) {
  synth::TempDir dir("ckpt-adapt");
  Rng rng(17);
  m::ModelAssembly rgb = m::ModelAssembly::build(both_spec(3), rng);
  m::save_checkpoint(rgb, dir.path() / "rgb.nvs", 3, 0.1);
  m::ModelAssembly gray = m::load_checkpoint(dir.path() / "rgb.nvs", both_spec(1));
  EXPECT_EQ(values_of(gray.parameter("cnn.conv0.weight")),
            values_of(m::adapt_first_layer(rgb.parameter("cnn.conv0.weight"))));
  for (const auto& p : rgb.parameters()) {
    if (p.name == "cnn.conv0.weight") continue;
    EXPECT_EQ(values_of(gray.parameter(p.name)), values_of(p.tensor)) << p.name;
  }
}
