// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fd_suite.hpp"
#include "nervus/data/image.hpp"
#include "nervus/data/manifest.hpp"
#include "nervus/data/sampler.hpp"
#include "nervus/error.hpp"
#include "nervus/eval/losses.hpp"
#include "nervus/eval/survival.hpp"
#include "nervus/grad/ops.hpp"
#include "nervus/model/assembly.hpp"
#include "nervus/model/checkpoint.hpp"
#include "nervus/random.hpp"
#include "nervus/train/cli.hpp"
#include "nervus/train/trainer.hpp"
#include "oracles.hpp"
#include "synth.hpp"

namespace fs = std::filesystem;
namespace g = nervus::grad;
namespace m = nervus::model;
namespace mt = nervus::metrics;
namespace tr = nervus::train;
using nervus::Rng;
using nervus::Task;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

g::Tensor random_tensor(g::Shape shape, Rng& rng) {
  std::vector<float> values(g::numel_of(shape));
  for (float& v : values) v = static_cast<float>(rng.uniform(-1.0, 1.0));
  return g::Tensor(std::move(shape), std::move(values));
}

std::vector<float> values_of(const g::Tensor& t) { return {t.data().begin(), t.data().end()}; }

std::vector<mt::SurvivalRecord> records_of(const std::vector<oracle::Subject>& s) {
  std::vector<mt::SurvivalRecord> out;
  for (const auto& x : s) out.push_back({x.risk, x.event, x.period});
  return out;
}

tr::TrainConfig quiet_config(const fs::path& manifest, const fs::path& out) {
  tr::TrainConfig c;
  c.manifest = manifest;
  c.out = out;
  c.log_timing = tr::LogTiming::kNone;
  return c;
}

void gradient_suite(Verdict& v) {
  Stopwatch clock;
  double worst = 0.0;
  int instances = 0;
  for (const std::string& op : fd_suite::operations()) {
    const fd_suite::Outcome o = fd_suite::worst_error(op, 20, 101);
    v.require(o.instances >= 20, op + " ran fewer than 20 instances");
    v.require(o.worst_error < 1e-3, op + " relative error " + std::to_string(o.worst_error));
    worst = std::max(worst, o.worst_error);
    instances += o.instances;
  }
  const double seconds = clock.seconds();
  v.require(seconds < 60.0, "runtime");
  v.detail << fd_suite::operations().size() << " ops, " << instances << " instances, worst rel err " << worst
           << ", " << seconds << " s";
}

void channel_adaptation(Verdict& v) {
  Rng rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t c_out = 1 + rng.below(6), k = 1 + 2 * rng.below(3);
    const std::size_t h = k + rng.below(8), w = k + rng.below(8);
    g::Tensor weight = random_tensor({c_out, 3, k, k}, rng);
    g::Tensor bias = random_tensor({c_out}, rng);
    g::Tensor gray = random_tensor({1, 1, h, w}, rng);
    std::vector<float> rgb;
    for (int c = 0; c < 3; ++c) rgb.insert(rgb.end(), gray.data().begin(), gray.data().end());
    g::Tape tape(g::Tape::Recording::kOff);
    const std::size_t pad = k / 2;
    const g::Tensor a = g::conv2d(tape, g::Tensor({1, 3, h, w}, rgb), weight, bias, 1, pad);
    const g::Tensor b = g::conv2d(tape, gray, m::adapt_first_layer(weight), bias, 1, pad);
    for (std::size_t i = 0; i < a.numel(); ++i) worst = std::max(worst, std::abs(double(a.data()[i]) - b.data()[i]));
  }
  v.require(worst <= 1e-5, "max abs difference");
  v.detail << "100 pairs, max abs diff " << worst;
}

void cox_oracle(Verdict& v) {
  Rng rng(303);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<float> risks;
    std::vector<int> events;
    std::vector<double> periods;
    std::vector<oracle::Subject> subjects;
    for (std::size_t i = 0; i < n; ++i) {
      risks.push_back(static_cast<float>(rng.uniform(-3.0, 3.0)));
      events.push_back(rng.bernoulli(0.6) ? 1 : 0);
      periods.push_back(i > 0 && rng.bernoulli(0.3) ? periods[rng.below(i)] : rng.uniform(0.1, 10.0));
    }
    events[rng.below(n)] = 1;
    for (std::size_t i = 0; i < n; ++i) subjects.push_back({risks[i], events[i], periods[i]});
    g::Tape tape(g::Tape::Recording::kOff);
    const double got = nervus::loss::cox_npll(tape, g::Tensor({n, 1}, risks), events, periods).item();
    worst = std::max(worst, std::abs(got - oracle::breslow_npll(subjects)));
  }
  v.require(worst <= 1e-5, "random instances");
  g::Tape tape(g::Tape::Recording::kOff);
  const double single =
      nervus::loss::cox_npll(tape, g::Tensor({1, 1}, {0.8f}), std::vector<int>{1}, std::vector<double>{2.0}).item();
  const double pair = nervus::loss::cox_npll(tape, g::Tensor({2, 1}, {0.3f, 0.3f}), std::vector<int>{1, 0},
                                             std::vector<double>{1.0, 2.0})
                          .item();
  v.require(std::abs(single) <= 1e-6, "single event");
  v.require(std::abs(pair - std::log(2.0)) <= 1e-6, "equal risks");
  v.detail << "1000 instances, max abs diff " << worst << "; single " << single << ", pair " << pair;
}

void survival_statistics(Verdict& v) {
  const mt::KmCurve km = mt::kaplan_meier(std::vector<mt::SurvivalRecord>{{0, 1, 1.0}, {0, 0, 2.0}, {0, 1, 3.0}});
  v.require(std::abs(km.at(1.0) - 2.0 / 3.0) < 1e-12 && km.at(3.0) == 0.0, "KM example");
  const std::vector<mt::SurvivalRecord> group{{0, 1, 1.0}, {0, 0, 2.0}, {0, 1, 3.0}, {0, 1, 5.0}};
  const mt::LogRankResult same = mt::log_rank(group, group);
  v.require(same.statistic == 0.0 && same.p_value == 1.0, "identical groups");
  const double tail = mt::chi2_sf_1df(3.841);
  v.require(std::abs(tail - 0.05) <= 1e-3, "chi-square tail");

  Rng rng(404);
  int checked = 0, mismatches = 0;
  while (checked < 1000) {
    const std::size_t n = 2 + rng.below(9);
    const bool integer_risks = rng.bernoulli(0.5);
    std::vector<oracle::Subject> s;
    for (std::size_t i = 0; i < n; ++i) {
      const double risk = integer_risks ? static_cast<double>(rng.below(4)) : rng.uniform(-1.0, 1.0);
      s.push_back({risk, rng.bernoulli(0.7) ? 1 : 0, static_cast<double>(1 + rng.below(6))});
    }
    const oracle::PairCounts counts = oracle::concordance_pairs(s);
    if (counts.comparable == 0) continue;
    mismatches += mt::c_index(records_of(s)) != counts.index();
    ++checked;
  }
  v.require(mismatches == 0, "c-index");
  v.detail << "KM S(1)=" << km.at(1.0) << " S(3)=" << km.at(3.0) << "; identical groups stat " << same.statistic
           << " p " << same.p_value << "; tail(3.841)=" << tail << "; c-index mismatches " << mismatches << "/1000";
}

void multi_label(Verdict& v) {
  synth::TempDir dir("acc-multilabel");
  std::istringstream blobs(synth::blobs_manifest(505, 60, 30));
  std::ostringstream twin;
  std::string line;
  std::getline(blobs, line);
  twin << line << ",label_parity\n";
  for (int i = 0; std::getline(blobs, line); ++i) twin << line << ',' << (i % 3 == 0 ? 1 : 0) << '\n';
  synth::write_text(dir.path() / "m.csv", twin.str());
  tr::TrainConfig c = quiet_config(dir.path() / "m.csv", dir.path() / "out");
  c.mlp_hidden = {16};
  c.epochs = 5;
  const tr::TrainResult r = tr::train(c);
  int exact = 0;
  for (const auto& e : r.epochs) exact += e.val_label_losses.size() == 2 && e.val_loss == e.val_label_losses[0] + e.val_label_losses[1];
  v.require(exact == static_cast<int>(r.epochs.size()), "total loss sum");

  m::ModelAssembly model = m::load_checkpoint(r.checkpoints.back(), tr::derive_spec(c, nervus::data::load_manifest(c.manifest, Task::kClassification)));
  Rng rng(506);
  g::Tape tape(g::Tape::Recording::kOff);
  const g::Tensor x = random_tensor({7, 2}, rng);
  const auto before = model.forward(tape, std::nullopt, x, nervus::Mode::kEval, rng);
  for (const char* name : {"head.blob.weight", "head.blob.bias"}) {
    g::Tensor p = model.parameter(name);
    std::fill(p.mutable_data().begin(), p.mutable_data().end(), 0.0f);
  }
  const auto after = model.forward(tape, std::nullopt, x, nervus::Mode::kEval, rng);
  v.require(values_of(after[1]) == values_of(before[1]), "other head unchanged");
  v.require(values_of(after[0]) != values_of(before[0]), "zeroed head changed");
  v.detail << exact << "/" << r.epochs.size() << " epochs with total == sum bit-exactly; zeroing head.blob left parity outputs identical";
}

void tabular_blobs(Verdict& v) {
  synth::TempDir dir("acc-blobs");
  synth::write_text(dir.path() / "m.csv", synth::blobs_manifest(606, 200, 50));
  tr::TrainConfig c = quiet_config(dir.path() / "m.csv", dir.path() / "out");
  c.modality = m::Modality::kTabular;
  c.epochs = 200;
  c.seed = 6;
  Stopwatch clock;
  const tr::TrainResult r = tr::train(c);
  const double seconds = clock.seconds();
  const double accuracy = r.final_report.metric("blob", "accuracy").value_or(0.0);
  v.require(accuracy >= 0.95, "val accuracy");
  v.require(seconds < 60.0, "runtime");
  v.detail << "val accuracy " << accuracy << " after " << r.epochs.size() << " epochs, " << seconds << " s";
}

void image_squares(Verdict& v) {
  synth::TempDir dir("acc-squares");
  const fs::path manifest = synth::write_square_dataset(dir.path(), 707, 200, 50);
  tr::TrainConfig c = quiet_config(manifest, dir.path() / "out");
  c.modality = m::Modality::kImage;
  c.in_channels = 1;
  c.epochs = 40;
  c.seed = 7;
  Stopwatch clock;
  const tr::TrainResult r = tr::train(c);
  const double seconds = clock.seconds();
  const double auc = r.final_report.metric("square", "auc").value_or(0.0);
  v.require(auc >= 0.95, "val AUC");
  v.require(static_cast<int>(r.epochs.size()) <= 100, "epochs");
  v.require(seconds < 300.0, "runtime");
  v.detail << "val AUC " << auc << " after " << r.epochs.size() << " epochs, " << seconds << " s";
}

void multimodal_survival(Verdict& v) {
  synth::TempDir dir("acc-survival");
  const fs::path manifest = synth::write_survival_cohort(dir.path(), 808, 180, 60, 60);
  tr::TrainConfig c = quiet_config(manifest, dir.path() / "out");
  c.task = Task::kDeepSurv;
  c.criterion = nervus::loss::Criterion::kNpll;
  c.modality = m::Modality::kBoth;
  c.batch_size = 60;
  c.epochs = 60;
  c.seed = 8;
  Stopwatch clock;
  tr::train(c);
  c.weights = c.out / "best.nvs";
  c.out = dir.path() / "test";
  const tr::EvalReport report = tr::test_command(c);
  const double seconds = clock.seconds();
  const double cindex = report.metric("event", "c_index").value_or(0.0);
  const double p = report.metric("event", "logrank_p").value_or(1.0);
  v.require(cindex >= 0.8, "test c-index");
  v.require(p < 0.01, "log-rank p");
  v.require(seconds < 300.0, "runtime");
  v.detail << "test c-index " << cindex << ", log-rank p " << p << ", " << seconds << " s";
}

void sampler(Verdict& v) {
  std::ostringstream csv;
  csv << "id,split,label_y\n";
  for (int i = 0; i < 50; ++i) csv << "s" << i << ",train," << (i < 10 ? 1 : 0) << '\n';
  const nervus::data::Manifest manifest = nervus::data::parse_manifest(csv.str(), Task::kClassification);
  const nervus::data::SamplerPlan plan = nervus::data::build_sampler(manifest, nervus::data::SamplerMode::kUpsample, "y");
  Rng rng(909);
  std::size_t minority = 0, draws = 0;
  while (draws < 10000) {
    for (std::size_t i : plan.draw(rng)) {
      if (draws == 10000) break;
      minority += manifest.records[i].labels[0] == 1.0f;
      ++draws;
    }
  }
  const double f1 = static_cast<double>(minority) / 10000.0;
  v.require(std::abs(f1 - 0.5) <= 0.05 && std::abs((1.0 - f1) - 0.5) <= 0.05, "frequencies");
  v.detail << "class frequencies " << 1.0 - f1 << " / " << f1;
}

void determinism(Verdict& v) {
  synth::TempDir dir("acc-determinism");
  const fs::path manifest = synth::write_square_dataset(dir.path(), 1010, 60, 20);
  std::vector<tr::TrainConfig> runs;
  for (const char* out : {"a", "b"}) {
    tr::TrainConfig c = quiet_config(manifest, dir.path() / out);
    c.modality = m::Modality::kImage;
    c.cnn_depth = 2;
    c.cnn_channels = 4;
    c.epochs = 4;
    c.augmentation = nervus::data::Augmentation::kFlipCrop;
    c.seed = 10;
    tr::train(c);
    runs.push_back(c);
  }
  v.require(synth::read_text(runs[0].out / "log.csv") == synth::read_text(runs[1].out / "log.csv"), "log.csv");
  v.require(synth::read_bytes(runs[0].out / "best.nvs") == synth::read_bytes(runs[1].out / "best.nvs"), "checkpoint bytes");

  Rng rng(1011);
  m::ModelSpec spec;
  spec.task = Task::kClassification;
  spec.labels = {{"a", nervus::LabelKind::kClassification, 2}, {"b", nervus::LabelKind::kClassification, 3}};
  spec.modality = m::Modality::kBoth;
  spec.mlp = m::MlpSpec{3, {8}, 0.2f};
  spec.cnn = m::CnnSpec{3, 2, 4};
  m::ModelAssembly rgb = m::ModelAssembly::build(spec, rng);
  m::save_checkpoint(rgb, dir.path() / "rgb.nvs", 1, 0.5);
  m::ModelAssembly loaded = m::load_checkpoint(dir.path() / "rgb.nvs", spec);
  g::Tape tape(g::Tape::Recording::kOff);
  const g::Tensor images = random_tensor({4, 3, 8, 8}, rng), tab = random_tensor({4, 3}, rng);
  const auto x = rgb.forward(tape, images, tab, nervus::Mode::kEval, rng);
  const auto y = loaded.forward(tape, images, tab, nervus::Mode::kEval, rng);
  bool same = true;
  for (std::size_t l = 0; l < x.size(); ++l) same = same && values_of(x[l]) == values_of(y[l]);
  v.require(same, "save/load forward");

  m::ModelSpec gray_spec = spec;
  gray_spec.cnn->in_channels = 1;
  m::ModelAssembly gray = m::load_checkpoint(dir.path() / "rgb.nvs", gray_spec);
  bool others = true;
  for (const auto& p : rgb.parameters()) {
    if (p.name != "cnn.conv0.weight") others = others && values_of(gray.parameter(p.name)) == values_of(p.tensor);
  }
  v.require(others, "non-adapted tensors");
  v.require(values_of(gray.parameter("cnn.conv0.weight")) == values_of(m::adapt_first_layer(rgb.parameter("cnn.conv0.weight"))),
            "adapted first layer");
  v.detail << "log.csv and best.nvs identical across seeded runs; forward bit-exact after reload; 3->1 load restored "
           << rgb.parameters().size() - 1 << " tensors exactly";
}

template <typename E>
bool throws_as(const std::function<void()>& f) {
  try {
    f();
  } catch (const E&) {
    return true;
  } catch (...) {
    return false;
  }
  return false;
}

void format_conformance(Verdict& v) {
  const std::string p5 = "P5\n2 1\n255\n";
  std::vector<std::uint8_t> eight(p5.begin(), p5.end());
  eight.insert(eight.end(), {0, 255});
  const auto a = nervus::data::decode_image(eight);
  const std::string p5w = "P5\n2 1\n65535\n";
  std::vector<std::uint8_t> sixteen(p5w.begin(), p5w.end());
  sixteen.insert(sixteen.end(), {0, 0, 255, 255});
  const auto b = nervus::data::decode_image(sixteen);
  v.require(a.values[1] == 1.0f && a.values[0] == 0.0f, "8-bit");
  v.require(b.values[1] == 1.0f && b.values[0] == 0.0f, "16-bit");

  const std::vector<std::string> malformed{
      "",
      "id,label_y\na,0\n",
      "id,split\na,train\n",
      "id,split,label_y\na,holdout,0\n",
      "id,split,label_y\na,train,0\na,val,1\n",
      "id,split,label_y\na,train\n",
      "id,split,input_x,label_y\na,train,abc,0\n",
      "id,split,label_y\na,train,0.5\n",
  };
  int rejected = 0;
  for (const std::string& csv : malformed) {
    rejected += throws_as<nervus::ManifestError>([&] { nervus::data::parse_manifest(csv, Task::kClassification); });
  }
  rejected += throws_as<nervus::ManifestError>(
      [] { nervus::data::parse_manifest("id,split,label_e\na,train,1\n", Task::kDeepSurv); });
  v.require(rejected == static_cast<int>(malformed.size()) + 1, "malformed manifests");

  const std::vector<std::pair<std::string, std::string>> incompatible{
      {"regression", "CE"}, {"classification", "MSE"}, {"classification", "NPLL"}, {"deepsurv", "MAE"}, {"deepsurv", "CE"}};
  int refused = 0;
  for (const auto& [task, criterion] : incompatible) {
    refused += throws_as<nervus::ConfigError>(
        [&] { tr::parse_cli({"train", "--manifest", "m.csv", "--task", task, "--criterion", criterion}); });
  }
  v.require(refused == static_cast<int>(incompatible.size()), "task/criterion");
  v.detail << "max codes -> " << a.values[1] << " / " << b.values[1] << "; " << rejected << " malformed manifests -> ManifestError; "
           << refused << " incompatible pairs -> ConfigError";
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Verdict&)>>> criteria{
      {"gradient suite", gradient_suite},
      {"channel adaptation identity", channel_adaptation},
      {"Cox oracle equivalence", cox_oracle},
      {"survival statistics", survival_statistics},
      {"multi-label decomposition", multi_label},
      {"end-to-end tabular classification", tabular_blobs},
      {"end-to-end image classification", image_squares},
      {"end-to-end multimodal survival", multimodal_survival},
      {"sampler", sampler},
      {"determinism and persistence", determinism},
      {"format conformance", format_conformance},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failures += !v.pass;
    std::printf("%s %zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
