#include "nervus/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "nervus/data/batch.hpp"
#include "nervus/error.hpp"
#include "nervus/grad/optimizer.hpp"
#include "nervus/grad/tape.hpp"
#include "nervus/model/checkpoint.hpp"

namespace nervus::train {
namespace {

bool uses_images(model::Modality m) { return m != model::Modality::kTabular; }
bool uses_tabular(model::Modality m) { return m != model::Modality::kImage; }

std::filesystem::path image_root(const TrainConfig& config) {
  if (!config.image_root.empty()) return config.image_root;
  return config.manifest.parent_path();
}

bool batch_has_event(const data::Batch& batch) {
  for (float e : batch.targets.front()) {
    if (e == 1.0f) return true;
  }
  return false;
}

[[noreturn]] void rethrow_numeric(const NumericError& e, int epoch, std::size_t batch) {
  throw NumericError("non-finite value at epoch " + std::to_string(epoch) + ", batch " +
                     std::to_string(batch + 1) + ": " + e.what());
}

void check_spec_matches(const model::ModelSpec& expected, model::ModelSpec stored) {
  if (stored.cnn && expected.cnn && stored.cnn->in_channels == 3 && expected.cnn->in_channels == 1) {
    stored.cnn->in_channels = 1;
  }
  if (stored.task != expected.task) throw ConfigError("checkpoint was trained for a different task");
  if (stored.labels != expected.labels) throw ConfigError("checkpoint labels differ from the manifest labels");
  if (stored.modality != expected.modality) throw ConfigError("checkpoint was trained with a different model choice");
  if (stored != expected) throw ConfigError("checkpoint architecture differs from the configured model");
}

}  // namespace

model::ModelSpec derive_spec(const TrainConfig& config, const data::Manifest& manifest) {
  model::ModelSpec spec;
  spec.task = manifest.task;
  spec.labels = manifest.labels;
  spec.modality = config.modality;
  if (uses_tabular(config.modality)) {
    if (manifest.feature_names.empty()) {
      throw ConfigError("model " + std::string(model::to_string(config.modality)) +
                        " needs input_ columns in the manifest");
    }
    spec.mlp = model::MlpSpec{manifest.feature_names.size(), config.mlp_hidden, config.dropout};
  }
  if (uses_images(config.modality)) {
    if (!manifest.has_images) {
      throw ConfigError("model " + std::string(model::to_string(config.modality)) +
                        " needs an imgpath column in the manifest");
    }
    spec.cnn = model::CnnSpec{config.in_channels, config.cnn_depth, config.cnn_channels};
  }
  spec.validate();
  return spec;
}

TrainResult train(const TrainConfig& config, const data::Manifest& manifest, std::ostream* progress) {
  config.validate();
  if (manifest.task != config.task) throw ConfigError("manifest was parsed for a different task");
  if (manifest.count(Split::kTrain) == 0) throw ManifestError("the train split is empty");
  if (manifest.count(Split::kVal) == 0) throw ManifestError("the val split is empty");

  const model::ModelSpec spec = derive_spec(config, manifest);
  const loss::Criterion criterion = config.resolved_criterion();
  const data::TabularStats stats =
      uses_tabular(spec.modality) ? data::fit_tabular_stats(manifest) : data::TabularStats{};
  std::optional<data::ImageSource> images;
  if (uses_images(spec.modality)) images.emplace(image_root(config), config.in_channels, config.bit_depth);
  const data::ImageSource* image_ptr = images ? &*images : nullptr;
  const data::TabularStats* stats_ptr = uses_tabular(spec.modality) ? &stats : nullptr;
  const data::SamplerPlan sampler = data::build_sampler(manifest, config.sampler, config.anchor_label);

  Rng init_rng(config.seed, 0);
  Rng data_rng(config.seed, 1);
  Rng dropout_rng(config.seed, 2);

  model::ModelAssembly model = model::ModelAssembly::build(spec, init_rng);
  if (config.pretrained_weights) {
    model::restore_parameters(model, model::read_checkpoint(*config.pretrained_weights));
  }
  std::vector<grad::Tensor> params = model.parameter_tensors();
  grad::Optimizer optimizer({config.optimizer, config.learning_rate, config.momentum}, params);

  data::BatchOptions options;
  options.batch_size = config.batch_size;
  options.augmentation = config.augmentation;
  options.use_images = uses_images(spec.modality);
  options.use_tabular = uses_tabular(spec.modality);
  const EvalInputs eval_inputs{&manifest, &stats, image_ptr, criterion, config.batch_size};

  std::filesystem::create_directories(config.out);
  TrainResult result;
  double best = std::numeric_limits<double>::infinity();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const std::vector<data::Batch> batches =
        data::make_batches(manifest, Split::kTrain, sampler, stats, image_ptr, options, data_rng);

    double loss_sum = 0.0, loss_weight = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const data::Batch& batch = batches[b];
      if (spec.task == Task::kDeepSurv && !batch_has_event(batch)) continue;
      try {
        grad::Tape tape;
        const std::vector<grad::Tensor> outputs =
            model.forward(tape, batch.images, batch.tabular, Mode::kTrain, dropout_rng);
        std::vector<grad::Tensor> losses;
        for (std::size_t l = 0; l < outputs.size(); ++l) {
          losses.push_back(label_loss(tape, outputs[l], batch, l, criterion));
        }
        const grad::Tensor total = loss::total_loss(tape, losses);
        optimizer.zero_grad(params);
        tape.backward(total);
        optimizer.step(params);
        loss_sum += static_cast<double>(total.item()) * static_cast<double>(batch.size());
        loss_weight += static_cast<double>(batch.size());
      } catch (const NumericError& e) {
        rethrow_numeric(e, epoch, b);
      }
    }
    if (loss_weight == 0.0) {
      throw Error("epoch " + std::to_string(epoch) + " had no batch with an event to train on");
    }

    EvalReport report = evaluate(model, eval_inputs, Split::kVal);
    if (!std::isfinite(report.losses.total)) {
      throw NumericError("validation loss is not finite at epoch " + std::to_string(epoch));
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = static_cast<float>(loss_sum / loss_weight);
    log.val_loss = report.losses.total;
    log.val_label_losses = report.losses.per_label;
    log.saved = should_save(config.save_policy, log.val_loss, best);
    if (log.saved) {
      best = log.val_loss;
      const std::filesystem::path path =
          config.out / (config.save_policy == SavePolicy::kBest ? std::string("best.nvs")
                                                                : "epoch" + std::to_string(epoch) + ".nvs");
      model::save_checkpoint(model, path, epoch, log.val_loss, stats_ptr);
      if (result.checkpoints.empty() || result.checkpoints.back() != path) result.checkpoints.push_back(path);
    }
    if (config.log_timing == LogTiming::kWall) {
      log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    }
    result.epochs.push_back(log);
    write_log_csv(config.out / "log.csv", manifest, result.epochs);
    if (progress != nullptr) {
      *progress << "epoch " << epoch << "/" << config.epochs << "  train " << log.train_loss << "  val "
                << log.val_loss << (log.saved ? "  saved" : "") << '\n';
    }
    result.final_report = std::move(report);
  }
  write_report_files(config.out, manifest, result.final_report);
  return result;
}

TrainResult train(const TrainConfig& config, std::ostream* progress) {
  config.validate();
  return train(config, data::load_manifest(config.manifest, config.task), progress);
}

EvalReport test_command(const TrainConfig& config) {
  if (!config.weights) throw ConfigError("test needs --weights");
  if (!std::filesystem::is_regular_file(*config.weights)) {
    throw IoError("weights file not found: " + config.weights->string());
  }
  config.validate();
  const model::Checkpoint checkpoint = model::read_checkpoint(*config.weights);

  const data::Manifest manifest = data::load_manifest(config.manifest, config.task);
  if (manifest.count(Split::kTest) == 0) throw ManifestError("the test split is empty");
  const model::ModelSpec spec = derive_spec(config, manifest);
  check_spec_matches(spec, checkpoint.meta.spec);

  Rng init_rng(config.seed, 0);
  model::ModelAssembly model = model::ModelAssembly::build(spec, init_rng);
  model::restore_parameters(model, checkpoint);

  data::TabularStats stats;
  if (uses_tabular(spec.modality)) {
    stats = checkpoint.meta.tabular_stats ? *checkpoint.meta.tabular_stats : data::fit_tabular_stats(manifest);
  }
  std::optional<data::ImageSource> images;
  if (uses_images(spec.modality)) images.emplace(image_root(config), config.in_channels, config.bit_depth);

  const EvalInputs inputs{&manifest, &stats, images ? &*images : nullptr, config.resolved_criterion(),
                          config.batch_size};
  EvalReport report = evaluate(model, inputs, Split::kTest);
  std::filesystem::create_directories(config.out);
  write_report_files(config.out, manifest, report);
  return report;
}

}  // namespace nervus::train
