#include "nervus/train/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <iostream>

#include "nervus/error.hpp"
#include "nervus/train/trainer.hpp"

namespace nervus::train {
namespace {

struct RawOptions {
  std::string manifest, image_root, task = "classification", model = "MLP", criterion, optimizer = "Adam";
  float lr = 1e-3f;
  float momentum = 0.0f;
  int epochs = 50;
  std::size_t batch_size = 32;
  std::string augmentation = "none", sampler = "shuffled", anchor_label;
  int in_channels = 1;
  int bit_depth = 0;
  std::string mlp_hidden = "256,256";
  float dropout = 0.2f;
  int cnn_depth = 3, cnn_channels = 16;
  std::string pretrained, weights, save_policy = "best", device = "cpu", out = ".", log_timing = "wall";
  std::uint64_t seed = 0;
};

void add_model_options(CLI::App& cmd, RawOptions& raw) {
  cmd.add_option("--manifest", raw.manifest, "Manifest CSV")->required();
  cmd.add_option("--image-root", raw.image_root, "Directory imgpath entries are relative to (default: manifest directory)");
  cmd.add_option("--task", raw.task, "classification | regression | deepsurv")->capture_default_str();
  cmd.add_option("--model", raw.model, "MLP | CNN | MLP+CNN")->capture_default_str();
  cmd.add_option("--criterion", raw.criterion, "CE | MSE | RMSE | MAE | NPLL (default from the task)");
  cmd.add_option("--in-channels", raw.in_channels, "Image channels fed to the CNN: 1 or 3")->capture_default_str();
  cmd.add_option("--bit-depth", raw.bit_depth, "Required image bit depth, 8 or 16 (default: any)");
  cmd.add_option("--mlp-hidden", raw.mlp_hidden, "Comma-separated MLP hidden widths")->capture_default_str();
  cmd.add_option("--dropout", raw.dropout, "MLP dropout probability")->capture_default_str();
  cmd.add_option("--cnn-depth", raw.cnn_depth, "CNN conv blocks")->capture_default_str();
  cmd.add_option("--cnn-channels", raw.cnn_channels, "Channels of the first CNN block")->capture_default_str();
  cmd.add_option("--batch-size", raw.batch_size, "Samples per batch")->capture_default_str();
  cmd.add_option("--device", raw.device, "Compute device; only cpu is available")->capture_default_str();
  cmd.add_option("--seed", raw.seed, "Seed for every random stream")->capture_default_str();
  cmd.add_option("--out", raw.out, "Output directory")->capture_default_str();
}

std::vector<std::size_t> parse_widths(const std::string& text) {
  std::vector<std::size_t> widths;
  if (text.empty()) return widths;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = std::min(text.find(',', start), text.size());
    std::size_t value = 0;
    const char* first = text.data() + start;
    const char* last = text.data() + comma;
    const auto [end, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || end != last || value == 0) {
      throw ConfigError("--mlp-hidden expects positive integers separated by commas, got '" + text + "'");
    }
    widths.push_back(value);
    start = comma + 1;
  }
  return widths;
}

TrainConfig to_config(const RawOptions& raw) {
  TrainConfig config;
  config.manifest = raw.manifest;
  config.image_root = raw.image_root;
  config.task = parse_task(raw.task);
  config.modality = model::parse_modality(raw.model);
  if (!raw.criterion.empty()) config.criterion = loss::parse_criterion(raw.criterion);
  if (raw.optimizer == "Adam") {
    config.optimizer = grad::OptimizerKind::kAdam;
  } else if (raw.optimizer == "SGD") {
    config.optimizer = grad::OptimizerKind::kSgd;
  } else {
    throw ConfigError("unknown optimizer '" + raw.optimizer + "' (expected SGD or Adam)");
  }
  config.learning_rate = raw.lr;
  config.momentum = raw.momentum;
  config.epochs = raw.epochs;
  config.batch_size = raw.batch_size;
  config.augmentation = data::parse_augmentation(raw.augmentation);
  config.sampler = data::parse_sampler_mode(raw.sampler);
  config.anchor_label = raw.anchor_label;
  config.in_channels = raw.in_channels;
  if (raw.bit_depth != 0) config.bit_depth = raw.bit_depth;
  config.mlp_hidden = parse_widths(raw.mlp_hidden);
  config.dropout = raw.dropout;
  config.cnn_depth = raw.cnn_depth;
  config.cnn_channels = raw.cnn_channels;
  if (!raw.pretrained.empty()) config.pretrained_weights = raw.pretrained;
  if (!raw.weights.empty()) config.weights = raw.weights;
  config.save_policy = parse_save_policy(raw.save_policy);
  config.device = raw.device;
  config.seed = raw.seed;
  config.out = raw.out;
  if (raw.log_timing == "wall") {
    config.log_timing = LogTiming::kWall;
  } else if (raw.log_timing == "none") {
    config.log_timing = LogTiming::kNone;
  } else {
    throw ConfigError("--log-timing must be wall or none");
  }
  config.validate();
  return config;
}

}  // namespace

Invocation parse_cli(const std::vector<std::string>& args) {
  CLI::App app{"Assembles, trains and evaluates tabular, image and multimodal networks."};
  app.require_subcommand(1, 1);
  RawOptions raw;

  CLI::App* train_cmd = app.add_subcommand("train", "Train a model and write checkpoints, log.csv and val-split reports");
  add_model_options(*train_cmd, raw);
  train_cmd->add_option("--optimizer", raw.optimizer, "SGD | Adam")->capture_default_str();
  train_cmd->add_option("--lr", raw.lr, "Learning rate")->capture_default_str();
  train_cmd->add_option("--momentum", raw.momentum, "SGD momentum")->capture_default_str();
  train_cmd->add_option("--epochs", raw.epochs, "Training epochs")->capture_default_str();
  train_cmd->add_option("--augmentation", raw.augmentation, "none | flip | crop | flip+crop")->capture_default_str();
  train_cmd->add_option("--sampler", raw.sampler, "sequential | shuffled | upsample")->capture_default_str();
  train_cmd->add_option("--anchor-label", raw.anchor_label, "Label whose classes the upsample sampler balances");
  train_cmd->add_option("--pretrained-weights", raw.pretrained, "Checkpoint to start from");
  train_cmd->add_option("--save-policy", raw.save_policy,
                        "improvement: epoch<k>.nvs on every new minimum of the total validation loss; "
                        "best: overwrite best.nvs")
      ->capture_default_str();
  train_cmd->add_option("--log-timing", raw.log_timing, "wall | none (none writes 0 seconds to log.csv)")
      ->capture_default_str();

  CLI::App* test_cmd = app.add_subcommand("test", "Evaluate a checkpoint on the test split");
  add_model_options(*test_cmd, raw);
  test_cmd->add_option("--weights", raw.weights, "Checkpoint to evaluate")->required();

  Invocation invocation;
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    invocation.help = app.help();
    if (train_cmd->parsed()) invocation.help = train_cmd->help();
    if (test_cmd->parsed()) invocation.help = test_cmd->help();
    return invocation;
  } catch (const CLI::ParseError& e) {
    throw ConfigError(e.what());
  }
  invocation.command = test_cmd->parsed() ? Command::kTest : Command::kTrain;
  invocation.config = to_config(raw);
  return invocation;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const Invocation invocation = parse_cli(args);
    if (invocation.help) {
      out << *invocation.help;
      return 0;
    }
    if (invocation.command == Command::kTrain) {
      const TrainResult result = train(invocation.config, &out);
      out << "wrote " << result.checkpoints.size() << " checkpoint file(s) to " << invocation.config.out.string()
          << '\n';
    } else {
      const EvalReport report = test_command(invocation.config);
      for (const MetricRow& m : report.metrics) out << m.label << ' ' << m.metric << ' ' << m.value << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace nervus::train
