#include "nervus/train/config.hpp"

#include <cmath>
#include <string>

#include "nervus/error.hpp"

namespace nervus::train {

std::string_view to_string(SavePolicy policy) {
  return policy == SavePolicy::kBest ? "best" : "improvement";
}

SavePolicy parse_save_policy(std::string_view token) {
  if (token == "best") return SavePolicy::kBest;
  if (token == "improvement") return SavePolicy::kImprovement;
  throw ConfigError("unknown save policy '" + std::string(token) + "' (expected improvement or best)");
}

loss::Criterion TrainConfig::resolved_criterion() const {
  return criterion.value_or(loss::default_criterion(task));
}

void TrainConfig::validate() const {
  const loss::Criterion c = resolved_criterion();
  if (!loss::compatible(c, task)) {
    throw ConfigError("criterion " + std::string(loss::to_string(c)) + " is incompatible with task " +
                      std::string(nervus::to_string(task)));
  }
  if (device != "cpu") {
    throw ConfigError("device '" + device + "' is not supported; this build runs on cpu only");
  }
  if (in_channels != 1 && in_channels != 3) throw ConfigError("--in-channels must be 1 or 3");
  if (epochs < 1) throw ConfigError("--epochs must be at least 1");
  if (batch_size < 1) throw ConfigError("--batch-size must be at least 1");
  if (!(learning_rate > 0.0f) || !std::isfinite(learning_rate)) {
    throw ConfigError("--lr must be a positive finite number");
  }
  if (!(momentum >= 0.0f && momentum < 1.0f)) throw ConfigError("--momentum must be in [0, 1)");
  if (!(dropout >= 0.0f && dropout < 1.0f)) throw ConfigError("--dropout must be in [0, 1)");
  if (cnn_depth < 1 || cnn_channels < 1) throw ConfigError("CNN depth and channels must be positive");
  for (std::size_t width : mlp_hidden) {
    if (width == 0) throw ConfigError("--mlp-hidden widths must be positive");
  }
  if (bit_depth && *bit_depth != 8 && *bit_depth != 16) throw ConfigError("--bit-depth must be 8 or 16");
  if (manifest.empty()) throw ConfigError("--manifest is required");
}

bool should_save(SavePolicy, double val_loss, double best_so_far) { return val_loss < best_so_far; }

}  // namespace nervus::train
