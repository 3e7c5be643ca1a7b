#include "nervus/data/sampler.hpp"

#include <algorithm>
#include <map>

#include "nervus/error.hpp"

namespace nervus::data {

std::string_view to_string(SamplerMode mode) {
  switch (mode) {
    case SamplerMode::kSequential: return "sequential";
    case SamplerMode::kShuffled: return "shuffled";
    case SamplerMode::kUpsample: return "upsample";
  }
  return "?";
}

SamplerMode parse_sampler_mode(std::string_view token) {
  if (token == "sequential") return SamplerMode::kSequential;
  if (token == "shuffled") return SamplerMode::kShuffled;
  if (token == "upsample") return SamplerMode::kUpsample;
  throw ConfigError("unknown sampler '" + std::string(token) + "'");
}

SamplerPlan build_sampler(const Manifest& manifest, SamplerMode mode, std::string_view anchor_label) {
  SamplerPlan plan;
  plan.mode = mode;
  plan.records = manifest.indices(Split::kTrain);
  if (mode != SamplerMode::kUpsample) return plan;

  if (anchor_label.empty()) {
    if (manifest.labels.size() != 1) {
      throw ConfigError("upsample sampler needs --anchor-label in multi-label runs");
    }
    anchor_label = manifest.labels.front().name;
  }
  const std::size_t label = manifest.label_index(anchor_label);
  if (manifest.labels[label].kind != LabelKind::kClassification) {
    throw ConfigError("anchor label '" + std::string(anchor_label) +
                      "' is not a classification label");
  }
  plan.anchor_label = std::string(anchor_label);

  std::map<int, std::size_t> counts;
  for (std::size_t i : plan.records) ++counts[static_cast<int>(manifest.records[i].labels[label])];
  plan.weights.reserve(plan.records.size());
  for (std::size_t i : plan.records) {
    const int cls = static_cast<int>(manifest.records[i].labels[label]);
    plan.weights.push_back(1.0 / static_cast<double>(counts[cls]));
  }
  return plan;
}

std::vector<std::size_t> SamplerPlan::draw(Rng& rng) const {
  std::vector<std::size_t> order = records;
  switch (mode) {
    case SamplerMode::kSequential:
      break;
    case SamplerMode::kShuffled:
      rng.shuffle(order.begin(), order.end());
      break;
    case SamplerMode::kUpsample: {
      std::vector<double> cumulative(weights.size());
      double running = 0.0;
      for (std::size_t i = 0; i < weights.size(); ++i) {
        running += weights[i];
        cumulative[i] = running;
      }
      for (std::size_t k = 0; k < order.size(); ++k) {
        const double target = rng.uniform() * running;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        if (it == cumulative.end()) --it;
        order[k] = records[static_cast<std::size_t>(it - cumulative.begin())];
      }
      break;
    }
  }
  return order;
}

}  // namespace nervus::data
