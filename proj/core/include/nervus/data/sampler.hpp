#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nervus/data/manifest.hpp"
#include "nervus/random.hpp"

namespace nervus::data {

enum class SamplerMode { kSequential, kShuffled, kUpsample };

std::string_view to_string(SamplerMode mode);
SamplerMode parse_sampler_mode(std::string_view token);

// Draw plan over the train split.
//   sequential: manifest order, no replacement
//   shuffled:   fresh permutation per epoch, no replacement
//   upsample:   draws with replacement, weight 1/count(class) under the anchor label
struct SamplerPlan {
  SamplerMode mode = SamplerMode::kSequential;
  std::vector<std::size_t> records;  // manifest indices of the train split
  std::vector<double> weights;       // upsample only, parallel to `records`
  std::string anchor_label;          // upsample only

  /// One epoch of manifest indices; epoch length is records.size().
  std::vector<std::size_t> draw(Rng& rng) const;
};

/// Throws ConfigError when upsampling without a classification anchor label.
SamplerPlan build_sampler(const Manifest& manifest, SamplerMode mode,
                          std::string_view anchor_label = {});

}  // namespace nervus::data
