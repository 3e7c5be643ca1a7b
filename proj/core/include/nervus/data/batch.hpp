#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nervus/data/augment.hpp"
#include "nervus/data/image.hpp"
#include "nervus/data/manifest.hpp"
#include "nervus/data/sampler.hpp"
#include "nervus/data/tabular.hpp"
#include "nervus/grad/tensor.hpp"
#include "nervus/random.hpp"

namespace nervus::data {

// Decodes manifest images relative to a root directory and converts them to a
// fixed channel count. Decoded images are cached; not safe for concurrent use.
class ImageSource {
 public:
  ImageSource(std::filesystem::path root, int target_channels,
              std::optional<int> bit_depth = std::nullopt);

  const ImageTensor& get(const std::string& ref) const;
  int channels() const { return channels_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  int channels_;
  std::optional<int> bit_depth_;
  mutable std::map<std::string, ImageTensor> cache_;
};

struct Batch {
  std::vector<std::size_t> records;  // manifest indices
  std::vector<std::string> ids;
  std::optional<grad::Tensor> images;   // [batch, C, H, W]
  std::optional<grad::Tensor> tabular;  // [batch, features]
  std::vector<std::vector<float>> targets;  // [label][sample]
  std::vector<double> periods;              // deepsurv only

  std::size_t size() const { return ids.size(); }
};

struct BatchOptions {
  std::size_t batch_size = 32;
  Augmentation augmentation = Augmentation::kNone;  // applied to the train split only
  bool use_images = true;
  bool use_tabular = true;
};

// Forms the batches of one pass over `split`. The train split follows
// `sampler`; val and test are visited in manifest order. The last batch may be
// short. Identical rng state yields identical batches.
std::vector<Batch> make_batches(const Manifest& manifest, Split split, const SamplerPlan& sampler,
                                const TabularStats& stats, const ImageSource* images,
                                const BatchOptions& options, Rng& rng);

/// Builds one batch from explicit manifest indices (no augmentation).
Batch assemble_batch(const Manifest& manifest, std::span<const std::size_t> records,
                     const TabularStats& stats, const ImageSource* images,
                     const BatchOptions& options, Rng* augment_rng = nullptr);

}  // namespace nervus::data
