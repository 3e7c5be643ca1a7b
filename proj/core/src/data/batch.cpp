#include "nervus/data/batch.hpp"

#include "nervus/error.hpp"

namespace nervus::data {

ImageSource::ImageSource(std::filesystem::path root, int target_channels,
                         std::optional<int> bit_depth)
    : root_(std::move(root)), channels_(target_channels), bit_depth_(bit_depth) {
  if (target_channels != 1 && target_channels != 3) {
    throw ConfigError("input channels must be 1 or 3");
  }
}

const ImageTensor& ImageSource::get(const std::string& ref) const {
  auto it = cache_.find(ref);
  if (it != cache_.end()) return it->second;
  ImageTensor decoded = convert_channels(read_image(root_ / ref, bit_depth_), channels_);
  return cache_.emplace(ref, std::move(decoded)).first->second;
}

Batch assemble_batch(const Manifest& manifest, std::span<const std::size_t> records,
                     const TabularStats& stats, const ImageSource* images,
                     const BatchOptions& options, Rng* augment_rng) {
  Batch batch;
  const std::size_t n = records.size();
  batch.records.assign(records.begin(), records.end());
  batch.targets.assign(manifest.labels.size(), std::vector<float>(n));

  const bool want_images = options.use_images && manifest.has_images;
  const bool want_tabular = options.use_tabular && !manifest.feature_names.empty();
  if (want_images && images == nullptr) throw Error("manifest has images but no image source");

  std::vector<float> image_block;
  std::vector<float> tabular_block;
  int height = 0, width = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const SampleRecord& rec = manifest.records[records[k]];
    batch.ids.push_back(rec.id);
    for (std::size_t l = 0; l < manifest.labels.size(); ++l) batch.targets[l][k] = rec.labels[l];
    if (manifest.task == Task::kDeepSurv) batch.periods.push_back(rec.period.value_or(0.0));

    if (want_tabular) {
      const std::vector<float> z = normalize_tabular(stats, rec);
      tabular_block.insert(tabular_block.end(), z.begin(), z.end());
    }
    if (want_images) {
      const ImageTensor& cached = images->get(*rec.image_ref);
      ImageTensor augmented;
      const ImageTensor* img = &cached;
      if (augment_rng != nullptr && options.augmentation != Augmentation::kNone) {
        augmented = augment(cached, options.augmentation, *augment_rng);
        img = &augmented;
      }
      if (k == 0) {
        height = img->height;
        width = img->width;
      } else if (img->height != height || img->width != width) {
        throw ShapeError("image '" + *rec.image_ref + "' is " + std::to_string(img->height) + "x" +
                         std::to_string(img->width) + ", batch expects " + std::to_string(height) +
                         "x" + std::to_string(width));
      }
      image_block.insert(image_block.end(), img->values.begin(), img->values.end());
    }
  }
  if (want_tabular) {
    batch.tabular = grad::Tensor({n, stats.width()}, std::move(tabular_block));
  }
  if (want_images) {
    batch.images = grad::Tensor({n, static_cast<std::size_t>(images->channels()),
                                 static_cast<std::size_t>(height), static_cast<std::size_t>(width)},
                                std::move(image_block));
  }
  return batch;
}

std::vector<Batch> make_batches(const Manifest& manifest, Split split, const SamplerPlan& sampler,
                                const TabularStats& stats, const ImageSource* images,
                                const BatchOptions& options, Rng& rng) {
  if (options.batch_size == 0) throw ConfigError("batch size must be at least 1");
  const std::vector<std::size_t> order =
      split == Split::kTrain ? sampler.draw(rng) : manifest.indices(split);
  if (order.empty()) {
    throw ManifestError("split '" + std::string(to_string(split)) + "' has no records");
  }
  Rng* augment_rng = split == Split::kTrain ? &rng : nullptr;
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
    const std::size_t stop = std::min(order.size(), start + options.batch_size);
    batches.push_back(assemble_batch(manifest,
                                     std::span<const std::size_t>(order).subspan(start, stop - start),
                                     stats, images, options, augment_rng));
  }
  return batches;
}

}  // namespace nervus::data
