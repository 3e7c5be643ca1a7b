#include "nervus/model/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <nlohmann/json.hpp>

#include "nervus/error.hpp"

namespace nervus::model {
namespace {

using nlohmann::json;

constexpr char kMagic[4] = {'N', 'V', 'S', '1'};
constexpr const char* kFirstConv = "cnn.conv0.weight";

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

json spec_to_json(const ModelSpec& spec) {
  json labels = json::array();
  for (const LabelSpec& l : spec.labels) {
    labels.push_back({{"name", l.name}, {"kind", to_string(l.kind)}, {"class_count", l.class_count}});
  }
  json j = {{"task", to_string(spec.task)},
            {"modality", to_string(spec.modality)},
            {"labels", labels},
            {"mlp", nullptr},
            {"cnn", nullptr}};
  if (spec.mlp) {
    j["mlp"] = {{"input_width", spec.mlp->input_width},
                {"hidden", spec.mlp->hidden},
                {"dropout", spec.mlp->dropout}};
  }
  if (spec.cnn) {
    j["cnn"] = {{"in_channels", spec.cnn->in_channels},
                {"depth", spec.cnn->depth},
                {"base_channels", spec.cnn->base_channels}};
  }
  return j;
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec spec;
  spec.task = parse_task(j.at("task").get<std::string>());
  spec.modality = parse_modality(j.at("modality").get<std::string>());
  for (const json& l : j.at("labels")) {
    spec.labels.push_back(LabelSpec{l.at("name").get<std::string>(),
                                    parse_label_kind(l.at("kind").get<std::string>()),
                                    l.at("class_count").get<int>()});
  }
  if (!j.at("mlp").is_null()) {
    const json& m = j.at("mlp");
    spec.mlp = MlpSpec{m.at("input_width").get<std::size_t>(),
                       m.at("hidden").get<std::vector<std::size_t>>(), m.at("dropout").get<float>()};
  }
  if (!j.at("cnn").is_null()) {
    const json& c = j.at("cnn");
    spec.cnn = CnnSpec{c.at("in_channels").get<int>(), c.at("depth").get<int>(),
                       c.at("base_channels").get<int>()};
  }
  return spec;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const ModelAssembly& model, int epoch, double val_loss,
                                            const data::TabularStats* stats) {
  json directory = json::array();
  std::size_t offset = 0;
  for (const NamedTensor& p : model.parameters()) {
    directory.push_back({{"name", p.name}, {"shape", p.tensor.shape()}, {"offset", offset}});
    offset += p.tensor.numel() * sizeof(float);
  }
  json meta = {{"format_version", kCheckpointVersion},
               {"spec", spec_to_json(model.spec())},
               {"tabular_stats", nullptr},
               {"epoch", epoch},
               {"val_loss", val_loss},
               {"tensors", directory}};
  if (stats) meta["tabular_stats"] = {{"mean", stats->mean}, {"stddev", stats->stddev}};
  const std::string text = meta.dump();

  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(text.size()));
  out.insert(out.end(), text.begin(), text.end());
  out.reserve(out.size() + offset);
  for (const NamedTensor& p : model.parameters()) {
    for (float v : p.tensor.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError("checkpoint: missing NVS1 magic");
  }
  const std::size_t meta_len = get_u32(bytes.data() + 4);
  if (bytes.size() < 8 + meta_len) throw FormatError("checkpoint: truncated metadata block");

  json meta;
  try {
    meta = json::parse(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(meta_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: corrupt metadata: ") + e.what());
  }

  Checkpoint ck;
  try {
    ck.meta.format_version = meta.at("format_version").get<int>();
    if (ck.meta.format_version != kCheckpointVersion) {
      throw FormatError("checkpoint: unsupported format version " +
                        std::to_string(ck.meta.format_version));
    }
    ck.meta.spec = spec_from_json(meta.at("spec"));
    ck.meta.epoch = meta.at("epoch").get<int>();
    ck.meta.val_loss = meta.at("val_loss").get<double>();
    if (!meta.at("tabular_stats").is_null()) {
      data::TabularStats stats;
      stats.mean = meta["tabular_stats"].at("mean").get<std::vector<double>>();
      stats.stddev = meta["tabular_stats"].at("stddev").get<std::vector<double>>();
      if (stats.mean.size() != stats.stddev.size()) {
        throw FormatError("checkpoint: tabular statistics are inconsistent");
      }
      ck.meta.tabular_stats = std::move(stats);
    }

    const std::span<const std::uint8_t> payload = bytes.subspan(8 + meta_len);
    std::size_t expected_offset = 0;
    for (const json& entry : meta.at("tensors")) {
      const std::string name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<grad::Shape>();
      const std::size_t offset = entry.at("offset").get<std::size_t>();
      if (offset != expected_offset) throw FormatError("checkpoint: tensor '" + name + "' misplaced");
      const std::size_t count = grad::numel_of(shape);
      if (payload.size() < offset + count * sizeof(float)) {
        throw FormatError("checkpoint: payload truncated inside tensor '" + name + "'");
      }
      std::vector<float> values(count);
      for (std::size_t i = 0; i < count; ++i) {
        values[i] = std::bit_cast<float>(get_u32(payload.data() + offset + i * sizeof(float)));
      }
      try {
        ck.tensors.push_back({name, grad::Tensor(shape, std::move(values), true)});
      } catch (const Error& e) {
        throw FormatError("checkpoint: tensor '" + name + "': " + e.what());
      }
      expected_offset = offset + count * sizeof(float);
    }
    if (payload.size() != expected_offset) {
      throw FormatError("checkpoint: " + std::to_string(payload.size() - expected_offset) +
                        " trailing payload bytes");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: corrupt metadata: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint: corrupt metadata: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const ModelAssembly& model, const std::filesystem::path& path, int epoch,
                     double val_loss, const data::TabularStats* stats) {
  const std::vector<std::uint8_t> bytes = encode_checkpoint(model, epoch, val_loss, stats);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into '" + path.string() + "': " + ec.message());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

void restore_parameters(ModelAssembly& model, const Checkpoint& checkpoint) {
  std::map<std::string, const grad::Tensor*> source;
  for (const NamedTensor& t : checkpoint.tensors) {
    if (!source.emplace(t.name, &t.tensor).second) {
      throw FormatError("checkpoint: duplicate tensor '" + t.name + "'");
    }
  }

  // Validate everything first; only then write.
  std::vector<std::pair<grad::Tensor, grad::Tensor>> plan;
  for (const NamedTensor& p : model.parameters()) {
    auto it = source.find(p.name);
    if (it == source.end()) throw ShapeError("checkpoint lacks tensor '" + p.name + "'");
    grad::Tensor value = *it->second;
    if (p.name == kFirstConv && value.rank() == 4 && value.dim(1) == 3 &&
        p.tensor.rank() == 4 && p.tensor.dim(1) == 1) {
      value = adapt_first_layer(value);
    }
    if (value.shape() != p.tensor.shape()) {
      throw ShapeError("tensor '" + p.name + "' has shape " + grad::shape_string(value.shape()) +
                       " in the checkpoint but " + grad::shape_string(p.tensor.shape()) +
                       " in the model");
    }
    plan.emplace_back(p.tensor, value);
    source.erase(it);
  }
  if (!source.empty()) {
    throw ShapeError("checkpoint tensor '" + source.begin()->first + "' has no counterpart in the model");
  }
  for (auto& [target, value] : plan) {
    auto dst = target.mutable_data();
    const auto src = value.data();
    std::copy(src.begin(), src.end(), dst.begin());
  }
}

ModelAssembly load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected) {
  const Checkpoint checkpoint = read_checkpoint(path);
  Rng unused(0);
  ModelAssembly model = ModelAssembly::build(expected, unused);
  restore_parameters(model, checkpoint);
  return model;
}

}  // namespace nervus::model
