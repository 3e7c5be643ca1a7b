#include "nervus/data/manifest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "nervus/data/csv.hpp"
#include "nervus/error.hpp"

namespace nervus::data {
namespace {

constexpr std::string_view kInputPrefix = "input_";
constexpr std::string_view kLabelPrefix = "label_";

std::optional<double> parse_decimal(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double value = 0.0;
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  std::ostringstream msg;
  msg << "manifest line " << line << ": " << what;
  throw ManifestError(msg.str());
}

}  // namespace

std::vector<std::size_t> Manifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].split == split) out.push_back(i);
  return out;
}

std::size_t Manifest::count(Split split) const {
  return static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(), [split](const SampleRecord& r) { return r.split == split; }));
}

std::size_t Manifest::label_index(std::string_view name) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].name == name) return i;
  throw ConfigError("no label named '" + std::string(name) + "' in manifest");
}

Manifest parse_manifest(std::string_view csv_text, Task task) {
  const std::vector<CsvRow> rows = parse_csv(csv_text);
  if (rows.empty()) throw ManifestError("manifest is empty: header row missing");
  const CsvRow& header = rows.front();

  std::optional<std::size_t> id_col, split_col, image_col, period_col;
  std::vector<std::size_t> feature_cols, label_cols;
  Manifest manifest;
  manifest.task = task;
  std::unordered_set<std::string> seen_columns;

  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    if (!seen_columns.insert(name).second) fail(1, "duplicate column '" + name + "'");
    if (name == "id") {
      id_col = c;
    } else if (name == "split") {
      split_col = c;
    } else if (name == "imgpath") {
      image_col = c;
    } else if (name == "period") {
      period_col = c;
    } else if (name.starts_with(kInputPrefix) && name.size() > kInputPrefix.size()) {
      feature_cols.push_back(c);
      manifest.feature_names.push_back(name.substr(kInputPrefix.size()));
    } else if (name.starts_with(kLabelPrefix) && name.size() > kLabelPrefix.size()) {
      label_cols.push_back(c);
      manifest.labels.push_back(
          LabelSpec{name.substr(kLabelPrefix.size()), label_kind_for(task), 1});
    }
    // Other columns are carried by the file but ignored.
  }
  if (!id_col) fail(1, "missing mandatory column 'id'");
  if (!split_col) fail(1, "missing mandatory column 'split'");
  if (label_cols.empty()) fail(1, "missing mandatory 'label_<name>' column");
  if (task == Task::kDeepSurv) {
    if (!period_col) fail(1, "deepsurv task requires a 'period' column");
    if (label_cols.size() != 1) fail(1, "deepsurv task requires exactly one label column");
  }
  manifest.has_images = image_col.has_value();

  std::vector<int> max_class(label_cols.size(), 0);
  std::unordered_set<std::string> ids;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const CsvRow& row = rows[r];
    const std::size_t line = r + 1;
    if (row.size() != header.size()) {
      fail(line, "expected " + std::to_string(header.size()) + " cells, found " +
                     std::to_string(row.size()));
    }
    SampleRecord rec;
    rec.id = row[*id_col];
    if (rec.id.empty()) fail(line, "empty id");
    if (!ids.insert(rec.id).second) fail(line, "duplicate id '" + rec.id + "'");

    const std::string& split = row[*split_col];
    if (split == "train") {
      rec.split = Split::kTrain;
    } else if (split == "val") {
      rec.split = Split::kVal;
    } else if (split == "test") {
      rec.split = Split::kTest;
    } else {
      fail(line, "unknown split token '" + split + "'");
    }

    if (image_col) {
      if (row[*image_col].empty()) fail(line, "empty imgpath");
      rec.image_ref = row[*image_col];
    }

    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const auto value = parse_decimal(row[feature_cols[f]]);
      if (!value) {
        fail(line, "non-numeric value '" + row[feature_cols[f]] + "' in column 'input_" +
                       manifest.feature_names[f] + "'");
      }
      rec.tabular.push_back(static_cast<float>(*value));
    }

    for (std::size_t l = 0; l < label_cols.size(); ++l) {
      const std::string& cell = row[label_cols[l]];
      const auto value = parse_decimal(cell);
      const std::string column = "label_" + manifest.labels[l].name;
      if (!value) fail(line, "non-numeric label '" + cell + "' in column '" + column + "'");
      switch (task) {
        case Task::kClassification:
          if (*value < 0.0 || std::floor(*value) != *value || *value > 1e6) {
            fail(line, "label '" + cell + "' in column '" + column +
                           "' is not a non-negative class index");
          }
          max_class[l] = std::max(max_class[l], static_cast<int>(*value));
          break;
        case Task::kDeepSurv:
          if (*value != 0.0 && *value != 1.0) {
            fail(line, "event indicator '" + cell + "' in column '" + column + "' must be 0 or 1");
          }
          break;
        case Task::kRegression:
          break;
      }
      rec.labels.push_back(static_cast<float>(*value));
    }

    if (period_col) {
      const std::string& cell = row[*period_col];
      if (task == Task::kDeepSurv || !cell.empty()) {
        const auto value = parse_decimal(cell);
        if (!value) fail(line, "non-numeric period '" + cell + "'");
        if (task == Task::kDeepSurv && !(*value > 0.0)) {
          fail(line, "period must be positive, got '" + cell + "'");
        }
        rec.period = *value;
      }
    }
    manifest.records.push_back(std::move(rec));
  }

  if (task == Task::kClassification) {
    for (std::size_t l = 0; l < manifest.labels.size(); ++l) {
      manifest.labels[l].class_count = std::max(2, max_class[l] + 1);
    }
  }
  return manifest;
}

Manifest load_manifest(const std::filesystem::path& path, Task task) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_manifest(buffer.str(), task);
}

}  // namespace nervus::data
