#include "nervus/train/report.hpp"

#include <cstdio>
#include <fstream>
#include <string>

#include "nervus/data/csv.hpp"
#include "nervus/error.hpp"

namespace nervus::train {
namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string seconds_text(double seconds) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.3f", seconds);
  return buffer;
}

}  // namespace

void write_log_csv(const std::filesystem::path& path, const data::Manifest& manifest,
                   const std::vector<EpochLog>& epochs) {
  std::ofstream out = open_output(path);
  data::CsvRow header{"epoch", "train_loss", "val_loss"};
  for (const LabelSpec& label : manifest.labels) header.push_back("val_loss_" + label.name);
  header.push_back("seconds");
  header.push_back("saved");
  data::write_csv_row(out, header);
  for (const EpochLog& e : epochs) {
    data::CsvRow row{std::to_string(e.epoch), data::format_real(e.train_loss), data::format_real(e.val_loss)};
    for (float value : e.val_label_losses) row.push_back(data::format_real(value));
    row.push_back(seconds_text(e.seconds));
    row.push_back(e.saved ? "1" : "0");
    data::write_csv_row(out, row);
  }
  finish(out, path);
}

void write_likelihood_csv(const std::filesystem::path& path, const data::Manifest& manifest,
                          const EvalReport& report) {
  const bool survival = manifest.task == Task::kDeepSurv;
  std::ofstream out = open_output(path);
  data::CsvRow header{"id", "split"};
  for (const LabelSpec& label : manifest.labels) {
    switch (label.kind) {
      case LabelKind::kClassification:
        for (int c = 0; c < label.class_count; ++c) {
          header.push_back("pred_" + label.name + "_" + std::to_string(c));
        }
        break;
      case LabelKind::kRegression: header.push_back("pred_" + label.name); break;
      case LabelKind::kSurvival: header.push_back("risk"); break;
    }
  }
  for (const LabelSpec& label : manifest.labels) header.push_back("label_" + label.name);
  if (survival) header.push_back("period");
  data::write_csv_row(out, header);

  for (const PredictionRow& p : report.rows) {
    data::CsvRow row{p.id, std::string(to_string(p.split))};
    for (const auto& values : p.outputs) {
      for (float v : values) row.push_back(data::format_real(v));
    }
    for (float truth : p.truths) row.push_back(data::format_real(truth));
    if (survival) row.push_back(data::format_real(p.period.value_or(0.0)));
    data::write_csv_row(out, row);
  }
  finish(out, path);
}

void write_metrics_csv(const std::filesystem::path& path, const EvalReport& report) {
  std::ofstream out = open_output(path);
  data::write_csv_row(out, {"split", "label", "metric", "value"});
  const std::string split(to_string(report.split));
  for (const MetricRow& m : report.metrics) {
    data::write_csv_row(out, {split, m.label, m.metric, data::format_real(m.value)});
  }
  finish(out, path);
}

void write_km_csv(const std::filesystem::path& path, const EvalReport& report) {
  if (!report.survival) throw Error("km.csv needs a survival report");
  std::ofstream out = open_output(path);
  data::write_csv_row(out, {"group", "time", "survival", "at_risk", "events"});
  const auto emit = [&](const char* group, const metrics::KmCurve& curve) {
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
      data::write_csv_row(out, {group, data::format_real(curve.times[k]), data::format_real(curve.survival[k]),
                                std::to_string(curve.at_risk[k]), std::to_string(curve.events[k])});
    }
  };
  emit("low", report.survival->low);
  emit("high", report.survival->high);
  finish(out, path);
}

void write_report_files(const std::filesystem::path& dir, const data::Manifest& manifest,
                        const EvalReport& report) {
  write_likelihood_csv(dir / "likelihood.csv", manifest, report);
  write_metrics_csv(dir / "metrics.csv", report);
  if (report.survival) write_km_csv(dir / "km.csv", report);
}

}  // namespace nervus::train
