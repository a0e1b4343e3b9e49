#include "brainprompt/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace brainprompt {

ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt) {
  if (pred.size() != gt.size()) {
    throw Error(ErrorCode::ShapeMismatch, "prediction has " + std::to_string(pred.size()) +
                                              " voxels, ground truth " + std::to_string(gt.size()));
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, g = gt[i] != 0;
    if (p && g) ++c.tp;
    else if (p) ++c.fp;
    else if (g) ++c.fn;
    else ++c.tn;
  }
  return c;
}

ConfusionCounts confusion(const Mask3D& pred, const Mask3D& gt) {
  if (!(pred.dims() == gt.dims())) {
    throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth grids differ; resample first");
  }
  return confusion(pred.bits(), gt.bits());
}

MetricReport metrics(const ConfusionCounts& c) {
  const auto tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp), fn = static_cast<double>(c.fn),
             tn = static_cast<double>(c.tn);
  MetricReport r;
  r.counts = c;
  auto ratio = [](double num, double den, bool& undefined) {
    if (den == 0.0) {
      undefined = true;
      return 1.0;
    }
    return num / den;
  };
  r.dice = ratio(2.0 * tp, 2.0 * tp + fp + fn, r.undefined.dice);
  r.iou = ratio(tp, tp + fp + fn, r.undefined.iou);
  r.accuracy = ratio(tp + tn, tp + fp + fn + tn, r.undefined.accuracy);
  r.precision = ratio(tp, tp + fp, r.undefined.precision);
  r.recall = ratio(tp, tp + fn, r.undefined.recall);
  return r;
}

CategoryAggregate aggregate(std::span<const MetricReport> reports, std::string category, std::string tool) {
  if (reports.empty()) throw Error(ErrorCode::EmptyList, "no reports to aggregate for " + category + "/" + tool);
  CategoryAggregate a;
  a.category = std::move(category);
  a.tool = std::move(tool);
  a.per_scan.assign(reports.begin(), reports.end());
  const double n = static_cast<double>(reports.size());
  for (const MetricReport& r : reports) {
    a.means.dice += r.dice;
    a.means.iou += r.iou;
    a.means.accuracy += r.accuracy;
    a.means.precision += r.precision;
    a.means.recall += r.recall;
    a.means.counts.tp += r.counts.tp;
    a.means.counts.fp += r.counts.fp;
    a.means.counts.fn += r.counts.fn;
    a.means.counts.tn += r.counts.tn;
  }
  // Rounding in the sum can drift a hair past the per-scan range.
  auto clamp_to_range = [&](double MetricReport::*field) {
    a.means.*field /= n;
    const auto [lo, hi] = std::minmax_element(reports.begin(), reports.end(),
                                              [&](const auto& x, const auto& y) { return x.*field < y.*field; });
    a.means.*field = std::clamp(a.means.*field, (*lo).*field, (*hi).*field);
  };
  for (auto f : {&MetricReport::dice, &MetricReport::iou, &MetricReport::accuracy, &MetricReport::precision,
                 &MetricReport::recall}) {
    clamp_to_range(f);
  }
  return a;
}

std::string format_metric(double value) {
  const double rounded = std::floor(value * 1000.0 + 0.5 + 1e-9) / 1000.0;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", rounded);
  return buf;
}

std::string emit_report(std::span<const CategoryAggregate> aggregates, ReportFormat format,
                        const ReportNotes& notes) {
  std::vector<const CategoryAggregate*> rows;
  for (const auto& a : aggregates) rows.push_back(&a);
  std::stable_sort(rows.begin(), rows.end(), [](const auto* a, const auto* b) {
    if (a->category != b->category) return a->category < b->category;
    return a->tool < b->tool;
  });

  auto cell = [](const CategoryAggregate& a, double MetricReport::*f) {
    return a.ok() ? format_metric(a.means.*f) : std::string("NA");
  };

  std::ostringstream out;
  if (format == ReportFormat::Csv) {
    out << "category,tool,n,dice,iou,accuracy,recall,precision\n";
    auto quote = [](const std::string& s) {
      if (s.find_first_of(",\"\n") == std::string::npos) return s;
      std::string q = "\"";
      for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      return q + "\"";
    };
    for (const auto* a : rows) {
      out << quote(a->category) << ',' << quote(a->tool) << ',' << a->per_scan.size() << ','
          << cell(*a, &MetricReport::dice) << ',' << cell(*a, &MetricReport::iou) << ','
          << cell(*a, &MetricReport::accuracy) << ',' << cell(*a, &MetricReport::recall) << ','
          << cell(*a, &MetricReport::precision) << '\n';
    }
    return out.str();
  }

  out << "| Category | Tool | n | Dice | IoU | Acc | Recall | Prec |\n";
  out << "|---|---|---|---|---|---|---|---|\n";
  for (const auto* a : rows) {
    std::string tool = a->tool;
    if (!a->ok()) tool += " (error)";
    else if (a->failed_scans > 0) tool += " (" + std::to_string(a->failed_scans) + " failed)";
    out << "| " << a->category << " | " << tool << " | " << a->per_scan.size() << " | "
        << cell(*a, &MetricReport::dice) << " | " << cell(*a, &MetricReport::iou) << " | "
        << cell(*a, &MetricReport::accuracy) << " | " << cell(*a, &MetricReport::recall) << " | "
        << cell(*a, &MetricReport::precision) << " |\n";
  }
  std::vector<std::string> lines = notes.footnotes;
  for (const auto* a : rows) {
    if (!a->error.empty()) lines.push_back(a->category + " / " + a->tool + ": " + a->error);
  }
  if (!lines.empty()) {
    out << '\n';
    for (const auto& l : lines) out << "- " << l << '\n';
  }
  return out.str();
}

}  // namespace brainprompt
