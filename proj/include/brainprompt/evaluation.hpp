#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "brainprompt/volume.hpp"

namespace brainprompt {

/// Voxel confusion counts with the ground truth as the positive class.
struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const noexcept { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

/// Marks metrics whose denominator was zero. Such a ratio is reported as 1:
/// a zero denominator means the matching error terms are zero too.
struct UndefinedFlags {
  bool dice = false;
  bool iou = false;
  bool accuracy = false;
  bool precision = false;
  bool recall = false;

  bool any() const noexcept { return dice || iou || accuracy || precision || recall; }
};

struct MetricReport {
  double dice = 0.0;
  double iou = 0.0;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  ConfusionCounts counts;
  UndefinedFlags undefined;
};

/// Throws ShapeMismatch unless both masks have identical dims.
ConfusionCounts confusion(const Mask3D& pred, const Mask3D& gt);
ConfusionCounts confusion(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> gt);

MetricReport metrics(const ConfusionCounts& c);

struct CategoryAggregate {
  std::string category;
  std::string tool;
  std::vector<MetricReport> per_scan;
  MetricReport means;  // arithmetic means; counts are summed
  std::size_t failed_scans = 0;
  std::string error;  // set when no scan of this row succeeded

  bool ok() const noexcept { return !per_scan.empty(); }
};

/// Unweighted per-scan mean of each metric. Throws EmptyList.
CategoryAggregate aggregate(std::span<const MetricReport> reports, std::string category, std::string tool);

enum class ReportFormat { Csv, Markdown };

/// Free-form lines appended under the markdown table (f value, backend
/// identity, ...). CSV output carries only the fixed columns.
struct ReportNotes {
  std::vector<std::string> footnotes;
};

/// Rounds half-up at the fourth decimal and prints three decimals.
std::string format_metric(double value);

/// One row per (category, tool), sorted by category then tool. CSV columns:
/// category,tool,n,dice,iou,accuracy,recall,precision. Markdown mirrors
/// the column order Dice, IoU, Acc, Recall, Prec. Rows without a
/// successful scan print NA and are flagged in the markdown.
std::string emit_report(std::span<const CategoryAggregate> aggregates, ReportFormat format,
                        const ReportNotes& notes = {});

}  // namespace brainprompt
