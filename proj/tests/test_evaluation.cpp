#include <doctest.h>

#include <random>

#include "brainprompt/evaluation.hpp"
#include "helpers.hpp"

using namespace brainprompt;

namespace {

Mask3D mask_with(const GridSpec& g, std::initializer_list<int> on) {
  std::vector<std::uint8_t> bits(g.dims.count(), 0);
  for (int i : on) bits[i] = 1;
  return Mask3D(g, std::move(bits));
}

const GridSpec kGrid = GridSpec::axis_aligned({3, 3, 3});

}  // namespace

TEST_CASE("confusion counts") {
  const Mask3D ten = mask_with(kGrid, {0, 1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK(confusion(ten, ten) == ConfusionCounts{10, 0, 0, 17});

  const Mask3D pred = mask_with(kGrid, {0, 1, 2});
  const Mask3D gt = mask_with(kGrid, {1, 2, 3, 4});
  CHECK(confusion(pred, gt) == ConfusionCounts{2, 1, 2, 22});

  const Mask3D empty(kGrid);
  CHECK(confusion(empty, empty) == ConfusionCounts{0, 0, 0, 27});

  try {
    confusion(empty, Mask3D(GridSpec::axis_aligned({3, 3, 2})));
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("metrics of the micro fixture") {
  const MetricReport m = metrics({2, 1, 2, 22});
  CHECK(m.dice == doctest::Approx(4.0 / 7.0).epsilon(1e-15));
  CHECK(m.iou == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(m.precision == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.accuracy == doctest::Approx(24.0 / 27.0).epsilon(1e-15));
  CHECK(format_metric(m.dice) == "0.571");
  CHECK_FALSE(m.undefined.any());
}

TEST_CASE("reported dice/iou pairs are consistent with the formulas") {
  auto iou_of = [](double dice) { return dice / (2.0 - dice); };
  CHECK(std::abs(iou_of(0.942) - 0.891) <= 0.002);
  CHECK(std::abs(iou_of(0.914) - 0.842) <= 0.002);
  CHECK(std::abs(iou_of(0.956) - 0.918) <= 0.003);
  CHECK(iou_of(0.942) == doctest::Approx(0.8904).epsilon(1e-4));
  CHECK(iou_of(0.914) == doctest::Approx(0.8416).epsilon(1e-4));
}

TEST_CASE("zero denominators are vacuous ones") {
  const MetricReport m = metrics({0, 0, 0, 27});
  CHECK(m.dice == 1.0);
  CHECK(m.iou == 1.0);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.undefined.dice);
  CHECK(m.undefined.precision);
  CHECK_FALSE(m.undefined.accuracy);

  const MetricReport none = metrics({0, 0, 0, 0});
  CHECK(none.accuracy == 1.0);
  CHECK(none.undefined.accuracy);

  const MetricReport miss = metrics({0, 0, 5, 22});  // nothing predicted
  CHECK(miss.precision == 1.0);
  CHECK(miss.undefined.precision);
  CHECK(miss.recall == 0.0);
  CHECK(miss.dice == 0.0);
}

TEST_CASE("metric properties on random counts") {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::uint64_t> d(0, 5000);
  for (int n = 0; n < 1000; ++n) {
    const ConfusionCounts c{d(rng), d(rng), d(rng), d(rng)};
    const MetricReport m = metrics(c);
    for (double v : {m.dice, m.iou, m.accuracy, m.precision, m.recall}) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    if (m.dice > 0) CHECK(std::abs(m.iou - m.dice / (2.0 - m.dice)) <= 1e-12);
    const std::uint64_t k = 1 + n % 7;
    const MetricReport s = metrics({c.tp * k, c.fp * k, c.fn * k, c.tn * k});
    CHECK(std::abs(s.dice - m.dice) <= 1e-12);
    CHECK(std::abs(s.accuracy - m.accuracy) <= 1e-12);
    CHECK(std::abs(s.precision - m.precision) <= 1e-12);
  }
}

TEST_CASE("swapping prediction and truth swaps fp and fn") {
  std::mt19937_64 rng(5);
  for (int n = 0; n < 20; ++n) {
    const GridSpec g = testing::random_grid(rng);
    const Mask3D a = testing::random_mask(rng, g), b = testing::random_mask(rng, g);
    const ConfusionCounts ab = confusion(a, b), ba = confusion(b, a);
    CHECK(ab.tp == ba.tp);
    CHECK(ab.fp == ba.fn);
    CHECK(ab.fn == ba.fp);
    CHECK(ab.total() == g.dims.count());
    const MetricReport self = metrics(confusion(a, a));
    if (a.count() > 0) {
      CHECK(self.dice == 1.0);
      CHECK(self.iou == 1.0);
      CHECK(self.recall == 1.0);
      CHECK(self.precision == 1.0);
      CHECK(self.accuracy == 1.0);
    }
    if (!(a == b)) CHECK(metrics(ab).accuracy < 1.0);
  }
}

TEST_CASE("aggregation") {
  const MetricReport r = metrics({10, 2, 3, 85});
  const std::vector<MetricReport> five(5, r);
  const CategoryAggregate a = aggregate(five, "T1", "baseline");
  CHECK(a.means.dice == doctest::Approx(r.dice).epsilon(1e-15));
  CHECK(a.per_scan.size() == 5);

  MetricReport x = r, y = r;
  x.dice = 0.90;
  y.dice = 0.95;
  const std::vector<MetricReport> two{x, y};
  CHECK(aggregate(two, "c", "t").means.dice == doctest::Approx(0.925).epsilon(1e-15));

  // Means do not keep the per-scan dice/iou identity.
  const std::vector<MetricReport> spread{metrics({1, 9, 0, 0}), metrics({9, 1, 0, 0})};
  const CategoryAggregate s = aggregate(spread, "c", "t");
  CHECK(std::abs(s.means.iou - s.means.dice / (2 - s.means.dice)) > 1e-3);
  for (const auto& m : spread) {
    CHECK(s.means.dice >= std::min(spread[0].dice, spread[1].dice));
    CHECK(s.means.dice <= std::max(spread[0].dice, spread[1].dice));
    (void)m;
  }
  try {
    aggregate(std::vector<MetricReport>{}, "c", "t");
    FAIL("expected EmptyList");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyList);
  }
}

TEST_CASE("metric formatting rounds half-up at the fourth decimal") {
  CHECK(format_metric(0.89044) == "0.890");
  CHECK(format_metric(0.8905) == "0.891");
  CHECK(format_metric(1.0) == "1.000");
  CHECK(format_metric(0.0) == "0.000");
  CHECK(format_metric(0.9995) == "1.000");
}

TEST_CASE("report layout") {
  CHECK(emit_report({}, ReportFormat::Csv) == "category,tool,n,dice,iou,accuracy,recall,precision\n");
  const std::string md_empty = emit_report({}, ReportFormat::Markdown);
  CHECK(md_empty.find("| Category | Tool | n | Dice | IoU | Acc | Recall | Prec |") != std::string::npos);

  const std::vector<MetricReport> one{metrics({2, 1, 2, 22})};
  std::vector<CategoryAggregate> rows{aggregate(one, "T1", "reference-pipeline"), aggregate(one, "T1", "baseline"),
                                      aggregate(one, "FLAIR", "baseline")};
  CategoryAggregate failed;
  failed.category = "DWI";
  failed.tool = "baseline";
  failed.failed_scans = 2;
  failed.error = "ExecutableNotFound: bet";
  rows.push_back(failed);

  const std::string csv = emit_report(rows, ReportFormat::Csv);
  CHECK(csv ==
        "category,tool,n,dice,iou,accuracy,recall,precision\n"
        "DWI,baseline,0,NA,NA,NA,NA,NA\n"
        "FLAIR,baseline,1,0.571,0.400,0.889,0.500,0.667\n"
        "T1,baseline,1,0.571,0.400,0.889,0.500,0.667\n"
        "T1,reference-pipeline,1,0.571,0.400,0.889,0.500,0.667\n");

  ReportNotes notes;
  notes.footnotes = {"baseline: builtin-threshold-baseline(f=0.5)"};
  const std::string md = emit_report(rows, ReportFormat::Markdown, notes);
  CHECK(md.find("| T1 | baseline | 1 | 0.571 | 0.400 | 0.889 | 0.500 | 0.667 |") != std::string::npos);
  CHECK(md.find("f=0.5") != std::string::npos);
  CHECK(md.find("ExecutableNotFound") != std::string::npos);
  CHECK(md.find("FLAIR") < md.find("| T1 | baseline"));
}
