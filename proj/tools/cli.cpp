#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "brainprompt/evaluation.hpp"
#include "brainprompt/nifti.hpp"
#include "brainprompt/prompt_io.hpp"
#include "brainprompt/protocol.hpp"
#include "brainprompt/resample.hpp"

namespace brainprompt::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.3.0";

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); }

std::string_view to_string(BackendKind k) { return k == BackendKind::Reference ? "reference" : "process"; }

BackendKind parse_backend(const std::string& s) {
  if (s == "reference") return BackendKind::Reference;
  if (s == "process") return BackendKind::Process;
  config_error("unknown backend '" + s + "' (expected reference or process)");
}

std::string_view to_string(BaselineMode m) { return m == BaselineMode::Builtin ? "builtin" : "external"; }

BaselineMode parse_baseline_mode(const std::string& s) {
  if (s == "builtin") return BaselineMode::Builtin;
  if (s == "external") return BaselineMode::External;
  config_error("unknown baseline mode '" + s + "' (expected builtin or external)");
}

Dims parse_dims(const std::vector<std::int64_t>& v) {
  if (v.size() == 1) return {v[0], v[0], v[0]};
  if (v.size() == 3) return {v[0], v[1], v[2]};
  config_error("dims take one value (cube) or three");
}

template <class T>
std::optional<T> opt_get(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& where) {
  if (!j.is_object()) config_error(where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

json phantom_json(const PhantomOptions& p) {
  return {{"dims", {p.dims.nx, p.dims.ny, p.dims.nz}},
          {"noise_sigma", p.noise_sigma},
          {"seed", p.seed},
          {"lesion", p.lesion}};
}

PhantomOptions phantom_from_json(const json& j, PhantomOptions p = {}) {
  check_keys(j, {"dims", "noise_sigma", "seed", "lesion"}, "phantom");
  if (auto d = opt_get<std::vector<std::int64_t>>(j, "dims")) p.dims = parse_dims(*d);
  if (auto v = opt_get<double>(j, "noise_sigma")) p.noise_sigma = *v;
  if (auto v = opt_get<std::uint64_t>(j, "seed")) p.seed = *v;
  if (auto v = opt_get<bool>(j, "lesion")) p.lesion = *v;
  return p;
}

json path_or_null(const std::optional<fs::path>& p) { return p ? json(p->string()) : json(nullptr); }

json metrics_json(const MetricReport& m) {
  return {{"dice", m.dice},
          {"iou", m.iou},
          {"accuracy", m.accuracy},
          {"precision", m.precision},
          {"recall", m.recall},
          {"counts", {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"fn", m.counts.fn}, {"tn", m.counts.tn}}},
          {"undefined",
           {{"dice", m.undefined.dice},
            {"iou", m.undefined.iou},
            {"accuracy", m.undefined.accuracy},
            {"precision", m.undefined.precision},
            {"recall", m.undefined.recall}}}};
}

std::string describe(const std::exception& e) { return e.what(); }

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string read_text(const fs::path& path) {
  const auto bytes = read_file(path);
  return std::string(bytes.begin(), bytes.end());
}

bool same_grid(const GridSpec& a, const GridSpec& b) {
  return a.dims == b.dims && a.affine.isApprox(b.affine, 1e-9);
}

// ---------------------------------------------------------------------------
// Flag overlays: each run flag is bound to its own storage and applied to
// the config only when it appeared on the command line.

struct Overlays {
  std::vector<std::pair<CLI::Option*, std::function<void(RunConfig&)>>> items;

  template <class T, class Setter>
  CLI::Option* add(CLI::App* app, const std::string& name, const std::string& desc, Setter setter) {
    auto holder = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *holder, desc);
    items.emplace_back(opt, [holder, setter](RunConfig& c) { setter(c, *holder); });
    return opt;
  }

  CLI::Option* add_flag(CLI::App* app, const std::string& name, const std::string& desc,
                        std::function<void(RunConfig&)> setter) {
    CLI::Option* opt = app->add_flag(name, desc);
    items.emplace_back(opt, std::move(setter));
    return opt;
  }

  void apply(RunConfig& cfg) const {
    for (const auto& [opt, fn] : items)
      if (opt->count() > 0) fn(cfg);
  }
};

PhantomOptions& phantom_of(RunConfig& c) {
  if (!c.phantom) c.phantom = PhantomOptions{};
  return *c.phantom;
}

void add_run_flags(CLI::App* app, Overlays& ov, std::string& config_path) {
  app->add_option("--config", config_path, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  ov.add<std::string>(app, "--input", "Input NIfTI volume (.nii or .nii.gz)",
                      [](RunConfig& c, const std::string& v) { c.input = v; });
  ov.add_flag(app, "--phantom", "Use a synthetic phantom instead of --input", [](RunConfig& c) { phantom_of(c); });
  ov.add<std::vector<std::int64_t>>(app, "--dims", "Phantom dims: N or NX NY NZ",
                                    [](RunConfig& c, const std::vector<std::int64_t>& v) {
                                      phantom_of(c).dims = parse_dims(v);
                                    })
      ->expected(1, 3);
  ov.add<double>(app, "--noise-sigma", "Phantom Gaussian noise sigma",
                 [](RunConfig& c, double v) { phantom_of(c).noise_sigma = v; });
  ov.add<std::uint64_t>(app, "--seed", "Phantom noise seed",
                        [](RunConfig& c, std::uint64_t v) { phantom_of(c).seed = v; });
  ov.add_flag(app, "--lesion", "Add a near-surface lesion to the phantom",
              [](RunConfig& c) { phantom_of(c).lesion = true; });
  ov.add<std::string>(app, "--target", "Target grid: 'native' or a template NIfTI path",
                      [](RunConfig& c, const std::string& v) { c.target = v; });
  ov.add<std::string>(app, "--axis", "Slicing axis: axial, coronal or sagittal",
                      [](RunConfig& c, const std::string& v) { c.axis = parse_axis(v); });
  ov.add<double>(app, "--window-lo", "Lower window percentile in [0,1)",
                 [](RunConfig& c, double v) { c.window_lo = v; });
  ov.add<double>(app, "--window-hi", "Upper window percentile in (0,1]",
                 [](RunConfig& c, double v) { c.window_hi = v; });
  ov.add<int>(app, "--margin", "Prompt box margin in pixels", [](RunConfig& c, int v) { c.prompts.margin = v; });
  ov.add<int>(app, "--k-inc", "Inclusion markers per slice", [](RunConfig& c, int v) { c.prompts.k_inc = v; });
  ov.add<int>(app, "--k-exc", "Exclusion markers per slice", [](RunConfig& c, int v) { c.prompts.k_exc = v; });
  ov.add<int>(app, "--min-fg-area", "Smallest foreground area worth prompting",
              [](RunConfig& c, int v) { c.prompts.min_fg_area = v; });
  ov.add<int>(app, "--rim-width", "Exclusion ring offset and marker spacing",
              [](RunConfig& c, int v) { c.prompts.rim_width = v; });
  ov.add<std::string>(app, "--backend", "Segmenter: reference or process",
                      [](RunConfig& c, const std::string& v) { c.backend = parse_backend(v); });
  ov.add<std::string>(app, "--backend-cmd", "Shell command launching a wire-protocol backend (implies process)",
                      [](RunConfig& c, const std::string& v) {
                        c.backend_command = v;
                        c.backend = BackendKind::Process;
                      });
  ov.add<int>(app, "--tolerance", "Reference backend region-growing tolerance",
              [](RunConfig& c, int v) { c.tolerance = v; });
  ov.add<double>(app, "--timeout", "Per-request backend timeout in seconds",
                 [](RunConfig& c, double v) { c.timeout_s = v; });
  ov.add<std::string>(app, "--baseline", "Baseline mode: builtin or external",
                      [](RunConfig& c, const std::string& v) { c.baseline.mode = parse_baseline_mode(v); });
  ov.add<std::string>(app, "--bet", "BET executable for the external baseline (implies external)",
                      [](RunConfig& c, const std::string& v) {
                        c.baseline.executable_path = v;
                        c.baseline.mode = BaselineMode::External;
                      });
  ov.add<double>(app, "-f,--fractional-threshold", "Baseline fractional intensity threshold in (0,1)",
                 [](RunConfig& c, double v) { c.baseline.f = v; });
  ov.add<std::string>(app, "--template-mask", "Brain mask used where a ground truth reads 'template-mask'",
                      [](RunConfig& c, const std::string& v) { c.template_mask = v; });
  ov.add<std::string>(app, "--manual-prompts", "Prompt JSON replacing generated prompts",
                      [](RunConfig& c, const std::string& v) { c.manual_prompts = v; });
  ov.add<std::string>(app, "--out", "Output directory", [](RunConfig& c, const std::string& v) { c.out = v; });
  ov.add<int>(app, "-j,--parallelism", "Slice worker count", [](RunConfig& c, int v) { c.parallelism = v; });
}

RunConfig resolve(const std::string& config_path, const Overlays& ov) {
  RunConfig cfg;
  if (!config_path.empty()) {
    const json j = json::parse(read_text(config_path), nullptr, false);
    if (j.is_discarded()) config_error("config file " + config_path + " is not valid JSON");
    cfg.apply_json(j);
  }
  ov.apply(cfg);
  return cfg;
}

struct LoadedInput {
  Volume volume;
  std::optional<Mask3D> ground_truth;  // analytic, phantoms only
  std::optional<std::uint64_t> seed;
};

LoadedInput load_input(const RunConfig& cfg) {
  if (cfg.input) return {read_nifti(*cfg.input), std::nullopt, std::nullopt};
  const PhantomSpec spec = cfg.phantom->spec();
  Phantom ph = make_phantom(spec);
  return {std::move(ph.volume), std::move(ph.ground_truth), spec.seed};
}

std::optional<GridSpec> target_grid(const RunConfig& cfg) {
  if (cfg.target == "native") return std::nullopt;
  return read_nifti(cfg.target).grid();
}

ExtractOptions extract_options(const RunConfig& cfg) {
  ExtractOptions o;
  o.axis = cfg.axis;
  o.window_lo = cfg.window_lo;
  o.window_hi = cfg.window_hi;
  o.prompts = cfg.prompts;
  o.parallelism = cfg.parallelism;
  if (cfg.manual_prompts) {
    PromptFile pf = parse_prompt_file(read_text(*cfg.manual_prompts));
    if (pf.axis && *pf.axis != cfg.axis) {
      config_error("manual prompts are for the " + std::string(to_string(*pf.axis)) + " axis but the run slices " +
                   std::string(to_string(cfg.axis)));
    }
    o.manual_prompts = std::move(pf.slices);
  }
  return o;
}

// ---------------------------------------------------------------------------

int cmd_extract(const RunConfig& cfg, const std::vector<std::string>& args, std::ostream& out) {
  cfg.validate(true);
  const fs::path mask_path = cfg.out / "mask.nii.gz";
  const fs::path prompts_path = cfg.out / "prompts.json";
  const fs::path run_path = cfg.out / "run.json";
  try {
    fs::create_directories(cfg.out);
    LoadedInput in = load_input(cfg);
    ExtractOptions opts = extract_options(cfg);
    opts.target_grid = target_grid(cfg);
    const ExtractResult r = extract_brain(in.volume, opts, make_backend_factory(cfg));

    write_nifti(mask_path, r.mask);
    write_text(prompts_path, dump_prompt_file(r.prompts, cfg.axis));
    json run = {
        {"tool", "brainprompt"},
        {"version", kVersion},
        {"command", "extract"},
        {"argv", args},
        {"config", cfg.to_json()},
        {"config_hash", config_hash(cfg)},
        {"seeds", {{"phantom", in.seed ? json(*in.seed) : json(nullptr)}}},
        {"backend", r.backend_identity},
        {"backend_calls", r.backend_calls},
        {"window", {{"min", r.window.min}, {"max", r.window.max}}},
        {"mask_voxels", r.mask.count()},
        {"timings_s",
         {{"resample", r.timings.resample_s},
          {"decompose", r.timings.decompose_s},
          {"prompts", r.timings.prompts_s},
          {"segment", r.timings.segment_s},
          {"reconstruct", r.timings.reconstruct_s},
          {"total", r.timings.total_s}}},
    };
    write_text(run_path, run.dump(2) + "\n");
    out << "wrote " << mask_path.string() << " (" << r.mask.count() << " voxels, " << r.backend_calls
        << " backend calls, " << r.timings.total_s << " s)\n";
  } catch (...) {
    std::error_code ec;
    for (const auto& p : {mask_path, prompts_path, run_path}) fs::remove(p, ec);
    throw;
  }
  return 0;
}

struct EvaluateArgs {
  std::string pred;
  std::string gt;
  bool resample_gt = false;
  bool json_out = false;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const Mask3D pred = read_nifti_mask(a.pred);
  Mask3D gt = read_nifti_mask(a.gt);
  if (a.resample_gt && !same_grid(pred.grid(), gt.grid())) gt = resample(gt, pred.grid());
  const MetricReport m = metrics(confusion(pred, gt));
  if (a.json_out) {
    out << metrics_json(m).dump(2) << "\n";
  } else {
    out << "dice " << format_metric(m.dice) << "  iou " << format_metric(m.iou) << "  acc "
        << format_metric(m.accuracy) << "  recall " << format_metric(m.recall) << "  prec "
        << format_metric(m.precision) << "\n"
        << "tp " << m.counts.tp << "  fp " << m.counts.fp << "  fn " << m.counts.fn << "  tn " << m.counts.tn << "\n";
  }
  return 0;
}

struct ManifestEntry {
  std::string category;
  std::optional<fs::path> scan;
  std::optional<PhantomOptions> phantom;
  std::optional<std::string> gt;  // path or "template-mask"
  std::string label;
};

struct Manifest {
  std::optional<fs::path> template_mask;
  std::vector<ManifestEntry> entries;
};

Manifest load_manifest(const fs::path& path) {
  const json j = json::parse(read_text(path), nullptr, false);
  if (j.is_discarded()) config_error("manifest " + path.string() + " is not valid JSON");
  check_keys(j, {"template_mask", "scans"}, "manifest");
  const fs::path base = path.parent_path();
  auto resolve_path = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

  Manifest m;
  try {
    if (auto t = opt_get<std::string>(j, "template_mask")) m.template_mask = resolve_path(*t);
    for (const json& e : j.at("scans")) {
      check_keys(e, {"category", "scan", "phantom", "gt"}, "manifest scan entry");
      ManifestEntry me;
      me.category = e.at("category").get<std::string>();
      if (e.contains("scan") == e.contains("phantom")) config_error("each manifest entry needs exactly one of scan, phantom");
      if (e.contains("scan")) {
        me.scan = resolve_path(e.at("scan").get<std::string>());
        me.label = me.scan->string();
        const std::string gt = e.value("gt", std::string());
        if (gt.empty()) config_error("scan " + me.label + " has no gt");
        me.gt = gt == "template-mask" ? gt : resolve_path(gt).string();
      } else {
        me.phantom = phantom_from_json(e.at("phantom"));
        me.label = "phantom:" + phantom_json(*me.phantom).dump();
        if (e.contains("gt")) {
          const std::string gt = e.at("gt").get<std::string>();
          me.gt = gt == "template-mask" ? gt : resolve_path(gt).string();
        }
      }
      m.entries.push_back(std::move(me));
    }
  } catch (const json::exception& ex) {
    config_error("manifest " + path.string() + ": " + ex.what());
  }
  if (m.entries.empty()) config_error("manifest lists no scans");
  return m;
}

struct ScanOutcome {
  std::string category;
  std::string tool;
  std::string scan;
  std::optional<MetricReport> report;
  std::string error;
};

int cmd_compare(const RunConfig& cfg, const fs::path& manifest_path, std::ostream& out, std::ostream& err) {
  cfg.validate(false);
  const Manifest manifest = load_manifest(manifest_path);
  const std::optional<fs::path> template_mask = cfg.template_mask ? cfg.template_mask : manifest.template_mask;
  const std::optional<GridSpec> grid = target_grid(cfg);
  const ExtractOptions opts = extract_options(cfg);
  const BackendFactory factory = make_backend_factory(cfg);
  const std::string pipeline_tool = cfg.backend == BackendKind::Reference ? "reference-pipeline" : "sam-pipeline";
  std::string pipeline_identity;

  fs::create_directories(cfg.out);
  const fs::path workdir = cfg.out / "work";
  std::vector<ScanOutcome> outcomes;
  std::vector<std::string> categories;

  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const ManifestEntry& e = manifest.entries[i];
    if (std::find(categories.begin(), categories.end(), e.category) == categories.end()) {
      categories.push_back(e.category);
    }
    ScanOutcome base{e.category, "baseline", e.label, std::nullopt, {}};
    ScanOutcome pipe{e.category, pipeline_tool, e.label, std::nullopt, {}};

    std::optional<Volume> volume;
    std::optional<Mask3D> gt;
    try {
      if (e.scan) {
        volume = read_nifti(*e.scan);
      } else {
        Phantom ph = make_phantom(e.phantom->spec());
        volume = std::move(ph.volume);
        gt = std::move(ph.ground_truth);
      }
      if (e.gt) {
        if (*e.gt == "template-mask") {
          if (!template_mask) config_error("ground truth 'template-mask' needs --template-mask or manifest template_mask");
          gt = read_nifti_mask(*template_mask);
        } else {
          gt = read_nifti_mask(*e.gt);
        }
      }
      if (grid) volume = resample(*volume, *grid, Interpolation::Trilinear);
      if (!same_grid(gt->grid(), volume->grid())) gt = resample(*gt, volume->grid());
    } catch (const std::exception& ex) {
      base.error = pipe.error = "load failed: " + describe(ex);
      err << "scan " << e.label << ": " << base.error << "\n";
      outcomes.push_back(std::move(base));
      outcomes.push_back(std::move(pipe));
      continue;
    }

    try {
      Mask3D mask(volume->grid());
      if (cfg.baseline.mode == BaselineMode::Builtin) {
        mask = builtin_baseline(*volume, cfg.baseline);
      } else {
        fs::create_directories(workdir);
        fs::path input_path = workdir / ("scan_" + std::to_string(i) + ".nii.gz");
        if (e.scan && !grid) {
          input_path = *e.scan;
        } else {
          write_nifti(input_path, *volume);
        }
        mask = run_external_bet(input_path, cfg.baseline, workdir);
        if (!same_grid(mask.grid(), volume->grid())) mask = resample(mask, volume->grid());
      }
      base.report = metrics(confusion(mask, *gt));
    } catch (const std::exception& ex) {
      base.error = describe(ex);
      err << "scan " << e.label << " baseline: " << base.error << "\n";
    }

    try {
      const ExtractResult r = extract_brain(*volume, opts, factory);
      pipeline_identity = r.backend_identity;
      pipe.report = metrics(confusion(r.mask, *gt));
    } catch (const std::exception& ex) {
      pipe.error = describe(ex);
      err << "scan " << e.label << " pipeline: " << pipe.error << "\n";
    }
    outcomes.push_back(std::move(base));
    outcomes.push_back(std::move(pipe));
  }
  std::error_code ec;
  fs::remove_all(workdir, ec);

  std::map<std::pair<std::string, std::string>, std::vector<const ScanOutcome*>> rows;
  for (const ScanOutcome& o : outcomes) rows[{o.category, o.tool}].push_back(&o);
  std::vector<CategoryAggregate> aggregates;
  for (const auto& [key, list] : rows) {
    std::vector<MetricReport> reports;
    std::size_t failed = 0;
    std::string first_error;
    for (const ScanOutcome* o : list) {
      if (o->report) {
        reports.push_back(*o->report);
      } else {
        ++failed;
        if (first_error.empty()) first_error = o->error;
      }
    }
    CategoryAggregate agg;
    if (!reports.empty()) {
      agg = aggregate(reports, key.first, key.second);
    } else {
      agg.category = key.first;
      agg.tool = key.second;
      agg.error = first_error;
    }
    agg.failed_scans = failed;
    aggregates.push_back(std::move(agg));
  }

  ReportNotes notes;
  notes.footnotes.push_back("baseline: " + cfg.baseline.identity());
  notes.footnotes.push_back(pipeline_tool + ": " +
                            (pipeline_identity.empty() ? std::string("no successful run") : pipeline_identity));
  notes.footnotes.push_back("means are unweighted averages of per-scan metrics");
  notes.footnotes.push_back("config hash " + config_hash(cfg));
  write_text(cfg.out / "report.csv", emit_report(aggregates, ReportFormat::Csv, notes));
  write_text(cfg.out / "report.md", emit_report(aggregates, ReportFormat::Markdown, notes));

  std::ostringstream scans;
  scans << "category,tool,scan,status,dice,iou,accuracy,recall,precision,error\n";
  auto csv_field = [](std::string s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c == '\n' ? ' ' : c);
    return q + "\"";
  };
  for (const ScanOutcome& o : outcomes) {
    scans << csv_field(o.category) << ',' << csv_field(o.tool) << ',' << csv_field(o.scan) << ','
          << (o.report ? "ok" : "error");
    if (o.report) {
      const MetricReport& m = *o.report;
      for (double v : {m.dice, m.iou, m.accuracy, m.recall, m.precision}) scans << ',' << format_metric(v);
      scans << ",\n";
    } else {
      scans << ",NA,NA,NA,NA,NA," << csv_field(o.error) << "\n";
    }
  }
  write_text(cfg.out / "scans.csv", scans.str());
  out << emit_report(aggregates, ReportFormat::Markdown, notes);

  int status = 0;
  for (const std::string& cat : categories) {
    const bool any = std::any_of(aggregates.begin(), aggregates.end(),
                                 [&](const CategoryAggregate& a) { return a.category == cat && a.ok(); });
    if (!any) {
      err << "category " << cat << ": no scan succeeded\n";
      status = 1;
    }
  }
  return status;
}

int cmd_phantom(const RunConfig& cfg, std::ostream& out) {
  const PhantomSpec spec = (cfg.phantom ? *cfg.phantom : PhantomOptions{}).spec();
  const Phantom ph = make_phantom(spec);
  fs::create_directories(cfg.out);
  write_nifti(cfg.out / "phantom.nii.gz", ph.volume);
  write_nifti(cfg.out / "phantom_gt.nii.gz", ph.ground_truth);
  if (spec.lesion) write_nifti(cfg.out / "phantom_lesion.nii.gz", lesion_mask(spec));
  out << "wrote " << (cfg.out / "phantom.nii.gz").string() << " and " << (cfg.out / "phantom_gt.nii.gz").string()
      << " (" << ph.ground_truth.count() << " brain voxels)\n";
  return 0;
}

}  // namespace

// ---------------------------------------------------------------------------

PhantomSpec PhantomOptions::spec() const {
  PhantomSpec s = phantom_spec_for(dims);
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  if (lesion) s.lesion = near_surface_lesion(s, 5.0 * s.brain_semi_axes[0] / 30.0);
  return s;
}

void RunConfig::validate(bool needs_input) const {
  if (needs_input && !input && !phantom) config_error("no input: pass --input PATH or --phantom");
  if (input && phantom) config_error("--input and --phantom are mutually exclusive");
  auto must_exist = [](const fs::path& p, const char* what) {
    if (!fs::exists(p)) throw Error(ErrorCode::Io, std::string(what) + " not found: " + p.string());
  };
  if (input) must_exist(*input, "input");
  if (target != "native") must_exist(target, "target template");
  if (manual_prompts) must_exist(*manual_prompts, "manual prompt file");
  if (template_mask) must_exist(*template_mask, "template mask");
  if (!(window_lo >= 0.0 && window_lo < window_hi && window_hi <= 1.0)) {
    config_error("window percentiles need 0 <= lo < hi <= 1");
  }
  prompts.validate();
  if (parallelism < 1) config_error("parallelism must be >= 1");
  if (!(timeout_s > 0.0)) config_error("timeout must be positive");
  if (backend == BackendKind::Process && backend_command.empty()) config_error("process backend needs --backend-cmd");
  ReferenceBackendConfig{tolerance}.validate();
  baseline.validate();
}

json RunConfig::to_json() const {
  return {
      {"input", path_or_null(input)},
      {"phantom", phantom ? phantom_json(*phantom) : json(nullptr)},
      {"target", target},
      {"axis", std::string(brainprompt::to_string(axis))},
      {"window", {{"lo", window_lo}, {"hi", window_hi}}},
      {"prompts",
       {{"margin", prompts.margin},
        {"k_inc", prompts.k_inc},
        {"k_exc", prompts.k_exc},
        {"min_fg_area", prompts.min_fg_area},
        {"rim_width", prompts.rim_width}}},
      {"backend",
       {{"kind", std::string(cli::to_string(backend))},
        {"command", backend_command},
        {"tolerance", tolerance},
        {"timeout_s", timeout_s}}},
      {"baseline",
       {{"mode", std::string(cli::to_string(baseline.mode))},
        {"f", baseline.f},
        {"executable", path_or_null(baseline.executable_path)}}},
      {"gt", path_or_null(gt)},
      {"template_mask", path_or_null(template_mask)},
      {"manual_prompts", path_or_null(manual_prompts)},
      {"out", out.string()},
      {"parallelism", parallelism},
  };
}

void RunConfig::apply_json(const json& j) {
  check_keys(j,
             {"input", "phantom", "target", "axis", "window", "prompts", "backend", "baseline", "gt", "template_mask",
              "manual_prompts", "out", "parallelism"},
             "config");
  try {
    if (auto v = opt_get<std::string>(j, "input")) input = *v;
    if (j.contains("phantom") && !j["phantom"].is_null()) phantom = phantom_from_json(j["phantom"], phantom.value_or(PhantomOptions{}));
    if (auto v = opt_get<std::string>(j, "target")) target = *v;
    if (auto v = opt_get<std::string>(j, "axis")) axis = parse_axis(*v);
    if (j.contains("window")) {
      const json& w = j["window"];
      check_keys(w, {"lo", "hi"}, "window");
      if (auto v = opt_get<double>(w, "lo")) window_lo = *v;
      if (auto v = opt_get<double>(w, "hi")) window_hi = *v;
    }
    if (j.contains("prompts")) {
      const json& p = j["prompts"];
      check_keys(p, {"margin", "k_inc", "k_exc", "min_fg_area", "rim_width"}, "prompts");
      if (auto v = opt_get<int>(p, "margin")) prompts.margin = *v;
      if (auto v = opt_get<int>(p, "k_inc")) prompts.k_inc = *v;
      if (auto v = opt_get<int>(p, "k_exc")) prompts.k_exc = *v;
      if (auto v = opt_get<int>(p, "min_fg_area")) prompts.min_fg_area = *v;
      if (auto v = opt_get<int>(p, "rim_width")) prompts.rim_width = *v;
    }
    if (j.contains("backend")) {
      const json& b = j["backend"];
      check_keys(b, {"kind", "command", "tolerance", "timeout_s"}, "backend");
      if (auto v = opt_get<std::string>(b, "kind")) backend = parse_backend(*v);
      if (auto v = opt_get<std::string>(b, "command")) backend_command = *v;
      if (auto v = opt_get<int>(b, "tolerance")) tolerance = *v;
      if (auto v = opt_get<double>(b, "timeout_s")) timeout_s = *v;
    }
    if (j.contains("baseline")) {
      const json& b = j["baseline"];
      check_keys(b, {"mode", "f", "executable"}, "baseline");
      if (auto v = opt_get<std::string>(b, "mode")) baseline.mode = parse_baseline_mode(*v);
      if (auto v = opt_get<double>(b, "f")) baseline.f = *v;
      if (auto v = opt_get<std::string>(b, "executable")) baseline.executable_path = *v;
    }
    if (auto v = opt_get<std::string>(j, "gt")) gt = *v;
    if (auto v = opt_get<std::string>(j, "template_mask")) template_mask = *v;
    if (auto v = opt_get<std::string>(j, "manual_prompts")) manual_prompts = *v;
    if (auto v = opt_get<std::string>(j, "out")) out = *v;
    if (auto v = opt_get<int>(j, "parallelism")) parallelism = *v;
  } catch (const json::exception& e) {
    config_error(std::string("config: ") + e.what());
  }
}

std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : cfg.to_json().dump()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

BackendFactory make_backend_factory(const RunConfig& cfg) {
  if (cfg.backend == BackendKind::Reference) return reference_backend_factory({cfg.tolerance});
  const std::vector<std::string> argv{"/bin/sh", "-c", "exec " + cfg.backend_command};
  const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(cfg.timeout_s * 1000.0));
  return [argv, timeout] { return std::make_unique<ProcessBackend>(argv, timeout); };
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Prompt-driven brain extraction, evaluation and baseline comparison", "brainprompt"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::string extract_config, compare_config, phantom_config;
  Overlays extract_ov, compare_ov, phantom_ov;

  CLI::App* extract = app.add_subcommand("extract", "Extract a brain mask; writes mask.nii.gz, prompts.json, run.json");
  add_run_flags(extract, extract_ov, extract_config);

  EvaluateArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a predicted mask against a ground-truth mask");
  evaluate->add_option("--pred", eval_args.pred, "Predicted mask NIfTI")->required();
  evaluate->add_option("--gt", eval_args.gt, "Ground-truth mask NIfTI")->required();
  evaluate->add_flag("--resample-gt", eval_args.resample_gt, "Resample the ground truth onto the prediction grid");
  evaluate->add_flag("--json", eval_args.json_out, "Emit machine-readable metrics");

  std::string manifest;
  CLI::App* compare = app.add_subcommand("compare", "Run baseline and pipeline over a manifest; writes report.csv, report.md, scans.csv");
  add_run_flags(compare, compare_ov, compare_config);
  compare->add_option("--manifest", manifest, "JSON manifest of {category, scan|phantom, gt} entries")->required();

  CLI::App* phantom = app.add_subcommand("phantom", "Write phantom.nii.gz and phantom_gt.nii.gz");
  add_run_flags(phantom, phantom_ov, phantom_config);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (extract->parsed()) return cmd_extract(resolve(extract_config, extract_ov), args, out);
    if (evaluate->parsed()) return cmd_evaluate(eval_args, out);
    if (compare->parsed()) return cmd_compare(resolve(compare_config, compare_ov), manifest, out, err);
    if (phantom->parsed()) return cmd_phantom(resolve(phantom_config, phantom_ov), out);
  } catch (const std::exception& e) {
    err << "error: " << describe(e) << "\n";
    return 1;
  }
  return 1;
}

}  // namespace brainprompt::cli
