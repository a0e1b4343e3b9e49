#include <cstring>
#include <optional>
#include <span>
#include <string>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "brainprompt/baseline.hpp"
#include "brainprompt/evaluation.hpp"
#include "brainprompt/nifti.hpp"
#include "brainprompt/phantom.hpp"
#include "brainprompt/pipeline.hpp"
#include "brainprompt/prompt_io.hpp"
#include "brainprompt/rle.hpp"

namespace py = pybind11;
using namespace brainprompt;

namespace {

// Volumes cross the boundary as Fortran-ordered (nx, ny, nz) arrays, which
// share the x-fastest layout of the C++ side.
template <class T>
py::array_t<T, py::array::f_style> to_array(std::span<const T> data, const Dims& d) {
  py::array_t<T, py::array::f_style> arr({d.nx, d.ny, d.nz});
  std::memcpy(arr.mutable_data(), data.data(), data.size() * sizeof(T));
  return arr;
}

template <class T>
std::pair<std::vector<T>, Dims> from_array(const py::array& in) {
  auto arr = py::array_t<T, py::array::f_style | py::array::forcecast>::ensure(in);
  if (!arr || arr.ndim() != 3) throw std::invalid_argument("expected a 3-D array");
  const Dims d{arr.shape(0), arr.shape(1), arr.shape(2)};
  return {std::vector<T>(arr.data(), arr.data() + arr.size()), d};
}

GridSpec grid_for(const Dims& d, const std::optional<Eigen::Matrix4d>& affine) {
  GridSpec g = GridSpec::axis_aligned(d);
  if (affine) {
    g.affine = *affine;
    for (int a = 0; a < 3; ++a) g.spacing[a] = affine->block<3, 1>(0, a).norm();
  }
  g.validate();
  return g;
}

py::array_t<std::uint8_t> mask2d_array(const Mask2D& m) {
  py::array_t<std::uint8_t> arr({m.height, m.width});
  std::memcpy(arr.mutable_data(), m.bits.data(), m.bits.size());
  return arr;
}

Mask2D mask2d_from(const py::array& in) {
  auto arr = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(in);
  if (!arr || arr.ndim() != 2) throw std::invalid_argument("expected a 2-D array");
  std::vector<std::uint8_t> bits(arr.data(), arr.data() + arr.size());
  for (auto& b : bits) b = b ? 1 : 0;
  return Mask2D(static_cast<int>(arr.shape(1)), static_cast<int>(arr.shape(0)), std::move(bits));
}

py::dict metrics_dict(const MetricReport& m) {
  py::dict d;
  d["dice"] = m.dice;
  d["iou"] = m.iou;
  d["accuracy"] = m.accuracy;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["tp"] = m.counts.tp;
  d["fp"] = m.counts.fp;
  d["fn"] = m.counts.fn;
  d["tn"] = m.counts.tn;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Prompt-driven brain extraction core";

  py::register_exception<Error>(m, "BrainPromptError", PyExc_RuntimeError);

  m.def(
      "read_nifti",
      [](const std::filesystem::path& path) {
        const Volume v = read_nifti(path);
        return py::make_tuple(to_array(v.data(), v.dims()),
                              Eigen::Matrix4d(v.affine()));
      },
      py::arg("path"), "Load a NIfTI-1 volume as (float64 array (nx, ny, nz), 4x4 affine).");

  m.def(
      "write_nifti",
      [](const std::filesystem::path& path, const py::array& data, std::optional<Eigen::Matrix4d> affine) {
        auto [values, dims] = from_array<double>(data);
        write_nifti(path, Volume(grid_for(dims, affine), std::move(values)));
      },
      py::arg("path"), py::arg("data"), py::arg("affine") = py::none());

  m.def(
      "write_mask",
      [](const std::filesystem::path& path, const py::array& data, std::optional<Eigen::Matrix4d> affine) {
        auto [bits, dims] = from_array<std::uint8_t>(data);
        for (auto& b : bits) b = b ? 1 : 0;
        write_nifti(path, Mask3D(grid_for(dims, affine), std::move(bits)));
      },
      py::arg("path"), py::arg("mask"), py::arg("affine") = py::none());

  m.def(
      "make_phantom",
      [](std::array<std::int64_t, 3> dims, double noise_sigma, std::uint64_t seed, bool lesion) {
        PhantomSpec spec = phantom_spec_for({dims[0], dims[1], dims[2]});
        spec.noise_sigma = noise_sigma;
        spec.seed = seed;
        if (lesion) spec.lesion = near_surface_lesion(spec, 5.0 * spec.brain_semi_axes[0] / 30.0);
        const Phantom ph = make_phantom(spec);
        return py::make_tuple(to_array(ph.volume.data(), spec.dims),
                              to_array(ph.ground_truth.bits(), spec.dims), to_array(lesion_mask(spec).bits(), spec.dims));
      },
      py::arg("dims") = std::array<std::int64_t, 3>{96, 96, 96}, py::arg("noise_sigma") = 0.0,
      py::arg("seed") = 0, py::arg("lesion") = false,
      "Synthetic head phantom: (volume, brain ground truth, lesion mask).");

  m.def(
      "extract_brain",
      [](const py::array& data, const std::string& axis, int parallelism, int tolerance) {
        auto [values, dims] = from_array<double>(data);
        const Volume v(grid_for(dims, std::nullopt), std::move(values));
        ExtractOptions opts;
        opts.axis = parse_axis(axis);
        opts.parallelism = parallelism;
        std::optional<ExtractResult> r;
        {
          py::gil_scoped_release release;
          r = extract_brain(v, opts, reference_backend_factory({tolerance}));
        }
        return py::make_tuple(to_array(r->mask.bits(), dims), dump_prompt_file(r->prompts, opts.axis));
      },
      py::arg("volume"), py::arg("axis") = "axial", py::arg("parallelism") = 1, py::arg("tolerance") = 25,
      "Run the pipeline with the reference backend: (mask, prompts JSON).");

  m.def(
      "builtin_baseline",
      [](const py::array& data, double f) {
        auto [values, dims] = from_array<double>(data);
        BaselineConfig cfg;
        cfg.f = f;
        return to_array(builtin_baseline(Volume(grid_for(dims, std::nullopt), std::move(values)), cfg).bits(), dims);
      },
      py::arg("volume"), py::arg("f") = 0.5);

  m.def(
      "evaluate",
      [](const py::array& pred, const py::array& gt) {
        auto [p, pd] = from_array<std::uint8_t>(pred);
        auto [g, gd] = from_array<std::uint8_t>(gt);
        if (!(pd == gd)) throw Error(ErrorCode::ShapeMismatch, "prediction and ground truth shapes differ");
        for (auto& b : p) b = b ? 1 : 0;
        for (auto& b : g) b = b ? 1 : 0;
        return metrics_dict(metrics(confusion(p, g)));
      },
      py::arg("pred"), py::arg("gt"), "Dice, IoU, accuracy, precision, recall and confusion counts.");

  m.def(
      "metrics",
      [](std::uint64_t tp, std::uint64_t fp, std::uint64_t fn, std::uint64_t tn) {
        return metrics_dict(metrics({tp, fp, fn, tn}));
      },
      py::arg("tp"), py::arg("fp"), py::arg("fn"), py::arg("tn"));

  m.def(
      "rle_encode", [](const py::array& mask) { return rle_encode(mask2d_from(mask)); }, py::arg("mask"),
      "Alternating run lengths of a (height, width) binary mask, zero-run first.");
  m.def(
      "rle_decode",
      [](const std::vector<std::int64_t>& runs, int width, int height) {
        return mask2d_array(rle_decode(runs, width, height));
      },
      py::arg("runs"), py::arg("width"), py::arg("height"));

  m.def(
      "generate_prompt",
      [](const py::array& image) -> py::object {
        auto arr = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>::ensure(image);
        if (!arr || arr.ndim() != 2) throw std::invalid_argument("expected a 2-D uint8 image");
        SliceImage s;
        s.width = static_cast<int>(arr.shape(1));
        s.height = static_cast<int>(arr.shape(0));
        s.pixels.assign(arr.data(), arr.data() + arr.size());
        const auto p = generate_prompt(s, PromptConfig{});
        if (!p) return py::none();
        py::dict d;
        d["box"] = std::array<int, 4>{p->box.x0, p->box.y0, p->box.x1, p->box.y1};
        py::list inc, exc;
        for (const Point& q : p->inclusions) inc.append(py::make_tuple(q.x, q.y));
        for (const Point& q : p->exclusions) exc.append(py::make_tuple(q.x, q.y));
        d["inclusions"] = inc;
        d["exclusions"] = exc;
        return d;
      },
      py::arg("image"), "Box and inclusion/exclusion markers for a (height, width) slice, or None.");
}
