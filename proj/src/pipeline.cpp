#include "brainprompt/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <thread>

#include "brainprompt/resample.hpp"

namespace brainprompt {
namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

BackendFactory reference_backend_factory(ReferenceBackendConfig cfg) {
  cfg.validate();
  return [cfg] { return std::make_unique<ReferenceBackend>(cfg); };
}

ExtractResult extract_brain(const Volume& input, const ExtractOptions& opts, const BackendFactory& factory) {
  if (opts.parallelism < 1) throw Error(ErrorCode::InvalidConfig, "parallelism must be >= 1");
  opts.prompts.validate();
  const auto t_start = Clock::now();
  ExtractResult result{Mask3D(input.grid()), {}, {}, {}, {}, 0};

  auto t0 = Clock::now();
  std::optional<Volume> resampled;
  if (opts.target_grid) resampled = resample(input, *opts.target_grid, Interpolation::Trilinear);
  const Volume& volume = resampled ? *resampled : input;
  result.timings.resample_s = seconds_since(t0);

  t0 = Clock::now();
  result.window = compute_window(volume, opts.window_lo, opts.window_hi);
  const std::vector<SliceImage> slices = decompose(volume, opts.axis, result.window);
  result.timings.decompose_s = seconds_since(t0);

  t0 = Clock::now();
  if (opts.manual_prompts) {
    const int depth = static_cast<int>(slices.size());
    for (const auto& [index, p] : *opts.manual_prompts) {
      if (index < 0 || index >= depth) {
        throw Error(ErrorCode::InvalidPrompt, "manual prompt for slice " + std::to_string(index) +
                                                  " outside 0.." + std::to_string(depth - 1));
      }
      validate_prompts(p, slices[index].width, slices[index].height);
    }
    result.prompts.reserve(slices.size());
    for (const SliceImage& s : slices) {
      const auto it = opts.manual_prompts->find(s.index);
      result.prompts.push_back({s.index, it == opts.manual_prompts->end() ? std::nullopt
                                                                          : std::optional<PromptSet>(it->second)});
    }
  } else {
    result.prompts = generate_prompts(slices, opts.prompts);
  }
  result.timings.prompts_s = seconds_since(t0);

  t0 = Clock::now();
  std::vector<Mask2D> masks(slices.size());
  std::vector<std::size_t> work;
  for (std::size_t s = 0; s < slices.size(); ++s) {
    if (result.prompts[s].prompts) {
      work.push_back(s);
    } else {
      masks[s] = Mask2D(slices[s].width, slices[s].height);
    }
  }

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::atomic<std::size_t> calls{0};
  std::exception_ptr first_error;
  std::mutex mu;
  std::string identity;

  auto worker = [&] {
    try {
      std::unique_ptr<SegmentBackend> backend = factory();
      {
        std::lock_guard lock(mu);
        if (identity.empty()) identity = backend->identity();
      }
      while (!failed.load()) {
        const std::size_t w = next.fetch_add(1);
        if (w >= work.size()) break;
        const std::size_t s = work[w];
        masks[s] = segment(slices[s], *result.prompts[s].prompts, *backend);
        calls.fetch_add(1);
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!first_error) first_error = std::current_exception();
      failed.store(true);
    }
  };

  const int n_workers = static_cast<int>(std::min<std::size_t>(opts.parallelism, std::max<std::size_t>(work.size(), 1)));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  if (first_error) std::rethrow_exception(first_error);
  result.backend_identity = identity;
  result.backend_calls = calls.load();
  result.timings.segment_s = seconds_since(t0);

  t0 = Clock::now();
  result.mask = reconstruct(masks, opts.axis, volume.grid());
  result.timings.reconstruct_s = seconds_since(t0);
  result.timings.total_s = seconds_since(t_start);
  return result;
}

}  // namespace brainprompt
