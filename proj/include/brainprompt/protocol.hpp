#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "brainprompt/backend.hpp"
#include "brainprompt/subprocess.hpp"

namespace brainprompt {

// Wire protocol: one UTF-8 JSON object per line on the backend's stdin and
// stdout.
//   request:  {"id", "width", "height", "pixels_b64", "box": [x0,y0,x1,y1],
//              "inclusions": [[x,y],...], "exclusions": [[x,y],...]}
//   response: {"id", "candidates": [{"rle": [int...], "score": number}, ...]}
//   error:    {"id", "error": "message"}

struct BackendRequest {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major grayscale
  PromptSet prompts;
};

struct RleCandidate {
  std::vector<std::int64_t> rle;
  double score = 0.0;
};

struct BackendResponse {
  std::int64_t id = 0;
  std::vector<RleCandidate> candidates;
  std::optional<std::string> error;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws ProtocolError on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Single-line JSON, no trailing newline.
std::string encode_request(const BackendRequest& request);
std::string encode_response(const BackendResponse& response);

/// Throw ProtocolError on malformed JSON or missing/mistyped keys.
BackendRequest decode_request(std::string_view line);
BackendResponse decode_response(std::string_view line);

inline constexpr std::chrono::seconds kDefaultRequestTimeout{120};

/// Serial channel to one spawned backend process: exactly one request in
/// flight at a time.
class ProtocolTransport {
 public:
  explicit ProtocolTransport(const std::vector<std::string>& argv,
                             std::chrono::milliseconds timeout = kDefaultRequestTimeout);

  /// Writes the request, then blocks for the matching response.
  /// Throws Timeout, ProtocolError (bad JSON, id mismatch) or
  /// BackendUnavailable (process exit, with its exit status).
  BackendResponse call(const BackendRequest& request);

  ChildProcess& process() noexcept { return child_; }

 private:
  ChildProcess child_;
  std::chrono::milliseconds timeout_;
};

inline BackendResponse protocol_call(const BackendRequest& request, ProtocolTransport& transport) {
  return transport.call(request);
}

/// SegmentBackend speaking the wire protocol to a child process. Request
/// ids increase monotonically from 1. Candidate RLEs that do not decode to
/// width*height pixels raise ProtocolError.
class ProcessBackend final : public SegmentBackend {
 public:
  explicit ProcessBackend(std::vector<std::string> argv,
                          std::chrono::milliseconds timeout = kDefaultRequestTimeout);

  std::vector<MaskCandidate> predict(const SliceImage& slice, const PromptSet& prompts) override;
  std::string identity() const override;

 private:
  std::vector<std::string> argv_;
  ProtocolTransport transport_;
  std::int64_t next_id_ = 1;
};

}  // namespace brainprompt
