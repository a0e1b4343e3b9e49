#include "brainprompt/protocol.hpp"

#include <array>

#include <json.hpp>

#include "brainprompt/rle.hpp"

namespace brainprompt {
namespace {

using nlohmann::json;

constexpr std::string_view kAlphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

json points_json(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> points_from(const json& arr) {
  std::vector<Point> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2) throw Error(ErrorCode::ProtocolError, "point must be [x, y]");
    out.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  return out;
}

json parse_object(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ProtocolError, "line is not a JSON object");
  return j;
}

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ProtocolError, e.what());
  }
}

}  // namespace

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  if (const std::size_t rest = bytes.size() - i; rest > 0) {
    std::uint32_t v = bytes[i] << 16;
    if (rest == 2) v |= bytes[i + 1] << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  static const auto table = [] {
    std::array<int, 256> t;
    t.fill(-1);
    for (std::size_t i = 0; i < kAlphabet.size(); ++i) t[static_cast<unsigned char>(kAlphabet[i])] = int(i);
    return t;
  }();
  if (text.size() % 4 != 0) throw Error(ErrorCode::ProtocolError, "base64 length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char c = text[i + k];
      if (c == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = table[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) throw Error(ErrorCode::ProtocolError, "invalid base64 character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::string encode_request(const BackendRequest& r) {
  const Box& b = r.prompts.box;
  json j;
  j["id"] = r.id;
  j["width"] = r.width;
  j["height"] = r.height;
  j["pixels_b64"] = base64_encode(r.pixels);
  j["box"] = {b.x0, b.y0, b.x1, b.y1};
  j["inclusions"] = points_json(r.prompts.inclusions);
  j["exclusions"] = points_json(r.prompts.exclusions);
  return j.dump();
}

BackendRequest decode_request(std::string_view line) {
  return guarded([&] {
    const json j = parse_object(line);
    BackendRequest r;
    r.id = j.at("id").get<std::int64_t>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.pixels = base64_decode(j.at("pixels_b64").get<std::string>());
    if (r.width < 0 || r.height < 0 || r.pixels.size() != static_cast<std::size_t>(r.width) * r.height) {
      throw Error(ErrorCode::ProtocolError, "pixel payload does not match width*height");
    }
    const auto& box = j.at("box");
    if (!box.is_array() || box.size() != 4) throw Error(ErrorCode::ProtocolError, "box must have 4 entries");
    r.prompts.box = {box[0].get<int>(), box[1].get<int>(), box[2].get<int>(), box[3].get<int>()};
    r.prompts.inclusions = points_from(j.at("inclusions"));
    r.prompts.exclusions = points_from(j.at("exclusions"));
    return r;
  });
}

std::string encode_response(const BackendResponse& r) {
  json j;
  j["id"] = r.id;
  if (r.error) {
    j["error"] = *r.error;
  } else {
    json cands = json::array();
    for (const auto& c : r.candidates) cands.push_back({{"rle", c.rle}, {"score", c.score}});
    j["candidates"] = std::move(cands);
  }
  return j.dump();
}

BackendResponse decode_response(std::string_view line) {
  return guarded([&] {
    const json j = parse_object(line);
    BackendResponse r;
    r.id = j.at("id").get<std::int64_t>();
    if (j.contains("error")) {
      r.error = j.at("error").get<std::string>();
      return r;
    }
    for (const auto& c : j.at("candidates")) {
      r.candidates.push_back({c.at("rle").get<std::vector<std::int64_t>>(), c.at("score").get<double>()});
    }
    return r;
  });
}

ProtocolTransport::ProtocolTransport(const std::vector<std::string>& argv, std::chrono::milliseconds timeout)
    : child_(argv), timeout_(timeout) {}

BackendResponse ProtocolTransport::call(const BackendRequest& request) {
  child_.write_all(encode_request(request) + "\n");
  const auto line = child_.read_line(timeout_);
  if (!line) {
    const int status = child_.wait();
    throw ProcessError(ErrorCode::BackendUnavailable,
                       "backend exited with status " + std::to_string(status) + " before responding", status,
                       "");
  }
  BackendResponse response = decode_response(*line);
  if (response.id != request.id) {
    throw Error(ErrorCode::ProtocolError, "response id " + std::to_string(response.id) +
                                              " does not match request id " + std::to_string(request.id));
  }
  return response;
}

ProcessBackend::ProcessBackend(std::vector<std::string> argv, std::chrono::milliseconds timeout)
    : argv_(std::move(argv)), transport_(argv_, timeout) {}

std::vector<MaskCandidate> ProcessBackend::predict(const SliceImage& slice, const PromptSet& prompts) {
  BackendRequest req;
  req.id = next_id_++;
  req.width = slice.width;
  req.height = slice.height;
  req.pixels = slice.pixels;
  req.prompts = prompts;

  const BackendResponse resp = transport_.call(req);
  if (resp.error) throw Error(ErrorCode::ProtocolError, "backend reported: " + *resp.error);
  if (resp.candidates.empty()) throw Error(ErrorCode::ProtocolError, "backend returned no candidates");

  std::vector<MaskCandidate> out;
  for (const auto& c : resp.candidates) {
    try {
      out.push_back({rle_decode(c.rle, slice.width, slice.height), c.score});
    } catch (const Error& e) {
      throw Error(ErrorCode::ProtocolError, std::string("bad candidate RLE: ") + e.what());
    }
  }
  return out;
}

std::string ProcessBackend::identity() const {
  std::string id = "external-process(";
  for (std::size_t i = 0; i < argv_.size(); ++i) id += (i ? " " : "") + argv_[i];
  return id + ")";
}

}  // namespace brainprompt
