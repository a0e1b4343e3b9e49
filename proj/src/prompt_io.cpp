#include "brainprompt/prompt_io.hpp"

#include <charconv>

#include <json.hpp>

namespace brainprompt {
namespace {

using nlohmann::json;

json points(const std::vector<Point>& pts) {
  json arr = json::array();
  for (const Point& p : pts) arr.push_back({p.x, p.y});
  return arr;
}

std::vector<Point> read_points(const json& arr) {
  if (!arr.is_array()) throw Error(ErrorCode::InvalidPrompt, "point list must be an array");
  std::vector<Point> out;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer()) {
      throw Error(ErrorCode::InvalidPrompt, "each point must be [x, y] with integer coordinates");
    }
    out.push_back({p[0].get<int>(), p[1].get<int>()});
  }
  return out;
}

}  // namespace

std::string dump_prompt_file(const PromptFile& file) {
  json slices = json::object();
  for (const auto& [index, p] : file.slices) {
    slices[std::to_string(index)] = {{"box", {p.box.x0, p.box.y0, p.box.x1, p.box.y1}},
                                     {"inclusions", points(p.inclusions)},
                                     {"exclusions", points(p.exclusions)}};
  }
  json j;
  if (file.axis) j["axis"] = std::string(to_string(*file.axis));
  j["slices"] = std::move(slices);
  return j.dump(2) + "\n";
}

std::string dump_prompt_file(std::span<const SlicePrompt> prompts, Axis axis) {
  PromptFile file;
  file.axis = axis;
  for (const auto& sp : prompts)
    if (sp.prompts) file.slices.emplace(sp.index, *sp.prompts);
  return dump_prompt_file(file);
}

PromptFile parse_prompt_file(std::string_view text) {
  const json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::InvalidPrompt, "prompt file is not a JSON object");
  PromptFile out;
  try {
    if (j.contains("axis")) out.axis = parse_axis(j.at("axis").get<std::string>());
    const json& slices = j.at("slices");
    if (!slices.is_object()) throw Error(ErrorCode::InvalidPrompt, "\"slices\" must map slice index to prompts");
    for (const auto& [key, entry] : slices.items()) {
      int index = -1;
      const auto [ptr, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
      if (ec != std::errc() || ptr != key.data() + key.size() || index < 0) {
        throw Error(ErrorCode::InvalidPrompt, "slice key '" + key + "' is not a non-negative integer");
      }
      const json& box = entry.at("box");
      if (!box.is_array() || box.size() != 4) throw Error(ErrorCode::InvalidPrompt, "box must be [x0, y0, x1, y1]");
      PromptSet p;
      p.box = {box[0].get<int>(), box[1].get<int>(), box[2].get<int>(), box[3].get<int>()};
      p.inclusions = read_points(entry.at("inclusions"));
      if (entry.contains("exclusions")) p.exclusions = read_points(entry.at("exclusions"));
      out.slices.emplace(index, std::move(p));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidPrompt, e.what());
  }
  return out;
}

}  // namespace brainprompt
