#include <doctest.h>

#include "brainprompt/prompt_io.hpp"

using namespace brainprompt;

TEST_CASE("prompt files round trip") {
  PromptFile f;
  f.axis = Axis::Coronal;
  f.slices[3] = PromptSet{{1, 2, 10, 12}, {{4, 5}, {6, 7}}, {{0, 0}}};
  f.slices[41] = PromptSet{{0, 0, 5, 5}, {{2, 2}}, {}};
  const PromptFile g = parse_prompt_file(dump_prompt_file(f));
  CHECK(g.axis == f.axis);
  CHECK(g.slices == f.slices);
}

TEST_CASE("slice prompts dump only prompted slices") {
  std::vector<SlicePrompt> sp{{0, std::nullopt}, {1, PromptSet{{0, 0, 3, 3}, {{1, 1}}, {}}}};
  const PromptFile g = parse_prompt_file(dump_prompt_file(sp, Axis::Axial));
  CHECK(g.slices.size() == 1);
  CHECK(g.slices.count(1) == 1);
}

TEST_CASE("minimal manual prompt file") {
  const PromptFile g = parse_prompt_file(R"({"slices": {"7": {"box": [1,1,8,8], "inclusions": [[4,4]]}}})");
  CHECK_FALSE(g.axis.has_value());
  REQUIRE(g.slices.count(7) == 1);
  CHECK(g.slices.at(7).exclusions.empty());
}

TEST_CASE("schema violations") {
  for (const char* bad : {
           "not json",
           "[]",
           R"({"slices": []})",
           R"({"slices": {"x": {"box": [0,0,1,1], "inclusions": []}}})",
           R"({"slices": {"-1": {"box": [0,0,1,1], "inclusions": []}}})",
           R"({"slices": {"1": {"box": [0,0,1], "inclusions": []}}})",
           R"({"slices": {"1": {"box": [0,0,1,1], "inclusions": [[1]]}}})",
           R"({"slices": {"1": {"box": [0,0,1,1], "inclusions": [[1.5, 2]]}}})",
           R"({"slices": {"1": {"box": [0,0,1,1]}}})",
           R"({"axis": "oblique", "slices": {}})",
       }) {
    CAPTURE(bad);
    CHECK_THROWS_AS(parse_prompt_file(bad), Error);
  }
}
