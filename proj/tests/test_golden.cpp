// SPDX-License-Identifier: Apache-2.0
#include <insitu/error.hpp>
#include <insitu/golden.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <set>
#include <sstream>

using namespace insitu;
namespace fs = std::filesystem;

namespace {

std::vector<fs::path> golden_files() {
  std::vector<fs::path> out;
  for (const auto &entry : fs::directory_iterator(INSITU_GOLDEN_DIR))
    if (entry.path().extension() == ".jsonl")
      out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

} // namespace

TEST(Golden, EveryFileReplays) {
  const auto files = golden_files();
  ASSERT_GE(files.size(), 10u);
  for (const auto &f : files) {
    const auto g = load_golden(f);
    const auto r = replay_golden(g);
    EXPECT_TRUE(r.pass) << f.filename() << ": " << r.message;
    EXPECT_EQ(r.emitted, golden_expected(g)) << f.filename();
  }
}

TEST(Golden, EveryMechanismIsCovered) {
  std::set<MechanismId> seen;
  for (const auto &f : golden_files())
    seen.insert(load_golden(f).mechanism);
  EXPECT_EQ(seen.size(), kAllMechanisms.size());
}

TEST(Golden, MutatedExpectationFails) {
  for (const auto &f : golden_files()) {
    auto g = load_golden(f);
    bool mutated = false;
    for (auto &step : g.steps)
      if (auto *e = std::get_if<LabelEvent>(&step); e && !mutated) {
        e->t_ms += 1;
        mutated = true;
      }
    if (!mutated)
      continue;
    EXPECT_FALSE(replay_golden(g).pass) << f.filename();
  }
}

TEST(Golden, ExtraEmissionFails) {
  auto g = load_golden(fs::path(INSITU_GOLDEN_DIR) / "three_buttons.jsonl");
  g.steps.push_back(InputEvent{1'000'000, InputKind::ButtonDown, 1});
  const auto r = replay_golden(g);
  EXPECT_FALSE(r.pass);
  EXPECT_FALSE(r.message.empty());
}

TEST(Golden, WriteParseRoundTrip) {
  for (const auto &f : golden_files()) {
    const auto g = load_golden(f);
    std::stringstream ss;
    write_golden(g, ss);
    const auto back = parse_golden(ss);
    EXPECT_EQ(back.name, g.name);
    EXPECT_EQ(back.mechanism, g.mechanism);
    EXPECT_EQ(golden_inputs(back), golden_inputs(g));
    EXPECT_EQ(golden_expected(back), golden_expected(g));
  }
}

TEST(Golden, InputJsonEncoding) {
  const InputEvent e{120, InputKind::Tap, 2};
  const auto j = input_to_json(e);
  EXPECT_EQ(j.at("kind"), "tap");
  EXPECT_EQ(input_from_json(j), e);
  EXPECT_EQ(input_from_json(nlohmann::json::parse(
              R"({"t_ms":120,"kind":"tap","value":"upstairs"})")),
            e);
  EXPECT_THROW(input_from_json(nlohmann::json::parse(R"({"t_ms":1,"kind":"jump"})")),
               Error);
}

TEST(Golden, MalformedFileReportsLine) {
  std::stringstream ss(
    "{\"type\":\"config\",\"mechanism\":\"slider\",\"name\":\"x\"}\n"
    "{\"type\":\"input\",\"t_ms\":0,\"kind\":\"slider\",\"value\":5}\n"
    "not json\n");
  try {
    parse_golden(ss);
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 3u);
  }
}
