// SPDX-License-Identifier: Apache-2.0
/**
 * @file   golden.hpp
 * @brief  Golden (input -> emission) vectors for the mechanism state machines.
 *
 * File format: line-delimited JSON, one object per line. Blank lines and
 * lines starting with '#' are ignored.
 *
 *   {"type":"config","mechanism":"touch","name":"slow ramp"}       first line
 *   {"type":"input","t_ms":0,"kind":"force","value":50}             InputEvent
 *   {"type":"emit","t_ms":250,"label":1}                            expected
 *   {"type":"flush","t_ms":1000}                                    optional, last
 *
 * "input" lines use the same encoding as the live-labelling wire protocol.
 * "emit" lines are expected LabelEvents in order; each must be produced by
 * the input (or flush) line that precedes it.
 */
#pragma once

#include <insitu/mechanisms.hpp>

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace insitu {

struct GoldenFlush {
  std::int64_t t_ms = 0;
};

using GoldenStep = std::variant<InputEvent, LabelEvent, GoldenFlush>;

struct GoldenVector {
  std::string name;
  MechanismId mechanism = MechanismId::ThreeButtons;
  std::vector<GoldenStep> steps;
};

struct GoldenResult {
  bool pass = true;
  std::string message;
  std::vector<LabelEvent> emitted;
};

nlohmann::json input_to_json(const InputEvent &e);
InputEvent input_from_json(const nlohmann::json &j);

GoldenVector parse_golden(std::istream &in);
GoldenVector load_golden(const std::filesystem::path &path);
void write_golden(const GoldenVector &g, std::ostream &out);

std::vector<InputEvent> golden_inputs(const GoldenVector &g);
std::vector<LabelEvent> golden_expected(const GoldenVector &g);

/// Replays through an in-process Mechanism with default configuration.
GoldenResult replay_golden(const GoldenVector &g);

} // namespace insitu
