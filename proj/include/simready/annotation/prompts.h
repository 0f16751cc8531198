#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "simready/annotation/description.h"

namespace simready::annotation {

struct ChatMessage {
  std::string role;  // "user" or "assistant"
  std::string text;
  std::vector<std::string> images;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

nlohmann::json message_to_json(const ChatMessage& m);
ChatMessage message_from_json(const nlohmann::json& j);

// "seat: brown fabric; leg: black metal". A part with a fine material reads
// "seat: brown cotton (fabric)".
std::string part_material_description(const ObjectDescription& desc);

// All target parts must exist and share one coarse material that has a fine
// catalog. Throws ValidationError otherwise.
std::string build_fine_material_prompt(const ObjectDescription& desc,
                                       const std::vector<std::string>& target_parts);

std::string build_parameter_prompt(const ObjectDescription& desc);

// Second user message of a feedback thread.
std::string build_feedback_text(std::string_view test_case_description,
                                std::string_view user_comment);

// (user: parameter prompt, assistant: prior response, user: feedback text).
std::vector<ChatMessage> build_feedback_thread(const ChatMessage& parameter_prompt,
                                               std::string_view prior_response,
                                               std::string_view test_case_description,
                                               std::string_view user_comment);

}  // namespace simready::annotation
