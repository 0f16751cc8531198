#include "simready/annotation/prompts.h"

#include <map>

#include "simready/common/error.h"

namespace simready::annotation {

using nlohmann::json;

namespace {

// Templates are kept byte-for-byte, including trailing spaces and the
// mismatched closing fence.
constexpr std::string_view kPreamble =
    "You are an intelligent AI assistant for computer graphics, physical simulation, and "
    "material science. \n"
    "\n"
    "Follow the user's requirements carefully and make sure you understand them. \n"
    "\n"
    "Keep your answers short and to the point. \n"
    "\n"
    "Do not provide any information that is not required. \n"
    "\n";

constexpr std::string_view kFineMaterialBody =
    "You are going to identify the most likely fine-grained material type for one or more "
    "parts of the object in the attached image(s).\n"
    "\n"
    "The attached images describe a [SHAPE NAME] made of [N_P] parts: "
    "[PART-MATERIAL DESCRIPTION].\n"
    "\n"
    "Given the appearance and your knowledge on material composition, please choose the most "
    "suitable fine-grained material type for the part(s): [A LIST OF PART NAMES].\n"
    "\n"
    "The available options for the [COARSE-GRAINED MATERIAL NAME] material type are: "
    "[A LIST OF AVAILABLE FINE-GRAINED MATERIAL NAMES].\n"
    "\n"
    "Please provide your answer in the following JSON format:\n"
    "```\n"
    "{\n"
    "  \"part_name\": \"most_suitable_material_type\",\n"
    "  ...: ...  # other parts\n"
    "}\n"
    "'''\n"
    "The output should **only** contain the dictionary.";

constexpr std::string_view kParameterBody =
    "You are going to use the Material Point Method to simulate the motion of the object "
    "shown in the attached image(s). \n"
    "\n"
    "To simulate the effect, you need to specify an elastic and a plastic material model, "
    "along with material parameters such as Young's modulus, Poisson's ratio, and yield "
    "stress. \n"
    "\n"
    "Note that the material parameters should be reasonable for the object shown in the "
    "image(s). \n"
    "\n"
    "More specifically, when the material parameters are used to simulate dropping, throwing, "
    "or tilting the object, the object should behave according to physical common sense.\n"
    "\n"
    "\n"
    "The available material models are list below. \n"
    "# Available elastic material models (with parameters required) \n"
    "1. Neo-Hookean elasticity (Young's modulus, Poisson's ratio); \n"
    "2. StVK elasticity (Young's modulus, Poisson's ratio). \n"
    "# Available plastic material models (with parameters required) \n"
    "1. Identity plasticity; \n"
    "2. von Mises plasticity (Young's modulus, Poisson's ratio, yield stress); \n"
    "3. Drucker-Prager plasticity (Young's modulus, Poisson's ratio, friction angle); \n"
    "\n"
    "The available combinations of material models for each material category are listed "
    "below. The leading number is the **Combination ID**.\n"
    "# ceramic\n"
    "M1. Neo-Hookean elasticity, von Mises plasticity with damage;\n"
    "# fabric\n"
    "M0. Neo-Hookean elasticity, Identity plasticity;\n"
    "M1. Neo-Hookean elasticity, von Mises plasticity with damage;\n"
    "# leather\n"
    "M0. Neo-Hookean elasticity, Identity plasticity;\n"
    "M1. Neo-Hookean elasticity, von Mises plasticity with damage;\n"
    "# metal\n"
    "M2. Neo-Hookean elasticity, von Mises plasticity;\n"
    "# plant\n"
    "M0. Neo-Hookean elasticity, Identity plasticity;\n"
    "# plastic\n"
    "M1. Neo-Hookean elasticity, von Mises plasticity with damage;\n"
    "# soil\n"
    "M3. StVK elasticity, Drucker-Prager plasticity;\n"
    "# wood\n"
    "M1. Neo-Hookean elasticity, von Mises plasticity with damage;\n"
    "\n"
    "The attached image(s) describe the object you are going to simulate.\n"
    "\n"
    "It is a [SHAPE NAME] made of [N_P] parts: [PART-MATERIAL DESCRIPTION].\n"
    "\n"
    "For each part, you need to specify **both the elastic and the plastic** material model "
    "and the material parameters, such as Young's modulus, Poisson's ratio, density, etc. \n"
    "\n"
    "Please provide your answer in the following JSON format (For Young's modulus and yield "
    "stress, the unit is Pa. For density, the unit is kg/m^3.): \n"
    "```\n"
    "{\n"
    "\"part_name\": {\n"
    "    \"CID\": \"Mx\",  // Combination ID\n"
    "    \"E\": youngs_modulus,\n"
    "    \"nu\": poissons_ratio,\n"
    "    \"...\": ...,  // other parameters, e.g., yield stress (\"sigma_y\"), friction angle "
    "(\"phi\"), density (\"rho\")\n"
    "}\n"
    "..., // other parts\n"
    "}\n"
    "'''\n"
    "The output should **only** contain the dictionary. ";

constexpr std::string_view kFeedbackTemplate =
    "The original output creates unrealistic dynamics when the object [TEST CASE DESCRIPTION] "
    "in the simulator.\n"
    "\n"
    "Specifically, [USER COMMENT].\n"
    "\n"
    "Given this information, please update the material parameters to make the object behave "
    "more realistically.\n"
    "\n"
    "The output should be formatted as the original version.";

// Single left-to-right pass, so substituted text is never rescanned.
std::string fill(std::string_view tmpl, const std::map<std::string_view, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool replaced = false;
    if (tmpl[i] == '[') {
      for (const auto& [key, value] : values) {
        if (tmpl.substr(i, key.size()) == key) {
          out += value;
          i += key.size();
          replaced = true;
          break;
        }
      }
    }
    if (!replaced) out += tmpl[i++];
  }
  return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += sep;
    out += items[i];
  }
  return out;
}

}  // namespace

json message_to_json(const ChatMessage& m) {
  return {{"role", m.role}, {"text", m.text}, {"images", m.images}};
}

ChatMessage message_from_json(const json& j) {
  ChatMessage m;
  m.role = j.at("role").get<std::string>();
  m.text = j.at("text").get<std::string>();
  if (j.contains("images")) m.images = j.at("images").get<std::vector<std::string>>();
  return m;
}

std::string part_material_description(const ObjectDescription& desc) {
  std::vector<std::string> items;
  for (const auto& p : desc.parts) {
    std::string item = p.name + ": ";
    if (!p.color.empty()) item += p.color + " ";
    item += p.fine_material.empty() ? p.coarse_material
                                    : p.fine_material + " (" + p.coarse_material + ")";
    items.push_back(std::move(item));
  }
  return join(items, "; ");
}

std::string build_fine_material_prompt(const ObjectDescription& desc,
                                       const std::vector<std::string>& target_parts) {
  std::vector<std::string> failures = check_description(desc);
  if (target_parts.empty()) failures.push_back("no target parts");
  std::string coarse;
  for (const auto& name : target_parts) {
    const PartDescription* part = desc.find_part(name);
    if (part == nullptr) {
      failures.push_back("unknown target part '" + name + "'");
      continue;
    }
    if (fine_catalog(part->coarse_material) == nullptr) {
      failures.push_back("part '" + name + "': " + part->coarse_material +
                         " has no fine material catalog");
    } else if (coarse.empty()) {
      coarse = part->coarse_material;
    } else if (coarse != part->coarse_material) {
      failures.push_back("target parts mix coarse materials " + coarse + " and " +
                         part->coarse_material);
    }
  }
  if (!failures.empty()) throw ValidationError(std::move(failures));

  std::string tmpl(kPreamble);
  tmpl += kFineMaterialBody;
  return fill(tmpl, {{"[SHAPE NAME]", desc.shape_name},
                     {"[N_P]", std::to_string(desc.parts.size())},
                     {"[PART-MATERIAL DESCRIPTION]", part_material_description(desc)},
                     {"[A LIST OF PART NAMES]", join(target_parts, ", ")},
                     {"[COARSE-GRAINED MATERIAL NAME]", coarse},
                     {"[A LIST OF AVAILABLE FINE-GRAINED MATERIAL NAMES]",
                      join(*fine_catalog(coarse), ", ")}});
}

std::string build_parameter_prompt(const ObjectDescription& desc) {
  validate_description(desc);
  std::string tmpl(kPreamble);
  tmpl += kParameterBody;
  return fill(tmpl, {{"[SHAPE NAME]", desc.shape_name},
                     {"[N_P]", std::to_string(desc.parts.size())},
                     {"[PART-MATERIAL DESCRIPTION]", part_material_description(desc)}});
}

std::string build_feedback_text(std::string_view test_case_description,
                                std::string_view user_comment) {
  return fill(kFeedbackTemplate, {{"[TEST CASE DESCRIPTION]", std::string(test_case_description)},
                                  {"[USER COMMENT]", std::string(user_comment)}});
}

std::vector<ChatMessage> build_feedback_thread(const ChatMessage& parameter_prompt,
                                               std::string_view prior_response,
                                               std::string_view test_case_description,
                                               std::string_view user_comment) {
  return {parameter_prompt,
          {"assistant", std::string(prior_response), {}},
          {"user", build_feedback_text(test_case_description, user_comment), {}}};
}

}  // namespace simready::annotation
