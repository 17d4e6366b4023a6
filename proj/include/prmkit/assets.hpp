#pragma once

#include <string_view>

// Text assets compiled in from assets/.
namespace prmkit::assets {

std::string_view judge_prompt();
std::string_view resegment_prompt();
std::string_view rollout_prompt();
std::string_view reflection_words();
std::string_view reference_tables();

}  // namespace prmkit::assets
