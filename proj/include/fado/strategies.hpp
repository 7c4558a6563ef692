#pragma once

#include <array>
#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>

namespace fado {

// The eight support-skill categories annotating supporter utterances.
enum class Strategy : int {
  question = 0,
  restatement = 1,
  reflection = 2,
  self_disclosure = 3,
  affirmation = 4,
  suggestions = 5,
  information = 6,
  others = 7,
};

inline constexpr int kNumStrategies = 8;

inline const std::array<std::string, kNumStrategies>& strategy_names() {
  static const std::array<std::string, kNumStrategies> names = {
      "Question",
      "Restatement or Paraphrasing",
      "Reflection of Feelings",
      "Self-disclosure",
      "Affirmation and Reassurance",
      "Providing Suggestions",
      "Information",
      "Others",
  };
  return names;
}

inline const std::string& strategy_name(Strategy s) {
  int id = static_cast<int>(s);
  if (id < 0 || id >= kNumStrategies) throw std::out_of_range("strategy_name: bad id");
  return strategy_names()[id];
}

inline Strategy strategy_from_id(int id) {
  if (id < 0 || id >= kNumStrategies) throw std::out_of_range("strategy_from_id: bad id");
  return static_cast<Strategy>(id);
}

// Case-insensitive name lookup; annotation casing varies between dataset
// exports ("Reflection of feelings" vs "Reflection of Feelings").
inline std::optional<Strategy> strategy_from_name(const std::string& name) {
  auto fold = [](const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
  };
  std::string key = fold(name);
  const auto& names = strategy_names();
  for (int i = 0; i < kNumStrategies; ++i)
    if (fold(names[i]) == key) return static_cast<Strategy>(i);
  return std::nullopt;
}

}  // namespace fado
