#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace myopass {

inline constexpr int kDirections = 8;

enum class ActivationLevel { kRelaxed, kStiff };
enum class FrequencyBand { kLow, kHigh };

std::string_view to_string(ActivationLevel level);
std::string_view to_string(FrequencyBand band);
/// Throws DomainError for unknown text.
ActivationLevel parse_activation(std::string_view text);
FrequencyBand parse_band(std::string_view text);

/// One protocol test: LR, LS, HR or HS.
struct TestCondition {
  FrequencyBand band = FrequencyBand::kLow;
  ActivationLevel activation = ActivationLevel::kRelaxed;

  auto operator<=>(const TestCondition&) const = default;
};

/// "LR", "LS", "HR", "HS".
std::string test_code(const TestCondition& test);
TestCondition parse_test_code(std::string_view code);

/// Key of one cell of a passivity map.
struct CellKey {
  int direction = 0;
  ActivationLevel activation = ActivationLevel::kRelaxed;
  FrequencyBand band = FrequencyBand::kLow;

  auto operator<=>(const CellKey&) const = default;
};

}  // namespace myopass
