#include "myopass/condition.hpp"

#include "myopass/errors.hpp"

namespace myopass {

std::string_view to_string(ActivationLevel level) {
  return level == ActivationLevel::kRelaxed ? "relaxed" : "stiff";
}

std::string_view to_string(FrequencyBand band) {
  return band == FrequencyBand::kLow ? "low" : "high";
}

ActivationLevel parse_activation(std::string_view text) {
  if (text == "relaxed") return ActivationLevel::kRelaxed;
  if (text == "stiff") return ActivationLevel::kStiff;
  throw DomainError("unknown activation label '" + std::string(text) + "'");
}

FrequencyBand parse_band(std::string_view text) {
  if (text == "low") return FrequencyBand::kLow;
  if (text == "high") return FrequencyBand::kHigh;
  throw DomainError("unknown frequency label '" + std::string(text) + "'");
}

std::string test_code(const TestCondition& test) {
  std::string code;
  code += test.band == FrequencyBand::kLow ? 'L' : 'H';
  code += test.activation == ActivationLevel::kRelaxed ? 'R' : 'S';
  return code;
}

TestCondition parse_test_code(std::string_view code) {
  if (code.size() != 2) throw DomainError("bad test code '" + std::string(code) + "'");
  TestCondition test;
  if (code[0] == 'L') {
    test.band = FrequencyBand::kLow;
  } else if (code[0] == 'H') {
    test.band = FrequencyBand::kHigh;
  } else {
    throw DomainError("bad test code '" + std::string(code) + "'");
  }
  if (code[1] == 'R') {
    test.activation = ActivationLevel::kRelaxed;
  } else if (code[1] == 'S') {
    test.activation = ActivationLevel::kStiff;
  } else {
    throw DomainError("bad test code '" + std::string(code) + "'");
  }
  return test;
}

}  // namespace myopass
