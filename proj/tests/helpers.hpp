#pragma once

#include <string>
#include <variant>

#include "doctest.h"
#include "sigsem/syntax.hpp"

namespace testing {

inline sigsem::Program must_parse(const std::string& text) {
  sigsem::ParseResult r = sigsem::parse(text);
  if (auto* err = std::get_if<sigsem::ParseError>(&r)) FAIL(err->to_string() << " in: " << text);
  return std::get<sigsem::Program>(r);
}

inline sigsem::CommandPtr must_parse_command(const std::string& text) {
  return must_parse("vars ; " + text).command;
}

}  // namespace testing
