#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "opflow/ast.hpp"
#include "opflow/lexer.hpp"

namespace opflow {

struct ParseError : std::runtime_error {
  ParseError(std::uint32_t line, const std::string& expected)
      : std::runtime_error("parse:" + std::to_string(line) + ": expected " + expected),
        line(line),
        expected(expected) {}
  std::uint32_t line;
  std::string expected;
};

// Parses a lexed token stream into a statement list. No error recovery; the
// first failure throws ParseError.
ast::Body parse(const std::vector<Token>& tokens);

// Parses a standalone expression (used for eval'd snippets and string
// interpolation); `line_base` offsets reported line numbers.
ast::ExprPtr parse_expression_source(const std::string& source, std::uint32_t line_base);

}  // namespace opflow
