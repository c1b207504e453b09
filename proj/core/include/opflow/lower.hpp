#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "opflow/ast.hpp"
#include "opflow/ir.hpp"

namespace opflow {

struct LowerError : std::runtime_error {
  LowerError(std::uint32_t line, const std::string& construct)
      : std::runtime_error("lower:" + std::to_string(line) + ": unsupported " + construct),
        line(line),
        construct(construct) {}
  std::uint32_t line;
  std::string construct;
};

struct LoweredFile {
  OpUnit main;
  std::vector<OpUnit> functions;
  std::vector<ClassMeta> classes;
};

// Compiles a parsed file into opcode units. Function and class declarations
// are hoisted wherever they appear; every unit ends with an implicit RETURN.
LoweredFile lower(const ast::Body& program, const std::string& file_path);

bool is_superglobal(const std::string& name);
bool is_taint_source_superglobal(const std::string& name);

}  // namespace opflow
