#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "opflow/ir.hpp"

namespace opflow {

inline constexpr const char* kDumpVersionLine = "#opflow-dump v1";

struct DumpError : std::runtime_error {
  DumpError(std::size_t line, const std::string& reason)
      : std::runtime_error("dump:" + std::to_string(line) + ": " + reason),
        line(line),
        reason(reason) {}
  std::size_t line;
  std::string reason;
};

struct DumpDocument {
  std::vector<OpUnit> units;  // FILE_MAIN and FUNCTION units
  std::vector<ClassMeta> classes;

  bool operator==(const DumpDocument&) const = default;
};

// Serializes to the .opcode text grammar (see docs/dump-format.md).
std::string write_dump(const DumpDocument& doc);

// Inverse of write_dump on its image; whitespace-insensitive on rows.
// Throws DumpError on version mismatch, malformed rows, unknown mnemonics or
// dangling jump targets.
DumpDocument read_dump(const std::string& bytes);

// Literal <-> text in the dump encoding (also used by rules files and tests).
std::string literal_to_text(const Literal& v);
Literal literal_from_text(const std::string& text);  // throws std::runtime_error

}  // namespace opflow
