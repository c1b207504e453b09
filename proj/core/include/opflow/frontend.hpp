#pragma once

#include <string>

#include "opflow/lower.hpp"

namespace opflow {

// lex + parse + lower in one step. Throws LexError/ParseError/LowerError.
LoweredFile compile_source(const std::string& source, const std::string& file_path);

}  // namespace opflow
