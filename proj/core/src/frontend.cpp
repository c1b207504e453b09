#include "opflow/frontend.hpp"

#include "opflow/lexer.hpp"
#include "opflow/parser.hpp"

namespace opflow {

LoweredFile compile_source(const std::string& source, const std::string& file_path) {
  return lower(parse(lex(source)), file_path);
}

}  // namespace opflow
