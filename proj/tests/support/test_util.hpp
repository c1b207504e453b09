#pragma once

#include <map>
#include <string>
#include <vector>

#include "opflow/driver.hpp"
#include "opflow/engine.hpp"
#include "opflow/frontend.hpp"

namespace opflow::test {

AnalysisConfig default_config();

// Loads a set of path -> source files and analyzes one entry.
EntryResult analyze_sources(const std::map<std::string, std::string>& sources,
                            const std::string& entry,
                            AnalysisConfig config = default_config());

// Single-file convenience: the file is named "main.php".
EntryResult analyze_snippet(const std::string& php,
                            AnalysisConfig config = default_config());

// Analyzes every FILE_MAIN and returns the merged finding list.
std::vector<Finding> findings_of(const std::map<std::string, std::string>& sources,
                                 AnalysisConfig config = default_config());

std::string read_file(const std::string& path);

// Root of the tests/ tree (fixtures live under corpus/, vectors/).
std::string test_dir();

}  // namespace opflow::test
