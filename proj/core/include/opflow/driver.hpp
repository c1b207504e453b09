#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "opflow/engine.hpp"
#include "opflow/report.hpp"
#include "opflow/rules.hpp"

namespace opflow {

struct CorpusLoad {
  ProgramDb db;
  std::vector<std::string> diagnostics;
  // Files that matched but failed to compile; they surface as failed entries.
  std::vector<std::string> failed_files;
};

// Loads .php (frontend) and .opcode (dump reader) sources given as
// path -> bytes. Later duplicate function/class declarations lose with a
// diagnostic; traits are flattened into their users.
CorpusLoad load_sources(const std::map<std::string, std::string>& sources);

// Filesystem variant: walks directories recursively for *.php and *.opcode.
CorpusLoad load_paths(const std::vector<std::string>& paths,
                      std::vector<std::string>* missing = nullptr);

// Glob matching for entry selection: '**' crosses directories, '*'/'?' stay
// within a segment; a pattern without '/' also matches basenames.
bool glob_match(const std::string& pattern, const std::string& path);

// Every FILE_MAIN unit matching the config's globs, lexicographically sorted.
std::vector<std::string> enumerate_entries(const AnalysisConfig& config,
                                           const ProgramDb& db);

// Runs all entries (optionally concurrently); results arrive entry-sorted.
std::vector<EntryResult> run_entries(const Engine& engine,
                                     const std::vector<std::string>& entries,
                                     int jobs);

// Full CLI: `opflow analyze <paths...> [options]`. Returns the process exit
// code (0 clean, 1 findings, 2 usage/config error, 3 analysis error).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace opflow
