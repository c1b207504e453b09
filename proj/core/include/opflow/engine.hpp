#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "opflow/builtins.hpp"
#include "opflow/finding.hpp"
#include "opflow/lower.hpp"
#include "opflow/rules.hpp"

namespace opflow {

struct AnalysisConfig {
  std::vector<std::string> entry_globs;    // empty = every FILE_MAIN
  std::vector<std::string> include_path;   // initial include_path
  std::string cwd;                         // "" = directory of the entry file
  int max_loop_iterations = 256;
  int max_call_depth = 64;
  int branch_split_budget = 1024;
  std::string rules_file;
  enum class Format { Json, Text } output_format = Format::Json;
  bool dump_opcodes = false;
  bool dump_cfg = false;
  int jobs = 1;
  bool timings = false;
  // Hard safety valve; exhausting it raises AnalysisError for the entry.
  std::uint64_t max_steps_per_entry = 50'000'000;
};

struct AnalysisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EntryResult {
  std::string entry;
  std::vector<Finding> findings;  // deterministic order
  std::uint64_t oplines_analyzed = 0;
  double wall_ms = 0.0;
  std::vector<std::string> logs;  // unresolved callees, unknown opcodes, ...
  bool failed = false;
  std::string error;
};

class Engine {
public:
  struct Hooks {
    // Compiles an eval'd snippet; eval analysis is skipped when absent.
    std::function<LoweredFile(const std::string& code, const std::string& virtual_path)>
        compile_snippet;
  };

  Engine(const ProgramDb& db, const RuleSet& rules, const BuiltinRegistry& builtins,
         const AnalysisConfig& config, Hooks hooks = {});

  // Path-sensitive interprocedural analysis of one entry file. Thread-safe:
  // concurrent calls share only the immutable inputs.
  EntryResult analyze_entry(const std::string& entry_file) const;

  const ProgramDb& db() const { return db_; }
  const AnalysisConfig& config() const { return config_; }

private:
  const ProgramDb& db_;
  const RuleSet& rules_;
  const BuiltinRegistry& builtins_;
  const AnalysisConfig& config_;
  Hooks hooks_;
};

// Convenience wrapper matching the spec surface.
std::vector<Finding> analyze_entry(const ProgramDb& db, const std::string& entry_file,
                                   const RuleSet& rules, const AnalysisConfig& config);

}  // namespace opflow
