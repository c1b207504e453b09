#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "opflow/value.hpp"

namespace opflow {

struct SanitizerRule {
  std::string name;  // lowercase
  bool all_classes = true;
  std::set<VulnClass> classes;  // meaningful when !all_classes
  std::optional<std::string> decoder;
  bool reversible = false;

  bool covers(VulnClass c) const { return all_classes || classes.count(c) > 0; }
};

struct SinkRule {
  int position = 0;
  VulnClass vuln = VulnClass::XSS;

  auto operator<=>(const SinkRule&) const = default;
};

// The taint criterion: sources, sanitizers (with reversible pairing) and the
// dangerous-parameter list. ECHO->XSS and tainted INCLUDE_OR_EVAL->FI/RCE are
// opcode sinks handled by the engine directly.
struct RuleSet {
  std::set<std::string> sources;                         // five superglobal names
  std::map<std::string, SanitizerRule> sanitizers;       // by lowercase name
  std::map<std::string, std::string> decoders;           // decoder -> sanitizer
  std::map<std::string, std::vector<SinkRule>> sinks;    // by lowercase callee
  std::map<std::string, std::string> builtin_overrides;  // name -> taint rule spec

  const SanitizerRule* find_sanitizer(const std::string& lower_name) const;
  const std::string* find_decoder_pair(const std::string& lower_name) const;
  const std::vector<SinkRule>* find_sinks(const std::string& lower_name) const;
};

struct RulesError : std::runtime_error {
  RulesError(std::size_t line, const std::string& reason)
      : std::runtime_error("rules:" + std::to_string(line) + ": " + reason),
        line(line),
        reason(reason) {}
  std::size_t line;
  std::string reason;
};

// Built-in defaults (documented in docs/rules-format.md).
RuleSet default_rules();

// Parses the line-oriented rules text and merges it over `base`. Duplicate
// sink rows within the text are rejected; re-stating a default is a no-op.
RuleSet load_rules_text(const std::string& text, RuleSet base = default_rules());

}  // namespace opflow
