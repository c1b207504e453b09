#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opflow/value.hpp"

namespace opflow {

enum class TaintRuleKind : std::uint8_t {
  PassAll,  // return taints = union of argument taints
  PassArg,  // return taints = taints of one argument
  Clear,    // untainted return (sanitizer semantics live in RuleSet)
  None,     // untainted return (predicates)
};

struct TaintRule {
  TaintRuleKind kind = TaintRuleKind::PassAll;
  int arg = 0;  // PassArg index
};

// Environment surface a concrete impl may touch; everything routes back into
// the per-path analysis context.
struct BuiltinCall {
  const std::vector<AbstractValue>& args;
  TaintState rule_taint;  // precomputed from the model's taint rule

  std::string* cwd = nullptr;
  std::vector<std::string>* include_path = nullptr;
  std::function<void(const std::string&, AbstractValue)> set_var;       // parse_str
  std::function<void(const std::string&, AbstractValue)> set_constant;  // define
  std::function<std::optional<AbstractValue>(const std::string&)> get_constant;

  const Literal* concrete(std::size_t i) const;  // scalar literal of arg i, if any
  std::optional<std::string> concrete_string(std::size_t i) const;
  std::optional<std::int64_t> concrete_int(std::size_t i) const;
};

struct BuiltinModel {
  std::string name;
  TaintRule rule;
  // Result type hint for the abstract fallback (no hint -> Unknown).
  std::optional<ScalarType> abstract_scalar;
  // Returns nullopt when arguments are not concrete enough; the engine then
  // falls back to the taint rule abstractly.
  std::function<std::optional<AbstractValue>(BuiltinCall&)> concrete;
  bool mutates_environment = false;
};

class BuiltinRegistry {
public:
  void add(BuiltinModel model);
  const BuiltinModel* find(const std::string& name) const;  // case-insensitive
  std::size_t size() const { return models_.size(); }
  const std::map<std::string, BuiltinModel>& models() const { return models_; }

private:
  std::map<std::string, BuiltinModel> models_;
};

// The documented minimum model set (strings, arrays, sanitizers and decoders,
// environment, concrete-execution list, predicates).
BuiltinRegistry register_minimum_set();

// Applies a model (or the PASS_ALL fallback when absent): concrete execution
// when possible, abstract taint rule otherwise. `unmodeled` reports fallback.
AbstractValue apply_builtin(const BuiltinRegistry& registry, const std::string& name,
                            BuiltinCall& call, bool* unmodeled = nullptr);

// Shared by engine overrides: parses "PASS_ALL", "PASS_ARG:<i>", "CLEAR", "NONE".
std::optional<TaintRule> parse_taint_rule(const std::string& spec);

// Exact byte transforms, shared with vector tests.
std::string php_htmlspecialchars(const std::string& s);
std::string php_htmlspecialchars_decode(const std::string& s);
std::string php_urlencode(const std::string& s);
std::string php_urldecode(const std::string& s);
std::string php_base64_encode(const std::string& s);
std::optional<std::string> php_base64_decode(const std::string& s);
std::string php_addslashes(const std::string& s);
std::string php_stripslashes(const std::string& s);
std::string php_mysql_escape(const std::string& s);
std::string php_trim(const std::string& s);
std::optional<std::string> php_substr(const std::string& s, std::int64_t start,
                                      std::optional<std::int64_t> length);

}  // namespace opflow
