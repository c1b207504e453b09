#pragma once

#include <map>
#include <set>
#include <string>

#include "opflow/value.hpp"

namespace opflow {

// One variable scope (file top-level or a function frame). Superglobals and
// the global/static indirections are resolved by the engine; names listed in
// global_names/static_names route reads and writes there.
struct Scope {
  std::map<std::string, AbstractValue> locals;
  std::set<std::string> global_names;
  std::set<std::string> static_names;

  bool operator==(const Scope&) const = default;
};

// Direct structural access against the local map (the Fig. 2 walk with base
// resolution). Absent bases read as untainted null and autovivify on write.
AbstractValue scope_read_path(const Scope& scope, const std::string& base,
                              const std::vector<PathStep>& path,
                              const void* prop_ctx = nullptr,
                              PropDefaultFn prop_defaults = nullptr);

void scope_write_path(Scope& scope, const std::string& base,
                      const std::vector<PathStep>& path, AbstractValue value);

}  // namespace opflow
