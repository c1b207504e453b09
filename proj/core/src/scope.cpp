#include "opflow/scope.hpp"

namespace opflow {

AbstractValue scope_read_path(const Scope& scope, const std::string& base,
                              const std::vector<PathStep>& path, const void* prop_ctx,
                              PropDefaultFn prop_defaults) {
  auto it = scope.locals.find(base);
  if (it == scope.locals.end()) return AbstractValue::null_value();
  return read_value_path(it->second, path, prop_ctx, prop_defaults);
}

void scope_write_path(Scope& scope, const std::string& base,
                      const std::vector<PathStep>& path, AbstractValue value) {
  auto [it, inserted] = scope.locals.try_emplace(base, AbstractValue::null_value());
  (void)inserted;
  write_value_path(it->second, path, std::move(value));
}

}  // namespace opflow
