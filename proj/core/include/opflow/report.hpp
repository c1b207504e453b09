#pragma once

#include <map>
#include <string>
#include <vector>

#include "opflow/engine.hpp"

namespace opflow {

struct Report {
  std::string tool_name = "opflow";
  std::string tool_version;
  std::vector<EntryResult> entries;  // ordered by entry path
  std::map<VulnClass, int> totals;

  static Report assemble(std::vector<EntryResult> results, bool with_timings);

  // Byte-stable JSON (schema at docs/report.schema.json). Timings appear only
  // when assembled with with_timings.
  std::string to_json() const;
  std::string to_text() const;
  int totals_find(VulnClass c) const;

  bool include_timings = false;
};

}  // namespace opflow
