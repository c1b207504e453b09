#pragma once

#include <compare>
#include <set>
#include <string>
#include <vector>

#include "opflow/value.hpp"

namespace opflow {

struct SinkSite {
  std::string file;
  std::uint32_t line = 0;
  std::string callee;  // function name, or "echo"/"include"/"eval" for opcodes
  int arg_position = 0;

  auto operator<=>(const SinkSite&) const = default;
};

struct Finding {
  VulnClass vuln_class = VulnClass::XSS;
  SinkSite sink;
  std::set<TaintLabel> sources;
  std::vector<Hop> trace;  // source site first, sink site last

  // Deterministic report order: by sink site, then class, then sources.
  friend bool operator<(const Finding& a, const Finding& b) {
    if (a.sink != b.sink) return a.sink < b.sink;
    if (a.vuln_class != b.vuln_class) return a.vuln_class < b.vuln_class;
    return a.sources < b.sources;
  }
  friend bool operator==(const Finding& a, const Finding& b) {
    return a.sink == b.sink && a.vuln_class == b.vuln_class && a.sources == b.sources;
  }
};

}  // namespace opflow
