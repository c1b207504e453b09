#pragma once

#include <set>
#include <string>
#include <tuple>

#include "opflow/finding.hpp"
#include "opflow/ir.hpp"
#include "opflow/rules.hpp"

namespace opflow::test {

// Comparable finding shape shared by the oracle and the engine adapter.
using FlatSource = std::tuple<SourceKind, std::uint32_t, std::string>;
struct FlatFinding {
  VulnClass vuln = VulnClass::XSS;
  std::uint32_t line = 0;
  std::string callee;
  int position = 0;
  std::set<FlatSource> sources;

  auto operator<=>(const FlatFinding&) const = default;
};

struct OracleResult {
  std::set<FlatFinding> findings;
  std::uint64_t executed = 0;  // oplines executed, including jumps
};

// Brute-force reference interpreter: executes oplines concretely (taint bits
// included; jumps follow concrete condition values). Entirely independent of
// the engine's transfer function.
OracleResult oracle_run(const OpUnit& unit, const RuleSet& rules);

std::set<FlatFinding> flatten_findings(const std::vector<Finding>& findings);

}  // namespace opflow::test
