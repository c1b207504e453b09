#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "opflow/ir.hpp"

namespace opflow {

enum class EdgeKind : std::uint8_t { Fallthrough, Jump, BranchTrue, BranchFalse };
const char* edge_kind_name(EdgeKind kind);

struct BasicBlock {
  int id = 0;
  std::size_t start = 0;          // first opline index
  std::size_t end_exclusive = 0;  // one past the last opline
  std::vector<std::pair<int, EdgeKind>> successors;
};

struct Cfg {
  const OpUnit* unit = nullptr;
  std::vector<BasicBlock> blocks;  // sorted by start, tiling the opline range
  int entry = 0;

  // Block containing opline index i (blocks tile the sequence).
  int block_at(std::size_t opline_index) const;
};

struct CfgError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Partitions oplines into basic blocks with the three leader rules:
//   a) opline 0 is a leader,
//   b) every jump target is a leader,
//   c) the opline after a jump is a leader.
// RETURN/EXIT end their block with no successors; a block that ends by falling
// off the unit end is likewise terminal.
Cfg build_cfg(const OpUnit& unit);

// Graphviz rendering; node label is "B<id> [start,end)", edges carry kinds.
std::string dump_cfg_dot(const Cfg& cfg);

}  // namespace opflow
