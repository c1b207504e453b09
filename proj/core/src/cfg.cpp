#include "opflow/cfg.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace opflow {

const char* edge_kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Fallthrough: return "FALLTHROUGH";
    case EdgeKind::Jump: return "JUMP";
    case EdgeKind::BranchTrue: return "BRANCH_TRUE";
    case EdgeKind::BranchFalse: return "BRANCH_FALSE";
  }
  return "?";
}

int Cfg::block_at(std::size_t opline_index) const {
  for (const auto& b : blocks)
    if (opline_index >= b.start && opline_index < b.end_exclusive) return b.id;
  throw CfgError("opline index outside all blocks");
}

namespace {

const Operand* jump_target_of(const Opline& op) {
  for (const Operand* o : {&op.op1, &op.op2, &op.result})
    if (o->kind == Operand::Kind::JumpTarget) return o;
  return nullptr;
}

}  // namespace

Cfg build_cfg(const OpUnit& unit) {
  const std::size_t n = unit.oplines.size();
  Cfg cfg;
  cfg.unit = &unit;

  if (n == 0) {
    cfg.blocks.push_back({0, 0, 0, {}});
    cfg.entry = 0;
    return cfg;
  }

  std::set<std::size_t> leaders;
  leaders.insert(0);
  for (std::size_t i = 0; i < n; ++i) {
    const Opline& op = unit.oplines[i];
    if (const Operand* t = jump_target_of(op)) {
      if (t->index >= n) throw CfgError("jump target beyond unit");
      leaders.insert(t->index);
    }
    if (is_jump(op) && i + 1 < n) leaders.insert(i + 1);
  }

  std::map<std::size_t, int> block_of_leader;
  int id = 0;
  for (std::size_t leader : leaders) block_of_leader[leader] = id++;

  std::vector<std::size_t> sorted(leaders.begin(), leaders.end());
  for (std::size_t bi = 0; bi < sorted.size(); ++bi) {
    BasicBlock b;
    b.id = static_cast<int>(bi);
    b.start = sorted[bi];
    b.end_exclusive = bi + 1 < sorted.size() ? sorted[bi + 1] : n;
    cfg.blocks.push_back(b);
  }

  for (auto& b : cfg.blocks) {
    const Opline& last = unit.oplines[b.end_exclusive - 1];
    switch (last.opcode) {
      case OpcodeKind::JMP:
        b.successors.emplace_back(block_of_leader.at(jump_target_of(last)->index),
                                  EdgeKind::Jump);
        break;
      case OpcodeKind::JMPZ: {
        // Condition true -> fall through; false -> jump target.
        int target = block_of_leader.at(jump_target_of(last)->index);
        if (b.end_exclusive < n)
          b.successors.emplace_back(block_of_leader.at(b.end_exclusive), EdgeKind::BranchTrue);
        b.successors.emplace_back(target, EdgeKind::BranchFalse);
        break;
      }
      case OpcodeKind::JMPNZ: {
        int target = block_of_leader.at(jump_target_of(last)->index);
        b.successors.emplace_back(target, EdgeKind::BranchTrue);
        if (b.end_exclusive < n)
          b.successors.emplace_back(block_of_leader.at(b.end_exclusive), EdgeKind::BranchFalse);
        break;
      }
      case OpcodeKind::FE_FETCH: {
        // More elements -> fall through into the body; exhausted -> exit target.
        int target = block_of_leader.at(jump_target_of(last)->index);
        if (b.end_exclusive < n)
          b.successors.emplace_back(block_of_leader.at(b.end_exclusive), EdgeKind::BranchTrue);
        b.successors.emplace_back(target, EdgeKind::BranchFalse);
        break;
      }
      case OpcodeKind::RETURN:
      case OpcodeKind::EXIT: break;  // terminal
      default:
        if (b.end_exclusive < n)
          b.successors.emplace_back(block_of_leader.at(b.end_exclusive),
                                    EdgeKind::Fallthrough);
        break;
    }
  }

  cfg.entry = 0;  // opline 0's block is first in leader order
  return cfg;
}

std::string dump_cfg_dot(const Cfg& cfg) {
  std::string out = "digraph cfg {\n";
  out += "  node [shape=box];\n";
  for (const auto& b : cfg.blocks) {
    out += "  b" + std::to_string(b.id) + " [label=\"B" + std::to_string(b.id) + " [" +
           std::to_string(b.start) + "," + std::to_string(b.end_exclusive) + ")\"];\n";
  }
  for (const auto& b : cfg.blocks) {
    for (const auto& [succ, kind] : b.successors) {
      out += "  b" + std::to_string(b.id) + " -> b" + std::to_string(succ) +
             " [label=\"" + edge_kind_name(kind) + "\"];\n";
    }
  }
  out += "}\n";
  return out;
}

}  // namespace opflow
