#pragma once

#include <map>
#include <random>
#include <string>

#include "opflow/ir.hpp"

namespace opflow::test {

// Random loop-free, branch-free single-file unit over the supported opcode
// set; well-formed by construction (validate_unit-clean).
OpUnit generate_straightline(std::mt19937& rng);

// Deterministic synthetic PHP corpus of roughly `target_lines` lines across
// many files (sources, sinks, sanitizers, functions, loops, includes).
std::map<std::string, std::string> generate_synthetic_corpus(unsigned seed,
                                                             std::size_t target_lines);

// Random opline soup with in-range jump targets, for CFG fuzzing.
OpUnit generate_cfg_fuzz_unit(std::mt19937& rng);

}  // namespace opflow::test
