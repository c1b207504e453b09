#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "opflow/literal.hpp"

namespace opflow {

// Three-address opcode set. A curated Zend-style subset sufficient for the
// supported language surface; docs/dump-format.md documents each mnemonic.
#define OPFLOW_OPCODE_LIST(X) \
  X(NOP)                      \
  X(ASSIGN)                   \
  X(ASSIGN_DIM)               \
  X(ASSIGN_OBJ)               \
  X(ASSIGN_CONCAT)            \
  X(QM_ASSIGN)                \
  X(CONCAT)                   \
  X(ADD)                      \
  X(SUB)                      \
  X(MUL)                      \
  X(DIV)                      \
  X(MOD)                      \
  X(IS_EQUAL)                 \
  X(IS_NOT_EQUAL)             \
  X(IS_IDENTICAL)             \
  X(IS_NOT_IDENTICAL)         \
  X(IS_SMALLER)               \
  X(IS_SMALLER_OR_EQUAL)      \
  X(BOOL_AND)                 \
  X(BOOL_OR)                  \
  X(BOOL_NOT)                 \
  X(BOOL)                     \
  X(JMP)                      \
  X(JMPZ)                     \
  X(JMPNZ)                    \
  X(CASE)                     \
  X(INIT_ARRAY)               \
  X(ADD_ARRAY_ELEMENT)        \
  X(FETCH_DIM_R)              \
  X(FETCH_DIM_W)              \
  X(FETCH_OBJ_R)              \
  X(FETCH_OBJ_W)              \
  X(FETCH_R)                  \
  X(FETCH_W)                  \
  X(FETCH_CONSTANT)           \
  X(DECLARE_CONST)            \
  X(BIND_GLOBAL)              \
  X(NEW)                      \
  X(INIT_FCALL)               \
  X(INIT_DYNAMIC_CALL)        \
  X(INIT_METHOD_CALL)         \
  X(INIT_STATIC_METHOD_CALL)  \
  X(SEND_VAL)                 \
  X(SEND_VAR)                 \
  X(SEND_REF)                 \
  X(SEND_UNPACK)              \
  X(DO_FCALL)                 \
  X(RECV)                     \
  X(RECV_INIT)                \
  X(RECV_VARIADIC)            \
  X(RETURN)                   \
  X(ECHO)                     \
  X(EXIT)                     \
  X(INCLUDE_OR_EVAL)          \
  X(ISSET_ISEMPTY)            \
  X(FE_RESET)                 \
  X(FE_FETCH)                 \
  X(FE_KEY)

enum class OpcodeKind : std::uint8_t {
#define OPFLOW_X(name) name,
  OPFLOW_OPCODE_LIST(OPFLOW_X)
#undef OPFLOW_X
};

constexpr std::size_t kOpcodeKindCount = 0
#define OPFLOW_X(name) +1
    OPFLOW_OPCODE_LIST(OPFLOW_X)
#undef OPFLOW_X
    ;

const char* opcode_name(OpcodeKind kind);
std::optional<OpcodeKind> opcode_from_name(const std::string& name);
const std::vector<OpcodeKind>& all_opcode_kinds();

// Type dependency used by opcode-driven inference.
enum class TypeTag : std::uint8_t { Scalar, Array, Object, Any, Control };
TypeTag opcode_type_tag(OpcodeKind kind);

// INCLUDE_OR_EVAL extended_value flavors.
enum class IncludeFlavor : int {
  Include = 0,
  IncludeOnce = 1,
  Require = 2,
  RequireOnce = 3,
  Eval = 4,
};

struct Operand {
  enum class Kind : std::uint8_t {
    Unused,
    CompiledVar,  // named variable slot (CV)
    Temp,         // expression temporary (T)
    Var,          // place/iterator slot (V)
    Constant,
    JumpTarget,
  };

  Kind kind = Kind::Unused;
  std::string name;         // CompiledVar
  std::uint32_t index = 0;  // Temp / Var / JumpTarget
  Literal literal;          // Constant

  static Operand unused() { return {}; }
  static Operand cv(std::string n);
  static Operand temp(std::uint32_t i);
  static Operand var(std::uint32_t i);
  static Operand constant(Literal v);
  static Operand jump(std::uint32_t target);

  bool is_value() const {
    return kind == Kind::CompiledVar || kind == Kind::Temp || kind == Kind::Var ||
           kind == Kind::Constant;
  }
  bool operator==(const Operand&) const = default;
};

struct Opline {
  OpcodeKind opcode = OpcodeKind::NOP;
  Operand op1;
  Operand op2;
  Operand result;
  std::int64_t extended_value = 0;
  std::uint32_t source_line = 1;

  bool operator==(const Opline&) const = default;
};

// Validated construction: throws std::invalid_argument on an arity-contract or
// result-slot violation.
Opline make_opline(OpcodeKind kind, Operand op1, Operand op2, Operand result,
                   std::int64_t extended_value, std::uint32_t source_line);

// True when the opline transfers control (carries a jump target, or is
// RETURN/EXIT). Used by the leader rules.
bool is_jump(const Opline& op);

struct ParamMeta {
  std::string name;
  bool is_ref = false;
  bool is_variadic = false;
  std::optional<Literal> default_value;

  bool operator==(const ParamMeta&) const = default;
};

enum class UnitKind : std::uint8_t { FileMain, Function, Method };
const char* unit_kind_name(UnitKind kind);
std::optional<UnitKind> unit_kind_from_name(const std::string& name);

struct OpUnit {
  std::string name;  // file path for FileMain, function/method name otherwise
  UnitKind kind = UnitKind::FileMain;
  std::vector<Opline> oplines;
  std::vector<ParamMeta> params;
  std::map<std::string, Literal> statics;
  std::optional<std::string> owner_class;
  std::string declared_in;  // source file (equals name for FileMain units)

  const std::string& source_file() const { return declared_in.empty() ? name : declared_in; }

  bool operator==(const OpUnit&) const = default;
};

struct PropMeta {
  Literal default_value;
  bool is_static = false;
  bool operator==(const PropMeta&) const = default;
};

struct ClassMeta {
  std::string name;
  std::optional<std::string> parent;
  std::map<std::string, PropMeta> properties;
  std::map<std::string, OpUnit> methods;  // lowercase method name
  std::vector<std::string> traits;

  bool operator==(const ClassMeta&) const = default;
};

struct Diagnostic {
  int opline_index = -1;  // -1 for unit-level problems
  std::string rule;
  std::string message;
};

// Checks every Opline/OpUnit invariant; empty result means well-formed.
std::vector<Diagnostic> validate_unit(const OpUnit& unit);

// Immutable after the load phase; function/class lookup is case-insensitive.
struct ProgramDb {
  std::map<std::string, OpUnit> files;
  std::map<std::string, OpUnit> functions;   // key: lowercase name
  std::map<std::string, ClassMeta> classes;  // key: lowercase name

  const OpUnit* find_file(const std::string& path) const;
  const OpUnit* find_function(const std::string& name) const;
  const ClassMeta* find_class(const std::string& name) const;
  // Walks the inheritance chain (and traits were flattened at load).
  const OpUnit* find_method(const std::string& class_name,
                            const std::string& method_name) const;
  // Resolves the class that declares `method_name`, walking parents.
  const ClassMeta* find_method_owner(const std::string& class_name,
                                     const std::string& method_name) const;
};

std::string ascii_lower(std::string s);

}  // namespace opflow
