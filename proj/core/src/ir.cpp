#include "opflow/ir.hpp"

#include <array>
#include <cctype>
#include <stdexcept>
#include <unordered_map>

namespace opflow {

namespace {

constexpr const char* kOpcodeNames[] = {
#define OPFLOW_X(name) #name,
    OPFLOW_OPCODE_LIST(OPFLOW_X)
#undef OPFLOW_X
};

// Operand-kind bitmask per slot.
enum : unsigned {
  U = 1u << 0,   // Unused
  CV = 1u << 1,  // CompiledVar
  T = 1u << 2,   // Temp
  V = 1u << 3,   // Var
  C = 1u << 4,   // Constant
  J = 1u << 5,   // JumpTarget
};

constexpr unsigned VAL = CV | T | V | C;
constexpr unsigned PLACE = CV | V;

struct Arity {
  unsigned op1, op2, result;
};

Arity arity_contract(OpcodeKind kind) {
  switch (kind) {
    case OpcodeKind::NOP: return {U, U, U};
    case OpcodeKind::ASSIGN: return {PLACE, VAL, T | U};
    case OpcodeKind::ASSIGN_DIM: return {V, VAL, T | U};
    case OpcodeKind::ASSIGN_OBJ: return {V, VAL, T | U};
    case OpcodeKind::ASSIGN_CONCAT: return {PLACE, VAL, T | U};
    case OpcodeKind::QM_ASSIGN: return {VAL, U, T};
    case OpcodeKind::CONCAT:
    case OpcodeKind::ADD:
    case OpcodeKind::SUB:
    case OpcodeKind::MUL:
    case OpcodeKind::DIV:
    case OpcodeKind::MOD:
    case OpcodeKind::IS_EQUAL:
    case OpcodeKind::IS_NOT_EQUAL:
    case OpcodeKind::IS_IDENTICAL:
    case OpcodeKind::IS_NOT_IDENTICAL:
    case OpcodeKind::IS_SMALLER:
    case OpcodeKind::IS_SMALLER_OR_EQUAL:
    case OpcodeKind::BOOL_AND:
    case OpcodeKind::BOOL_OR:
    case OpcodeKind::CASE: return {VAL, VAL, T};
    case OpcodeKind::BOOL_NOT:
    case OpcodeKind::BOOL: return {VAL, U, T};
    case OpcodeKind::JMP: return {J, U, U};
    case OpcodeKind::JMPZ:
    case OpcodeKind::JMPNZ: return {VAL, J, U};
    case OpcodeKind::INIT_ARRAY: return {VAL | U, VAL | U, T};
    case OpcodeKind::ADD_ARRAY_ELEMENT: return {VAL, VAL | U, T};
    case OpcodeKind::FETCH_DIM_R: return {VAL, VAL, T};
    case OpcodeKind::FETCH_DIM_W: return {PLACE, VAL | U, V};
    case OpcodeKind::FETCH_OBJ_R: return {VAL, VAL, T};
    case OpcodeKind::FETCH_OBJ_W: return {PLACE, VAL, V};
    case OpcodeKind::FETCH_R: return {C | T | CV, U, T};
    case OpcodeKind::FETCH_W: return {C | T | CV, U, V};
    case OpcodeKind::FETCH_CONSTANT: return {C, U, T};
    case OpcodeKind::DECLARE_CONST: return {VAL, VAL, U};
    case OpcodeKind::BIND_GLOBAL: return {C, U, U};
    case OpcodeKind::NEW: return {VAL, U, U};
    case OpcodeKind::INIT_FCALL: return {C, U, U};
    case OpcodeKind::INIT_DYNAMIC_CALL: return {VAL, U, U};
    case OpcodeKind::INIT_METHOD_CALL: return {VAL, VAL, U};
    case OpcodeKind::INIT_STATIC_METHOD_CALL: return {VAL, VAL, U};
    case OpcodeKind::SEND_VAL:
    case OpcodeKind::SEND_VAR:
    case OpcodeKind::SEND_REF:
    case OpcodeKind::SEND_UNPACK: return {VAL, U, U};
    case OpcodeKind::DO_FCALL: return {U, U, T | U};
    case OpcodeKind::RECV: return {U, U, CV};
    case OpcodeKind::RECV_INIT: return {U, C, CV};
    case OpcodeKind::RECV_VARIADIC: return {U, U, CV};
    case OpcodeKind::RETURN: return {VAL | U, U, U};
    case OpcodeKind::ECHO: return {VAL, U, U};
    case OpcodeKind::EXIT: return {VAL | U, U, U};
    case OpcodeKind::INCLUDE_OR_EVAL: return {VAL, U, T | U};
    case OpcodeKind::ISSET_ISEMPTY: return {VAL, U, T};
    case OpcodeKind::FE_RESET: return {VAL, U, V};
    case OpcodeKind::FE_FETCH: return {V, J, CV | T};
    case OpcodeKind::FE_KEY: return {V, U, CV | T};
  }
  return {U, U, U};
}

unsigned kind_bit(Operand::Kind k) {
  switch (k) {
    case Operand::Kind::Unused: return U;
    case Operand::Kind::CompiledVar: return CV;
    case Operand::Kind::Temp: return T;
    case Operand::Kind::Var: return V;
    case Operand::Kind::Constant: return C;
    case Operand::Kind::JumpTarget: return J;
  }
  return 0;
}

const char* slot_name(int slot) {
  return slot == 0 ? "op1" : slot == 1 ? "op2" : "result";
}

bool literal_keys_valid(const Literal& lit) {
  if (!lit.is_array()) return true;
  for (const auto& [key, value] : lit.as_array().items) {
    (void)key;  // ArrayKey is int-or-string by construction
    if (!literal_keys_valid(value)) return false;
  }
  return true;
}

}  // namespace

const char* opcode_name(OpcodeKind kind) {
  return kOpcodeNames[static_cast<std::size_t>(kind)];
}

std::optional<OpcodeKind> opcode_from_name(const std::string& name) {
  static const std::unordered_map<std::string, OpcodeKind> table = [] {
    std::unordered_map<std::string, OpcodeKind> m;
    for (std::size_t i = 0; i < kOpcodeKindCount; ++i)
      m.emplace(kOpcodeNames[i], static_cast<OpcodeKind>(i));
    return m;
  }();
  auto it = table.find(name);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

const std::vector<OpcodeKind>& all_opcode_kinds() {
  static const std::vector<OpcodeKind> kinds = [] {
    std::vector<OpcodeKind> out;
    for (std::size_t i = 0; i < kOpcodeKindCount; ++i)
      out.push_back(static_cast<OpcodeKind>(i));
    return out;
  }();
  return kinds;
}

TypeTag opcode_type_tag(OpcodeKind kind) {
  switch (kind) {
    case OpcodeKind::CONCAT:
    case OpcodeKind::ADD:
    case OpcodeKind::SUB:
    case OpcodeKind::MUL:
    case OpcodeKind::DIV:
    case OpcodeKind::MOD:
    case OpcodeKind::ASSIGN_CONCAT:
    case OpcodeKind::IS_EQUAL:
    case OpcodeKind::IS_NOT_EQUAL:
    case OpcodeKind::IS_IDENTICAL:
    case OpcodeKind::IS_NOT_IDENTICAL:
    case OpcodeKind::IS_SMALLER:
    case OpcodeKind::IS_SMALLER_OR_EQUAL:
    case OpcodeKind::BOOL_AND:
    case OpcodeKind::BOOL_OR:
    case OpcodeKind::BOOL_NOT:
    case OpcodeKind::BOOL:
    case OpcodeKind::CASE:
    case OpcodeKind::ISSET_ISEMPTY:
    case OpcodeKind::FE_KEY: return TypeTag::Scalar;
    case OpcodeKind::INIT_ARRAY:
    case OpcodeKind::ADD_ARRAY_ELEMENT:
    case OpcodeKind::ASSIGN_DIM:
    case OpcodeKind::FETCH_DIM_R:
    case OpcodeKind::FETCH_DIM_W:
    case OpcodeKind::FE_RESET: return TypeTag::Array;
    case OpcodeKind::NEW:
    case OpcodeKind::ASSIGN_OBJ:
    case OpcodeKind::FETCH_OBJ_R:
    case OpcodeKind::FETCH_OBJ_W: return TypeTag::Object;
    case OpcodeKind::JMP:
    case OpcodeKind::JMPZ:
    case OpcodeKind::JMPNZ:
    case OpcodeKind::NOP:
    case OpcodeKind::RETURN:
    case OpcodeKind::EXIT:
    case OpcodeKind::BIND_GLOBAL:
    case OpcodeKind::INIT_FCALL:
    case OpcodeKind::INIT_DYNAMIC_CALL:
    case OpcodeKind::INIT_METHOD_CALL:
    case OpcodeKind::INIT_STATIC_METHOD_CALL:
    case OpcodeKind::INCLUDE_OR_EVAL: return TypeTag::Control;
    case OpcodeKind::ASSIGN:
    case OpcodeKind::QM_ASSIGN:
    case OpcodeKind::FETCH_R:
    case OpcodeKind::FETCH_W:
    case OpcodeKind::FETCH_CONSTANT:
    case OpcodeKind::DECLARE_CONST:
    case OpcodeKind::SEND_VAL:
    case OpcodeKind::SEND_VAR:
    case OpcodeKind::SEND_REF:
    case OpcodeKind::SEND_UNPACK:
    case OpcodeKind::DO_FCALL:
    case OpcodeKind::RECV:
    case OpcodeKind::RECV_INIT:
    case OpcodeKind::RECV_VARIADIC:
    case OpcodeKind::ECHO:
    case OpcodeKind::FE_FETCH: return TypeTag::Any;
  }
  return TypeTag::Any;
}

Operand Operand::cv(std::string n) {
  if (n.empty() || n[0] == '$')
    throw std::invalid_argument("compiled-var name must be nonempty and sigil-free");
  Operand o;
  o.kind = Kind::CompiledVar;
  o.name = std::move(n);
  return o;
}

Operand Operand::temp(std::uint32_t i) {
  Operand o;
  o.kind = Kind::Temp;
  o.index = i;
  return o;
}

Operand Operand::var(std::uint32_t i) {
  Operand o;
  o.kind = Kind::Var;
  o.index = i;
  return o;
}

Operand Operand::constant(Literal v) {
  Operand o;
  o.kind = Kind::Constant;
  o.literal = std::move(v);
  return o;
}

Operand Operand::jump(std::uint32_t target) {
  Operand o;
  o.kind = Kind::JumpTarget;
  o.index = target;
  return o;
}

Opline make_opline(OpcodeKind kind, Operand op1, Operand op2, Operand result,
                   std::int64_t extended_value, std::uint32_t source_line) {
  const Arity contract = arity_contract(kind);
  const Operand* slots[3] = {&op1, &op2, &result};
  const unsigned masks[3] = {contract.op1, contract.op2, contract.result};
  for (int i = 0; i < 3; ++i) {
    if (!(kind_bit(slots[i]->kind) & masks[i]))
      throw std::invalid_argument(std::string(opcode_name(kind)) + ": operand kind not allowed in " +
                                  slot_name(i));
  }
  if (result.kind == Operand::Kind::Constant || result.kind == Operand::Kind::JumpTarget)
    throw std::invalid_argument("result slot cannot hold a constant or jump target");
  if (source_line == 0) throw std::invalid_argument("source_line must be positive");
  Opline op;
  op.opcode = kind;
  op.op1 = std::move(op1);
  op.op2 = std::move(op2);
  op.result = std::move(result);
  op.extended_value = extended_value;
  op.source_line = source_line;
  return op;
}

bool is_jump(const Opline& op) {
  switch (op.opcode) {
    case OpcodeKind::JMP:
    case OpcodeKind::JMPZ:
    case OpcodeKind::JMPNZ:
    case OpcodeKind::FE_FETCH:
    case OpcodeKind::RETURN:
    case OpcodeKind::EXIT: return true;
    default: return false;
  }
}

const char* unit_kind_name(UnitKind kind) {
  switch (kind) {
    case UnitKind::FileMain: return "FILE_MAIN";
    case UnitKind::Function: return "FUNCTION";
    case UnitKind::Method: return "METHOD";
  }
  return "FILE_MAIN";
}

std::optional<UnitKind> unit_kind_from_name(const std::string& name) {
  if (name == "FILE_MAIN") return UnitKind::FileMain;
  if (name == "FUNCTION") return UnitKind::Function;
  if (name == "METHOD") return UnitKind::Method;
  return std::nullopt;
}

std::vector<Diagnostic> validate_unit(const OpUnit& unit) {
  std::vector<Diagnostic> out;
  auto diag = [&out](int idx, std::string rule, std::string msg) {
    out.push_back({idx, std::move(rule), std::move(msg)});
  };

  if (unit.kind == UnitKind::FileMain && !unit.params.empty())
    diag(-1, "file-main-params", "FILE_MAIN units must have no params");

  for (std::size_t i = 0; i < unit.params.size(); ++i) {
    if (unit.params[i].is_variadic && i + 1 != unit.params.size())
      diag(-1, "variadic-last", "variadic parameter must be last");
  }
  int variadics = 0;
  for (const auto& p : unit.params) variadics += p.is_variadic ? 1 : 0;
  if (variadics > 1) diag(-1, "variadic-unique", "at most one variadic parameter");

  const std::size_t n = unit.oplines.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Opline& op = unit.oplines[i];
    try {
      (void)make_opline(op.opcode, op.op1, op.op2, op.result, op.extended_value,
                        op.source_line);
    } catch (const std::invalid_argument& e) {
      diag(static_cast<int>(i), "arity", e.what());
    }
    int jump_targets = 0;
    for (const Operand* o : {&op.op1, &op.op2, &op.result}) {
      if (o->kind == Operand::Kind::JumpTarget) {
        ++jump_targets;
        if (o->index >= n)
          diag(static_cast<int>(i), "jump-range", "jump target out of range");
      }
      if (o->kind == Operand::Kind::CompiledVar &&
          (o->name.empty() || o->name[0] == '$'))
        diag(static_cast<int>(i), "cv-name", "compiled-var name malformed");
      if (o->kind == Operand::Kind::Constant && !literal_keys_valid(o->literal))
        diag(static_cast<int>(i), "array-keys", "array literal key must be int or string");
    }
    bool conditional = op.opcode == OpcodeKind::JMPZ || op.opcode == OpcodeKind::JMPNZ ||
                       op.opcode == OpcodeKind::FE_FETCH;
    if (conditional && jump_targets != 1)
      diag(static_cast<int>(i), "jump-arity", "conditional jump needs exactly one target");
    if (op.opcode == OpcodeKind::JMP && jump_targets != 1)
      diag(static_cast<int>(i), "jump-arity", "JMP needs exactly one target");
  }
  return out;
}

std::string ascii_lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

const OpUnit* ProgramDb::find_file(const std::string& path) const {
  auto it = files.find(path);
  return it == files.end() ? nullptr : &it->second;
}

const OpUnit* ProgramDb::find_function(const std::string& name) const {
  auto it = functions.find(ascii_lower(name));
  return it == functions.end() ? nullptr : &it->second;
}

const ClassMeta* ProgramDb::find_class(const std::string& name) const {
  auto it = classes.find(ascii_lower(name));
  return it == classes.end() ? nullptr : &it->second;
}

const ClassMeta* ProgramDb::find_method_owner(const std::string& class_name,
                                              const std::string& method_name) const {
  std::string method = ascii_lower(method_name);
  const ClassMeta* cls = find_class(class_name);
  int hops = 0;
  while (cls && hops++ < 64) {  // inheritance graph is validated acyclic at load
    if (cls->methods.count(method)) return cls;
    cls = cls->parent ? find_class(*cls->parent) : nullptr;
  }
  return nullptr;
}

const OpUnit* ProgramDb::find_method(const std::string& class_name,
                                     const std::string& method_name) const {
  const ClassMeta* owner = find_method_owner(class_name, method_name);
  if (!owner) return nullptr;
  auto it = owner->methods.find(ascii_lower(method_name));
  return it == owner->methods.end() ? nullptr : &it->second;
}

}  // namespace opflow
