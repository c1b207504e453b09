#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "opflow/ir.hpp"
#include "opflow/literal.hpp"

namespace opflow {

// The eight taint-style vulnerability classes.
enum class VulnClass : std::uint8_t { XSS, SQLI, RCE, FI, AFD, UFU, PT, SDE };
const char* vuln_class_name(VulnClass c);
std::optional<VulnClass> vuln_class_from_name(const std::string& name);

enum class SourceKind : std::uint8_t { Get, Post, Files, Cookie, Request };
const char* source_kind_name(SourceKind kind);

struct TaintLabel {
  SourceKind kind = SourceKind::Get;
  std::string file;
  std::uint32_t line = 0;
  std::string access_path;  // superglobal key, "*" when unknown

  auto operator<=>(const TaintLabel&) const = default;
};

struct Hop {
  std::string file;
  std::uint32_t line = 0;
  std::string description;
};

// Taint + reversible-sanitizer state carried by every value.
struct TaintState {
  // Label -> propagation hops from the source toward the current value.
  std::map<TaintLabel, std::vector<Hop>> labels;
  std::vector<std::string> san_stack;  // encoder names, bottom..top
  std::set<VulnClass> cleared;         // cleared by class-limited irreversible sanitizers

  bool tainted() const { return !labels.empty(); }
  // Taint exists and the sanitizer stack is empty.
  bool effectively_tainted() const { return !labels.empty() && san_stack.empty(); }
  bool dangerous_for(VulnClass c) const {
    return effectively_tainted() && !cleared.count(c);
  }

  void add_label(TaintLabel label, Hop origin);
  void add_hop(const Hop& hop);  // appended to every label (capped)

  static TaintState join(const TaintState& a, const TaintState& b);

  // Equality ignores hop traces (they are diagnostics, not lattice state).
  bool operator==(const TaintState& other) const;
};

enum class ScalarType : std::uint8_t { Int, Float, Str, Bool, Null, UnknownScalar };

struct ValueStruct {
  ScalarType type = ScalarType::Null;
  std::optional<Literal> concrete;
  TaintState taint;

  bool operator==(const ValueStruct&) const = default;
};

struct AbstractValue;

// Deep-copying optional box (breaks the value/array recursion).
class ValueBox {
public:
  ValueBox() = default;
  explicit ValueBox(AbstractValue v);
  ValueBox(const ValueBox& other);
  ValueBox(ValueBox&&) noexcept = default;
  ValueBox& operator=(const ValueBox& other);
  ValueBox& operator=(ValueBox&&) noexcept = default;
  ~ValueBox();

  explicit operator bool() const { return ptr_ != nullptr; }
  AbstractValue& operator*() { return *ptr_; }
  const AbstractValue& operator*() const { return *ptr_; }
  void reset();
  void set(AbstractValue v);

  bool operator==(const ValueBox& other) const;

private:
  std::unique_ptr<AbstractValue> ptr_;
};

struct ArrayStruct {
  // Insertion-ordered, PHP-style.
  std::vector<std::pair<ArrayKey, AbstractValue>> elements;
  std::int64_t next_index = 0;
  // Joins of diverging shapes invalidate next_index; appends then become weak
  // updates into default_element.
  bool next_index_valid = true;
  ValueBox default_element;  // summary for statically-unknown keys

  AbstractValue* find(const ArrayKey& key);
  const AbstractValue* find(const ArrayKey& key) const;
  void set(const ArrayKey& key, AbstractValue value);  // strong update
  void append(AbstractValue value);
  // Key set and size are statically known (no summary cell).
  bool shape_concrete() const { return !default_element; }

  bool operator==(const ArrayStruct&) const = default;
};

struct ObjectStruct {
  std::string class_name;
  std::vector<std::pair<std::string, AbstractValue>> properties;

  AbstractValue* find(const std::string& name);
  const AbstractValue* find(const std::string& name) const;
  void set(const std::string& name, AbstractValue value);

  bool operator==(const ObjectStruct&) const = default;
};

// Over-approximation that still carries taint state.
struct UnknownStruct {
  TaintState taint;
  bool operator==(const UnknownStruct&) const = default;
};

enum class Classification : std::uint8_t { Scalar, Array, Object, Unknown };
const char* classification_name(Classification c);

struct AbstractValue {
  std::variant<ValueStruct, ArrayStruct, ObjectStruct, UnknownStruct> v;

  AbstractValue() : v(ValueStruct{}) {}
  AbstractValue(ValueStruct s) : v(std::move(s)) {}
  AbstractValue(ArrayStruct a) : v(std::move(a)) {}
  AbstractValue(ObjectStruct o) : v(std::move(o)) {}
  AbstractValue(UnknownStruct u) : v(std::move(u)) {}

  static AbstractValue null_value();
  static AbstractValue from_literal(const Literal& lit);
  static AbstractValue unknown(TaintState taint = {});

  ValueStruct* scalar() { return std::get_if<ValueStruct>(&v); }
  const ValueStruct* scalar() const { return std::get_if<ValueStruct>(&v); }
  ArrayStruct* array() { return std::get_if<ArrayStruct>(&v); }
  const ArrayStruct* array() const { return std::get_if<ArrayStruct>(&v); }
  ObjectStruct* object() { return std::get_if<ObjectStruct>(&v); }
  const ObjectStruct* object() const { return std::get_if<ObjectStruct>(&v); }
  UnknownStruct* unknown_struct() { return std::get_if<UnknownStruct>(&v); }
  const UnknownStruct* unknown_struct() const { return std::get_if<UnknownStruct>(&v); }

  bool is_unknown() const { return std::holds_alternative<UnknownStruct>(v); }

  // Fully concrete literal view (recursing into arrays), if any.
  std::optional<Literal> to_literal() const;
  // Three-valued truthiness: nullopt when not statically decidable.
  std::optional<bool> truthiness() const;

  // Taint state directly attached to this value (scalars/unknowns), or joined
  // over all nested values (arrays/objects).
  TaintState own_taint() const;
  TaintState collect_taint() const;

  bool operator==(const AbstractValue&) const = default;
};

Classification var_classify(const AbstractValue& v);

struct InferredType {
  Classification cls = Classification::Unknown;
  std::optional<ScalarType> scalar;
};

// Opcode-driven inference: returns the tag-implied result classification.
// ASSIGN/QM_ASSIGN refine through the assigned operand's classification, and a
// constant R-value implies a scalar L-value.
InferredType infer_from_opcode(const Opline& op,
                               const std::vector<Classification>& operand_classes);

// Lattice join: commutative, associative, idempotent (on observable state);
// taints union, sanitizer stacks keep their common suffix, differing concrete
// values drop, differing variants collapse to Unknown without losing taint.
AbstractValue join_values(const AbstractValue& a, const AbstractValue& b);

ScalarType scalar_type_of(const Literal& lit);

// ---- structural paths (the Fig. 2 storage walk) ----

struct PathStep {
  enum class Kind : std::uint8_t { Key, UnknownKey, Append, Prop, UnknownProp };
  Kind kind = Kind::Key;
  ArrayKey key;      // Kind::Key
  std::string prop;  // Kind::Prop

  static PathStep concrete_key(ArrayKey k) { return {Kind::Key, std::move(k), {}}; }
  static PathStep unknown_key() { return {Kind::UnknownKey, {}, {}}; }
  static PathStep append() { return {Kind::Append, {}, {}}; }
  static PathStep property(std::string name) { return {Kind::Prop, {}, std::move(name)}; }
  static PathStep unknown_property() { return {Kind::UnknownProp, {}, {}}; }
};

// Property-default resolution hook for object reads (walks class metadata).
using PropDefaultFn = std::optional<AbstractValue> (*)(const void* ctx,
                                                       const std::string& class_name,
                                                       const std::string& prop);

// Reads through a value; absent paths yield untainted null, unknown keys yield
// the join of all elements plus the summary cell.
AbstractValue read_value_path(const AbstractValue& base,
                              const std::vector<PathStep>& path,
                              const void* prop_ctx = nullptr,
                              PropDefaultFn prop_defaults = nullptr);

// Writes through a value with PHP autovivification. Concrete paths update
// strongly; any unknown step degrades to weak (joining) updates below it.
// `weak` forces a joining update from the start.
void write_value_path(AbstractValue& base, const std::vector<PathStep>& path,
                      AbstractValue value, bool weak = false);

}  // namespace opflow
