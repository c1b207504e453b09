#include "opflow/value.hpp"

#include <algorithm>

namespace opflow {

namespace {
constexpr std::size_t kMaxHops = 64;
}

const char* vuln_class_name(VulnClass c) {
  switch (c) {
    case VulnClass::XSS: return "XSS";
    case VulnClass::SQLI: return "SQLI";
    case VulnClass::RCE: return "RCE";
    case VulnClass::FI: return "FI";
    case VulnClass::AFD: return "AFD";
    case VulnClass::UFU: return "UFU";
    case VulnClass::PT: return "PT";
    case VulnClass::SDE: return "SDE";
  }
  return "?";
}

std::optional<VulnClass> vuln_class_from_name(const std::string& name) {
  for (VulnClass c : {VulnClass::XSS, VulnClass::SQLI, VulnClass::RCE, VulnClass::FI,
                      VulnClass::AFD, VulnClass::UFU, VulnClass::PT, VulnClass::SDE})
    if (name == vuln_class_name(c)) return c;
  return std::nullopt;
}

const char* source_kind_name(SourceKind kind) {
  switch (kind) {
    case SourceKind::Get: return "GET";
    case SourceKind::Post: return "POST";
    case SourceKind::Files: return "FILES";
    case SourceKind::Cookie: return "COOKIE";
    case SourceKind::Request: return "REQUEST";
  }
  return "?";
}

const char* classification_name(Classification c) {
  switch (c) {
    case Classification::Scalar: return "SCALAR";
    case Classification::Array: return "ARRAY";
    case Classification::Object: return "OBJECT";
    case Classification::Unknown: return "UNKNOWN";
  }
  return "?";
}

void TaintState::add_label(TaintLabel label, Hop origin) {
  auto [it, inserted] = labels.emplace(std::move(label), std::vector<Hop>{});
  if (inserted) it->second.push_back(std::move(origin));
}

void TaintState::add_hop(const Hop& hop) {
  for (auto& [label, hops] : labels) {
    (void)label;
    if (hops.size() < kMaxHops) hops.push_back(hop);
  }
}

namespace {

std::vector<std::string> common_suffix(const std::vector<std::string>& a,
                                       const std::vector<std::string>& b) {
  std::size_t n = 0;
  while (n < a.size() && n < b.size() && a[a.size() - 1 - n] == b[b.size() - 1 - n]) ++n;
  return std::vector<std::string>(a.end() - static_cast<std::ptrdiff_t>(n), a.end());
}

}  // namespace

TaintState TaintState::join(const TaintState& a, const TaintState& b) {
  // A sanitizer stack on an untainted value carries no meaning; keep the
  // tainted side intact instead of conservatively emptying its stack.
  if (a.labels.empty() && b.labels.empty()) {
    TaintState out;
    out.san_stack = common_suffix(a.san_stack, b.san_stack);
    std::set_intersection(a.cleared.begin(), a.cleared.end(), b.cleared.begin(),
                          b.cleared.end(), std::inserter(out.cleared, out.cleared.end()));
    return out;
  }
  if (a.labels.empty()) return b;
  if (b.labels.empty()) return a;

  TaintState out;
  out.labels = a.labels;
  for (const auto& [label, hops] : b.labels) {
    auto it = out.labels.find(label);
    if (it == out.labels.end()) out.labels.emplace(label, hops);
    else if (hops.size() < it->second.size()) it->second = hops;
  }
  out.san_stack = common_suffix(a.san_stack, b.san_stack);
  std::set_intersection(a.cleared.begin(), a.cleared.end(), b.cleared.begin(),
                        b.cleared.end(), std::inserter(out.cleared, out.cleared.end()));
  return out;
}

bool TaintState::operator==(const TaintState& other) const {
  if (san_stack != other.san_stack || cleared != other.cleared) return false;
  if (labels.size() != other.labels.size()) return false;
  auto it = other.labels.begin();
  for (const auto& [label, hops] : labels) {
    (void)hops;
    if (it->first != label) return false;
    ++it;
  }
  return true;
}

ValueBox::ValueBox(AbstractValue v) : ptr_(std::make_unique<AbstractValue>(std::move(v))) {}
ValueBox::ValueBox(const ValueBox& other)
    : ptr_(other.ptr_ ? std::make_unique<AbstractValue>(*other.ptr_) : nullptr) {}
ValueBox& ValueBox::operator=(const ValueBox& other) {
  if (this != &other)
    ptr_ = other.ptr_ ? std::make_unique<AbstractValue>(*other.ptr_) : nullptr;
  return *this;
}
ValueBox::~ValueBox() = default;
void ValueBox::reset() { ptr_.reset(); }
void ValueBox::set(AbstractValue v) { ptr_ = std::make_unique<AbstractValue>(std::move(v)); }
bool ValueBox::operator==(const ValueBox& other) const {
  if (!ptr_ && !other.ptr_) return true;
  if (!ptr_ || !other.ptr_) return false;
  return *ptr_ == *other.ptr_;
}

AbstractValue* ArrayStruct::find(const ArrayKey& key) {
  for (auto& [k, v] : elements)
    if (k == key) return &v;
  return nullptr;
}

const AbstractValue* ArrayStruct::find(const ArrayKey& key) const {
  for (const auto& [k, v] : elements)
    if (k == key) return &v;
  return nullptr;
}

void ArrayStruct::set(const ArrayKey& key, AbstractValue value) {
  if (AbstractValue* slot = find(key)) {
    *slot = std::move(value);
  } else {
    elements.emplace_back(key, std::move(value));
  }
  if (std::holds_alternative<std::int64_t>(key))
    next_index = std::max(next_index, std::get<std::int64_t>(key) + 1);
}

void ArrayStruct::append(AbstractValue value) {
  if (next_index_valid) {
    set(next_index, std::move(value));
    return;
  }
  // Unknown insertion point: weak update into the summary cell.
  if (default_element) default_element.set(join_values(*default_element, value));
  else default_element.set(std::move(value));
}

AbstractValue* ObjectStruct::find(const std::string& name) {
  for (auto& [k, v] : properties)
    if (k == name) return &v;
  return nullptr;
}

const AbstractValue* ObjectStruct::find(const std::string& name) const {
  for (const auto& [k, v] : properties)
    if (k == name) return &v;
  return nullptr;
}

void ObjectStruct::set(const std::string& name, AbstractValue value) {
  if (AbstractValue* slot = find(name)) *slot = std::move(value);
  else properties.emplace_back(name, std::move(value));
}

AbstractValue AbstractValue::null_value() { return AbstractValue(ValueStruct{}); }

AbstractValue AbstractValue::from_literal(const Literal& lit) {
  if (lit.is_array()) {
    ArrayStruct arr;
    for (const auto& [key, value] : lit.as_array().items)
      arr.set(key, from_literal(value));
    return AbstractValue(std::move(arr));
  }
  ValueStruct s;
  s.type = scalar_type_of(lit);
  s.concrete = lit;
  return AbstractValue(std::move(s));
}

AbstractValue AbstractValue::unknown(TaintState taint) {
  return AbstractValue(UnknownStruct{std::move(taint)});
}

std::optional<Literal> AbstractValue::to_literal() const {
  if (const auto* s = scalar()) {
    if (s->concrete) return s->concrete;
    if (s->type == ScalarType::Null) return Literal::null();
    return std::nullopt;
  }
  if (const auto* a = array()) {
    if (!a->shape_concrete()) return std::nullopt;
    Literal::Array out;
    for (const auto& [key, value] : a->elements) {
      auto lit = value.to_literal();
      if (!lit) return std::nullopt;
      out.items.emplace_back(key, std::move(*lit));
    }
    return Literal::array(std::move(out));
  }
  return std::nullopt;
}

std::optional<bool> AbstractValue::truthiness() const {
  if (const auto* s = scalar()) {
    if (s->concrete) return php_truthy(*s->concrete);
    if (s->type == ScalarType::Null) return false;
    return std::nullopt;
  }
  if (const auto* a = array()) {
    if (!a->elements.empty()) return true;
    if (a->shape_concrete()) return false;
    return std::nullopt;
  }
  if (object()) return true;
  return std::nullopt;
}

TaintState AbstractValue::own_taint() const {
  if (const auto* s = scalar()) return s->taint;
  if (const auto* u = unknown_struct()) return u->taint;
  return collect_taint();
}

TaintState AbstractValue::collect_taint() const {
  if (const auto* s = scalar()) return s->taint;
  if (const auto* u = unknown_struct()) return u->taint;
  TaintState acc;
  if (const auto* a = array()) {
    for (const auto& [key, value] : a->elements) {
      (void)key;
      acc = TaintState::join(acc, value.collect_taint());
    }
    if (a->default_element)
      acc = TaintState::join(acc, (*a->default_element).collect_taint());
    return acc;
  }
  const auto* o = object();
  for (const auto& [name, value] : o->properties) {
    (void)name;
    acc = TaintState::join(acc, value.collect_taint());
  }
  return acc;
}

Classification var_classify(const AbstractValue& v) {
  if (v.scalar()) return Classification::Scalar;
  if (v.array()) return Classification::Array;
  if (v.object()) return Classification::Object;
  return Classification::Unknown;
}

ScalarType scalar_type_of(const Literal& lit) {
  if (lit.is_int()) return ScalarType::Int;
  if (lit.is_float()) return ScalarType::Float;
  if (lit.is_string()) return ScalarType::Str;
  if (lit.is_bool()) return ScalarType::Bool;
  return ScalarType::Null;
}

InferredType infer_from_opcode(const Opline& op,
                               const std::vector<Classification>& operand_classes) {
  auto scalar = [](std::optional<ScalarType> t) {
    return InferredType{Classification::Scalar, t};
  };
  switch (opcode_type_tag(op.opcode)) {
    case TypeTag::Array: return {Classification::Array, std::nullopt};
    case TypeTag::Object: return {Classification::Object, std::nullopt};
    case TypeTag::Scalar:
      switch (op.opcode) {
        case OpcodeKind::CONCAT:
        case OpcodeKind::ASSIGN_CONCAT: return scalar(ScalarType::Str);
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
        case OpcodeKind::ISSET_ISEMPTY: return scalar(ScalarType::Bool);
        default: return scalar(std::nullopt);
      }
    case TypeTag::Control: return {Classification::Unknown, std::nullopt};
    case TypeTag::Any: break;
  }
  if (op.opcode == OpcodeKind::ASSIGN || op.opcode == OpcodeKind::QM_ASSIGN) {
    const Operand& value_op =
        op.opcode == OpcodeKind::ASSIGN ? op.op2 : op.op1;
    // Constant R-value: the L-value must be a scalar (unless the constant is
    // an array literal).
    if (value_op.kind == Operand::Kind::Constant) {
      if (value_op.literal.is_array()) return {Classification::Array, std::nullopt};
      return {Classification::Scalar, scalar_type_of(value_op.literal)};
    }
    std::size_t idx = op.opcode == OpcodeKind::ASSIGN ? 1 : 0;
    if (idx < operand_classes.size())
      return {operand_classes[idx], std::nullopt};
  }
  return {Classification::Unknown, std::nullopt};
}

namespace {

AbstractValue join_same_scalar(const ValueStruct& a, const ValueStruct& b) {
  ValueStruct out;
  out.type = a.type == b.type ? a.type : ScalarType::UnknownScalar;
  if (a.concrete && b.concrete && *a.concrete == *b.concrete) out.concrete = a.concrete;
  out.taint = TaintState::join(a.taint, b.taint);
  return AbstractValue(std::move(out));
}

AbstractValue join_arrays(const ArrayStruct& a, const ArrayStruct& b) {
  ArrayStruct out;
  ValueBox folded;  // values at keys present on only one side

  auto fold = [&](const AbstractValue& v) {
    if (folded) folded.set(join_values(*folded, v));
    else folded.set(v);
  };

  for (const auto& [key, va] : a.elements) {
    if (const AbstractValue* vb = b.find(key))
      out.elements.emplace_back(key, join_values(va, *vb));
    else
      fold(va);
  }
  for (const auto& [key, vb] : b.elements) {
    if (!a.find(key)) fold(vb);
  }

  if (a.default_element && b.default_element)
    out.default_element.set(join_values(*a.default_element, *b.default_element));
  else if (a.default_element)
    out.default_element = a.default_element;
  else if (b.default_element)
    out.default_element = b.default_element;

  bool shapes_equal = out.elements.size() == a.elements.size() &&
                      out.elements.size() == b.elements.size();
  if (folded) {
    if (out.default_element) out.default_element.set(join_values(*out.default_element, *folded));
    else out.default_element = folded;
  }

  if (shapes_equal && a.next_index_valid && b.next_index_valid &&
      a.next_index == b.next_index) {
    out.next_index = a.next_index;
    out.next_index_valid = true;
  } else {
    out.next_index = std::max(a.next_index, b.next_index);
    out.next_index_valid = false;
  }
  return AbstractValue(std::move(out));
}

AbstractValue join_objects(const ObjectStruct& a, const ObjectStruct& b) {
  if (a.class_name != b.class_name) {
    TaintState t = TaintState::join(AbstractValue(a).collect_taint(),
                                    AbstractValue(b).collect_taint());
    return AbstractValue::unknown(std::move(t));
  }
  ObjectStruct out;
  out.class_name = a.class_name;
  for (const auto& [name, va] : a.properties) {
    if (const AbstractValue* vb = b.find(name))
      out.properties.emplace_back(name, join_values(va, *vb));
    else
      out.properties.emplace_back(name, join_values(va, AbstractValue::null_value()));
  }
  for (const auto& [name, vb] : b.properties) {
    if (!a.find(name))
      out.properties.emplace_back(name, join_values(vb, AbstractValue::null_value()));
  }
  return AbstractValue(std::move(out));
}

}  // namespace

AbstractValue join_values(const AbstractValue& a, const AbstractValue& b) {
  if (a == b) return a;
  if (a.scalar() && b.scalar()) return join_same_scalar(*a.scalar(), *b.scalar());
  if (a.array() && b.array()) return join_arrays(*a.array(), *b.array());
  if (a.object() && b.object()) return join_objects(*a.object(), *b.object());
  // Variant mismatch (or an Unknown side): collapse without losing taint.
  return AbstractValue::unknown(
      TaintState::join(a.collect_taint(), b.collect_taint()));
}

// ---- path walking ----

namespace {

AbstractValue read_rest(const AbstractValue& value, const std::vector<PathStep>& path,
                        std::size_t depth, const void* prop_ctx,
                        PropDefaultFn prop_defaults);

AbstractValue read_step(const AbstractValue& base, const PathStep& step,
                        const std::vector<PathStep>& path, std::size_t depth,
                        const void* prop_ctx, PropDefaultFn prop_defaults) {
  if (const auto* u = base.unknown_struct())
    return AbstractValue::unknown(u->taint);

  switch (step.kind) {
    case PathStep::Kind::Key: {
      if (const auto* a = base.array()) {
        if (const AbstractValue* v = a->find(step.key))
          return read_rest(*v, path, depth + 1, prop_ctx, prop_defaults);
        if (a->default_element)
          return read_rest(*a->default_element, path, depth + 1, prop_ctx, prop_defaults);
        // Statically absent key: null for clean arrays; a taint-carrying array
        // keeps its joined taint (over-approximation never drops taint).
        TaintState joined = base.collect_taint();
        if (joined.tainted()) return AbstractValue::unknown(std::move(joined));
        return AbstractValue::null_value();
      }
      if (const auto* s = base.scalar()) {
        // String offsets and scalar indexing are out of scope; keep the taint.
        if (s->taint.tainted()) return AbstractValue::unknown(s->taint);
        return AbstractValue::null_value();
      }
      return AbstractValue::null_value();
    }
    case PathStep::Kind::UnknownKey: {
      if (const auto* a = base.array()) {
        AbstractValue acc = AbstractValue::null_value();
        for (const auto& [key, value] : a->elements) {
          (void)key;
          acc = join_values(acc, value);
        }
        if (a->default_element) acc = join_values(acc, *a->default_element);
        return read_rest(acc, path, depth + 1, prop_ctx, prop_defaults);
      }
      if (const auto* s = base.scalar()) {
        if (s->taint.tainted()) return AbstractValue::unknown(s->taint);
        return AbstractValue::null_value();
      }
      return AbstractValue::null_value();
    }
    case PathStep::Kind::Prop:
    case PathStep::Kind::UnknownProp: {
      if (const auto* o = base.object()) {
        if (step.kind == PathStep::Kind::UnknownProp) {
          AbstractValue acc = AbstractValue::null_value();
          for (const auto& [name, value] : o->properties) {
            (void)name;
            acc = join_values(acc, value);
          }
          return read_rest(acc, path, depth + 1, prop_ctx, prop_defaults);
        }
        if (const AbstractValue* v = o->find(step.prop))
          return read_rest(*v, path, depth + 1, prop_ctx, prop_defaults);
        if (prop_defaults) {
          if (auto value = prop_defaults(prop_ctx, o->class_name, step.prop))
            return read_rest(*value, path, depth + 1, prop_ctx, prop_defaults);
        }
        return AbstractValue::null_value();
      }
      return AbstractValue::null_value();
    }
    case PathStep::Kind::Append: return AbstractValue::null_value();
  }
  return AbstractValue::null_value();
}

AbstractValue read_rest(const AbstractValue& value, const std::vector<PathStep>& path,
                        std::size_t depth, const void* prop_ctx,
                        PropDefaultFn prop_defaults) {
  if (depth >= path.size()) return value;
  return read_step(value, path[depth], path, depth, prop_ctx, prop_defaults);
}

void write_step(AbstractValue& base, const std::vector<PathStep>& path,
                std::size_t depth, const AbstractValue& value, bool weak) {
  if (depth >= path.size()) {
    if (weak) base = join_values(base, value);
    else base = value;
    return;
  }
  const PathStep& step = path[depth];

  if (auto* u = base.unknown_struct()) {
    // Writes through Unknown keep taint soundness.
    u->taint = TaintState::join(u->taint, value.collect_taint());
    return;
  }

  switch (step.kind) {
    case PathStep::Kind::Key:
    case PathStep::Kind::Append:
    case PathStep::Kind::UnknownKey: {
      if (!base.array()) {
        // Autovivification (also silently overwrites scalars, which PHP warns
        // about but tolerates for null).
        base = AbstractValue(ArrayStruct{});
      }
      ArrayStruct& arr = *base.array();
      if (step.kind == PathStep::Kind::Key) {
        AbstractValue* slot = arr.find(step.key);
        if (!slot) {
          arr.set(step.key, AbstractValue::null_value());
          slot = arr.find(step.key);
        }
        write_step(*slot, path, depth + 1, value, weak);
        return;
      }
      if (step.kind == PathStep::Kind::Append) {
        if (depth + 1 == path.size()) {
          if (weak) {
            AbstractValue tmp = value;
            arr.append(std::move(tmp));
          } else {
            arr.append(value);
          }
          return;
        }
        AbstractValue nested = AbstractValue::null_value();
        write_step(nested, path, depth + 1, value, weak);
        arr.append(std::move(nested));
        return;
      }
      // Unknown key: weak update into every element and the summary cell.
      for (auto& [key, elem] : arr.elements) {
        (void)key;
        write_step(elem, path, depth + 1, value, /*weak=*/true);
      }
      AbstractValue summary =
          arr.default_element ? *arr.default_element : AbstractValue::null_value();
      write_step(summary, path, depth + 1, value, /*weak=*/true);
      arr.default_element.set(std::move(summary));
      return;
    }
    case PathStep::Kind::Prop:
    case PathStep::Kind::UnknownProp: {
      if (!base.object()) {
        ObjectStruct fresh;
        fresh.class_name = "stdClass";
        base = AbstractValue(std::move(fresh));
      }
      ObjectStruct& obj = *base.object();
      if (step.kind == PathStep::Kind::Prop) {
        AbstractValue* slot = obj.find(step.prop);
        if (!slot) {
          obj.set(step.prop, AbstractValue::null_value());
          slot = obj.find(step.prop);
        }
        write_step(*slot, path, depth + 1, value, weak);
        return;
      }
      for (auto& [name, prop] : obj.properties) {
        (void)name;
        write_step(prop, path, depth + 1, value, /*weak=*/true);
      }
      return;
    }
  }
}

}  // namespace

AbstractValue read_value_path(const AbstractValue& base,
                              const std::vector<PathStep>& path, const void* prop_ctx,
                              PropDefaultFn prop_defaults) {
  return read_rest(base, path, 0, prop_ctx, prop_defaults);
}

void write_value_path(AbstractValue& base, const std::vector<PathStep>& path,
                      AbstractValue value, bool weak) {
  write_step(base, path, 0, value, weak);
}

}  // namespace opflow
