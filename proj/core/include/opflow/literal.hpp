#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace opflow {

class Literal;

// PHP array keys are ints or strings; everything else normalizes onto these.
using ArrayKey = std::variant<std::int64_t, std::string>;

// A compile-time constant value. Array literals keep insertion order, like
// PHP arrays.
class Literal {
public:
  struct Array {
    std::vector<std::pair<ArrayKey, Literal>> items;
    bool operator==(const Array&) const = default;
  };

  using Storage =
      std::variant<std::monostate, std::int64_t, double, std::string, bool, Array>;

  Literal() = default;  // null

  static Literal null() { return Literal(); }
  static Literal integer(std::int64_t v) { return Literal(Storage{v}); }
  static Literal real(double v) { return Literal(Storage{v}); }
  static Literal str(std::string v) { return Literal(Storage{std::move(v)}); }
  static Literal boolean(bool v) { return Literal(Storage{v}); }
  static Literal array(Array v) { return Literal(Storage{std::move(v)}); }

  bool is_null() const { return std::holds_alternative<std::monostate>(v_); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(v_); }
  bool is_float() const { return std::holds_alternative<double>(v_); }
  bool is_string() const { return std::holds_alternative<std::string>(v_); }
  bool is_bool() const { return std::holds_alternative<bool>(v_); }
  bool is_array() const { return std::holds_alternative<Array>(v_); }

  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_float() const { return std::get<double>(v_); }
  const std::string& as_string() const { return std::get<std::string>(v_); }
  bool as_bool() const { return std::get<bool>(v_); }
  const Array& as_array() const { return std::get<Array>(v_); }
  Array& as_array() { return std::get<Array>(v_); }

  const Storage& storage() const { return v_; }

  bool operator==(const Literal&) const = default;

private:
  explicit Literal(Storage v) : v_(std::move(v)) {}
  Storage v_;
};

// ---- PHP coercion semantics shared by lowering, dumps and the engine ----

// Boolean coercion: 0, 0.0, "", "0", false, null and the empty array are falsy.
bool php_truthy(const Literal& v);

// String coercion as used by echo/concat: true -> "1", false/null -> "",
// floats print integral values without a decimal point.
std::string php_to_string(const Literal& v);

// Numeric coercion. Non-numeric strings coerce to 0 with a leading-prefix rule.
// Returns int or float literal.
Literal php_to_number(const Literal& v);

// Loose comparison (==). Covers the scalar subset we analyze; arrays compare
// structurally after key normalization.
bool php_loose_equal(const Literal& a, const Literal& b);

// Strict comparison (===): same type and value.
bool php_identical(const Literal& a, const Literal& b);

// Numeric-string test per PHP (optional leading whitespace, int or float form).
bool php_is_numeric_string(const std::string& s);

// Array-key normalization: "5" -> 5, true -> 1, null -> "", 1.9 -> 1.
ArrayKey php_normalize_key(const Literal& v);

std::string array_key_to_string(const ArrayKey& k);

// Parses a decimal integer out of the leading prefix, PHP intval()-style.
std::int64_t php_intval(const Literal& v);

}  // namespace opflow
