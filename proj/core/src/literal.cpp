#include "opflow/literal.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace opflow {

namespace {

const char* skip_ws(const char* p, const char* end) {
  while (p != end && (*p == ' ' || *p == '\t' || *p == '\n' || *p == '\r' ||
                      *p == '\v' || *p == '\f'))
    ++p;
  return p;
}

// Parses the longest numeric prefix. Returns consumed length and the value.
struct NumPrefix {
  bool any = false;
  bool is_float = false;
  std::int64_t i = 0;
  double f = 0.0;
  std::size_t len = 0;
};

NumPrefix parse_numeric_prefix(const std::string& s) {
  NumPrefix out;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const char* p = skip_ws(begin, end);
  const char* num_start = p;
  if (p != end && (*p == '+' || *p == '-')) ++p;
  const char* digits = p;
  while (p != end && std::isdigit(static_cast<unsigned char>(*p))) ++p;
  bool has_int_digits = p != digits;
  bool is_float = false;
  if (p != end && *p == '.') {
    const char* q = p + 1;
    const char* frac = q;
    while (q != end && std::isdigit(static_cast<unsigned char>(*q))) ++q;
    if (q != frac || has_int_digits) {
      is_float = true;
      p = q;
    }
  }
  if ((has_int_digits || is_float) && p != end && (*p == 'e' || *p == 'E')) {
    const char* q = p + 1;
    if (q != end && (*q == '+' || *q == '-')) ++q;
    const char* ex = q;
    while (q != end && std::isdigit(static_cast<unsigned char>(*q))) ++q;
    if (q != ex) {
      is_float = true;
      p = q;
    }
  }
  if (!has_int_digits && !is_float) return out;
  out.any = true;
  out.is_float = is_float;
  out.len = static_cast<std::size_t>(p - begin);
  std::string text(num_start, p);
  if (is_float) {
    out.f = std::strtod(text.c_str(), nullptr);
  } else {
    out.i = std::strtoll(text.c_str(), nullptr, 10);
  }
  return out;
}

}  // namespace

bool php_truthy(const Literal& v) {
  if (v.is_null()) return false;
  if (v.is_bool()) return v.as_bool();
  if (v.is_int()) return v.as_int() != 0;
  if (v.is_float()) return v.as_float() != 0.0;
  if (v.is_string()) {
    const auto& s = v.as_string();
    return !s.empty() && s != "0";
  }
  return !v.as_array().items.empty();
}

std::string php_to_string(const Literal& v) {
  if (v.is_null()) return "";
  if (v.is_bool()) return v.as_bool() ? "1" : "";
  if (v.is_int()) return std::to_string(v.as_int());
  if (v.is_string()) return v.as_string();
  if (v.is_array()) return "Array";
  double d = v.as_float();
  if (std::isnan(d)) return "NAN";
  if (std::isinf(d)) return d > 0 ? "INF" : "-INF";
  double integral;
  if (std::modf(d, &integral) == 0.0 && std::fabs(d) < 1e15) {
    return std::to_string(static_cast<std::int64_t>(integral));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.14G", d);
  return buf;
}

Literal php_to_number(const Literal& v) {
  if (v.is_int() || v.is_float()) return v;
  if (v.is_null()) return Literal::integer(0);
  if (v.is_bool()) return Literal::integer(v.as_bool() ? 1 : 0);
  if (v.is_array()) return Literal::integer(v.as_array().items.empty() ? 0 : 1);
  NumPrefix p = parse_numeric_prefix(v.as_string());
  if (!p.any) return Literal::integer(0);
  return p.is_float ? Literal::real(p.f) : Literal::integer(p.i);
}

bool php_is_numeric_string(const std::string& s) {
  NumPrefix p = parse_numeric_prefix(s);
  if (!p.any) return false;
  // PHP 8 allows trailing whitespace, nothing else.
  const char* rest = s.data() + p.len;
  const char* end = s.data() + s.size();
  return skip_ws(rest, end) == end;
}

namespace {

double as_double(const Literal& n) {
  return n.is_int() ? static_cast<double>(n.as_int()) : n.as_float();
}

bool numeric_equal(const Literal& a, const Literal& b) {
  Literal na = php_to_number(a);
  Literal nb = php_to_number(b);
  if (na.is_int() && nb.is_int()) return na.as_int() == nb.as_int();
  return as_double(na) == as_double(nb);
}

}  // namespace

bool php_loose_equal(const Literal& a, const Literal& b) {
  if (a.is_null() && b.is_null()) return true;
  if (a.is_bool() || b.is_bool()) return php_truthy(a) == php_truthy(b);
  if (a.is_null()) {
    if (b.is_string()) return b.as_string().empty();
    if (b.is_array()) return b.as_array().items.empty();
    return numeric_equal(Literal::integer(0), b);
  }
  if (b.is_null()) return php_loose_equal(b, a);
  if (a.is_array() != b.is_array()) return false;
  if (a.is_array()) {
    const auto& xa = a.as_array().items;
    const auto& xb = b.as_array().items;
    if (xa.size() != xb.size()) return false;
    for (const auto& [k, va] : xa) {
      const Literal* vb = nullptr;
      for (const auto& [kb, v] : xb) {
        if (kb == k) {
          vb = &v;
          break;
        }
      }
      if (!vb || !php_loose_equal(va, *vb)) return false;
    }
    return true;
  }
  if (a.is_string() && b.is_string()) {
    // PHP 8: numeric strings compare numerically, otherwise byte-wise.
    if (php_is_numeric_string(a.as_string()) && php_is_numeric_string(b.as_string()))
      return numeric_equal(a, b);
    return a.as_string() == b.as_string();
  }
  if (a.is_string() && !php_is_numeric_string(a.as_string()))
    return false;  // PHP 8: 0 == "abc" is false
  if (b.is_string() && !php_is_numeric_string(b.as_string())) return false;
  return numeric_equal(a, b);
}

bool php_identical(const Literal& a, const Literal& b) {
  if (a.storage().index() != b.storage().index()) return false;
  return a == b;
}

ArrayKey php_normalize_key(const Literal& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_bool()) return static_cast<std::int64_t>(v.as_bool() ? 1 : 0);
  if (v.is_null()) return std::string();
  if (v.is_float()) return static_cast<std::int64_t>(v.as_float());
  if (v.is_string()) {
    const auto& s = v.as_string();
    // Canonical decimal integers become int keys ("08" and "1.5" stay strings).
    if (!s.empty()) {
      std::size_t i = s[0] == '-' ? 1 : 0;
      if (i < s.size() && !(s[i] == '0' && s.size() > i + 1)) {
        bool all_digits = true;
        for (std::size_t j = i; j < s.size(); ++j)
          if (!std::isdigit(static_cast<unsigned char>(s[j]))) {
            all_digits = false;
            break;
          }
        if (all_digits) {
          std::int64_t out = 0;
          auto [p, ec] = std::from_chars(s.data() + i, s.data() + s.size(), out);
          if (ec == std::errc() && p == s.data() + s.size())
            return s[0] == '-' ? -out : out;
        }
      }
    }
    return s;
  }
  return std::string();  // arrays are invalid keys; callers reject earlier
}

std::string array_key_to_string(const ArrayKey& k) {
  if (std::holds_alternative<std::int64_t>(k))
    return std::to_string(std::get<std::int64_t>(k));
  return std::get<std::string>(k);
}

std::int64_t php_intval(const Literal& v) {
  Literal n = php_to_number(v);
  if (n.is_int()) return n.as_int();
  double d = n.as_float();
  if (std::isnan(d) || std::isinf(d)) return 0;
  return static_cast<std::int64_t>(d);
}

}  // namespace opflow
