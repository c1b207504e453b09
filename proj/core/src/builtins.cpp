#include "opflow/builtins.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

#include "json.hpp"
#include "opflow/path_util.hpp"

namespace opflow {

const Literal* BuiltinCall::concrete(std::size_t i) const {
  if (i >= args.size()) return nullptr;
  const ValueStruct* s = args[i].scalar();
  if (!s || !s->concrete) return nullptr;
  return &*s->concrete;
}

std::optional<std::string> BuiltinCall::concrete_string(std::size_t i) const {
  const Literal* lit = concrete(i);
  if (!lit || lit->is_array()) return std::nullopt;
  return php_to_string(*lit);
}

std::optional<std::int64_t> BuiltinCall::concrete_int(std::size_t i) const {
  const Literal* lit = concrete(i);
  if (!lit || lit->is_array()) return std::nullopt;
  return php_intval(*lit);
}

void BuiltinRegistry::add(BuiltinModel model) {
  models_[ascii_lower(model.name)] = std::move(model);
}

const BuiltinModel* BuiltinRegistry::find(const std::string& name) const {
  auto it = models_.find(ascii_lower(name));
  return it == models_.end() ? nullptr : &it->second;
}

std::optional<TaintRule> parse_taint_rule(const std::string& spec) {
  if (spec == "PASS_ALL") return TaintRule{TaintRuleKind::PassAll, 0};
  if (spec == "CLEAR") return TaintRule{TaintRuleKind::Clear, 0};
  if (spec == "NONE") return TaintRule{TaintRuleKind::None, 0};
  if (spec.rfind("PASS_ARG:", 0) == 0) {
    try {
      return TaintRule{TaintRuleKind::PassArg, std::stoi(spec.substr(9))};
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return std::nullopt;
}

// ---- exact byte transforms ----

std::string php_htmlspecialchars(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#039;"; break;  // ENT_QUOTES default since PHP 8.1
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string php_htmlspecialchars_decode(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '&') {
      static const std::pair<const char*, char> entities[] = {
          {"&amp;", '&'}, {"&quot;", '"'}, {"&#039;", '\''}, {"&#39;", '\''},
          {"&lt;", '<'},  {"&gt;", '>'},
      };
      bool matched = false;
      for (const auto& [entity, ch] : entities) {
        std::size_t n = std::char_traits<char>::length(entity);
        if (s.compare(i, n, entity) == 0) {
          out += ch;
          i += n;
          matched = true;
          break;
        }
      }
      if (matched) continue;
    }
    out += s[i++];
  }
  return out;
}

std::string php_urlencode(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.') {
      out += static_cast<char>(c);
    } else if (c == ' ') {
      out += '+';
    } else {
      char buf[4];
      std::snprintf(buf, sizeof(buf), "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

std::string php_urldecode(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size() &&
               std::isxdigit(static_cast<unsigned char>(s[i + 1])) &&
               std::isxdigit(static_cast<unsigned char>(s[i + 2]))) {
      auto hex = [](char c) {
        return std::isdigit(static_cast<unsigned char>(c))
                   ? c - '0'
                   : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10;
      };
      out += static_cast<char>(hex(s[i + 1]) * 16 + hex(s[i + 2]));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

static const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string php_base64_encode(const std::string& s) {
  std::string out;
  std::size_t i = 0;
  while (i + 2 < s.size()) {
    unsigned v = (static_cast<unsigned char>(s[i]) << 16) |
                 (static_cast<unsigned char>(s[i + 1]) << 8) |
                 static_cast<unsigned char>(s[i + 2]);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += kB64[v & 63];
    i += 3;
  }
  std::size_t rest = s.size() - i;
  if (rest == 1) {
    unsigned v = static_cast<unsigned char>(s[i]) << 16;
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += "==";
  } else if (rest == 2) {
    unsigned v = (static_cast<unsigned char>(s[i]) << 16) |
                 (static_cast<unsigned char>(s[i + 1]) << 8);
    out += kB64[(v >> 18) & 63];
    out += kB64[(v >> 12) & 63];
    out += kB64[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

std::optional<std::string> php_base64_decode(const std::string& s) {
  auto value_of = [](char c) -> int {
    const char* p = std::char_traits<char>::find(kB64, 64, c);
    return p ? static_cast<int>(p - kB64) : -1;
  };
  std::string out;
  unsigned buffer = 0;
  int bits = 0;
  for (char c : s) {
    if (c == '=' || c == '\n' || c == '\r' || c == ' ') continue;
    int v = value_of(c);
    if (v < 0) return std::nullopt;  // strict-ish: reject junk
    buffer = (buffer << 6) | static_cast<unsigned>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out += static_cast<char>((buffer >> bits) & 0xFF);
    }
  }
  return out;
}

std::string php_addslashes(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '\'' || c == '"' || c == '\\') out += '\\';
    if (c == '\0') {
      out += "\\0";
      continue;
    }
    out += c;
  }
  return out;
}

std::string php_stripslashes(const std::string& s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && i + 1 < s.size()) {
      char next = s[++i];
      out += next == '0' ? '\0' : next;
    } else if (s[i] != '\\') {
      out += s[i];
    }
  }
  return out;
}

std::string php_mysql_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\0': out += "\\0"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '"': out += "\\\""; break;
      case '\x1a': out += "\\Z"; break;
      default: out += c;
    }
  }
  return out;
}

std::string php_trim(const std::string& s) {
  const char* ws = " \t\n\r\0\x0B";
  std::size_t a = s.find_first_not_of(ws, 0, 6);
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(ws, std::string::npos, 6);
  return s.substr(a, b - a + 1);
}

std::optional<std::string> php_substr(const std::string& s, std::int64_t start,
                                      std::optional<std::int64_t> length) {
  std::int64_t n = static_cast<std::int64_t>(s.size());
  if (start < 0) start = std::max<std::int64_t>(0, n + start);
  if (start >= n) return std::string();
  std::int64_t len = length.value_or(n - start);
  if (len < 0) len = std::max<std::int64_t>(0, n - start + len);
  len = std::min(len, n - start);
  return s.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(len));
}

// ---- model helpers ----

namespace {

AbstractValue scalar_result(Literal lit, TaintState taint) {
  ValueStruct out;
  out.type = scalar_type_of(lit);
  out.concrete = std::move(lit);
  out.taint = std::move(taint);
  return AbstractValue(std::move(out));
}

using Impl = std::function<std::optional<AbstractValue>(BuiltinCall&)>;

BuiltinModel model(std::string name, TaintRule rule, std::optional<ScalarType> hint,
                   Impl impl, bool env = false) {
  BuiltinModel m;
  m.name = std::move(name);
  m.rule = rule;
  m.abstract_scalar = hint;
  m.concrete = std::move(impl);
  m.mutates_environment = env;
  return m;
}

constexpr TaintRule kPassAll{TaintRuleKind::PassAll, 0};
constexpr TaintRule kPassArg0{TaintRuleKind::PassArg, 0};
constexpr TaintRule kClear{TaintRuleKind::Clear, 0};
constexpr TaintRule kNone{TaintRuleKind::None, 0};

// One-string-argument transform.
Impl str1(std::string (*fn)(const std::string&)) {
  return [fn](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto s = c.concrete_string(0);
    if (!s) return std::nullopt;
    return scalar_result(Literal::str(fn(*s)), c.rule_taint);
  };
}

bool array_fully_known(const AbstractValue& v) {
  const ArrayStruct* a = v.array();
  return a && a->shape_concrete();
}

AbstractValue json_to_value(const nlohmann::json& j) {
  using nlohmann::json;
  switch (j.type()) {
    case json::value_t::null: return AbstractValue::null_value();
    case json::value_t::boolean:
      return scalar_result(Literal::boolean(j.get<bool>()), {});
    case json::value_t::number_integer:
    case json::value_t::number_unsigned:
      return scalar_result(Literal::integer(j.get<std::int64_t>()), {});
    case json::value_t::number_float:
      return scalar_result(Literal::real(j.get<double>()), {});
    case json::value_t::string:
      return scalar_result(Literal::str(j.get<std::string>()), {});
    case json::value_t::array: {
      ArrayStruct arr;
      for (const auto& item : j) arr.append(json_to_value(item));
      return AbstractValue(std::move(arr));
    }
    case json::value_t::object: {
      ArrayStruct arr;
      for (auto it = j.begin(); it != j.end(); ++it)
        arr.set(it.key(), json_to_value(it.value()));
      return AbstractValue(std::move(arr));
    }
    default: return AbstractValue::unknown();
  }
}

}  // namespace

BuiltinRegistry register_minimum_set() {
  BuiltinRegistry reg;

  // ---- strings ----
  reg.add(model("strlen", kNone, ScalarType::Int, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto s = c.concrete_string(0);
    if (!s) return std::nullopt;
    return scalar_result(Literal::integer(static_cast<std::int64_t>(s->size())), {});
  }));

  reg.add(model("substr", kPassArg0, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto s = c.concrete_string(0);
    auto start = c.concrete_int(1);
    if (!s || !start) return std::nullopt;
    std::optional<std::int64_t> len;
    if (c.args.size() > 2) {
      len = c.concrete_int(2);
      if (!len) return std::nullopt;
    }
    auto out = php_substr(*s, *start, len);
    if (!out) return std::nullopt;
    return scalar_result(Literal::str(*out), c.rule_taint);
  }));

  reg.add(model("str_replace", kPassAll, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto search = c.concrete_string(0);
    auto replace = c.concrete_string(1);
    auto subject = c.concrete_string(2);
    if (!search || !replace || !subject || search->empty()) return std::nullopt;
    std::string out;
    std::size_t pos = 0;
    while (true) {
      std::size_t hit = subject->find(*search, pos);
      if (hit == std::string::npos) {
        out += subject->substr(pos);
        break;
      }
      out += subject->substr(pos, hit - pos);
      out += *replace;
      pos = hit + search->size();
    }
    return scalar_result(Literal::str(out), c.rule_taint);
  }));

  reg.add(model("sprintf", kPassAll, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto fmt = c.concrete_string(0);
    if (!fmt) return std::nullopt;
    std::string out;
    std::size_t arg = 1;
    for (std::size_t i = 0; i < fmt->size(); ++i) {
      char ch = (*fmt)[i];
      if (ch != '%') {
        out += ch;
        continue;
      }
      if (i + 1 >= fmt->size()) return std::nullopt;
      char spec = (*fmt)[++i];
      if (spec == '%') {
        out += '%';
        continue;
      }
      if (spec == 's') {
        auto v = c.concrete_string(arg++);
        if (!v) return std::nullopt;
        out += *v;
        continue;
      }
      if (spec == 'd') {
        auto v = c.concrete_int(arg++);
        if (!v) return std::nullopt;
        out += std::to_string(*v);
        continue;
      }
      return std::nullopt;  // unsupported conversion: abstract fallback
    }
    return scalar_result(Literal::str(out), c.rule_taint);
  }));

  reg.add(model("strtolower", kPassArg0, ScalarType::Str, str1(+[](const std::string& s) {
    std::string out = s;
    for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return out;
  })));
  reg.add(model("strtoupper", kPassArg0, ScalarType::Str, str1(+[](const std::string& s) {
    std::string out = s;
    for (char& ch : out) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return out;
  })));
  reg.add(model("ucfirst", kPassArg0, ScalarType::Str, str1(+[](const std::string& s) {
    std::string out = s;
    if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
    return out;
  })));
  reg.add(model("trim", kPassArg0, ScalarType::Str, str1(+[](const std::string& s) {
    return php_trim(s);
  })));

  reg.add(model("implode", kPassAll, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    // implode(glue, array); the single-array form is not modeled.
    auto glue = c.concrete_string(0);
    if (!glue || c.args.size() < 2 || !array_fully_known(c.args[1])) return std::nullopt;
    std::string out;
    bool first = true;
    for (const auto& [key, value] : c.args[1].array()->elements) {
      (void)key;
      auto lit = value.to_literal();
      if (!lit || lit->is_array()) return std::nullopt;
      if (!first) out += *glue;
      out += php_to_string(*lit);
      first = false;
    }
    return scalar_result(Literal::str(out), c.rule_taint);
  }));

  reg.add(model("explode", kPassAll, std::nullopt, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto delim = c.concrete_string(0);
    auto subject = c.concrete_string(1);
    if (!delim || !subject || delim->empty()) return std::nullopt;
    ArrayStruct arr;
    std::size_t pos = 0;
    while (true) {
      std::size_t hit = subject->find(*delim, pos);
      std::string piece = hit == std::string::npos ? subject->substr(pos)
                                                   : subject->substr(pos, hit - pos);
      arr.append(scalar_result(Literal::str(piece), c.rule_taint));
      if (hit == std::string::npos) break;
      pos = hit + delim->size();
    }
    return AbstractValue(std::move(arr));
  }));

  reg.add(model("str_repeat", kPassArg0, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto s = c.concrete_string(0);
    auto n = c.concrete_int(1);
    if (!s || !n || *n < 0 || *n > 100000) return std::nullopt;
    std::string out;
    out.reserve(s->size() * static_cast<std::size_t>(*n));
    for (std::int64_t i = 0; i < *n; ++i) out += *s;
    return scalar_result(Literal::str(out), c.rule_taint);
  }));

  // ---- arrays ----
  reg.add(model("array_pad", kPassAll, std::nullopt, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (c.args.size() < 3 || !array_fully_known(c.args[0])) return std::nullopt;
    auto size = c.concrete_int(1);
    if (!size) return std::nullopt;
    const ArrayStruct& in = *c.args[0].array();
    std::int64_t target = *size;
    std::int64_t abs_target = target < 0 ? -target : target;
    auto count = static_cast<std::int64_t>(in.elements.size());
    if (abs_target <= count) return c.args[0];
    AbstractValue pad = c.args.size() > 2 ? c.args[2] : AbstractValue::null_value();
    ArrayStruct out;
    if (target > 0) {
      // Keys renumber 0..n-1, PHP array_pad semantics.
      for (const auto& [key, value] : in.elements) {
        (void)key;
        out.append(value);
      }
      for (std::int64_t i = count; i < target; ++i) out.append(pad);
    } else {
      for (std::int64_t i = count; i < abs_target; ++i) out.append(pad);
      for (const auto& [key, value] : in.elements) {
        (void)key;
        out.append(value);
      }
    }
    return AbstractValue(std::move(out));
  }));

  reg.add(model("array_merge", kPassAll, std::nullopt, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    ArrayStruct out;
    for (const auto& arg : c.args) {
      if (!array_fully_known(arg)) return std::nullopt;
      for (const auto& [key, value] : arg.array()->elements) {
        if (std::holds_alternative<std::int64_t>(key)) out.append(value);
        else out.set(key, value);
      }
    }
    return AbstractValue(std::move(out));
  }));

  reg.add(model("array_key_exists", kNone, ScalarType::Bool, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    const Literal* key = c.concrete(0);
    if (!key || c.args.size() < 2 || !array_fully_known(c.args[1])) return std::nullopt;
    bool found = c.args[1].array()->find(php_normalize_key(*key)) != nullptr;
    return scalar_result(Literal::boolean(found), {});
  }));

  reg.add(model("array_keys", kNone, std::nullopt, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (c.args.empty() || !array_fully_known(c.args[0])) return std::nullopt;
    ArrayStruct out;
    for (const auto& [key, value] : c.args[0].array()->elements) {
      (void)value;
      Literal lit = std::holds_alternative<std::int64_t>(key)
                        ? Literal::integer(std::get<std::int64_t>(key))
                        : Literal::str(std::get<std::string>(key));
      out.append(scalar_result(std::move(lit), {}));
    }
    return AbstractValue(std::move(out));
  }));

  reg.add(model("array_values", kPassAll, std::nullopt, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (c.args.empty() || !array_fully_known(c.args[0])) return std::nullopt;
    ArrayStruct out;
    for (const auto& [key, value] : c.args[0].array()->elements) {
      (void)key;
      out.append(value);
    }
    return AbstractValue(std::move(out));
  }));

  reg.add(model("count", kNone, ScalarType::Int, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (c.args.empty() || !array_fully_known(c.args[0])) return std::nullopt;
    return scalar_result(
        Literal::integer(static_cast<std::int64_t>(c.args[0].array()->elements.size())),
        {});
  }));

  reg.add(model("in_array", kNone, ScalarType::Bool, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    const Literal* needle = c.concrete(0);
    if (!needle || c.args.size() < 2 || !array_fully_known(c.args[1])) return std::nullopt;
    for (const auto& [key, value] : c.args[1].array()->elements) {
      (void)key;
      auto lit = value.to_literal();
      if (!lit) return std::nullopt;
      if (php_loose_equal(*lit, *needle)) return scalar_result(Literal::boolean(true), {});
    }
    return scalar_result(Literal::boolean(false), {});
  }));

  // ---- sanitizers and decoders (value semantics; stack effects live in RuleSet) ----
  reg.add(model("htmlspecialchars", kPassArg0, ScalarType::Str, str1(&php_htmlspecialchars)));
  reg.add(model("htmlspecialchars_decode", kPassArg0, ScalarType::Str,
                str1(&php_htmlspecialchars_decode)));
  reg.add(model("htmlentities", kPassArg0, ScalarType::Str, str1(&php_htmlspecialchars)));
  reg.add(model("html_entity_decode", kPassArg0, ScalarType::Str,
                str1(&php_htmlspecialchars_decode)));
  reg.add(model("urlencode", kPassArg0, ScalarType::Str, str1(&php_urlencode)));
  reg.add(model("urldecode", kPassArg0, ScalarType::Str, str1(&php_urldecode)));
  reg.add(model("rawurlencode", kPassArg0, ScalarType::Str, str1(&php_urlencode)));
  reg.add(model("rawurldecode", kPassArg0, ScalarType::Str, str1(&php_urldecode)));
  reg.add(model("base64_encode", kPassArg0, ScalarType::Str, str1(&php_base64_encode)));
  reg.add(model("base64_decode", kPassArg0, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto s = c.concrete_string(0);
    if (!s) return std::nullopt;
    auto decoded = php_base64_decode(*s);
    if (!decoded) return scalar_result(Literal::boolean(false), {});
    return scalar_result(Literal::str(*decoded), c.rule_taint);
  }));
  reg.add(model("addslashes", kPassArg0, ScalarType::Str, str1(&php_addslashes)));
  reg.add(model("stripslashes", kPassArg0, ScalarType::Str, str1(&php_stripslashes)));
  reg.add(model("intval", kClear, ScalarType::Int, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    const Literal* lit = c.concrete(0);
    if (!lit) return std::nullopt;
    return scalar_result(Literal::integer(php_intval(*lit)), {});
  }));
  reg.add(model("floatval", kClear, ScalarType::Float, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    const Literal* lit = c.concrete(0);
    if (!lit) return std::nullopt;
    Literal n = php_to_number(*lit);
    return scalar_result(Literal::real(n.is_int() ? static_cast<double>(n.as_int())
                                                  : n.as_float()),
                         {});
  }));
  reg.add(model("mysql_real_escape_string", kPassArg0, ScalarType::Str,
                str1(&php_mysql_escape)));
  reg.add(model("md5", kClear, ScalarType::Str, nullptr));
  reg.add(model("sha1", kClear, ScalarType::Str, nullptr));
  reg.add(model("escapeshellarg", kPassArg0, ScalarType::Str, nullptr));

  // ---- environment ----
  reg.add(model("chdir", kNone, ScalarType::Bool, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto dir = c.concrete_string(0);
    if (!dir || !c.cwd) return std::nullopt;
    // Lexical resolution; the analyzed tree is virtual.
    *c.cwd = path_join(*c.cwd, *dir);
    return scalar_result(Literal::boolean(true), {});
  }, true));

  reg.add(model("getcwd", kNone, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (!c.cwd) return std::nullopt;
    return scalar_result(Literal::str(*c.cwd), {});
  }));

  reg.add(model("get_include_path", kNone, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (!c.include_path) return std::nullopt;
    std::string out;
    for (std::size_t i = 0; i < c.include_path->size(); ++i) {
      if (i) out += ':';
      out += (*c.include_path)[i];
    }
    return scalar_result(Literal::str(out), {});
  }));

  reg.add(model("set_include_path", kNone, ScalarType::Str, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto arg = c.concrete_string(0);
    if (!arg || !c.include_path) return std::nullopt;
    std::string old;
    for (std::size_t i = 0; i < c.include_path->size(); ++i) {
      if (i) old += ':';
      old += (*c.include_path)[i];
    }
    c.include_path->clear();
    std::string cur;
    for (char ch : *arg + ":") {
      if (ch == ':') {
        if (!cur.empty()) c.include_path->push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    return scalar_result(Literal::str(old), {});
  }, true));

  reg.add(model("define", kNone, ScalarType::Bool, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto name = c.concrete_string(0);
    if (!name || c.args.size() < 2 || !c.set_constant) return std::nullopt;
    c.set_constant(*name, c.args[1]);
    return scalar_result(Literal::boolean(true), {});
  }, true));

  reg.add(model("constant", kPassAll, std::nullopt, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto name = c.concrete_string(0);
    if (!name || !c.get_constant) return std::nullopt;
    if (auto value = c.get_constant(*name)) return *value;
    return std::nullopt;
  }));

  // ---- concrete-execution list ----
  reg.add(model("parse_str", kNone, ScalarType::Null, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    // Single-argument register-into-scope semantics (the modeled legacy form).
    auto query = c.concrete_string(0);
    if (!query || c.args.size() != 1 || !c.set_var) return std::nullopt;
    std::size_t start = 0;
    std::map<std::string, ArrayStruct> arrays;
    std::vector<std::string> array_order;
    while (start <= query->size()) {
      std::size_t amp = query->find('&', start);
      std::string pair = query->substr(
          start, amp == std::string::npos ? std::string::npos : amp - start);
      if (!pair.empty()) {
        std::size_t eq = pair.find('=');
        std::string name = php_urldecode(eq == std::string::npos ? pair : pair.substr(0, eq));
        std::string value = eq == std::string::npos ? "" : php_urldecode(pair.substr(eq + 1));
        if (name.size() > 2 && name.compare(name.size() - 2, 2, "[]") == 0) {
          std::string base = name.substr(0, name.size() - 2);
          if (!arrays.count(base)) array_order.push_back(base);
          arrays[base].append(scalar_result(Literal::str(value), {}));
        } else if (!name.empty()) {
          c.set_var(name, scalar_result(Literal::str(value), {}));
        }
      }
      if (amp == std::string::npos) break;
      start = amp + 1;
    }
    for (const auto& name : array_order) c.set_var(name, AbstractValue(arrays[name]));
    return AbstractValue::null_value();
  }, true));

  reg.add(model("json_decode", kPassArg0, std::nullopt, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    auto s = c.concrete_string(0);
    if (!s) return std::nullopt;
    nlohmann::json parsed = nlohmann::json::parse(*s, nullptr, false);
    if (parsed.is_discarded()) return AbstractValue::null_value();
    return json_to_value(parsed);
  }));

  // ---- predicates ----
  reg.add(model("is_array", kNone, ScalarType::Bool, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (c.args.empty() || c.args[0].is_unknown()) return std::nullopt;
    return scalar_result(Literal::boolean(c.args[0].array() != nullptr), {});
  }));
  reg.add(model("is_string", kNone, ScalarType::Bool, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    if (c.args.empty() || c.args[0].is_unknown()) return std::nullopt;
    const ValueStruct* s = c.args[0].scalar();
    if (s && s->type == ScalarType::UnknownScalar) return std::nullopt;
    return scalar_result(Literal::boolean(s && s->type == ScalarType::Str), {});
  }));
  reg.add(model("is_numeric", kNone, ScalarType::Bool, [](BuiltinCall& c) -> std::optional<AbstractValue> {
    const Literal* lit = c.concrete(0);
    if (!lit) return std::nullopt;
    if (lit->is_int() || lit->is_float()) return scalar_result(Literal::boolean(true), {});
    if (lit->is_string())
      return scalar_result(Literal::boolean(php_is_numeric_string(lit->as_string())), {});
    return scalar_result(Literal::boolean(false), {});
  }));
  // preg_match never executes the regex and never sanitizes its subject.
  reg.add(model("preg_match", kNone, ScalarType::Bool, nullptr));
  reg.add(model("preg_match_all", kNone, ScalarType::Bool, nullptr));

  // ---- path helpers ----
  reg.add(model("dirname", kPassArg0, ScalarType::Str, str1(+[](const std::string& s) {
    std::size_t pos = s.find_last_of('/');
    if (pos == std::string::npos) return std::string(".");
    if (pos == 0) return std::string("/");
    return s.substr(0, pos);
  })));
  reg.add(model("basename", kPassArg0, ScalarType::Str, str1(+[](const std::string& s) {
    std::size_t pos = s.find_last_of('/');
    return pos == std::string::npos ? s : s.substr(pos + 1);
  })));

  return reg;
}

AbstractValue apply_builtin(const BuiltinRegistry& registry, const std::string& name,
                            BuiltinCall& call, bool* unmodeled) {
  const BuiltinModel* model = registry.find(name);
  if (unmodeled) *unmodeled = model == nullptr;

  TaintRule rule = model ? model->rule : TaintRule{TaintRuleKind::PassAll, 0};
  TaintState taint;
  switch (rule.kind) {
    case TaintRuleKind::PassAll:
      for (const auto& arg : call.args) taint = TaintState::join(taint, arg.collect_taint());
      break;
    case TaintRuleKind::PassArg:
      if (rule.arg >= 0 && static_cast<std::size_t>(rule.arg) < call.args.size())
        taint = call.args[static_cast<std::size_t>(rule.arg)].collect_taint();
      break;
    case TaintRuleKind::Clear:
    case TaintRuleKind::None: break;
  }
  call.rule_taint = taint;

  if (model && model->concrete) {
    if (auto result = model->concrete(call)) return *result;
  }

  // Abstract fallback.
  if (model && model->abstract_scalar) {
    ValueStruct out;
    out.type = *model->abstract_scalar;
    out.taint = std::move(taint);
    return AbstractValue(std::move(out));
  }
  return AbstractValue::unknown(std::move(taint));
}

}  // namespace opflow
