#include "opflow/dump.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace opflow {

namespace {

void append_json_string(std::string& out, const std::string& s) {
  out += '"';
  for (unsigned char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (c < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += static_cast<char>(c);
        }
    }
  }
  out += '"';
}

std::string format_double(double d) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  (void)ec;
  return std::string(buf, p);
}

void append_literal(std::string& out, const Literal& v) {
  if (v.is_null()) {
    out += "null";
  } else if (v.is_int()) {
    out += "i:" + std::to_string(v.as_int());
  } else if (v.is_float()) {
    out += "f:" + format_double(v.as_float());
  } else if (v.is_bool()) {
    out += v.as_bool() ? "b:true" : "b:false";
  } else if (v.is_string()) {
    out += "s:";
    append_json_string(out, v.as_string());
  } else {
    out += "a:{";
    bool first = true;
    for (const auto& [key, value] : v.as_array().items) {
      if (!first) out += ',';
      first = false;
      if (std::holds_alternative<std::int64_t>(key)) {
        out += "i:" + std::to_string(std::get<std::int64_t>(key));
      } else {
        out += "s:";
        append_json_string(out, std::get<std::string>(key));
      }
      out += "=>";
      append_literal(out, value);
    }
    out += '}';
  }
}

// Recursive-descent literal parser over a text span.
struct LiteralParser {
  const std::string& text;
  std::size_t pos = 0;

  [[noreturn]] void fail(const std::string& why) const {
    throw std::runtime_error("literal: " + why + " at offset " + std::to_string(pos));
  }

  bool starts_with(const char* s) const {
    return text.compare(pos, std::strlen(s), s) == 0;
  }

  std::string parse_json_string() {
    if (pos >= text.size() || text[pos] != '"') fail("expected '\"'");
    ++pos;
    std::string out;
    while (pos < text.size()) {
      char c = text[pos++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos >= text.size()) fail("dangling escape");
      char e = text[pos++];
      switch (e) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case '/': out += '/'; break;
        case 'n': out += '\n'; break;
        case 'r': out += '\r'; break;
        case 't': out += '\t'; break;
        case 'b': out += '\b'; break;
        case 'f': out += '\f'; break;
        case 'u': {
          if (pos + 4 > text.size()) fail("short \\u escape");
          unsigned code = 0;
          for (int i = 0; i < 4; ++i) {
            char h = text[pos++];
            code <<= 4;
            if (h >= '0' && h <= '9') code |= static_cast<unsigned>(h - '0');
            else if (h >= 'a' && h <= 'f') code |= static_cast<unsigned>(h - 'a' + 10);
            else if (h >= 'A' && h <= 'F') code |= static_cast<unsigned>(h - 'A' + 10);
            else fail("bad hex digit in \\u escape");
          }
          if (code < 0x80) {
            out += static_cast<char>(code);
          } else if (code < 0x800) {
            out += static_cast<char>(0xC0 | (code >> 6));
            out += static_cast<char>(0x80 | (code & 0x3F));
          } else {
            out += static_cast<char>(0xE0 | (code >> 12));
            out += static_cast<char>(0x80 | ((code >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (code & 0x3F));
          }
          break;
        }
        default: fail("unknown escape");
      }
    }
    fail("unterminated string");
  }

  std::int64_t parse_int() {
    std::size_t start = pos;
    if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) ++pos;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
    if (pos == start) fail("expected integer");
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(text.data() + start, text.data() + pos, out);
    if (ec != std::errc() || p != text.data() + pos) fail("bad integer");
    return out;
  }

  Literal parse() {
    if (starts_with("null")) {
      pos += 4;
      return Literal::null();
    }
    if (starts_with("i:")) {
      pos += 2;
      return Literal::integer(parse_int());
    }
    if (starts_with("f:")) {
      pos += 2;
      std::size_t start = pos;
      while (pos < text.size() && (std::isalnum(static_cast<unsigned char>(text[pos])) ||
                                   text[pos] == '.' || text[pos] == '-' || text[pos] == '+'))
        ++pos;
      if (pos == start) fail("expected float");
      try {
        return Literal::real(std::stod(text.substr(start, pos - start)));
      } catch (const std::exception&) {
        fail("bad float");
      }
    }
    if (starts_with("b:true")) {
      pos += 6;
      return Literal::boolean(true);
    }
    if (starts_with("b:false")) {
      pos += 7;
      return Literal::boolean(false);
    }
    if (starts_with("s:")) {
      pos += 2;
      return Literal::str(parse_json_string());
    }
    if (starts_with("a:{")) {
      pos += 3;
      Literal::Array arr;
      if (pos < text.size() && text[pos] == '}') {
        ++pos;
        return Literal::array(std::move(arr));
      }
      while (true) {
        ArrayKey key;
        if (starts_with("i:")) {
          pos += 2;
          key = parse_int();
        } else if (starts_with("s:")) {
          pos += 2;
          key = parse_json_string();
        } else {
          fail("expected array key");
        }
        if (!starts_with("=>")) fail("expected '=>'");
        pos += 2;
        arr.items.emplace_back(std::move(key), parse());
        if (pos < text.size() && text[pos] == ',') {
          ++pos;
          continue;
        }
        if (pos < text.size() && text[pos] == '}') {
          ++pos;
          return Literal::array(std::move(arr));
        }
        fail("expected ',' or '}'");
      }
    }
    fail("unknown literal form");
  }
};

std::string operand_to_text(const Operand& o) {
  switch (o.kind) {
    case Operand::Kind::Unused: return "-";
    case Operand::Kind::CompiledVar: return "CV($" + o.name + ")";
    case Operand::Kind::Temp: return "T" + std::to_string(o.index);
    case Operand::Kind::Var: return "V" + std::to_string(o.index);
    case Operand::Kind::JumpTarget: return "->%" + std::to_string(o.index);
    case Operand::Kind::Constant: {
      std::string out = "C(";
      append_literal(out, o.literal);
      out += ')';
      return out;
    }
  }
  return "-";
}

// Splits a row into fields; C(...) fields may contain spaces inside quotes.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t start = i;
    int depth = 0;
    bool in_string = false;
    for (; i < line.size(); ++i) {
      char c = line[i];
      if (in_string) {
        if (c == '\\') ++i;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '(' || c == '{') ++depth;
      else if (c == ')' || c == '}') --depth;
      else if (std::isspace(static_cast<unsigned char>(c)) && depth == 0) break;
    }
    fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

Operand operand_from_text(const std::string& text, std::size_t line_no) {
  auto fail = [&](const std::string& why) -> Operand {
    throw DumpError(line_no, "malformed operand '" + text + "': " + why);
  };
  if (text == "-") return Operand::unused();
  if (text.rfind("CV($", 0) == 0) {
    if (text.back() != ')' || text.size() < 6) return fail("bad CV form");
    std::string name = text.substr(4, text.size() - 5);
    try {
      return Operand::cv(name);
    } catch (const std::invalid_argument& e) {
      return fail(e.what());
    }
  }
  auto parse_index = [&](std::size_t offset) -> std::uint32_t {
    std::uint32_t out = 0;
    auto [p, ec] = std::from_chars(text.data() + offset, text.data() + text.size(), out);
    if (ec != std::errc() || p != text.data() + text.size()) fail("bad index");
    return out;
  };
  if (text[0] == 'T' && text.size() > 1) return Operand::temp(parse_index(1));
  if (text[0] == 'V' && text.size() > 1) return Operand::var(parse_index(1));
  if (text.rfind("->%", 0) == 0) return Operand::jump(parse_index(3));
  if (text.rfind("C(", 0) == 0 && text.back() == ')') {
    std::string inner = text.substr(2, text.size() - 3);
    try {
      LiteralParser p{inner};
      Literal lit = p.parse();
      if (p.pos != inner.size()) throw std::runtime_error("trailing literal bytes");
      return Operand::constant(std::move(lit));
    } catch (const std::exception& e) {
      return fail(e.what());
    }
  }
  return fail("unknown operand form");
}

void write_unit(std::string& out, const OpUnit& unit) {
  out += "== unit ";
  out += unit_kind_name(unit.kind);
  out += ' ';
  if (unit.kind == UnitKind::Method && unit.owner_class)
    out += *unit.owner_class + "::" + unit.name;
  else
    out += unit.name;
  out += '\n';
  if (!unit.declared_in.empty() && unit.declared_in != unit.name)
    out += "file " + unit.declared_in + '\n';
  for (const auto& p : unit.params) {
    out += "param " + p.name + " ref=" + (p.is_ref ? "1" : "0") +
           " variadic=" + (p.is_variadic ? "1" : "0");
    if (p.default_value) {
      out += " default=";
      append_literal(out, *p.default_value);
    }
    out += '\n';
  }
  for (const auto& [name, value] : unit.statics) {
    out += "static " + name + " ";
    append_literal(out, value);
    out += '\n';
  }
  for (std::size_t i = 0; i < unit.oplines.size(); ++i) {
    const Opline& op = unit.oplines[i];
    out += std::to_string(i) + "  " + std::to_string(op.source_line) + "  " +
           opcode_name(op.opcode) + "  " + operand_to_text(op.op1) + "  " +
           operand_to_text(op.op2) + "  " + operand_to_text(op.result) + "  " +
           std::to_string(op.extended_value) + '\n';
  }
}

}  // namespace

std::string literal_to_text(const Literal& v) {
  std::string out;
  append_literal(out, v);
  return out;
}

Literal literal_from_text(const std::string& text) {
  LiteralParser p{text};
  Literal lit = p.parse();
  if (p.pos != text.size()) throw std::runtime_error("trailing bytes after literal");
  return lit;
}

std::string write_dump(const DumpDocument& doc) {
  std::string out = kDumpVersionLine;
  out += '\n';
  for (const auto& unit : doc.units) write_unit(out, unit);
  for (const auto& cls : doc.classes) {
    out += "== class " + cls.name + " extends " + (cls.parent ? *cls.parent : "-") + '\n';
    for (const auto& [name, prop] : cls.properties) {
      out += "prop " + name + " static=" + (prop.is_static ? "1" : "0") + " ";
      append_literal(out, prop.default_value);
      out += '\n';
    }
    for (const auto& t : cls.traits) out += "trait " + t + '\n';
    for (const auto& [mname, method] : cls.methods) {
      (void)mname;
      write_unit(out, method);
    }
  }
  return out;
}

namespace {

struct Reader {
  std::vector<std::string> lines;
  DumpDocument doc;
  OpUnit* current_unit = nullptr;
  ClassMeta* current_class = nullptr;
  std::vector<std::pair<OpUnit, std::size_t>> pending_methods;  // + header line

  void finish_unit(std::size_t line_no) {
    if (!current_unit) return;
    const std::size_t n = current_unit->oplines.size();
    for (std::size_t i = 0; i < n; ++i) {
      for (const Operand* o :
           {&current_unit->oplines[i].op1, &current_unit->oplines[i].op2,
            &current_unit->oplines[i].result}) {
        if (o->kind == Operand::Kind::JumpTarget && o->index >= n)
          throw DumpError(line_no, "dangling jump target");
      }
    }
  }
};

}  // namespace

DumpDocument read_dump(const std::string& bytes) {
  Reader r;
  std::size_t start = 0;
  while (start <= bytes.size()) {
    std::size_t end = bytes.find('\n', start);
    if (end == std::string::npos) {
      r.lines.push_back(bytes.substr(start));
      break;
    }
    r.lines.push_back(bytes.substr(start, end - start));
    start = end + 1;
  }
  while (!r.lines.empty() && r.lines.back().empty()) r.lines.pop_back();
  if (r.lines.empty()) throw DumpError(1, "empty dump");

  auto trim = [](const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return std::string();
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
  };

  if (trim(r.lines[0]) != kDumpVersionLine)
    throw DumpError(1, "version mismatch: expected '" + std::string(kDumpVersionLine) + "'");

  for (std::size_t li = 1; li < r.lines.size(); ++li) {
    const std::size_t line_no = li + 1;
    std::string line = trim(r.lines[li]);
    if (line.empty() || line[0] == '#') continue;

    if (line.rfind("== unit ", 0) == 0) {
      r.finish_unit(line_no);
      std::string rest = trim(line.substr(8));
      std::size_t sp = rest.find(' ');
      if (sp == std::string::npos) throw DumpError(line_no, "unit header needs kind and name");
      auto kind = unit_kind_from_name(rest.substr(0, sp));
      if (!kind) throw DumpError(line_no, "unknown unit kind");
      std::string name = trim(rest.substr(sp + 1));
      if (name.empty()) throw DumpError(line_no, "unit name empty");
      OpUnit unit;
      unit.kind = *kind;
      if (*kind == UnitKind::Method) {
        std::size_t sep = name.find("::");
        if (sep == std::string::npos)
          throw DumpError(line_no, "method unit needs Class::name");
        unit.owner_class = name.substr(0, sep);
        unit.name = name.substr(sep + 2);
        r.pending_methods.emplace_back(std::move(unit), line_no);
        r.current_unit = &r.pending_methods.back().first;
      } else {
        unit.name = std::move(name);
        r.doc.units.push_back(std::move(unit));
        r.current_unit = &r.doc.units.back();
      }
      r.current_class = nullptr;
      continue;
    }

    if (line.rfind("== class ", 0) == 0) {
      r.finish_unit(line_no);
      r.current_unit = nullptr;
      std::string rest = trim(line.substr(9));
      std::size_t kw = rest.find(" extends ");
      if (kw == std::string::npos) throw DumpError(line_no, "class header needs 'extends'");
      ClassMeta cls;
      cls.name = trim(rest.substr(0, kw));
      std::string parent = trim(rest.substr(kw + 9));
      if (cls.name.empty() || parent.empty())
        throw DumpError(line_no, "class header malformed");
      if (parent != "-") cls.parent = parent;
      r.doc.classes.push_back(std::move(cls));
      r.current_class = &r.doc.classes.back();
      continue;
    }

    std::vector<std::string> fields = split_fields(line);
    if (fields.empty()) continue;

    if (fields[0] == "file") {
      if (!r.current_unit) throw DumpError(line_no, "file attribute outside unit");
      if (fields.size() != 2) throw DumpError(line_no, "file row malformed");
      r.current_unit->declared_in = fields[1];
      continue;
    }

    if (fields[0] == "param") {
      if (!r.current_unit) throw DumpError(line_no, "param outside unit");
      if (fields.size() < 4) throw DumpError(line_no, "param row malformed");
      ParamMeta p;
      p.name = fields[1];
      for (std::size_t i = 2; i < fields.size(); ++i) {
        const std::string& f = fields[i];
        if (f == "ref=0") p.is_ref = false;
        else if (f == "ref=1") p.is_ref = true;
        else if (f == "variadic=0") p.is_variadic = false;
        else if (f == "variadic=1") p.is_variadic = true;
        else if (f.rfind("default=", 0) == 0) {
          try {
            p.default_value = literal_from_text(f.substr(8));
          } catch (const std::exception& e) {
            throw DumpError(line_no, e.what());
          }
        } else {
          throw DumpError(line_no, "unknown param attribute '" + f + "'");
        }
      }
      r.current_unit->params.push_back(std::move(p));
      continue;
    }

    if (fields[0] == "static") {
      if (!r.current_unit) throw DumpError(line_no, "static outside unit");
      if (fields.size() != 3) throw DumpError(line_no, "static row malformed");
      try {
        r.current_unit->statics[fields[1]] = literal_from_text(fields[2]);
      } catch (const std::exception& e) {
        throw DumpError(line_no, e.what());
      }
      continue;
    }

    if (fields[0] == "prop") {
      if (!r.current_class) throw DumpError(line_no, "prop outside class");
      if (fields.size() != 4) throw DumpError(line_no, "prop row malformed");
      PropMeta prop;
      if (fields[2] == "static=1") prop.is_static = true;
      else if (fields[2] != "static=0") throw DumpError(line_no, "prop row malformed");
      try {
        prop.default_value = literal_from_text(fields[3]);
      } catch (const std::exception& e) {
        throw DumpError(line_no, e.what());
      }
      r.current_class->properties[fields[1]] = std::move(prop);
      continue;
    }

    if (fields[0] == "trait") {
      if (!r.current_class) throw DumpError(line_no, "trait outside class");
      if (fields.size() != 2) throw DumpError(line_no, "trait row malformed");
      r.current_class->traits.push_back(fields[1]);
      continue;
    }

    // Opline row: <index> <line> <OPCODE> <op1> <op2> <result> <ext>
    if (!r.current_unit) throw DumpError(line_no, "opline outside unit");
    if (fields.size() != 7) throw DumpError(line_no, "opline row needs 7 fields");
    auto parse_num = [&](const std::string& f, const char* what) -> std::int64_t {
      std::int64_t out = 0;
      auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), out);
      if (ec != std::errc() || p != f.data() + f.size())
        throw DumpError(line_no, std::string("bad ") + what);
      return out;
    };
    std::int64_t index = parse_num(fields[0], "opline index");
    if (index != static_cast<std::int64_t>(r.current_unit->oplines.size()))
      throw DumpError(line_no, "opline index out of sequence");
    std::int64_t src_line = parse_num(fields[1], "source line");
    if (src_line <= 0) throw DumpError(line_no, "source line must be positive");
    auto kind = opcode_from_name(fields[2]);
    if (!kind) throw DumpError(line_no, "unknown opcode mnemonic '" + fields[2] + "'");
    Operand op1 = operand_from_text(fields[3], line_no);
    Operand op2 = operand_from_text(fields[4], line_no);
    Operand result = operand_from_text(fields[5], line_no);
    std::int64_t ext = parse_num(fields[6], "extended value");
    try {
      r.current_unit->oplines.push_back(make_opline(
          *kind, std::move(op1), std::move(op2), std::move(result), ext,
          static_cast<std::uint32_t>(src_line)));
    } catch (const std::invalid_argument& e) {
      throw DumpError(line_no, e.what());
    }
  }
  r.finish_unit(r.lines.size());

  for (auto& [method, line_no] : r.pending_methods) {
    ClassMeta* owner = nullptr;
    for (auto& cls : r.doc.classes)
      if (cls.name == *method.owner_class) owner = &cls;
    if (!owner) throw DumpError(line_no, "method unit for unknown class");
    owner->methods[ascii_lower(method.name)] = std::move(method);
  }
  return r.doc;
}

}  // namespace opflow
