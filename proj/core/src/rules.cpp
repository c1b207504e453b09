#include "opflow/rules.hpp"

#include <sstream>

namespace opflow {

const SanitizerRule* RuleSet::find_sanitizer(const std::string& lower_name) const {
  auto it = sanitizers.find(lower_name);
  return it == sanitizers.end() ? nullptr : &it->second;
}

const std::string* RuleSet::find_decoder_pair(const std::string& lower_name) const {
  auto it = decoders.find(lower_name);
  return it == decoders.end() ? nullptr : &it->second;
}

const std::vector<SinkRule>* RuleSet::find_sinks(const std::string& lower_name) const {
  auto it = sinks.find(lower_name);
  return it == sinks.end() ? nullptr : &it->second;
}

namespace {

void add_sanitizer(RuleSet& rules, const std::string& name, bool all_classes,
                   std::set<VulnClass> classes, std::optional<std::string> decoder,
                   bool reversible) {
  SanitizerRule r;
  r.name = name;
  r.all_classes = all_classes;
  r.classes = std::move(classes);
  r.decoder = decoder;
  r.reversible = reversible;
  rules.sanitizers[name] = r;
  if (decoder) rules.decoders[*decoder] = name;
}

void add_sink(RuleSet& rules, const std::string& name, int pos, VulnClass vuln) {
  rules.sinks[name].push_back({pos, vuln});
}

}  // namespace

RuleSet default_rules() {
  RuleSet rules;
  rules.sources = {"_GET", "_POST", "_FILES", "_COOKIE", "_REQUEST"};

  // Reversible pairs (tracked on the sanitizer stack).
  add_sanitizer(rules, "htmlspecialchars", false, {VulnClass::XSS},
                "htmlspecialchars_decode", true);
  add_sanitizer(rules, "htmlentities", false, {VulnClass::XSS}, "html_entity_decode",
                true);
  add_sanitizer(rules, "urlencode", true, {}, "urldecode", true);
  add_sanitizer(rules, "rawurlencode", true, {}, "rawurldecode", true);
  add_sanitizer(rules, "base64_encode", true, {}, "base64_decode", true);
  add_sanitizer(rules, "addslashes", false, {VulnClass::SQLI}, "stripslashes", true);

  // Irreversible: coercions and digests destroy payloads outright.
  add_sanitizer(rules, "intval", true, {}, std::nullopt, false);
  add_sanitizer(rules, "floatval", true, {}, std::nullopt, false);
  add_sanitizer(rules, "md5", true, {}, std::nullopt, false);
  add_sanitizer(rules, "sha1", true, {}, std::nullopt, false);
  // Irreversible, class-limited.
  add_sanitizer(rules, "escapeshellarg", false, {VulnClass::RCE}, std::nullopt, false);

  // NOTE: mysql_real_escape_string is deliberately NOT a sanitizer. Escaping
  // does not stop numeric-context SQL injection, so flows through it keep
  // reporting; see docs/rules-format.md.

  add_sink(rules, "print", 0, VulnClass::XSS);
  add_sink(rules, "printf", 0, VulnClass::XSS);

  add_sink(rules, "mysql_query", 0, VulnClass::SQLI);
  add_sink(rules, "mysqli_query", 1, VulnClass::SQLI);
  add_sink(rules, "pg_query", 1, VulnClass::SQLI);

  add_sink(rules, "system", 0, VulnClass::RCE);
  add_sink(rules, "exec", 0, VulnClass::RCE);
  add_sink(rules, "shell_exec", 0, VulnClass::RCE);
  add_sink(rules, "passthru", 0, VulnClass::RCE);
  add_sink(rules, "popen", 0, VulnClass::RCE);
  add_sink(rules, "proc_open", 0, VulnClass::RCE);

  add_sink(rules, "unlink", 0, VulnClass::AFD);
  add_sink(rules, "rmdir", 0, VulnClass::AFD);

  add_sink(rules, "move_uploaded_file", 1, VulnClass::UFU);
  add_sink(rules, "copy", 1, VulnClass::UFU);

  add_sink(rules, "file_get_contents", 0, VulnClass::PT);
  add_sink(rules, "fopen", 0, VulnClass::PT);
  add_sink(rules, "file", 0, VulnClass::PT);

  add_sink(rules, "readfile", 0, VulnClass::SDE);
  add_sink(rules, "highlight_file", 0, VulnClass::SDE);
  add_sink(rules, "show_source", 0, VulnClass::SDE);

  return rules;
}

RuleSet load_rules_text(const std::string& text, RuleSet base) {
  RuleSet rules = std::move(base);
  std::set<std::tuple<std::string, int, VulnClass>> seen_sinks;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos) continue;
    std::size_t b = line.find_last_not_of(" \t\r");
    std::string body = line.substr(a, b - a + 1);
    if (body.empty() || body[0] == '#') continue;

    std::istringstream row(body);
    std::string kind;
    row >> kind;

    auto need = [&](bool ok, const std::string& why) {
      if (!ok) throw RulesError(line_no, why);
    };

    if (kind == "sanitizer") {
      std::string name;
      row >> name;
      need(!name.empty(), "sanitizer needs a name");
      SanitizerRule r;
      r.name = ascii_lower(name);
      bool saw_reversible = false;
      std::string attr;
      while (row >> attr) {
        if (attr.rfind("classes=", 0) == 0) {
          std::string list = attr.substr(8);
          if (list == "*") {
            r.all_classes = true;
          } else {
            r.all_classes = false;
            std::size_t start = 0;
            while (start <= list.size()) {
              std::size_t comma = list.find(',', start);
              std::string one = list.substr(
                  start, comma == std::string::npos ? std::string::npos : comma - start);
              auto c = vuln_class_from_name(one);
              need(c.has_value(), "unknown vulnerability class '" + one + "'");
              r.classes.insert(*c);
              if (comma == std::string::npos) break;
              start = comma + 1;
            }
          }
        } else if (attr.rfind("decoder=", 0) == 0) {
          std::string d = attr.substr(8);
          if (d != "-") r.decoder = ascii_lower(d);
        } else if (attr == "reversible=1") {
          r.reversible = true;
          saw_reversible = true;
        } else if (attr == "reversible=0") {
          r.reversible = false;
          saw_reversible = true;
        } else {
          throw RulesError(line_no, "unknown sanitizer attribute '" + attr + "'");
        }
      }
      need(saw_reversible, "sanitizer needs reversible=0|1");
      need(!r.reversible || r.decoder.has_value(),
           "reversible sanitizer must name a decoder");
      if (r.decoder) {
        auto it = rules.decoders.find(*r.decoder);
        need(it == rules.decoders.end() || it->second == r.name,
             "decoder '" + *r.decoder + "' already paired with another sanitizer");
        rules.decoders[*r.decoder] = r.name;
      }
      rules.sanitizers[r.name] = std::move(r);
      continue;
    }

    if (kind == "sink") {
      std::string name, pos_attr, class_attr;
      row >> name >> pos_attr >> class_attr;
      need(!name.empty() && pos_attr.rfind("pos=", 0) == 0 &&
               class_attr.rfind("class=", 0) == 0,
           "sink row: sink <name> pos=<n> class=<CLASS>");
      int pos = 0;
      try {
        pos = std::stoi(pos_attr.substr(4));
      } catch (const std::exception&) {
        throw RulesError(line_no, "bad sink position");
      }
      need(pos >= 0, "sink position must be >= 0");
      auto vuln = vuln_class_from_name(class_attr.substr(6));
      need(vuln.has_value(), "unknown vulnerability class");
      std::string lname = ascii_lower(name);
      if (!seen_sinks.emplace(lname, pos, *vuln).second)
        throw RulesError(line_no, "duplicate sink entry");
      auto& list = rules.sinks[lname];
      SinkRule rule{pos, *vuln};
      bool already = false;
      for (const auto& existing : list) already = already || existing == rule;
      if (!already) list.push_back(rule);
      continue;
    }

    if (kind == "builtin") {
      std::string name, rule_attr;
      row >> name >> rule_attr;
      need(!name.empty() && rule_attr.rfind("rule=", 0) == 0,
           "builtin row: builtin <name> rule=<RULE>");
      std::string spec = rule_attr.substr(5);
      need(spec == "PASS_ALL" || spec == "CLEAR" || spec == "NONE" ||
               spec.rfind("PASS_ARG:", 0) == 0,
           "unknown builtin taint rule '" + spec + "'");
      rules.builtin_overrides[ascii_lower(name)] = spec;
      continue;
    }

    throw RulesError(line_no, "unknown rule kind '" + kind + "'");
  }
  return rules;
}

}  // namespace opflow
