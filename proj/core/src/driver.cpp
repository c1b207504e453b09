#include "opflow/driver.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "opflow/cfg.hpp"
#include "opflow/dump.hpp"
#include "opflow/frontend.hpp"
#include "opflow/path_util.hpp"
#include "opflow/version.hpp"

namespace opflow {

namespace {

void merge_units(CorpusLoad& load, std::vector<OpUnit> units,
                 std::vector<ClassMeta> classes, const std::string& origin) {
  for (auto& unit : units) {
    if (unit.kind == UnitKind::FileMain) {
      if (!load.db.files.emplace(unit.name, std::move(unit)).second)
        load.diagnostics.push_back("duplicate file unit " + origin);
    } else {
      std::string key = ascii_lower(unit.name);
      if (!load.db.functions.emplace(key, std::move(unit)).second)
        load.diagnostics.push_back("duplicate function " + key + " in " + origin +
                                   "; first definition wins");
    }
  }
  for (auto& cls : classes) {
    std::string key = ascii_lower(cls.name);
    if (!load.db.classes.emplace(key, std::move(cls)).second)
      load.diagnostics.push_back("duplicate class " + key + " in " + origin +
                                 "; first definition wins");
  }
}

// Inheritance must stay acyclic; cycles are broken at the offending edge so
// lookups terminate.
void check_inheritance(CorpusLoad& load) {
  for (auto& [key, cls] : load.db.classes) {
    (void)key;
    std::set<std::string> seen{ascii_lower(cls.name)};
    ClassMeta* cur = &cls;
    while (cur->parent) {
      std::string parent_key = ascii_lower(*cur->parent);
      if (!seen.insert(parent_key).second) {
        load.diagnostics.push_back("inheritance cycle through class " + cls.name +
                                   "; dropping parent of " + cur->name);
        cur->parent.reset();
        break;
      }
      auto it = load.db.classes.find(parent_key);
      if (it == load.db.classes.end()) break;
      cur = &it->second;
    }
  }
}

void flatten_traits(CorpusLoad& load) {
  for (auto& [key, cls] : load.db.classes) {
    (void)key;
    for (const auto& trait_name : cls.traits) {
      auto it = load.db.classes.find(ascii_lower(trait_name));
      if (it == load.db.classes.end()) {
        load.diagnostics.push_back("class " + cls.name + " uses unknown trait " +
                                   trait_name);
        continue;
      }
      const ClassMeta& trait = it->second;
      for (const auto& [mname, method] : trait.methods) {
        if (cls.methods.count(mname)) continue;
        OpUnit copy = method;
        copy.owner_class = cls.name;
        cls.methods.emplace(mname, std::move(copy));
      }
      for (const auto& [pname, prop] : trait.properties)
        cls.properties.emplace(pname, prop);
    }
  }
}

void load_one(CorpusLoad& load, const std::string& path, const std::string& bytes) {
  bool is_dump = path.size() > 7 && path.compare(path.size() - 7, 7, ".opcode") == 0;
  try {
    if (is_dump) {
      DumpDocument doc = read_dump(bytes);
      merge_units(load, std::move(doc.units), std::move(doc.classes), path);
    } else {
      LoweredFile compiled = compile_source(bytes, path);
      std::vector<OpUnit> units;
      units.push_back(std::move(compiled.main));
      for (auto& fn : compiled.functions) units.push_back(std::move(fn));
      merge_units(load, std::move(units), std::move(compiled.classes), path);
    }
  } catch (const std::exception& e) {
    load.diagnostics.push_back(std::string("failed to load ") + path + ": " + e.what());
    load.failed_files.push_back(path);
  }
}

}  // namespace

CorpusLoad load_sources(const std::map<std::string, std::string>& sources) {
  CorpusLoad load;
  for (const auto& [path, bytes] : sources) load_one(load, path, bytes);
  check_inheritance(load);
  flatten_traits(load);
  return load;
}

CorpusLoad load_paths(const std::vector<std::string>& paths,
                      std::vector<std::string>* missing) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  for (const auto& arg : paths) {
    std::error_code ec;
    fs::file_status status = fs::status(arg, ec);
    if (ec || status.type() == fs::file_type::not_found) {
      if (missing) missing->push_back(arg);
      continue;
    }
    if (fs::is_directory(status)) {
      for (auto it = fs::recursive_directory_iterator(arg, ec);
           !ec && it != fs::recursive_directory_iterator(); ++it) {
        if (!it->is_regular_file()) continue;
        std::string p = it->path().generic_string();
        if (p.ends_with(".php") || p.ends_with(".opcode")) files.push_back(p);
      }
    } else {
      files.push_back(fs::path(arg).generic_string());
    }
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());

  CorpusLoad load;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) {
      if (missing) missing->push_back(file);
      continue;
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    load_one(load, path_normalize(file), buffer.str());
  }
  check_inheritance(load);
  flatten_traits(load);
  return load;
}

namespace {

bool glob_match_impl(const char* p, const char* pe, const char* s, const char* se) {
  while (p != pe) {
    if (*p == '*') {
      bool double_star = p + 1 != pe && p[1] == '*';
      const char* next = p + (double_star ? 2 : 1);
      // Collapse a following '/' after '**' so "**/x" also matches "x".
      if (double_star && next != pe && *next == '/') {
        if (glob_match_impl(next + 1, pe, s, se)) return true;
      }
      for (const char* t = s; t <= se; ++t) {
        if (!double_star && t != s && t[-1] == '/') break;
        if (glob_match_impl(next, pe, t, se)) return true;
      }
      return false;
    }
    if (s == se) return false;
    if (*p == '?') {
      if (*s == '/') return false;
    } else if (*p != *s) {
      return false;
    }
    ++p;
    ++s;
  }
  return s == se;
}

}  // namespace

bool glob_match(const std::string& pattern, const std::string& path) {
  if (glob_match_impl(pattern.data(), pattern.data() + pattern.size(), path.data(),
                      path.data() + path.size()))
    return true;
  // Patterns without '/' also match the basename.
  if (pattern.find('/') == std::string::npos) {
    std::size_t slash = path.find_last_of('/');
    if (slash != std::string::npos) {
      std::string base = path.substr(slash + 1);
      return glob_match_impl(pattern.data(), pattern.data() + pattern.size(), base.data(),
                             base.data() + base.size());
    }
  }
  return false;
}

std::vector<std::string> enumerate_entries(const AnalysisConfig& config,
                                           const ProgramDb& db) {
  std::vector<std::string> entries;
  for (const auto& [path, unit] : db.files) {
    (void)unit;
    if (config.entry_globs.empty()) {
      entries.push_back(path);
      continue;
    }
    for (const auto& glob : config.entry_globs) {
      if (glob_match(glob, path)) {
        entries.push_back(path);
        break;
      }
    }
  }
  std::sort(entries.begin(), entries.end());
  return entries;
}

std::vector<EntryResult> run_entries(const Engine& engine,
                                     const std::vector<std::string>& entries, int jobs) {
  std::vector<EntryResult> results(entries.size());
  if (jobs <= 1 || entries.size() <= 1) {
    for (std::size_t i = 0; i < entries.size(); ++i)
      results[i] = engine.analyze_entry(entries[i]);
    return results;
  }
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= entries.size()) return;
      results[i] = engine.analyze_entry(entries[i]);
    }
  };
  std::vector<std::future<void>> pool;
  int n = std::min<int>(jobs, static_cast<int>(entries.size()));
  for (int i = 0; i < n; ++i) pool.push_back(std::async(std::launch::async, worker));
  for (auto& f : pool) f.get();
  return results;
}

namespace {

int analyze_command(const std::vector<std::string>& paths, AnalysisConfig& config,
                    const std::string& out_file, std::ostream& out, std::ostream& err) {
  std::vector<std::string> missing;
  CorpusLoad load = load_paths(paths, &missing);
  for (const auto& m : missing) err << "error: no such path: " << m << "\n";
  if (!missing.empty()) return 2;
  for (const auto& d : load.diagnostics) err << "warning: " << d << "\n";

  RuleSet rules;
  std::string rules_path = config.rules_file;
  if (rules_path.empty()) {
    if (const char* env = std::getenv("OPFLOW_RULES")) rules_path = env;
  }
  try {
    if (!rules_path.empty()) {
      std::ifstream in(rules_path, std::ios::binary);
      if (!in) {
        err << "error: cannot open rules file: " << rules_path << "\n";
        return 2;
      }
      std::ostringstream buffer;
      buffer << in.rdbuf();
      rules = load_rules_text(buffer.str());
    } else {
      rules = default_rules();
    }
  } catch (const RulesError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  // Failed files that match the entry selection are reported as failed entries.
  std::vector<std::string> failed_entries;
  for (const auto& f : load.failed_files) {
    if (config.entry_globs.empty()) {
      failed_entries.push_back(f);
      continue;
    }
    for (const auto& glob : config.entry_globs)
      if (glob_match(glob, f)) {
        failed_entries.push_back(f);
        break;
      }
  }

  std::vector<std::string> entries = enumerate_entries(config, load.db);
  if (entries.empty() && failed_entries.empty()) {
    err << "error: no entries matched\n";
    return 2;
  }

  if (config.dump_opcodes || config.dump_cfg) {
    for (const auto& [path, unit] : load.db.files) {
      if (config.dump_opcodes) {
        DumpDocument doc;
        doc.units.push_back(unit);
        std::ofstream dump_out(path + ".opcode", std::ios::binary);
        dump_out << write_dump(doc);
      }
      if (config.dump_cfg) {
        std::ofstream dot_out(path + ".cfg.dot", std::ios::binary);
        dot_out << dump_cfg_dot(build_cfg(unit));
      }
    }
  }

  BuiltinRegistry registry = register_minimum_set();
  Engine::Hooks hooks;
  hooks.compile_snippet = [](const std::string& code, const std::string& virtual_path) {
    return compile_source(code, virtual_path);
  };
  Engine engine(load.db, rules, registry, config, hooks);

  std::vector<EntryResult> results = run_entries(engine, entries, config.jobs);
  for (const auto& failed : failed_entries) {
    EntryResult r;
    r.entry = failed;
    r.failed = true;
    r.error = "failed to compile entry";
    results.push_back(std::move(r));
  }

  Report report = Report::assemble(std::move(results), config.timings);
  for (const auto& entry : report.entries)
    for (const auto& log : entry.logs) err << "note: [" << entry.entry << "] " << log << "\n";

  std::string rendered = config.output_format == AnalysisConfig::Format::Json
                             ? report.to_json()
                             : report.to_text();
  if (!out_file.empty()) {
    std::ofstream file_out(out_file, std::ios::binary);
    if (!file_out) {
      err << "error: cannot write " << out_file << "\n";
      return 2;
    }
    file_out << rendered;
  } else {
    out << rendered;
  }

  bool any_failed = false;
  bool any_findings = false;
  for (const auto& entry : report.entries) {
    any_failed = any_failed || entry.failed;
    any_findings = any_findings || !entry.findings.empty();
  }
  if (any_failed) return 3;
  return any_findings ? 1 : 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"opcode-level PHP taint analysis"};
  app.set_version_flag("--version", std::string(kOpflowVersion));

  auto* analyze = app.add_subcommand("analyze", "analyze PHP sources or opcode dumps");
  std::vector<std::string> paths;
  AnalysisConfig config;
  std::string out_file;
  std::string format = "json";

  analyze->add_option("paths", paths, "files or directories")->required();
  analyze->add_option("--rules", config.rules_file, "rules file (or $OPFLOW_RULES)");
  analyze->add_option("--format", format, "json|text")
      ->check(CLI::IsMember({"json", "text"}));
  analyze->add_option("--out", out_file, "write the report here instead of stdout");
  analyze->add_option("--include-path", config.include_path,
                      "include_path directory (repeatable)");
  analyze->add_option("--cwd", config.cwd, "initial working directory for includes");
  analyze->add_option("--max-loop-iterations", config.max_loop_iterations)
      ->check(CLI::PositiveNumber);
  analyze->add_option("--max-call-depth", config.max_call_depth)
      ->check(CLI::PositiveNumber);
  analyze->add_option("--branch-split-budget", config.branch_split_budget)
      ->check(CLI::PositiveNumber);
  analyze->add_option("--entry", config.entry_globs, "entry glob (repeatable)");
  analyze->add_option("--jobs", config.jobs, "concurrent entry analyses")
      ->check(CLI::PositiveNumber);
  analyze->add_flag("--dump-opcodes", config.dump_opcodes,
                    "write .opcode dumps beside sources");
  analyze->add_flag("--dump-cfg", config.dump_cfg, "write .cfg.dot files beside sources");
  analyze->add_flag("--timings", config.timings, "include wall times in the report");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kOpflowVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  if (!analyze->parsed()) {
    err << "error: expected the 'analyze' subcommand\n";
    return 2;
  }
  config.output_format = format == "text" ? AnalysisConfig::Format::Text
                                          : AnalysisConfig::Format::Json;
  return analyze_command(paths, config, out_file, out, err);
}

}  // namespace opflow
