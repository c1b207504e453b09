#include "opflow/engine.hpp"

#include <algorithm>
#include <cassert>
#include <chrono>
#include <deque>
#include <map>
#include <set>
#include <variant>

#include "opflow/cfg.hpp"
#include "opflow/dump.hpp"
#include "opflow/path_util.hpp"
#include "opflow/scope.hpp"

namespace opflow {

namespace {

// ---------- per-path state ----------

// Lazily-materialized superglobal handle; lets $_GET['x'] mint a label whose
// access path is the concrete key.
struct SgRef {
  std::string name;  // _GET, _SERVER, ...
  bool taint_source = false;
  SourceKind kind = SourceKind::Get;
  std::uint32_t line = 0;

  bool operator==(const SgRef&) const = default;
};

using TempVal = std::variant<AbstractValue, SgRef>;

struct Place {
  enum class Base : std::uint8_t { Var, Superglobal, AllLocals };
  Base base = Base::Var;
  std::string name;
  std::vector<PathStep> steps;

  bool operator==(const Place& other) const {
    if (base != other.base || name != other.name || steps.size() != other.steps.size())
      return false;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      const PathStep& a = steps[i];
      const PathStep& b = other.steps[i];
      if (a.kind != b.kind || a.key != b.key || a.prop != b.prop) return false;
    }
    return true;
  }
};

struct IterState {
  bool concrete = true;
  std::vector<std::pair<ArrayKey, AbstractValue>> items;
  std::size_t pos = 0;
  AbstractValue summary;  // joined element value for non-concrete iteration
  TaintState taint;       // source taint (tainted superglobal arrays)

  bool operator==(const IterState&) const = default;
};

using VarSlot = std::variant<Place, IterState>;

struct PendingCall {
  enum class Kind : std::uint8_t { Function, Dynamic, Method, StaticMethod, Ctor };
  Kind kind = Kind::Function;
  std::string name;        // static callee / method name
  std::string class_name;  // StaticMethod / Ctor
  AbstractValue callee_value;   // Dynamic callee, Method receiver, Ctor dyn class
  AbstractValue name_value;     // dynamic method name value
  bool name_dynamic = false;
  bool class_dynamic = false;
  std::optional<std::string> receiver_cv;
  std::uint32_t line = 0;

  struct ArgV {
    AbstractValue value;
    std::optional<std::string> byref_cv;
    bool unpack = false;
    bool operator==(const ArgV&) const = default;
  };
  std::vector<ArgV> args;

  bool operator==(const PendingCall&) const = default;
};

// Everything a callee can observe or mutate besides its own locals.
struct PathEnv {
  Scope globals;
  std::map<std::string, Scope> statics;  // unit name -> static variables
  std::map<std::string, AbstractValue> constants;
  std::string cwd;
  std::vector<std::string> include_path;
  std::set<std::string> included_once;

  bool operator==(const PathEnv&) const = default;
};

Scope join_scopes(const Scope& a, const Scope& b) {
  Scope out;
  out.locals = a.locals;
  for (const auto& [name, value] : b.locals) {
    auto it = out.locals.find(name);
    if (it == out.locals.end()) out.locals.emplace(name, value);
    else it->second = join_values(it->second, value);
  }
  out.global_names = a.global_names;
  out.global_names.insert(b.global_names.begin(), b.global_names.end());
  out.static_names = a.static_names;
  out.static_names.insert(b.static_names.begin(), b.static_names.end());
  return out;
}

PathEnv join_envs(const PathEnv& a, const PathEnv& b) {
  PathEnv out;
  out.globals = join_scopes(a.globals, b.globals);
  out.statics = a.statics;
  for (const auto& [unit, scope] : b.statics) {
    auto it = out.statics.find(unit);
    if (it == out.statics.end()) out.statics.emplace(unit, scope);
    else it->second = join_scopes(it->second, scope);
  }
  out.constants = a.constants;
  for (const auto& [name, value] : b.constants) {
    auto it = out.constants.find(name);
    if (it == out.constants.end()) out.constants.emplace(name, value);
    else it->second = join_values(it->second, value);
  }
  out.cwd = a.cwd;  // diverging cwd across joined paths: keep the first path's
  out.include_path = a.include_path;
  if (a.include_path != b.include_path) {
    for (const auto& dir : b.include_path)
      if (std::find(out.include_path.begin(), out.include_path.end(), dir) ==
          out.include_path.end())
        out.include_path.push_back(dir);
  }
  out.included_once = a.included_once;
  out.included_once.insert(b.included_once.begin(), b.included_once.end());
  return out;
}

TempVal join_temp(const TempVal& a, const TempVal& b);

AbstractValue materialize_sg(const SgRef& ref, const std::string& file,
                             std::uint32_t line, const std::string& access_path) {
  if (!ref.taint_source) return AbstractValue::unknown();
  TaintState taint;
  TaintLabel label;
  label.kind = ref.kind;
  label.file = file;
  label.line = line;
  label.access_path = access_path;
  Hop origin{file, line,
             "tainted by $" + ref.name +
                 (access_path == "*" ? "" : "['" + access_path + "']")};
  taint.add_label(std::move(label), std::move(origin));
  return AbstractValue::unknown(std::move(taint));
}

TempVal join_temp(const TempVal& a, const TempVal& b) {
  if (a == b) return a;
  const AbstractValue* va = std::get_if<AbstractValue>(&a);
  const AbstractValue* vb = std::get_if<AbstractValue>(&b);
  if (va && vb) return join_values(*va, *vb);
  // SgRef vs value (or differing refs): collapse conservatively.
  auto widen = [](const TempVal& t) -> AbstractValue {
    if (const auto* v = std::get_if<AbstractValue>(&t)) return *v;
    const SgRef& ref = std::get<SgRef>(t);
    return materialize_sg(ref, "", ref.line, "*");
  };
  return join_values(widen(a), widen(b));
}

IterState join_iters(const IterState& a, const IterState& b) {
  if (a == b) return a;
  IterState out;
  out.concrete = false;
  AbstractValue summary = AbstractValue::null_value();
  auto fold = [&summary](const IterState& it) {
    if (it.concrete) {
      for (const auto& [key, value] : it.items) {
        (void)key;
        summary = join_values(summary, value);
      }
    } else {
      summary = join_values(summary, it.summary);
    }
  };
  fold(a);
  fold(b);
  out.summary = std::move(summary);
  out.taint = TaintState::join(a.taint, b.taint);
  return out;
}

// Loop-acc snapshot: the joinable part of a path state.
struct Snapshot {
  PathEnv env;
  Scope vars;
  std::map<std::uint32_t, TempVal> temps;
  std::map<std::uint32_t, VarSlot> var_slots;

  bool operator==(const Snapshot&) const = default;
};

Snapshot join_snapshots(const Snapshot& a, const Snapshot& b) {
  Snapshot out;
  out.env = join_envs(a.env, b.env);
  out.vars = join_scopes(a.vars, b.vars);
  for (const auto& [idx, tv] : a.temps) {
    auto it = b.temps.find(idx);
    if (it != b.temps.end()) out.temps.emplace(idx, join_temp(tv, it->second));
  }
  for (const auto& [idx, slot] : a.var_slots) {
    auto it = b.var_slots.find(idx);
    if (it == b.var_slots.end()) continue;
    const Place* pa = std::get_if<Place>(&slot);
    const Place* pb = std::get_if<Place>(&it->second);
    if (pa && pb) {
      if (*pa == *pb) out.var_slots.emplace(idx, *pa);
      continue;  // diverging places are re-established before use
    }
    const IterState* ia = std::get_if<IterState>(&slot);
    const IterState* ib = std::get_if<IterState>(&it->second);
    if (ia && ib) out.var_slots.emplace(idx, join_iters(*ia, *ib));
  }
  return out;
}

struct ExecState {
  int block = 0;
  PathEnv env;
  Scope vars;
  std::map<std::uint32_t, TempVal> temps;
  std::map<std::uint32_t, VarSlot> var_slots;
  std::vector<PendingCall> calls;
  std::map<int, int> visits;
  std::map<int, Snapshot> loop_acc;
};

// ---------- serialization for memo keys ----------

void ser_taint(const TaintState& t, std::string& out) {
  out += "t{";
  for (const auto& [label, hops] : t.labels) {
    (void)hops;
    out += source_kind_name(label.kind);
    out += ':' + label.file + ':' + std::to_string(label.line) + ':' +
           label.access_path + ';';
  }
  out += '|';
  for (const auto& s : t.san_stack) out += s + ',';
  out += '|';
  for (VulnClass c : t.cleared) out += vuln_class_name(c);
  out += '}';
}

void ser_value(const AbstractValue& v, std::string& out);

void ser_scope(const Scope& s, std::string& out) {
  out += "S{";
  for (const auto& [name, value] : s.locals) {
    out += name + '=';
    ser_value(value, out);
  }
  out += '|';
  for (const auto& n : s.global_names) out += n + ',';
  out += '|';
  for (const auto& n : s.static_names) out += n + ',';
  out += '}';
}

void ser_value(const AbstractValue& v, std::string& out) {
  if (const auto* s = v.scalar()) {
    out += 's';
    out += static_cast<char>('0' + static_cast<int>(s->type));
    if (s->concrete) out += literal_to_text(*s->concrete);
    ser_taint(s->taint, out);
    return;
  }
  if (const auto* a = v.array()) {
    out += "a[";
    for (const auto& [key, value] : a->elements) {
      out += array_key_to_string(key) + "=>";
      ser_value(value, out);
      out += ',';
    }
    out += ']';
    out += a->next_index_valid ? 'v' : 'i';
    out += std::to_string(a->next_index);
    if (a->default_element) {
      out += 'D';
      ser_value(*a->default_element, out);
    }
    return;
  }
  if (const auto* o = v.object()) {
    out += "o<" + o->class_name + ">{";
    for (const auto& [name, value] : o->properties) {
      out += name + '=';
      ser_value(value, out);
      out += ',';
    }
    out += '}';
    return;
  }
  out += 'u';
  ser_taint(v.unknown_struct()->taint, out);
}

void ser_env(const PathEnv& env, std::string& out) {
  ser_scope(env.globals, out);
  for (const auto& [unit, scope] : env.statics) {
    out += "st:" + unit;
    ser_scope(scope, out);
  }
  for (const auto& [name, value] : env.constants) {
    out += "c:" + name + '=';
    ser_value(value, out);
  }
  out += "cwd:" + env.cwd + ";ip:";
  for (const auto& d : env.include_path) out += d + ',';
  out += ";once:";
  for (const auto& f : env.included_once) out += f + ',';
}

// ---------- the per-entry runner ----------

struct CallArgs {
  std::vector<AbstractValue> values;
  std::vector<std::optional<std::string>> byref_cvs;  // sender CV per position
  bool tail_unknown = false;
  TaintState tail_taint;
};

struct UnitOutcome {
  PathEnv env;
  Scope vars;
  AbstractValue ret;
  bool any_return = false;  // false: every path exited the script
};

enum class Terminal : std::uint8_t { None, Returned, Exited };

struct Runner {
  const ProgramDb& db;
  const RuleSet& rules;
  const BuiltinRegistry& builtins;
  const AnalysisConfig& config;
  const Engine::Hooks& hooks;
  std::string entry_file;

  std::set<Finding> findings;
  std::vector<std::string> logs;
  std::set<std::string> seen_logs;
  std::uint64_t steps = 0;
  std::uint64_t opline_steps = 0;
  int call_depth = 0;
  std::map<const OpUnit*, Cfg> cfgs;
  std::vector<std::unique_ptr<LoweredFile>> eval_keepalive;
  std::map<std::pair<const OpUnit*, std::string>, UnitOutcome> memo;
  std::set<std::pair<const OpUnit*, std::string>> in_progress;
  std::map<std::string, TaintRule> overrides;

  void log(const std::string& message) {
    if (seen_logs.insert(message).second) logs.push_back(message);
  }

  const Cfg& cfg_for(const OpUnit& unit) {
    auto it = cfgs.find(&unit);
    if (it != cfgs.end()) return it->second;
    return cfgs.emplace(&unit, build_cfg(unit)).first->second;
  }

  void bump_steps() {
    if (++steps > config.max_steps_per_entry)
      throw AnalysisError("analysis budget exhausted for entry " + entry_file);
  }

  // ---- variable access through global/static bindings ----

  AbstractValue read_var(ExecState& st, const OpUnit& unit, const std::string& name) {
    if (current_top_scope) {
      auto it = st.env.globals.locals.find(name);
      return it == st.env.globals.locals.end() ? AbstractValue::null_value() : it->second;
    }
    if (st.vars.global_names.count(name)) {
      auto it = st.env.globals.locals.find(name);
      return it == st.env.globals.locals.end() ? AbstractValue::null_value() : it->second;
    }
    if (st.vars.static_names.count(name)) {
      auto& statics = st.env.statics[unit.name];
      auto it = statics.locals.find(name);
      return it == statics.locals.end() ? AbstractValue::null_value() : it->second;
    }
    auto it = st.vars.locals.find(name);
    return it == st.vars.locals.end() ? AbstractValue::null_value() : it->second;
  }

  std::map<std::string, AbstractValue>& var_map(ExecState& st, const OpUnit& unit,
                                                const std::string& name) {
    if (current_top_scope) return st.env.globals.locals;
    if (st.vars.global_names.count(name)) return st.env.globals.locals;
    if (st.vars.static_names.count(name)) return st.env.statics[unit.name].locals;
    return st.vars.locals;
  }

  void write_var(ExecState& st, const OpUnit& unit, const std::string& name,
                 AbstractValue value) {
    var_map(st, unit, name)[name] = std::move(value);
  }

  // ---- operand evaluation ----

  static std::optional<AbstractValue> prop_default_for(const ProgramDb& db,
                                                       const std::string& class_name,
                                                       const std::string& prop) {
    const ClassMeta* cls = db.find_class(class_name);
    int hops = 0;
    while (cls && hops++ < 64) {
      auto it = cls->properties.find(prop);
      if (it != cls->properties.end())
        return AbstractValue::from_literal(it->second.default_value);
      cls = cls->parent ? db.find_class(*cls->parent) : nullptr;
    }
    return std::nullopt;
  }

  static std::optional<AbstractValue> prop_default_tramp(const void* ctx,
                                                         const std::string& class_name,
                                                         const std::string& prop) {
    return prop_default_for(*static_cast<const ProgramDb*>(ctx), class_name, prop);
  }

  AbstractValue read_place(ExecState& st, const OpUnit& unit, const Place& place) {
    switch (place.base) {
      case Place::Base::Var: {
        AbstractValue base = read_var(st, unit, place.name);
        return read_value_path(base, place.steps, &db, &prop_default_tramp);
      }
      case Place::Base::Superglobal: {
        SgRef ref = sg_ref(place.name, 0);
        AbstractValue base = materialize_sg(ref, unit.source_file(), 0, "*");
        return read_value_path(base, place.steps, &db, &prop_default_tramp);
      }
      case Place::Base::AllLocals: {
        TaintState acc;
        for (const auto& [name, value] :
             (current_top_scope ? st.env.globals.locals : st.vars.locals)) {
          (void)name;
          acc = TaintState::join(acc, value.collect_taint());
        }
        return AbstractValue::unknown(std::move(acc));
      }
    }
    return AbstractValue::null_value();
  }

  void write_place(ExecState& st, const OpUnit& unit, const Place& place,
                   AbstractValue value) {
    switch (place.base) {
      case Place::Base::Var: {
        auto& map = var_map(st, unit, place.name);
        auto [it, inserted] = map.try_emplace(place.name, AbstractValue::null_value());
        (void)inserted;
        write_value_path(it->second, place.steps, std::move(value));
        return;
      }
      case Place::Base::Superglobal:
        log("write to superglobal $" + place.name + " ignored");
        return;
      case Place::Base::AllLocals:
        // Dynamic variable name: conservatively join into every local.
        for (auto& [name, local] :
             (current_top_scope ? st.env.globals.locals : st.vars.locals)) {
          (void)name;
          write_value_path(local, place.steps, value, /*weak=*/true);
        }
        return;
    }
  }

  static SgRef sg_ref(const std::string& name, std::uint32_t line) {
    SgRef ref;
    ref.name = name;
    ref.line = line;
    if (name == "_GET") { ref.taint_source = true; ref.kind = SourceKind::Get; }
    else if (name == "_POST") { ref.taint_source = true; ref.kind = SourceKind::Post; }
    else if (name == "_FILES") { ref.taint_source = true; ref.kind = SourceKind::Files; }
    else if (name == "_COOKIE") { ref.taint_source = true; ref.kind = SourceKind::Cookie; }
    else if (name == "_REQUEST") { ref.taint_source = true; ref.kind = SourceKind::Request; }
    return ref;
  }

  AbstractValue value_of(ExecState& st, const OpUnit& unit, const Operand& op,
                         std::uint32_t line) {
    switch (op.kind) {
      case Operand::Kind::Constant: return AbstractValue::from_literal(op.literal);
      case Operand::Kind::CompiledVar: return read_var(st, unit, op.name);
      case Operand::Kind::Temp: {
        auto it = st.temps.find(op.index);
        if (it == st.temps.end()) return AbstractValue::null_value();
        if (const auto* v = std::get_if<AbstractValue>(&it->second)) return *v;
        const SgRef& ref = std::get<SgRef>(it->second);
        return materialize_sg(ref, unit.source_file(), ref.line ? ref.line : line, "*");
      }
      case Operand::Kind::Var: {
        auto it = st.var_slots.find(op.index);
        if (it == st.var_slots.end()) return AbstractValue::null_value();
        if (const auto* place = std::get_if<Place>(&it->second))
          return read_place(st, unit, *place);
        return AbstractValue::null_value();
      }
      default: return AbstractValue::null_value();
    }
  }

  const SgRef* sg_of(ExecState& st, const Operand& op) {
    if (op.kind != Operand::Kind::Temp) return nullptr;
    auto it = st.temps.find(op.index);
    if (it == st.temps.end()) return nullptr;
    return std::get_if<SgRef>(&it->second);
  }

  // Taint that can reach a sink through this value when coerced to a string.
  static TaintState sink_taint(const AbstractValue& v) {
    if (const auto* s = v.scalar()) return s->taint;
    if (const auto* u = v.unknown_struct()) return u->taint;
    return {};  // arrays/objects print as "Array"/error
  }

  void set_temp(ExecState& st, const Operand& result, AbstractValue value) {
    if (result.kind == Operand::Kind::Temp) st.temps[result.index] = std::move(value);
  }

  void emit_finding(VulnClass vuln, const OpUnit& unit, std::uint32_t line,
                    const std::string& callee, int position, const TaintState& taint) {
    Finding f;
    f.vuln_class = vuln;
    f.sink = {unit.source_file(), line, callee, position};
    for (const auto& [label, hops] : taint.labels) {
      f.sources.insert(label);
      if (f.trace.empty()) f.trace = hops;
    }
    f.trace.push_back({unit.source_file(), line,
                       std::string(vuln_class_name(vuln)) + " sink: " + callee +
                           " (arg " + std::to_string(position) + ")"});
    findings.insert(std::move(f));
  }

  void check_call_sinks(const OpUnit& unit, std::uint32_t line,
                        const std::string& callee, const CallArgs& args) {
    const auto* sink_rules = rules.find_sinks(ascii_lower(callee));
    if (!sink_rules) return;
    for (const SinkRule& rule : *sink_rules) {
      if (rule.position < 0) continue;
      auto pos = static_cast<std::size_t>(rule.position);
      TaintState taint;
      if (pos < args.values.size()) taint = sink_taint(args.values[pos]);
      else if (args.tail_unknown) taint = args.tail_taint;
      if (taint.dangerous_for(rule.vuln))
        emit_finding(rule.vuln, unit, line, ascii_lower(callee), rule.position, taint);
    }
  }

  // ---- function/method dispatch ----

  AbstractValue instantiate_object(const std::string& class_name) {
    ObjectStruct obj;
    obj.class_name = class_name;
    // Parent defaults first so subclasses override.
    std::vector<const ClassMeta*> chain;
    const ClassMeta* cls = db.find_class(class_name);
    int hops = 0;
    while (cls && hops++ < 64) {
      chain.push_back(cls);
      cls = cls->parent ? db.find_class(*cls->parent) : nullptr;
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      for (const auto& [name, prop] : (*it)->properties)
        obj.set(name, AbstractValue::from_literal(prop.default_value));
    }
    return AbstractValue(std::move(obj));
  }

  std::string memo_digest(const PathEnv& env, const CallArgs& args,
                          const std::optional<AbstractValue>& this_obj) {
    std::string out;
    ser_env(env, out);
    out += "|args:";
    for (const auto& a : args.values) ser_value(a, out);
    if (args.tail_unknown) {
      out += "|tail:";
      ser_taint(args.tail_taint, out);
    }
    if (this_obj) {
      out += "|this:";
      ser_value(*this_obj, out);
    }
    return out;
  }

  struct CallResult {
    AbstractValue ret;
    std::optional<AbstractValue> final_this;
    bool exited = false;
  };

  CallResult call_user_unit(ExecState& st, const OpUnit& callee, const CallArgs& args,
                            std::optional<AbstractValue> this_obj,
                            const std::optional<std::string>& receiver_cv,
                            const OpUnit& caller_unit, std::uint32_t line) {
    TaintState all_arg_taint = args.tail_taint;
    for (const auto& a : args.values)
      all_arg_taint = TaintState::join(all_arg_taint, a.collect_taint());

    if (call_depth >= config.max_call_depth) {
      log("call depth limit reached at " + callee.name + ", over-approximating");
      return {AbstractValue::unknown(all_arg_taint), std::nullopt, false};
    }

    auto key = std::make_pair(&callee, memo_digest(st.env, args, this_obj));
    if (in_progress.count(key)) {
      log("recursive call to " + callee.name + " cut, over-approximating");
      return {AbstractValue::unknown(all_arg_taint), std::nullopt, false};
    }

    UnitOutcome outcome;
    auto memo_it = memo.find(key);
    if (memo_it != memo.end()) {
      outcome = memo_it->second;
    } else {
      in_progress.insert(key);
      ++call_depth;
      Scope fresh;
      if (this_obj) fresh.locals["this"] = *this_obj;
      outcome = run_unit(callee, st.env, std::move(fresh), &args, /*top_scope=*/false);
      --call_depth;
      in_progress.erase(key);
      memo.emplace(key, outcome);
    }

    st.env = outcome.env;
    if (!outcome.any_return) return {AbstractValue::null_value(), std::nullopt, true};

    // By-ref parameters write back into the caller's variables.
    for (std::size_t i = 0; i < callee.params.size() && i < args.values.size(); ++i) {
      if (!callee.params[i].is_ref) continue;
      if (i < args.byref_cvs.size() && args.byref_cvs[i]) {
        auto it = outcome.vars.locals.find(callee.params[i].name);
        if (it != outcome.vars.locals.end())
          write_var(st, caller_unit, *args.byref_cvs[i], it->second);
      }
    }
    std::optional<AbstractValue> final_this;
    if (this_obj) {
      auto it = outcome.vars.locals.find("this");
      if (it != outcome.vars.locals.end()) final_this = it->second;
      if (receiver_cv && final_this)
        write_var(st, caller_unit, *receiver_cv, *final_this);
    }

    AbstractValue ret = outcome.ret;
    if (TaintState t = ret.collect_taint(); t.tainted()) {
      if (auto* scalar = ret.scalar())
        scalar->taint.add_hop({caller_unit.source_file(), line,
                               "returned from " + callee.name});
      else if (auto* unk = ret.unknown_struct())
        unk->taint.add_hop({caller_unit.source_file(), line,
                            "returned from " + callee.name});
    }
    return {std::move(ret), std::move(final_this), false};
  }

  static CallArgs expand_args(const PendingCall& frame) {
    CallArgs out;
    for (const auto& arg : frame.args) {
      if (!arg.unpack) {
        out.values.push_back(arg.value);
        out.byref_cvs.push_back(arg.byref_cv);
        continue;
      }
      const ArrayStruct* arr = arg.value.array();
      if (arr && arr->shape_concrete()) {
        for (const auto& [key, value] : arr->elements) {
          if (std::holds_alternative<std::string>(key)) continue;  // named args: skip
          out.values.push_back(value);
          out.byref_cvs.push_back(std::nullopt);
        }
      } else {
        out.tail_unknown = true;
        out.tail_taint = TaintState::join(out.tail_taint, arg.value.collect_taint());
      }
    }
    return out;
  }

  Terminal do_fcall(ExecState& st, const OpUnit& unit, const Opline& op) {
    if (st.calls.empty()) {
      log("DO_FCALL without INIT in " + unit.name);
      set_temp(st, op.result, AbstractValue::unknown());
      return Terminal::None;
    }
    PendingCall frame = std::move(st.calls.back());
    st.calls.pop_back();
    CallArgs args = expand_args(frame);
    const std::uint32_t line = op.source_line;

    TaintState all_arg_taint = args.tail_taint;
    for (const auto& a : args.values)
      all_arg_taint = TaintState::join(all_arg_taint, a.collect_taint());

    auto unresolved = [&](const std::string& why, TaintState extra = {}) -> Terminal {
      log(why);
      set_temp(st, op.result,
               AbstractValue::unknown(TaintState::join(all_arg_taint, extra)));
      return Terminal::None;
    };

    switch (frame.kind) {
      case PendingCall::Kind::Function:
      case PendingCall::Kind::Dynamic: {
        std::string name = frame.name;
        if (frame.kind == PendingCall::Kind::Dynamic) {
          auto lit = frame.callee_value.to_literal();
          if (!lit || !lit->is_string())
            return unresolved("unresolved dynamic call at " + unit.source_file() + ":" +
                                  std::to_string(line),
                              frame.callee_value.collect_taint());
          name = lit->as_string();
        }
        check_call_sinks(unit, line, name, args);

        if (const OpUnit* callee = db.find_function(name)) {
          CallResult r = call_user_unit(st, *callee, args, std::nullopt, std::nullopt,
                                        unit, line);
          if (r.exited) return Terminal::Exited;
          set_temp(st, op.result, std::move(r.ret));
          return Terminal::None;
        }
        // Builtin or unknown: value semantics via the registry.
        set_temp(st, op.result, run_builtin(st, unit, name, args, line));
        return Terminal::None;
      }
      case PendingCall::Kind::Method:
      case PendingCall::Kind::StaticMethod: {
        std::string method = frame.name;
        if (frame.name_dynamic) {
          auto lit = frame.name_value.to_literal();
          if (!lit || !lit->is_string())
            return unresolved("unresolved dynamic method name at " + unit.source_file() +
                              ":" + std::to_string(line));
          method = lit->as_string();
        }
        std::string class_name;
        std::optional<AbstractValue> receiver;
        if (frame.kind == PendingCall::Kind::Method) {
          const ObjectStruct* obj = frame.callee_value.object();
          if (!obj)
            return unresolved("method call on non-object at " + unit.source_file() + ":" +
                                  std::to_string(line),
                              frame.callee_value.collect_taint());
          class_name = obj->class_name;
          receiver = frame.callee_value;
        } else {
          class_name = frame.class_name;
        }

        const OpUnit* callee = db.find_method(class_name, method);
        if (!callee) {
          // Magic fallback: route through __call(name, args-array).
          if (const OpUnit* magic = db.find_method(class_name, "__call")) {
            CallArgs magic_args;
            magic_args.values.push_back(
                AbstractValue::from_literal(Literal::str(method)));
            ArrayStruct packed;
            for (const auto& v : args.values) packed.append(v);
            if (args.tail_unknown) {
              packed.default_element.set(AbstractValue::unknown(args.tail_taint));
              packed.next_index_valid = false;
            }
            magic_args.values.push_back(AbstractValue(std::move(packed)));
            CallResult r = call_user_unit(st, *magic, magic_args, receiver,
                                          frame.receiver_cv, unit, line);
            if (r.exited) return Terminal::Exited;
            set_temp(st, op.result, std::move(r.ret));
            return Terminal::None;
          }
          return unresolved("unresolved method " + class_name + "::" + method);
        }
        CallResult r =
            call_user_unit(st, *callee, args, receiver, frame.receiver_cv, unit, line);
        if (r.exited) return Terminal::Exited;
        set_temp(st, op.result, std::move(r.ret));
        return Terminal::None;
      }
      case PendingCall::Kind::Ctor: {
        std::string class_name = frame.class_name;
        if (frame.class_dynamic) {
          auto lit = frame.callee_value.to_literal();
          if (!lit || !lit->is_string())
            return unresolved("unresolved dynamic class name at " + unit.source_file() +
                                  ":" + std::to_string(line),
                              frame.callee_value.collect_taint());
          class_name = lit->as_string();
        }
        if (!db.find_class(class_name))
          log("unknown class " + class_name + ", instantiating opaque object");
        AbstractValue obj = instantiate_object(class_name);
        if (const OpUnit* ctor = db.find_method(class_name, "__construct")) {
          CallResult r = call_user_unit(st, *ctor, args, obj, std::nullopt, unit, line);
          if (r.exited) return Terminal::Exited;
          if (r.final_this) obj = *r.final_this;
        }
        set_temp(st, op.result, std::move(obj));
        return Terminal::None;
      }
    }
    return Terminal::None;
  }

  AbstractValue run_builtin(ExecState& st, const OpUnit& unit, const std::string& name,
                            CallArgs& args, std::uint32_t line) {
    BuiltinCall call{args.values, {}};
    call.cwd = &st.env.cwd;
    call.include_path = &st.env.include_path;
    const OpUnit* unit_ptr = &unit;
    Runner* self = this;
    ExecState* stp = &st;
    call.set_var = [self, stp, unit_ptr](const std::string& var, AbstractValue value) {
      self->write_var(*stp, *unit_ptr, var, std::move(value));
    };
    call.set_constant = [stp](const std::string& cname, AbstractValue value) {
      stp->env.constants[cname] = std::move(value);
    };
    call.get_constant = [stp](const std::string& cname) -> std::optional<AbstractValue> {
      auto it = stp->env.constants.find(cname);
      if (it == stp->env.constants.end()) return std::nullopt;
      return it->second;
    };

    std::string lname = ascii_lower(name);
    AbstractValue result;
    auto override_it = overrides.find(lname);
    if (override_it != overrides.end()) {
      // Rules-file override replaces the model's taint rule (abstract only).
      TaintState taint;
      switch (override_it->second.kind) {
        case TaintRuleKind::PassAll:
          for (const auto& a : args.values)
            taint = TaintState::join(taint, a.collect_taint());
          break;
        case TaintRuleKind::PassArg: {
          int i = override_it->second.arg;
          if (i >= 0 && static_cast<std::size_t>(i) < args.values.size())
            taint = args.values[static_cast<std::size_t>(i)].collect_taint();
          break;
        }
        default: break;
      }
      result = AbstractValue::unknown(std::move(taint));
    } else {
      bool unmodeled = false;
      result = apply_builtin(builtins, lname, call, &unmodeled);
      if (unmodeled)
        log("unmodeled builtin " + lname + " at " + unit.source_file() + ":" +
            std::to_string(line) + ", passing all taints");
    }
    if (args.tail_unknown)
      result = join_values(result, AbstractValue::unknown(args.tail_taint));

    // Sanitizer stack semantics from the rule set.
    if (const SanitizerRule* sanitizer = rules.find_sanitizer(lname)) {
      apply_sanitizer(result, *sanitizer);
    } else if (const std::string* encoder = rules.find_decoder_pair(lname)) {
      apply_decoder(result, *encoder);
    }
    return result;
  }

  static void map_taints(AbstractValue& v, const std::function<void(TaintState&)>& fn) {
    if (auto* s = v.scalar()) { fn(s->taint); return; }
    if (auto* u = v.unknown_struct()) { fn(u->taint); return; }
    if (auto* a = v.array()) {
      for (auto& [key, value] : a->elements) {
        (void)key;
        map_taints(value, fn);
      }
      if (a->default_element) map_taints(*a->default_element, fn);
      return;
    }
    if (auto* o = v.object()) {
      for (auto& [name, value] : o->properties) {
        (void)name;
        map_taints(value, fn);
      }
    }
  }

  void apply_sanitizer(AbstractValue& value, const SanitizerRule& rule) {
    if (rule.reversible) {
      map_taints(value, [&rule](TaintState& t) {
        if (t.tainted()) t.san_stack.push_back(rule.name);
      });
      return;
    }
    if (rule.all_classes) {
      map_taints(value, [](TaintState& t) { t = TaintState{}; });
      return;
    }
    map_taints(value, [&rule](TaintState& t) {
      t.cleared.insert(rule.classes.begin(), rule.classes.end());
    });
  }

  void apply_decoder(AbstractValue& value, const std::string& encoder) {
    map_taints(value, [&encoder](TaintState& t) {
      if (!t.san_stack.empty() && t.san_stack.back() == encoder) t.san_stack.pop_back();
    });
  }

  // ---- include / eval ----

  Terminal run_include(ExecState& st, const OpUnit& unit, const Opline& op) {
    AbstractValue path_value = value_of(st, unit, op.op1, op.source_line);
    auto flavor = static_cast<IncludeFlavor>(op.extended_value);
    const std::uint32_t line = op.source_line;

    if (flavor == IncludeFlavor::Eval) {
      TaintState taint = sink_taint(path_value);
      if (taint.dangerous_for(VulnClass::RCE))
        emit_finding(VulnClass::RCE, unit, line, "eval", 0, taint);
      auto lit = path_value.to_literal();
      if (lit && lit->is_string() && hooks.compile_snippet) {
        std::string virtual_path =
            unit.source_file() + ":" + std::to_string(line) + ":eval";
        try {
          auto compiled = std::make_unique<LoweredFile>(
              hooks.compile_snippet("<?php " + lit->as_string(), virtual_path));
          if (!compiled->functions.empty() || !compiled->classes.empty())
            log("eval'd code declares functions/classes; declarations ignored");
          eval_keepalive.push_back(std::move(compiled));
          return inline_unit(st, eval_keepalive.back()->main, op);
        } catch (const std::exception& e) {
          log(std::string("eval snippet failed to compile: ") + e.what());
          set_temp(st, op.result, AbstractValue::unknown(taint));
          return Terminal::None;
        }
      }
      set_temp(st, op.result, AbstractValue::unknown(taint));
      return Terminal::None;
    }

    // File inclusion, cases 1-4.
    TaintState taint = sink_taint(path_value);
    if (taint.dangerous_for(VulnClass::FI)) {
      emit_finding(VulnClass::FI, unit, line, "include", 0, taint);
      set_temp(st, op.result, AbstractValue::unknown(taint));
      return Terminal::None;
    }
    auto lit = path_value.to_literal();
    if (!lit || !lit->is_string()) {
      log("unresolved include path at " + unit.source_file() + ":" +
          std::to_string(line));
      set_temp(st, op.result, AbstractValue::unknown(taint));
      return Terminal::None;
    }

    const std::string& requested = lit->as_string();
    const OpUnit* included = nullptr;
    std::string resolved;
    std::vector<std::string> candidates;
    if (!requested.empty() && requested[0] == '/') {
      candidates.push_back(path_normalize(requested));
    } else {
      candidates.push_back(path_join(st.env.cwd, requested));
      for (const auto& dir : st.env.include_path)
        candidates.push_back(path_join(path_join(st.env.cwd, dir), requested));
    }
    for (const auto& candidate : candidates) {
      if (const OpUnit* found = db.find_file(candidate)) {
        included = found;
        resolved = candidate;
        break;
      }
    }
    if (!included) {
      log("include target not found: " + requested + " (from " + unit.source_file() +
          ":" + std::to_string(line) + ")");
      set_temp(st, op.result, AbstractValue::from_literal(Literal::boolean(false)));
      return Terminal::None;
    }

    bool once = flavor == IncludeFlavor::IncludeOnce || flavor == IncludeFlavor::RequireOnce;
    if (once && st.env.included_once.count(resolved)) {
      set_temp(st, op.result, AbstractValue::from_literal(Literal::boolean(true)));
      return Terminal::None;
    }
    st.env.included_once.insert(resolved);
    return inline_unit(st, *included, op);
  }

  // Executes an included/eval'd unit in the caller's variable scope.
  Terminal inline_unit(ExecState& st, const OpUnit& included, const Opline& op) {
    if (call_depth >= config.max_call_depth) {
      log("include depth limit reached at " + included.name);
      set_temp(st, op.result, AbstractValue::unknown());
      return Terminal::None;
    }
    ++call_depth;
    UnitOutcome outcome =
        run_unit(included, st.env, st.vars, nullptr, current_top_scope);
    --call_depth;
    st.env = outcome.env;
    st.vars = outcome.vars;
    if (!outcome.any_return) return Terminal::Exited;
    set_temp(st, op.result, outcome.ret);
    return Terminal::None;
  }

  // ---- concrete scalar ops ----

  static AbstractValue concat_values(const AbstractValue& a, const AbstractValue& b,
                                     TaintState taint) {
    ValueStruct out;
    out.type = ScalarType::Str;
    auto la = a.to_literal();
    auto lb = b.to_literal();
    if (la && lb && !la->is_array() && !lb->is_array())
      out.concrete = Literal::str(php_to_string(*la) + php_to_string(*lb));
    out.taint = std::move(taint);
    return AbstractValue(std::move(out));
  }

  AbstractValue arith(OpcodeKind kind, const AbstractValue& a, const AbstractValue& b) {
    TaintState taint = TaintState::join(sink_taint(a), sink_taint(b));
    if (kind == OpcodeKind::ADD && a.array() && b.array()) {
      // PHP + on arrays: union, left operand wins.
      ArrayStruct out = *a.array();
      for (const auto& [key, value] : b.array()->elements)
        if (!out.find(key)) out.set(key, value);
      if (b.array()->default_element) {
        if (out.default_element)
          out.default_element.set(join_values(*out.default_element,
                                              *b.array()->default_element));
        else
          out.default_element = b.array()->default_element;
      }
      return AbstractValue(std::move(out));
    }
    ValueStruct out;
    out.type = ScalarType::UnknownScalar;
    auto la = a.to_literal();
    auto lb = b.to_literal();
    if (la && lb && !la->is_array() && !lb->is_array()) {
      Literal na = php_to_number(*la);
      Literal nb = php_to_number(*lb);
      bool both_int = na.is_int() && nb.is_int();
      double xa = na.is_int() ? static_cast<double>(na.as_int()) : na.as_float();
      double xb = nb.is_int() ? static_cast<double>(nb.as_int()) : nb.as_float();
      switch (kind) {
        case OpcodeKind::ADD:
          out.concrete = both_int ? Literal::integer(na.as_int() + nb.as_int())
                                  : Literal::real(xa + xb);
          break;
        case OpcodeKind::SUB:
          out.concrete = both_int ? Literal::integer(na.as_int() - nb.as_int())
                                  : Literal::real(xa - xb);
          break;
        case OpcodeKind::MUL:
          out.concrete = both_int ? Literal::integer(na.as_int() * nb.as_int())
                                  : Literal::real(xa * xb);
          break;
        case OpcodeKind::DIV:
          if (xb != 0.0) {
            if (both_int && nb.as_int() != 0 && na.as_int() % nb.as_int() == 0)
              out.concrete = Literal::integer(na.as_int() / nb.as_int());
            else
              out.concrete = Literal::real(xa / xb);
          }
          break;
        case OpcodeKind::MOD:
          if (nb.is_int() ? nb.as_int() != 0 : xb != 0.0) {
            std::int64_t ib = php_intval(nb);
            if (ib != 0) out.concrete = Literal::integer(php_intval(na) % ib);
          }
          break;
        default: break;
      }
      if (out.concrete) out.type = scalar_type_of(*out.concrete);
    }
    out.taint = std::move(taint);
    return AbstractValue(std::move(out));
  }

  static AbstractValue bool_result(std::optional<bool> known) {
    ValueStruct out;
    out.type = ScalarType::Bool;
    if (known) out.concrete = Literal::boolean(*known);
    return AbstractValue(std::move(out));
  }

  AbstractValue compare(OpcodeKind kind, const AbstractValue& a, const AbstractValue& b) {
    auto la = a.to_literal();
    auto lb = b.to_literal();
    std::optional<bool> known;
    if (la && lb) {
      switch (kind) {
        case OpcodeKind::IS_EQUAL:
        case OpcodeKind::CASE: known = php_loose_equal(*la, *lb); break;
        case OpcodeKind::IS_NOT_EQUAL: known = !php_loose_equal(*la, *lb); break;
        case OpcodeKind::IS_IDENTICAL: known = php_identical(*la, *lb); break;
        case OpcodeKind::IS_NOT_IDENTICAL: known = !php_identical(*la, *lb); break;
        case OpcodeKind::IS_SMALLER:
        case OpcodeKind::IS_SMALLER_OR_EQUAL: {
          if (!la->is_array() && !lb->is_array()) {
            bool numeric_mode =
                !(la->is_string() && lb->is_string() &&
                  !(php_is_numeric_string(la->as_string()) &&
                    php_is_numeric_string(lb->as_string())));
            if (numeric_mode) {
              Literal na = php_to_number(*la);
              Literal nb = php_to_number(*lb);
              double xa = na.is_int() ? static_cast<double>(na.as_int()) : na.as_float();
              double xb = nb.is_int() ? static_cast<double>(nb.as_int()) : nb.as_float();
              known = kind == OpcodeKind::IS_SMALLER ? xa < xb : xa <= xb;
            } else {
              known = kind == OpcodeKind::IS_SMALLER
                          ? la->as_string() < lb->as_string()
                          : la->as_string() <= lb->as_string();
            }
          }
          break;
        }
        default: break;
      }
    }
    return bool_result(known);
  }

  // ---- the opcode transfer function ----

  Terminal transfer(ExecState& st, const OpUnit& unit, const Opline& op,
                    AbstractValue* ret_out) {
    bump_steps();
    ++opline_steps;
    const std::uint32_t line = op.source_line;

    switch (op.opcode) {
      case OpcodeKind::NOP:
      case OpcodeKind::JMP:
      case OpcodeKind::JMPZ:
      case OpcodeKind::JMPNZ:
      case OpcodeKind::FE_FETCH:
        return Terminal::None;  // control handled by the block walker

      case OpcodeKind::ASSIGN:
      case OpcodeKind::ASSIGN_DIM:
      case OpcodeKind::ASSIGN_OBJ: {
        AbstractValue value = value_of(st, unit, op.op2, line);
        if (TaintState t = sink_taint(value); t.tainted()) {
          if (op.op1.kind == Operand::Kind::CompiledVar) {
            if (auto* s = value.scalar())
              s->taint.add_hop({unit.source_file(), line, "assigned to $" + op.op1.name});
            else if (auto* u = value.unknown_struct())
              u->taint.add_hop({unit.source_file(), line, "assigned to $" + op.op1.name});
          }
        }
        if (op.op1.kind == Operand::Kind::CompiledVar) {
          write_var(st, unit, op.op1.name, value);
        } else {
          auto it = st.var_slots.find(op.op1.index);
          if (it != st.var_slots.end())
            if (const auto* place = std::get_if<Place>(&it->second))
              write_place(st, unit, *place, value);
        }
        set_temp(st, op.result, std::move(value));
        return Terminal::None;
      }

      case OpcodeKind::ASSIGN_CONCAT: {
        AbstractValue current;
        const Place* place = nullptr;
        if (op.op1.kind == Operand::Kind::CompiledVar) {
          current = read_var(st, unit, op.op1.name);
        } else {
          auto it = st.var_slots.find(op.op1.index);
          if (it != st.var_slots.end()) place = std::get_if<Place>(&it->second);
          if (place) current = read_place(st, unit, *place);
        }
        AbstractValue rhs = value_of(st, unit, op.op2, line);
        TaintState taint = TaintState::join(sink_taint(current), sink_taint(rhs));
        AbstractValue result = concat_values(current, rhs, std::move(taint));
        if (op.op1.kind == Operand::Kind::CompiledVar)
          write_var(st, unit, op.op1.name, result);
        else if (place)
          write_place(st, unit, *place, result);
        set_temp(st, op.result, std::move(result));
        return Terminal::None;
      }

      case OpcodeKind::QM_ASSIGN: {
        set_temp(st, op.result, value_of(st, unit, op.op1, line));
        return Terminal::None;
      }

      case OpcodeKind::CONCAT: {
        AbstractValue a = value_of(st, unit, op.op1, line);
        AbstractValue b = value_of(st, unit, op.op2, line);
        TaintState taint = TaintState::join(sink_taint(a), sink_taint(b));
        set_temp(st, op.result, concat_values(a, b, std::move(taint)));
        return Terminal::None;
      }

      case OpcodeKind::ADD:
      case OpcodeKind::SUB:
      case OpcodeKind::MUL:
      case OpcodeKind::DIV:
      case OpcodeKind::MOD: {
        AbstractValue a = value_of(st, unit, op.op1, line);
        AbstractValue b = value_of(st, unit, op.op2, line);
        set_temp(st, op.result, arith(op.opcode, a, b));
        return Terminal::None;
      }

      case OpcodeKind::IS_EQUAL:
      case OpcodeKind::IS_NOT_EQUAL:
      case OpcodeKind::IS_IDENTICAL:
      case OpcodeKind::IS_NOT_IDENTICAL:
      case OpcodeKind::IS_SMALLER:
      case OpcodeKind::IS_SMALLER_OR_EQUAL:
      case OpcodeKind::CASE: {
        AbstractValue a = value_of(st, unit, op.op1, line);
        AbstractValue b = value_of(st, unit, op.op2, line);
        set_temp(st, op.result, compare(op.opcode, a, b));
        return Terminal::None;
      }

      case OpcodeKind::BOOL_AND:
      case OpcodeKind::BOOL_OR: {
        auto ta = value_of(st, unit, op.op1, line).truthiness();
        auto tb = value_of(st, unit, op.op2, line).truthiness();
        std::optional<bool> known;
        if (op.opcode == OpcodeKind::BOOL_AND) {
          if (ta && tb) known = *ta && *tb;
          else if ((ta && !*ta) || (tb && !*tb)) known = false;
        } else {
          if (ta && tb) known = *ta || *tb;
          else if ((ta && *ta) || (tb && *tb)) known = true;
        }
        set_temp(st, op.result, bool_result(known));
        return Terminal::None;
      }

      case OpcodeKind::BOOL_NOT: {
        auto t = value_of(st, unit, op.op1, line).truthiness();
        set_temp(st, op.result, bool_result(t ? std::optional<bool>(!*t) : std::nullopt));
        return Terminal::None;
      }

      case OpcodeKind::BOOL: {
        auto t = value_of(st, unit, op.op1, line).truthiness();
        set_temp(st, op.result, bool_result(t));
        return Terminal::None;
      }

      case OpcodeKind::INIT_ARRAY:
      case OpcodeKind::ADD_ARRAY_ELEMENT: {
        AbstractValue acc;
        if (op.opcode == OpcodeKind::INIT_ARRAY) {
          acc = AbstractValue(ArrayStruct{});
        } else {
          acc = value_of(st, unit, op.result, line);
          if (!acc.array()) acc = AbstractValue(ArrayStruct{});
        }
        if (op.op1.is_value()) {
          AbstractValue value = value_of(st, unit, op.op1, line);
          if (op.op2.is_value()) {
            AbstractValue key = value_of(st, unit, op.op2, line);
            auto key_lit = key.to_literal();
            if (key_lit && !key_lit->is_array()) {
              acc.array()->set(php_normalize_key(*key_lit), std::move(value));
            } else {
              // Unknown key: weak update of the summary cell.
              ArrayStruct& arr = *acc.array();
              AbstractValue summary =
                  arr.default_element ? *arr.default_element : AbstractValue::null_value();
              arr.default_element.set(join_values(summary, value));
              arr.next_index_valid = false;
            }
          } else {
            acc.array()->append(std::move(value));
          }
        }
        set_temp(st, op.result, std::move(acc));
        return Terminal::None;
      }

      case OpcodeKind::FETCH_DIM_R: {
        // Superglobal handles mint precise labels here.
        if (const SgRef* ref = sg_of(st, op.op1)) {
          AbstractValue key = value_of(st, unit, op.op2, line);
          auto key_lit = key.to_literal();
          std::string access =
              key_lit && !key_lit->is_array() ? php_to_string(*key_lit) : "*";
          set_temp(st, op.result, materialize_sg(*ref, unit.source_file(), line, access));
          return Terminal::None;
        }
        AbstractValue base = value_of(st, unit, op.op1, line);
        if (op.op1.kind == Operand::Kind::CompiledVar)
          base = read_var(st, unit, op.op1.name);
        AbstractValue key = value_of(st, unit, op.op2, line);
        auto key_lit = key.to_literal();
        PathStep step = key_lit && !key_lit->is_array()
                            ? PathStep::concrete_key(php_normalize_key(*key_lit))
                            : PathStep::unknown_key();
        set_temp(st, op.result,
                 read_value_path(base, {step}, &db, &prop_default_tramp));
        return Terminal::None;
      }

      case OpcodeKind::FETCH_OBJ_R: {
        AbstractValue base = value_of(st, unit, op.op1, line);
        AbstractValue name = value_of(st, unit, op.op2, line);
        auto name_lit = name.to_literal();
        if (const ObjectStruct* obj = base.object()) {
          if (name_lit && name_lit->is_string()) {
            const std::string& prop = name_lit->as_string();
            if (!obj->find(prop) && !prop_default_for(db, obj->class_name, prop)) {
              // Magic fallback: __get for undeclared properties.
              if (const OpUnit* magic = db.find_method(obj->class_name, "__get")) {
                CallArgs args;
                args.values.push_back(AbstractValue::from_literal(Literal::str(prop)));
                std::optional<std::string> recv_cv;
                if (op.op1.kind == Operand::Kind::CompiledVar) recv_cv = op.op1.name;
                CallResult r = call_user_unit(st, *magic, args, base, recv_cv, unit, line);
                if (r.exited) return Terminal::Exited;
                set_temp(st, op.result, std::move(r.ret));
                return Terminal::None;
              }
            }
            set_temp(st, op.result,
                     read_value_path(base, {PathStep::property(prop)}, &db,
                                     &prop_default_tramp));
            return Terminal::None;
          }
          set_temp(st, op.result,
                   read_value_path(base, {PathStep::unknown_property()}, &db,
                                   &prop_default_tramp));
          return Terminal::None;
        }
        set_temp(st, op.result, AbstractValue::unknown(base.collect_taint()));
        return Terminal::None;
      }

      case OpcodeKind::FETCH_R:
      case OpcodeKind::FETCH_W: {
        bool write = op.opcode == OpcodeKind::FETCH_W;
        std::optional<std::string> name;
        if (op.op1.kind == Operand::Kind::Constant && op.op1.literal.is_string()) {
          name = op.op1.literal.as_string();
        } else {
          AbstractValue dyn = value_of(st, unit, op.op1, line);
          auto lit = dyn.to_literal();
          if (lit && !lit->is_array()) name = php_to_string(*lit);
        }
        if (write) {
          Place place;
          if (!name) {
            place.base = Place::Base::AllLocals;
            log("dynamic variable write with unknown name at " + unit.source_file() +
                ":" + std::to_string(line));
          } else if (is_superglobal(*name)) {
            place.base = Place::Base::Superglobal;
            place.name = *name;
          } else {
            place.base = Place::Base::Var;
            place.name = *name;
          }
          st.var_slots[op.result.index] = std::move(place);
          return Terminal::None;
        }
        if (!name) {
          TaintState acc;
          for (const auto& [vname, value] :
               (current_top_scope ? st.env.globals.locals : st.vars.locals)) {
            (void)vname;
            acc = TaintState::join(acc, value.collect_taint());
          }
          log("dynamic variable read with unknown name at " + unit.source_file() + ":" +
              std::to_string(line));
          set_temp(st, op.result, AbstractValue::unknown(std::move(acc)));
          return Terminal::None;
        }
        if (is_superglobal(*name)) {
          st.temps[op.result.index] = sg_ref(*name, line);
          return Terminal::None;
        }
        set_temp(st, op.result, read_var(st, unit, *name));
        return Terminal::None;
      }

      case OpcodeKind::FETCH_DIM_W:
      case OpcodeKind::FETCH_OBJ_W: {
        Place place;
        if (op.op1.kind == Operand::Kind::CompiledVar) {
          place.base = Place::Base::Var;
          place.name = op.op1.name;
        } else if (op.op1.kind == Operand::Kind::Var) {
          auto it = st.var_slots.find(op.op1.index);
          if (it != st.var_slots.end())
            if (const auto* base_place = std::get_if<Place>(&it->second))
              place = *base_place;
        }
        if (op.opcode == OpcodeKind::FETCH_DIM_W) {
          if (!op.op2.is_value()) {
            place.steps.push_back(PathStep::append());
          } else {
            AbstractValue key = value_of(st, unit, op.op2, line);
            auto key_lit = key.to_literal();
            if (key_lit && !key_lit->is_array())
              place.steps.push_back(PathStep::concrete_key(php_normalize_key(*key_lit)));
            else
              place.steps.push_back(PathStep::unknown_key());
          }
        } else {
          AbstractValue name = value_of(st, unit, op.op2, line);
          auto name_lit = name.to_literal();
          if (name_lit && name_lit->is_string())
            place.steps.push_back(PathStep::property(name_lit->as_string()));
          else
            place.steps.push_back(PathStep::unknown_property());
        }
        st.var_slots[op.result.index] = std::move(place);
        return Terminal::None;
      }

      case OpcodeKind::FETCH_CONSTANT: {
        const std::string& cname = op.op1.literal.as_string();
        auto it = st.env.constants.find(cname);
        if (it != st.env.constants.end()) {
          set_temp(st, op.result, it->second);
        } else {
          log("undefined constant " + cname + " at " + unit.source_file() + ":" +
              std::to_string(line));
          set_temp(st, op.result, AbstractValue::unknown());
        }
        return Terminal::None;
      }

      case OpcodeKind::DECLARE_CONST: {
        AbstractValue name = value_of(st, unit, op.op1, line);
        AbstractValue value = value_of(st, unit, op.op2, line);
        auto name_lit = name.to_literal();
        if (name_lit && name_lit->is_string())
          st.env.constants[name_lit->as_string()] = std::move(value);
        else
          log("define with non-concrete name at " + unit.source_file() + ":" +
              std::to_string(line));
        return Terminal::None;
      }

      case OpcodeKind::BIND_GLOBAL: {
        const std::string& gname = op.op1.literal.as_string();
        st.vars.global_names.insert(gname);
        st.env.globals.locals.try_emplace(gname, AbstractValue::null_value());
        return Terminal::None;
      }

      case OpcodeKind::NEW: {
        PendingCall frame;
        frame.kind = PendingCall::Kind::Ctor;
        frame.line = line;
        if (op.op1.kind == Operand::Kind::Constant && op.op1.literal.is_string()) {
          frame.class_name = op.op1.literal.as_string();
        } else {
          frame.class_dynamic = true;
          frame.callee_value = value_of(st, unit, op.op1, line);
        }
        st.calls.push_back(std::move(frame));
        return Terminal::None;
      }

      case OpcodeKind::INIT_FCALL: {
        PendingCall frame;
        frame.kind = PendingCall::Kind::Function;
        frame.name = op.op1.literal.as_string();
        frame.line = line;
        st.calls.push_back(std::move(frame));
        return Terminal::None;
      }

      case OpcodeKind::INIT_DYNAMIC_CALL: {
        PendingCall frame;
        frame.kind = PendingCall::Kind::Dynamic;
        frame.callee_value = value_of(st, unit, op.op1, line);
        frame.line = line;
        st.calls.push_back(std::move(frame));
        return Terminal::None;
      }

      case OpcodeKind::INIT_METHOD_CALL: {
        PendingCall frame;
        frame.kind = PendingCall::Kind::Method;
        frame.callee_value = value_of(st, unit, op.op1, line);
        if (op.op1.kind == Operand::Kind::CompiledVar) frame.receiver_cv = op.op1.name;
        if (op.op2.kind == Operand::Kind::Constant && op.op2.literal.is_string()) {
          frame.name = op.op2.literal.as_string();
        } else {
          frame.name_dynamic = true;
          frame.name_value = value_of(st, unit, op.op2, line);
        }
        frame.line = line;
        st.calls.push_back(std::move(frame));
        return Terminal::None;
      }

      case OpcodeKind::INIT_STATIC_METHOD_CALL: {
        PendingCall frame;
        frame.kind = PendingCall::Kind::StaticMethod;
        if (op.op1.kind == Operand::Kind::Constant && op.op1.literal.is_string())
          frame.class_name = op.op1.literal.as_string();
        if (op.op2.kind == Operand::Kind::Constant && op.op2.literal.is_string()) {
          frame.name = op.op2.literal.as_string();
        } else {
          frame.name_dynamic = true;
          frame.name_value = value_of(st, unit, op.op2, line);
        }
        frame.line = line;
        st.calls.push_back(std::move(frame));
        return Terminal::None;
      }

      case OpcodeKind::SEND_VAL:
      case OpcodeKind::SEND_VAR:
      case OpcodeKind::SEND_REF:
      case OpcodeKind::SEND_UNPACK: {
        if (st.calls.empty()) {
          log("SEND without INIT in " + unit.name);
          return Terminal::None;
        }
        PendingCall::ArgV arg;
        arg.value = value_of(st, unit, op.op1, line);
        if (op.op1.kind == Operand::Kind::CompiledVar &&
            (op.opcode == OpcodeKind::SEND_VAR || op.opcode == OpcodeKind::SEND_REF))
          arg.byref_cv = op.op1.name;
        arg.unpack = op.opcode == OpcodeKind::SEND_UNPACK;
        st.calls.back().args.push_back(std::move(arg));
        return Terminal::None;
      }

      case OpcodeKind::DO_FCALL: return do_fcall(st, unit, op);

      case OpcodeKind::RECV:
      case OpcodeKind::RECV_INIT:
      case OpcodeKind::RECV_VARIADIC: {
        auto index = static_cast<std::size_t>(op.extended_value);
        AbstractValue value;
        if (!current_args) {
          value = AbstractValue::null_value();
        } else if (op.opcode == OpcodeKind::RECV_VARIADIC) {
          ArrayStruct packed;
          for (std::size_t i = index; i < current_args->values.size(); ++i)
            packed.append(current_args->values[i]);
          if (current_args->tail_unknown) {
            packed.default_element.set(
                AbstractValue::unknown(current_args->tail_taint));
            packed.next_index_valid = false;
          }
          value = AbstractValue(std::move(packed));
        } else if (index < current_args->values.size()) {
          value = current_args->values[index];
        } else if (current_args->tail_unknown) {
          value = AbstractValue::unknown(current_args->tail_taint);
        } else if (op.opcode == OpcodeKind::RECV_INIT) {
          value = AbstractValue::from_literal(op.op2.literal);
        } else {
          log("missing argument " + std::to_string(index) + " for " + unit.name);
          value = AbstractValue::null_value();
        }
        if (TaintState t = sink_taint(value); t.tainted()) {
          if (auto* s = value.scalar())
            s->taint.add_hop({unit.source_file(), line,
                              "received as $" + op.result.name + " in " + unit.name});
          else if (auto* u = value.unknown_struct())
            u->taint.add_hop({unit.source_file(), line,
                              "received as $" + op.result.name + " in " + unit.name});
        }
        write_var(st, unit, op.result.name, std::move(value));
        return Terminal::None;
      }

      case OpcodeKind::RETURN: {
        if (ret_out) {
          *ret_out = op.op1.is_value() ? value_of(st, unit, op.op1, line)
                                       : AbstractValue::null_value();
        }
        return Terminal::Returned;
      }

      case OpcodeKind::ECHO: {
        AbstractValue value = value_of(st, unit, op.op1, line);
        TaintState taint = sink_taint(value);
        if (taint.dangerous_for(VulnClass::XSS))
          emit_finding(VulnClass::XSS, unit, line, "echo", 0, taint);
        return Terminal::None;
      }

      case OpcodeKind::EXIT: {
        if (op.op1.is_value()) {
          AbstractValue value = value_of(st, unit, op.op1, line);
          TaintState taint = sink_taint(value);
          if (taint.dangerous_for(VulnClass::XSS))
            emit_finding(VulnClass::XSS, unit, line, "exit", 0, taint);
        }
        return Terminal::Exited;
      }

      case OpcodeKind::INCLUDE_OR_EVAL: return run_include(st, unit, op);

      case OpcodeKind::ISSET_ISEMPTY: {
        AbstractValue value = value_of(st, unit, op.op1, line);
        std::optional<bool> known;
        if (op.extended_value == 0) {  // isset
          if (const auto* s = value.scalar()) {
            if (s->concrete) known = !s->concrete->is_null();
            else if (s->type == ScalarType::Null) known = false;
            else if (s->type != ScalarType::UnknownScalar) known = true;
          } else if (value.array() || value.object()) {
            known = true;
          }
        } else {  // empty = !truthy
          if (auto t = value.truthiness()) known = !*t;
        }
        set_temp(st, op.result, bool_result(known));
        return Terminal::None;
      }

      case OpcodeKind::FE_RESET: {
        AbstractValue subject = value_of(st, unit, op.op1, line);
        IterState iter;
        if (const ArrayStruct* arr = subject.array()) {
          iter.concrete = arr->shape_concrete();
          iter.items = arr->elements;
          AbstractValue summary = AbstractValue::null_value();
          for (const auto& [key, value] : arr->elements) {
            (void)key;
            summary = join_values(summary, value);
          }
          if (arr->default_element)
            summary = join_values(summary, *arr->default_element);
          iter.summary = std::move(summary);
        } else if (subject.is_unknown()) {
          iter.concrete = false;
          iter.taint = subject.own_taint();
          iter.summary = AbstractValue::unknown(iter.taint);
        } else {
          iter.concrete = true;  // non-array: zero iterations (PHP warns)
        }
        st.var_slots[op.result.index] = std::move(iter);
        return Terminal::None;
      }

      case OpcodeKind::FE_KEY: {
        auto it = st.var_slots.find(op.op1.index);
        AbstractValue key = AbstractValue::unknown();
        if (it != st.var_slots.end()) {
          if (const auto* iter = std::get_if<IterState>(&it->second)) {
            if (iter->concrete && iter->pos > 0 && iter->pos <= iter->items.size()) {
              const ArrayKey& k = iter->items[iter->pos - 1].first;
              key = AbstractValue::from_literal(
                  std::holds_alternative<std::int64_t>(k)
                      ? Literal::integer(std::get<std::int64_t>(k))
                      : Literal::str(std::get<std::string>(k)));
            } else {
              key = AbstractValue::unknown(iter->taint);
            }
          }
        }
        write_var(st, unit, op.result.name, std::move(key));
        return Terminal::None;
      }

      default:
        log(std::string("unhandled opcode ") + opcode_name(op.opcode) +
            ", joining operand taints");
        set_temp(st, op.result,
                 AbstractValue::unknown(TaintState::join(
                     value_of(st, unit, op.op1, line).collect_taint(),
                     value_of(st, unit, op.op2, line).collect_taint())));
        return Terminal::None;
    }
  }

  const CallArgs* current_args = nullptr;
  // True while running a top-level/include unit whose variable scope IS the
  // global scope (entry files and includes reached from top level).
  bool current_top_scope = false;

  // ---- the block walker ----

  UnitOutcome run_unit(const OpUnit& unit, PathEnv env, Scope vars,
                       const CallArgs* args, bool top_scope) {
    const Cfg& cfg = cfg_for(unit);

    // Bind declared statics once per analysis.
    for (const auto& [name, init] : unit.statics) {
      auto& statics = env.statics[unit.name];
      statics.locals.try_emplace(name, AbstractValue::from_literal(init));
      vars.static_names.insert(name);
    }

    ExecState initial;
    initial.block = cfg.entry;
    initial.env = std::move(env);
    initial.vars = std::move(vars);

    std::vector<ExecState> work;
    work.push_back(std::move(initial));

    UnitOutcome outcome;
    bool have_outcome = false;
    bool have_return = false;
    auto join_terminal = [&](ExecState& st, std::optional<AbstractValue> ret) {
      if (!have_outcome) {
        outcome.env = st.env;
        outcome.vars = st.vars;
        have_outcome = true;
      } else {
        outcome.env = join_envs(outcome.env, st.env);
        outcome.vars = join_scopes(outcome.vars, st.vars);
      }
      if (ret) {
        outcome.ret = have_return ? join_values(outcome.ret, *ret) : *ret;
        have_return = true;
        outcome.any_return = true;
      }
    };

    // Split budget: forks are free until the run has produced
    // branch_split_budget states; after that, successor states route through
    // per-(site, block) join caches with subsumption pruning.
    std::uint64_t forks = 0;
    std::map<std::pair<std::size_t, int>, Snapshot> split_cache;

    const CallArgs* saved_args = current_args;
    const bool saved_top = current_top_scope;

    auto push_state = [&](ExecState&& st, std::size_t site, bool budgeted) {
      if (!budgeted) {
        work.push_back(std::move(st));
        return;
      }
      auto key = std::make_pair(site, st.block);
      Snapshot snap{st.env, st.vars, st.temps, st.var_slots};
      auto it = split_cache.find(key);
      if (it == split_cache.end()) {
        split_cache.emplace(key, std::move(snap));
        work.push_back(std::move(st));
        return;
      }
      Snapshot joined = join_snapshots(it->second, snap);
      if (joined == it->second) return;  // subsumed
      it->second = joined;
      st.env = joined.env;
      st.vars = joined.vars;
      st.temps = joined.temps;
      st.var_slots = joined.var_slots;
      work.push_back(std::move(st));
    };

    while (!work.empty()) {
      ExecState st = std::move(work.back());
      work.pop_back();
      current_args = args;
      current_top_scope = top_scope;

      bool path_live = true;
      while (path_live) {
        bump_steps();
        const BasicBlock& block = cfg.blocks[static_cast<std::size_t>(st.block)];

        // Loop regime: budgeted concrete unrolling, then join-to-fixpoint.
        int visit = ++st.visits[st.block];
        bool fixpoint = visit > config.max_loop_iterations;
        if (fixpoint) {
          Snapshot snap{st.env, st.vars, st.temps, st.var_slots};
          auto it = st.loop_acc.find(st.block);
          if (it == st.loop_acc.end()) {
            st.loop_acc.emplace(st.block, std::move(snap));
          } else {
            Snapshot joined = join_snapshots(it->second, snap);
            if (joined == it->second) break;  // converged; exits already forked
            it->second = joined;
            st.env = joined.env;
            st.vars = joined.vars;
            st.temps = joined.temps;
            st.var_slots = joined.var_slots;
          }
        }

        if (block.start == block.end_exclusive) {
          // Empty unit: single empty block.
          join_terminal(st, AbstractValue::null_value());
          break;
        }

        Terminal term = Terminal::None;
        AbstractValue ret;
        std::size_t last_index = block.end_exclusive - 1;
        for (std::size_t i = block.start; i < block.end_exclusive; ++i) {
          term = transfer(st, unit, unit.oplines[i], &ret);
          if (term != Terminal::None) {
            last_index = i;
            break;
          }
        }

        if (term == Terminal::Returned) {
          join_terminal(st, std::move(ret));
          break;
        }
        if (term == Terminal::Exited) {
          join_terminal(st, std::nullopt);
          break;
        }

        const Opline& last = unit.oplines[last_index];

        auto succ_block = [&](EdgeKind kind) -> std::optional<int> {
          for (const auto& [succ, ek] : block.successors)
            if (ek == kind) return succ;
          return std::nullopt;
        };

        switch (last.opcode) {
          case OpcodeKind::JMP: {
            st.block = *succ_block(EdgeKind::Jump);
            continue;
          }
          case OpcodeKind::JMPZ:
          case OpcodeKind::JMPNZ: {
            AbstractValue cond = value_of(st, unit, last.op1, last.source_line);
            auto truth = cond.truthiness();
            if (fixpoint) truth = std::nullopt;  // fixpoint regime explores both
            auto true_succ = succ_block(EdgeKind::BranchTrue);
            auto false_succ = succ_block(EdgeKind::BranchFalse);
            // JMPZ: true -> fallthrough (BranchTrue), false -> target.
            // JMPNZ: true -> target (BranchTrue), false -> fallthrough.
            if (truth.has_value()) {
              auto chosen = *truth ? true_succ : false_succ;
              if (!chosen) {
                join_terminal(st, AbstractValue::null_value());
                path_live = false;
                break;
              }
              st.block = *chosen;
              continue;
            }
            if (!true_succ || !false_succ) {
              auto only = true_succ ? true_succ : false_succ;
              if (!only) {
                join_terminal(st, AbstractValue::null_value());
                path_live = false;
                break;
              }
              st.block = *only;
              continue;
            }
            bool budgeted =
                ++forks > static_cast<std::uint64_t>(config.branch_split_budget);
            ExecState other = st;
            other.block = *false_succ;
            push_state(std::move(other), last_index, budgeted);
            st.block = *true_succ;
            continue;
          }
          case OpcodeKind::FE_FETCH: {
            auto slot = st.var_slots.find(last.op1.index);
            IterState* iter =
                slot == st.var_slots.end() ? nullptr : std::get_if<IterState>(&slot->second);
            auto body_succ = succ_block(EdgeKind::BranchTrue);
            auto exit_succ = succ_block(EdgeKind::BranchFalse);
            if (!iter) {
              if (exit_succ) {
                st.block = *exit_succ;
                continue;
              }
              join_terminal(st, AbstractValue::null_value());
              path_live = false;
              break;
            }
            if (iter->concrete && !fixpoint) {
              if (iter->pos < iter->items.size()) {
                AbstractValue value = iter->items[iter->pos].second;
                iter->pos++;
                write_var(st, unit, last.result.name, std::move(value));
                if (body_succ) {
                  st.block = *body_succ;
                  continue;
                }
                join_terminal(st, AbstractValue::null_value());
                path_live = false;
                break;
              }
              if (exit_succ) {
                st.block = *exit_succ;
                continue;
              }
              join_terminal(st, AbstractValue::null_value());
              path_live = false;
              break;
            }
            // Abstract iteration: fork body and exit.
            if (iter->concrete) {
              IterState degraded;
              degraded.concrete = false;
              AbstractValue summary = AbstractValue::null_value();
              for (const auto& [key, value] : iter->items) {
                (void)key;
                summary = join_values(summary, value);
              }
              degraded.summary = std::move(summary);
              degraded.taint = iter->taint;
              *iter = std::move(degraded);
            }
            AbstractValue element = iter->summary;
            if (exit_succ) {
              bool budgeted =
                  ++forks > static_cast<std::uint64_t>(config.branch_split_budget);
              ExecState exit_state = st;
              exit_state.block = *exit_succ;
              push_state(std::move(exit_state), last_index, budgeted);
            }
            if (body_succ) {
              write_var(st, unit, last.result.name, std::move(element));
              st.block = *body_succ;
              continue;
            }
            join_terminal(st, AbstractValue::null_value());
            path_live = false;
            break;
          }
          default: {
            auto next = succ_block(EdgeKind::Fallthrough);
            if (!next) {
              // Fell off the unit end: implicit return.
              join_terminal(st, AbstractValue::null_value());
              path_live = false;
              break;
            }
            st.block = *next;
            continue;
          }
        }
        if (!path_live) break;
      }
    }

    current_args = saved_args;
    current_top_scope = saved_top;

    if (!have_outcome) {
      // All paths converged inside loops without reaching an exit; fall back
      // to the initial environment so analysis can continue.
      outcome.env = PathEnv{};
      outcome.vars = Scope{};
      outcome.any_return = true;
      log("no terminating path in " + unit.name);
    }
    if (!have_return && have_outcome) {
      // Every path exited the script.
      outcome.any_return = false;
    }
    return outcome;
  }
};

}  // namespace

Engine::Engine(const ProgramDb& db, const RuleSet& rules, const BuiltinRegistry& builtins,
               const AnalysisConfig& config, Hooks hooks)
    : db_(db), rules_(rules), builtins_(builtins), config_(config), hooks_(std::move(hooks)) {}

EntryResult Engine::analyze_entry(const std::string& entry_file) const {
  EntryResult result;
  result.entry = entry_file;
  auto start = std::chrono::steady_clock::now();

  const OpUnit* unit = db_.find_file(entry_file);
  if (!unit) {
    result.failed = true;
    result.error = "entry file not in program database: " + entry_file;
    return result;
  }

  Runner runner{db_, rules_, builtins_, config_, hooks_, entry_file};
  for (const auto& [name, spec] : rules_.builtin_overrides) {
    if (auto rule = parse_taint_rule(spec)) runner.overrides[name] = *rule;
  }

  PathEnv env;
  env.cwd = config_.cwd.empty() ? path_dirname(entry_file) : config_.cwd;
  env.include_path = config_.include_path;

  try {
    runner.run_unit(*unit, std::move(env), Scope{}, nullptr, /*top_scope=*/true);
    result.findings.assign(runner.findings.begin(), runner.findings.end());
    std::sort(result.findings.begin(), result.findings.end());
  } catch (const AnalysisError& e) {
    result.failed = true;
    result.error = e.what();
    result.findings.assign(runner.findings.begin(), runner.findings.end());
    std::sort(result.findings.begin(), result.findings.end());
  }
  result.oplines_analyzed = runner.opline_steps;
  result.logs = std::move(runner.logs);
  result.wall_ms = std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

std::vector<Finding> analyze_entry(const ProgramDb& db, const std::string& entry_file,
                                   const RuleSet& rules, const AnalysisConfig& config) {
  BuiltinRegistry registry = register_minimum_set();
  Engine engine(db, rules, registry, config);
  EntryResult result = engine.analyze_entry(entry_file);
  if (result.failed) throw AnalysisError(result.error);
  return result.findings;
}

}  // namespace opflow
