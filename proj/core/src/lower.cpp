#include "opflow/lower.hpp"

#include <array>
#include <cassert>
#include <optional>

namespace opflow {

namespace {

using namespace ast;

constexpr std::array<const char*, 9> kSuperglobals = {
    "_GET", "_POST", "_FILES", "_COOKIE", "_REQUEST",
    "_SERVER", "_SESSION", "_ENV", "GLOBALS"};

constexpr std::array<const char*, 5> kTaintSources = {"_GET", "_POST", "_FILES",
                                                      "_COOKIE", "_REQUEST"};

struct Label {
  std::optional<std::size_t> target;
  std::vector<std::size_t> refs;  // opline indexes whose jump operand to patch
};

struct UnitLowerer;

// Collects hoisted declarations across the whole file.
struct FileLowerer {
  std::string file_path;
  std::vector<OpUnit> functions;
  std::vector<ClassMeta> classes;

  OpUnit lower_unit(const Body& body, UnitKind kind, std::string name,
                    const std::vector<ParamDecl>* params,
                    std::optional<std::string> owner, std::uint32_t decl_line);
};

struct UnitLowerer {
  FileLowerer& file;
  OpUnit unit;
  std::uint32_t next_temp = 0;
  std::uint32_t next_var = 0;
  std::vector<Label> labels;

  struct BreakCtx {
    std::size_t break_label;
    std::optional<std::size_t> continue_label;  // absent inside switch-only ctx
  };
  std::vector<BreakCtx> break_stack;

  explicit UnitLowerer(FileLowerer& f) : file(f) {}

  std::size_t make_label() {
    labels.emplace_back();
    return labels.size() - 1;
  }

  void bind(std::size_t label) { labels[label].target = unit.oplines.size(); }

  std::size_t emit(OpcodeKind kind, Operand op1, Operand op2, Operand result,
                   std::int64_t ext, std::uint32_t line) {
    unit.oplines.push_back(make_opline(kind, std::move(op1), std::move(op2),
                                       std::move(result), ext, line));
    return unit.oplines.size() - 1;
  }

  // Emits a jump whose target is patched when `label` is bound.
  void emit_jump(OpcodeKind kind, Operand cond, std::size_t label, std::uint32_t line) {
    std::size_t idx;
    if (kind == OpcodeKind::JMP) {
      idx = emit(OpcodeKind::JMP, Operand::jump(0), Operand::unused(), Operand::unused(),
                 0, line);
    } else {
      idx = emit(kind, std::move(cond), Operand::jump(0), Operand::unused(), 0, line);
    }
    labels[label].refs.push_back(idx);
  }

  void patch_labels() {
    for (const Label& label : labels) {
      assert(label.target.has_value());
      for (std::size_t idx : label.refs) {
        Opline& op = unit.oplines[idx];
        Operand target = Operand::jump(static_cast<std::uint32_t>(*label.target));
        if (op.opcode == OpcodeKind::JMP) op.op1 = target;
        else op.op2 = target;
      }
    }
  }

  Operand fresh_temp() { return Operand::temp(next_temp++); }
  Operand fresh_var() { return Operand::var(next_var++); }

  // ---------- expression lowering ----------

  Operand eval(const Expr& e) {
    const std::uint32_t line = e.line;
    if (const auto* lit = std::get_if<LiteralExpr>(&e.node))
      return Operand::constant(lit->value);

    if (const auto* var = std::get_if<VarExpr>(&e.node)) {
      if (is_superglobal(var->name)) {
        Operand t = fresh_temp();
        emit(OpcodeKind::FETCH_R, Operand::constant(Literal::str(var->name)),
             Operand::unused(), t, 0, line);
        return t;
      }
      return Operand::cv(var->name);
    }

    if (const auto* vv = std::get_if<VarVarExpr>(&e.node)) {
      Operand name = eval(*vv->name_expr);
      Operand t = fresh_temp();
      emit(OpcodeKind::FETCH_R, std::move(name), Operand::unused(), t, 0, line);
      return t;
    }

    if (const auto* interp = std::get_if<InterpExpr>(&e.node)) {
      Operand acc = Operand::constant(Literal::str(""));
      for (const auto& part : interp->parts) {
        Operand value = eval(*part);
        Operand t = fresh_temp();
        emit(OpcodeKind::CONCAT, std::move(acc), std::move(value), t, 0, part->line);
        acc = t;
      }
      return acc;
    }

    if (const auto* arr = std::get_if<ArrayExpr>(&e.node)) {
      Operand result = fresh_temp();
      bool first = true;
      for (const auto& item : arr->items) {
        Operand key = item.key ? eval(*item.key) : Operand::unused();
        Operand value = eval(*item.value);
        emit(first ? OpcodeKind::INIT_ARRAY : OpcodeKind::ADD_ARRAY_ELEMENT,
             std::move(value), std::move(key), result, 0, line);
        first = false;
      }
      if (first)
        emit(OpcodeKind::INIT_ARRAY, Operand::unused(), Operand::unused(), result, 0,
             line);
      return result;
    }

    if (const auto* idx = std::get_if<IndexExpr>(&e.node)) {
      if (!idx->index) throw LowerError(line, "list-append read '$a[]'");
      Operand base = eval(*idx->base);
      Operand key = eval(*idx->index);
      Operand t = fresh_temp();
      emit(OpcodeKind::FETCH_DIM_R, std::move(base), std::move(key), t, 0, line);
      return t;
    }

    if (const auto* prop = std::get_if<PropExpr>(&e.node)) {
      Operand base = eval(*prop->base);
      Operand name = prop->dyn_name ? eval(*prop->dyn_name)
                                    : Operand::constant(Literal::str(prop->name));
      Operand t = fresh_temp();
      emit(OpcodeKind::FETCH_OBJ_R, std::move(base), std::move(name), t, 0, line);
      return t;
    }

    if (const auto* cref = std::get_if<ConstExpr>(&e.node)) {
      Operand t = fresh_temp();
      emit(OpcodeKind::FETCH_CONSTANT, Operand::constant(Literal::str(cref->name)),
           Operand::unused(), t, 0, line);
      return t;
    }

    if (const auto* call = std::get_if<CallExpr>(&e.node)) return eval_call(*call, line);
    if (const auto* call = std::get_if<MethodCallExpr>(&e.node))
      return eval_method_call(*call, line);
    if (const auto* call = std::get_if<StaticCallExpr>(&e.node)) {
      emit(OpcodeKind::INIT_STATIC_METHOD_CALL,
           Operand::constant(Literal::str(call->class_name)),
           Operand::constant(Literal::str(call->name)), Operand::unused(), 0, line);
      return finish_call(call->args, line);
    }
    if (const auto* ne = std::get_if<NewExpr>(&e.node)) {
      Operand cls = ne->dyn_class ? eval(*ne->dyn_class)
                                  : Operand::constant(Literal::str(ne->class_name));
      emit(OpcodeKind::NEW, std::move(cls), Operand::unused(), Operand::unused(), 0, line);
      return finish_call(ne->args, line);
    }

    if (const auto* bin = std::get_if<BinaryExpr>(&e.node)) return eval_binary(*bin, line);

    if (const auto* un = std::get_if<UnaryExpr>(&e.node)) {
      Operand v = eval(*un->operand);
      Operand t = fresh_temp();
      if (un->op == UnOp::Not) {
        emit(OpcodeKind::BOOL_NOT, std::move(v), Operand::unused(), t, 0, line);
      } else {
        emit(OpcodeKind::SUB, Operand::constant(Literal::integer(0)), std::move(v), t, 0,
             line);
      }
      return t;
    }

    if (const auto* assign = std::get_if<AssignExpr>(&e.node))
      return eval_assign(*assign, line);

    if (const auto* tern = std::get_if<TernaryExpr>(&e.node)) {
      Operand result = fresh_temp();
      Operand cond = eval(*tern->cond);
      std::size_t l_else = make_label();
      std::size_t l_end = make_label();
      emit_jump(OpcodeKind::JMPZ, cond, l_else, line);
      Operand then_v = tern->then_expr ? eval(*tern->then_expr) : cond;
      emit(OpcodeKind::QM_ASSIGN, std::move(then_v), Operand::unused(), result, 0, line);
      emit_jump(OpcodeKind::JMP, Operand::unused(), l_end, line);
      bind(l_else);
      Operand else_v = eval(*tern->else_expr);
      emit(OpcodeKind::QM_ASSIGN, std::move(else_v), Operand::unused(), result, 0, line);
      bind(l_end);
      return result;
    }

    if (const auto* incdec = std::get_if<IncDecExpr>(&e.node)) {
      Operand place = lower_place(*incdec->target);
      Operand old_v = fresh_temp();
      emit(OpcodeKind::QM_ASSIGN, place, Operand::unused(), old_v, 0, line);
      Operand new_v = fresh_temp();
      emit(incdec->increment ? OpcodeKind::ADD : OpcodeKind::SUB, old_v,
           Operand::constant(Literal::integer(1)), new_v, 0, line);
      assign_to_place(*incdec->target, place, new_v, line);
      return incdec->prefix ? new_v : old_v;
    }

    if (const auto* isset = std::get_if<IssetExpr>(&e.node)) {
      Operand acc;
      for (const auto& arg : isset->args) {
        Operand v = eval(*arg);
        Operand t = fresh_temp();
        emit(OpcodeKind::ISSET_ISEMPTY, std::move(v), Operand::unused(), t,
             isset->is_empty ? 1 : 0, line);
        if (acc.kind == Operand::Kind::Unused) {
          acc = t;
        } else {
          Operand both = fresh_temp();
          emit(OpcodeKind::BOOL_AND, std::move(acc), t, both, 0, line);
          acc = both;
        }
      }
      return acc;
    }

    if (const auto* inc = std::get_if<IncludeExpr>(&e.node)) {
      Operand path = eval(*inc->path);
      Operand t = fresh_temp();
      emit(OpcodeKind::INCLUDE_OR_EVAL, std::move(path), Operand::unused(), t,
           static_cast<std::int64_t>(inc->flavor), line);
      return t;
    }

    if (const auto* ex = std::get_if<ExitExpr>(&e.node)) {
      Operand v = ex->value ? eval(*ex->value) : Operand::unused();
      emit(OpcodeKind::EXIT, std::move(v), Operand::unused(), Operand::unused(), 0, line);
      return Operand::constant(Literal::null());
    }

    if (const auto* pr = std::get_if<PrintExpr>(&e.node)) {
      Operand v = eval(*pr->value);
      emit(OpcodeKind::ECHO, std::move(v), Operand::unused(), Operand::unused(), 0, line);
      return Operand::constant(Literal::integer(1));
    }

    throw LowerError(line, "expression form");
  }

  Operand eval_call(const CallExpr& call, std::uint32_t line) {
    if (!call.name.empty()) {
      // define() gets its dedicated opline.
      if (ascii_lower(call.name) == "define" && call.args.size() == 2 &&
          !call.args[0].unpack && !call.args[1].unpack) {
        Operand name = eval(*call.args[0].value);
        Operand value = eval(*call.args[1].value);
        emit(OpcodeKind::DECLARE_CONST, std::move(name), std::move(value),
             Operand::unused(), 0, line);
        Operand t = fresh_temp();
        emit(OpcodeKind::QM_ASSIGN, Operand::constant(Literal::boolean(true)),
             Operand::unused(), t, 0, line);
        return t;
      }
      emit(OpcodeKind::INIT_FCALL, Operand::constant(Literal::str(call.name)),
           Operand::unused(), Operand::unused(), 0, line);
    } else {
      Operand callee = eval(*call.callee_expr);
      emit(OpcodeKind::INIT_DYNAMIC_CALL, std::move(callee), Operand::unused(),
           Operand::unused(), 0, line);
    }
    return finish_call(call.args, line);
  }

  Operand eval_method_call(const MethodCallExpr& call, std::uint32_t line) {
    Operand base = eval(*call.base);
    Operand name = call.dyn_name ? eval(*call.dyn_name)
                                 : Operand::constant(Literal::str(call.name));
    emit(OpcodeKind::INIT_METHOD_CALL, std::move(base), std::move(name),
         Operand::unused(), 0, line);
    return finish_call(call.args, line);
  }

  Operand finish_call(const std::vector<Arg>& args, std::uint32_t line) {
    int position = 0;
    for (const auto& arg : args) {
      Operand v = eval(*arg.value);
      OpcodeKind kind = OpcodeKind::SEND_VAL;
      if (arg.unpack) kind = OpcodeKind::SEND_UNPACK;
      else if (v.kind == Operand::Kind::CompiledVar) kind = OpcodeKind::SEND_VAR;
      emit(kind, std::move(v), Operand::unused(), Operand::unused(), position++,
           arg.value->line);
    }
    Operand t = fresh_temp();
    emit(OpcodeKind::DO_FCALL, Operand::unused(), Operand::unused(), t, 0, line);
    return t;
  }

  Operand eval_binary(const BinaryExpr& bin, std::uint32_t line) {
    if (bin.op == BinOp::And || bin.op == BinOp::Or) {
      // Short-circuit chains; BOOL coerces the kept operand.
      Operand result = fresh_temp();
      Operand lhs = eval(*bin.lhs);
      std::size_t l_short = make_label();
      std::size_t l_end = make_label();
      emit_jump(bin.op == BinOp::And ? OpcodeKind::JMPZ : OpcodeKind::JMPNZ, lhs, l_short,
                line);
      Operand rhs = eval(*bin.rhs);
      emit(OpcodeKind::BOOL, std::move(rhs), Operand::unused(), result, 0, line);
      emit_jump(OpcodeKind::JMP, Operand::unused(), l_end, line);
      bind(l_short);
      emit(OpcodeKind::QM_ASSIGN,
           Operand::constant(Literal::boolean(bin.op == BinOp::Or)), Operand::unused(),
           result, 0, line);
      bind(l_end);
      return result;
    }

    Operand a = eval(*bin.lhs);
    Operand b = eval(*bin.rhs);
    Operand t = fresh_temp();
    OpcodeKind kind;
    bool swap = false;
    switch (bin.op) {
      case BinOp::Concat: kind = OpcodeKind::CONCAT; break;
      case BinOp::Add: kind = OpcodeKind::ADD; break;
      case BinOp::Sub: kind = OpcodeKind::SUB; break;
      case BinOp::Mul: kind = OpcodeKind::MUL; break;
      case BinOp::Div: kind = OpcodeKind::DIV; break;
      case BinOp::Mod: kind = OpcodeKind::MOD; break;
      case BinOp::Eq: kind = OpcodeKind::IS_EQUAL; break;
      case BinOp::NotEq: kind = OpcodeKind::IS_NOT_EQUAL; break;
      case BinOp::Identical: kind = OpcodeKind::IS_IDENTICAL; break;
      case BinOp::NotIdentical: kind = OpcodeKind::IS_NOT_IDENTICAL; break;
      case BinOp::Lt: kind = OpcodeKind::IS_SMALLER; break;
      case BinOp::Le: kind = OpcodeKind::IS_SMALLER_OR_EQUAL; break;
      case BinOp::Gt: kind = OpcodeKind::IS_SMALLER; swap = true; break;
      case BinOp::Ge: kind = OpcodeKind::IS_SMALLER_OR_EQUAL; swap = true; break;
      default: throw LowerError(line, "binary operator");
    }
    if (swap) std::swap(a, b);
    emit(kind, std::move(a), std::move(b), t, 0, line);
    return t;
  }

  // Produces a readable-through/writable place operand (CV or V).
  Operand lower_place(const Expr& e) {
    const std::uint32_t line = e.line;
    if (const auto* var = std::get_if<VarExpr>(&e.node)) {
      if (is_superglobal(var->name)) {
        Operand v = fresh_var();
        emit(OpcodeKind::FETCH_W, Operand::constant(Literal::str(var->name)),
             Operand::unused(), v, 0, line);
        return v;
      }
      return Operand::cv(var->name);
    }
    if (const auto* vv = std::get_if<VarVarExpr>(&e.node)) {
      Operand name = eval(*vv->name_expr);
      Operand v = fresh_var();
      emit(OpcodeKind::FETCH_W, std::move(name), Operand::unused(), v, 0, line);
      return v;
    }
    if (const auto* idx = std::get_if<IndexExpr>(&e.node)) {
      Operand base = lower_place(*idx->base);
      Operand key = idx->index ? eval(*idx->index) : Operand::unused();
      Operand v = fresh_var();
      emit(OpcodeKind::FETCH_DIM_W, std::move(base), std::move(key), v, 0, line);
      return v;
    }
    if (const auto* prop = std::get_if<PropExpr>(&e.node)) {
      Operand base = lower_place(*prop->base);
      Operand name = prop->dyn_name ? eval(*prop->dyn_name)
                                    : Operand::constant(Literal::str(prop->name));
      Operand v = fresh_var();
      emit(OpcodeKind::FETCH_OBJ_W, std::move(base), std::move(name), v, 0, line);
      return v;
    }
    throw LowerError(line, "assignment target");
  }

  void assign_to_place(const Expr& target, const Operand& place, Operand value,
                       std::uint32_t line) {
    OpcodeKind kind = OpcodeKind::ASSIGN;
    if (std::holds_alternative<IndexExpr>(target.node)) kind = OpcodeKind::ASSIGN_DIM;
    else if (std::holds_alternative<PropExpr>(target.node)) kind = OpcodeKind::ASSIGN_OBJ;
    emit(kind, place, std::move(value), Operand::unused(), 0, line);
  }

  Operand eval_assign(const AssignExpr& assign, std::uint32_t line) {
    Operand place = lower_place(*assign.target);
    if (assign.op == AssignOp::Plain) {
      Operand value = eval(*assign.value);
      assign_to_place(*assign.target, place, value, line);
      return value;
    }
    if (assign.op == AssignOp::Concat) {
      Operand value = eval(*assign.value);
      emit(OpcodeKind::ASSIGN_CONCAT, place, std::move(value), Operand::unused(), 0, line);
      return place;
    }
    Operand value = eval(*assign.value);
    Operand t = fresh_temp();
    OpcodeKind op = assign.op == AssignOp::Add   ? OpcodeKind::ADD
                    : assign.op == AssignOp::Sub ? OpcodeKind::SUB
                    : assign.op == AssignOp::Mul ? OpcodeKind::MUL
                                                 : OpcodeKind::DIV;
    emit(op, place, std::move(value), t, 0, line);
    assign_to_place(*assign.target, place, t, line);
    return t;
  }

  // ---------- statement lowering ----------

  void lower_body(const Body& body) {
    for (const auto& stmt : body) lower_stmt(*stmt);
  }

  void lower_stmt(const Stmt& s) {
    const std::uint32_t line = s.line;

    if (const auto* es = std::get_if<ExprStmt>(&s.node)) {
      eval(*es->expr);
      return;
    }
    if (const auto* echo = std::get_if<EchoStmt>(&s.node)) {
      for (const auto& arg : echo->args) {
        Operand v = eval(*arg);
        emit(OpcodeKind::ECHO, std::move(v), Operand::unused(), Operand::unused(), 0,
             arg->line);
      }
      return;
    }
    if (const auto* html = std::get_if<InlineHtmlStmt>(&s.node)) {
      emit(OpcodeKind::ECHO, Operand::constant(Literal::str(html->html)),
           Operand::unused(), Operand::unused(), 0, line);
      return;
    }
    if (const auto* ifs = std::get_if<IfStmt>(&s.node)) {
      std::size_t l_end = make_label();
      for (const auto& arm : ifs->arms) {
        std::size_t l_next = make_label();
        Operand cond = eval(*arm.cond);
        emit_jump(OpcodeKind::JMPZ, cond, l_next, arm.cond->line);
        lower_body(arm.body);
        emit_jump(OpcodeKind::JMP, Operand::unused(), l_end, line);
        bind(l_next);
      }
      if (ifs->else_body) lower_body(*ifs->else_body);
      bind(l_end);
      return;
    }
    if (const auto* wh = std::get_if<WhileStmt>(&s.node)) {
      std::size_t l_cond = make_label();
      std::size_t l_end = make_label();
      bind(l_cond);
      Operand cond = eval(*wh->cond);
      emit_jump(OpcodeKind::JMPZ, cond, l_end, wh->cond->line);
      break_stack.push_back({l_end, l_cond});
      lower_body(wh->body);
      break_stack.pop_back();
      emit_jump(OpcodeKind::JMP, Operand::unused(), l_cond, line);
      bind(l_end);
      return;
    }
    if (const auto* fr = std::get_if<ForStmt>(&s.node)) {
      for (const auto& e : fr->init) eval(*e);
      std::size_t l_cond = make_label();
      std::size_t l_step = make_label();
      std::size_t l_end = make_label();
      bind(l_cond);
      if (!fr->cond.empty()) {
        Operand cond;
        for (const auto& e : fr->cond) cond = eval(*e);
        emit_jump(OpcodeKind::JMPZ, cond, l_end, fr->cond.back()->line);
      }
      break_stack.push_back({l_end, l_step});
      lower_body(fr->body);
      break_stack.pop_back();
      bind(l_step);
      for (const auto& e : fr->step) eval(*e);
      emit_jump(OpcodeKind::JMP, Operand::unused(), l_cond, line);
      bind(l_end);
      return;
    }
    if (const auto* fe = std::get_if<ForeachStmt>(&s.node)) {
      Operand subject = eval(*fe->subject);
      Operand iter = fresh_var();
      emit(OpcodeKind::FE_RESET, std::move(subject), Operand::unused(), iter, 0, line);
      std::size_t l_fetch = make_label();
      std::size_t l_end = make_label();
      bind(l_fetch);
      std::size_t fetch_idx =
          emit(OpcodeKind::FE_FETCH, iter, Operand::jump(0), Operand::cv(fe->value_var),
               0, line);
      labels[l_end].refs.push_back(fetch_idx);
      if (fe->key_var)
        emit(OpcodeKind::FE_KEY, iter, Operand::unused(), Operand::cv(*fe->key_var), 0,
             line);
      break_stack.push_back({l_end, l_fetch});
      lower_body(fe->body);
      break_stack.pop_back();
      emit_jump(OpcodeKind::JMP, Operand::unused(), l_fetch, line);
      bind(l_end);
      return;
    }
    if (const auto* sw = std::get_if<SwitchStmt>(&s.node)) {
      Operand subject = eval(*sw->subject);
      Operand snapshot = fresh_temp();
      emit(OpcodeKind::QM_ASSIGN, std::move(subject), Operand::unused(), snapshot, 0,
           line);
      std::size_t l_end = make_label();
      std::vector<std::size_t> body_labels;
      std::optional<std::size_t> default_index;
      for (std::size_t i = 0; i < sw->cases.size(); ++i) {
        body_labels.push_back(make_label());
        if (!sw->cases[i].value) default_index = i;
      }
      for (std::size_t i = 0; i < sw->cases.size(); ++i) {
        if (!sw->cases[i].value) continue;
        Operand case_v = eval(*sw->cases[i].value);
        Operand t = fresh_temp();
        emit(OpcodeKind::CASE, snapshot, std::move(case_v), t,
             0, sw->cases[i].value->line);
        emit_jump(OpcodeKind::JMPNZ, t, body_labels[i], sw->cases[i].value->line);
      }
      emit_jump(OpcodeKind::JMP, Operand::unused(),
                default_index ? body_labels[*default_index] : l_end, line);
      std::optional<std::size_t> enclosing_continue;
      if (!break_stack.empty()) enclosing_continue = break_stack.back().continue_label;
      break_stack.push_back({l_end, enclosing_continue});
      for (std::size_t i = 0; i < sw->cases.size(); ++i) {
        bind(body_labels[i]);
        lower_body(sw->cases[i].body);  // falls through to the next case body
      }
      break_stack.pop_back();
      bind(l_end);
      return;
    }
    if (std::holds_alternative<BreakStmt>(s.node)) {
      if (break_stack.empty()) throw LowerError(line, "'break' outside loop/switch");
      emit_jump(OpcodeKind::JMP, Operand::unused(), break_stack.back().break_label, line);
      return;
    }
    if (std::holds_alternative<ContinueStmt>(s.node)) {
      for (auto it = break_stack.rbegin(); it != break_stack.rend(); ++it) {
        if (it->continue_label) {
          emit_jump(OpcodeKind::JMP, Operand::unused(), *it->continue_label, line);
          return;
        }
      }
      throw LowerError(line, "'continue' outside loop");
    }
    if (const auto* ret = std::get_if<ReturnStmt>(&s.node)) {
      Operand v = ret->value ? eval(*ret->value) : Operand::constant(Literal::null());
      emit(OpcodeKind::RETURN, std::move(v), Operand::unused(), Operand::unused(), 0,
           line);
      return;
    }
    if (const auto* glob = std::get_if<GlobalStmt>(&s.node)) {
      for (const auto& name : glob->names)
        emit(OpcodeKind::BIND_GLOBAL, Operand::constant(Literal::str(name)),
             Operand::unused(), Operand::unused(), 0, line);
      return;
    }
    if (const auto* st = std::get_if<StaticVarStmt>(&s.node)) {
      if (unit.kind == UnitKind::FileMain)
        throw LowerError(line, "'static' variable outside function");
      for (const auto& [name, init] : st->vars)
        unit.statics[name] = init.value_or(Literal::null());
      return;
    }
    if (const auto* fn = std::get_if<FunctionDeclStmt>(&s.node)) {
      file.functions.push_back(file.lower_unit(fn->decl.body, UnitKind::Function,
                                               fn->decl.name, &fn->decl.params,
                                               std::nullopt, fn->decl.line));
      return;
    }
    if (const auto* cls = std::get_if<ClassDeclStmt>(&s.node)) {
      lower_class(cls->decl);
      return;
    }
    throw LowerError(line, "statement form");
  }

  void lower_class(const ClassDecl& decl) {
    ClassMeta meta;
    meta.name = decl.name;
    meta.parent = decl.parent;
    meta.traits = decl.traits;
    for (const auto& prop : decl.props)
      meta.properties[prop.name] = PropMeta{prop.default_value, prop.is_static};
    for (const auto& method : decl.methods) {
      // Magic methods: only the four supported ones are accepted.
      std::string lower_name = ascii_lower(method.name);
      if (lower_name.rfind("__", 0) == 0 && lower_name != "__construct" &&
          lower_name != "__get" && lower_name != "__set" && lower_name != "__call")
        throw LowerError(method.line, "magic method '" + method.name + "'");
      meta.methods[lower_name] =
          file.lower_unit(method.body, UnitKind::Method, method.name, &method.params,
                          decl.name, method.line);
    }
    file.classes.push_back(std::move(meta));
  }
};

OpUnit FileLowerer::lower_unit(const Body& body, UnitKind kind, std::string name,
                               const std::vector<ParamDecl>* params,
                               std::optional<std::string> owner,
                               std::uint32_t decl_line) {
  UnitLowerer lowerer(*this);
  lowerer.unit.kind = kind;
  lowerer.unit.name = std::move(name);
  lowerer.unit.owner_class = std::move(owner);
  lowerer.unit.declared_in = kind == UnitKind::FileMain ? "" : file_path;

  if (params) {
    int index = 0;
    for (const auto& p : *params) {
      ParamMeta meta;
      meta.name = p.name;
      meta.is_ref = p.by_ref;
      meta.is_variadic = p.variadic;
      meta.default_value = p.default_value;
      lowerer.unit.params.push_back(meta);

      OpcodeKind kind_op = p.variadic          ? OpcodeKind::RECV_VARIADIC
                           : p.default_value   ? OpcodeKind::RECV_INIT
                                               : OpcodeKind::RECV;
      Operand op2 = p.default_value ? Operand::constant(*p.default_value)
                                    : Operand::unused();
      lowerer.emit(kind_op, Operand::unused(), std::move(op2), Operand::cv(p.name),
                   index++, decl_line);
    }
  }

  lowerer.lower_body(body);

  // Implicit return: include units yield 1, functions yield null.
  std::uint32_t last_line = 1;
  for (const auto& op : lowerer.unit.oplines) last_line = std::max(last_line, op.source_line);
  lowerer.emit(OpcodeKind::RETURN,
               Operand::constant(kind == UnitKind::FileMain ? Literal::integer(1)
                                                            : Literal::null()),
               Operand::unused(), Operand::unused(), 0, last_line);
  lowerer.patch_labels();
  return std::move(lowerer.unit);
}

}  // namespace

LoweredFile lower(const ast::Body& program, const std::string& file_path) {
  FileLowerer file;
  file.file_path = file_path;
  LoweredFile out;
  out.main = file.lower_unit(program, UnitKind::FileMain, file_path, nullptr,
                             std::nullopt, 1);
  out.functions = std::move(file.functions);
  out.classes = std::move(file.classes);
  return out;
}

bool is_superglobal(const std::string& name) {
  for (const char* s : kSuperglobals)
    if (name == s) return true;
  return false;
}

bool is_taint_source_superglobal(const std::string& name) {
  for (const char* s : kTaintSources)
    if (name == s) return true;
  return false;
}

}  // namespace opflow
