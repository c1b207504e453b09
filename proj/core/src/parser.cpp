#include "opflow/parser.hpp"

#include <cctype>
#include <cstdlib>

namespace opflow {

namespace {

using namespace ast;

std::string lower(const std::string& s) { return ascii_lower(s); }

bool is_keyword(const Token& t, const char* kw) {
  return t.kind == TokenKind::Identifier && lower(t.value) == kw;
}

bool is_lvalue(const Expr& e) {
  return std::holds_alternative<VarExpr>(e.node) ||
         std::holds_alternative<VarVarExpr>(e.node) ||
         std::holds_alternative<IndexExpr>(e.node) ||
         std::holds_alternative<PropExpr>(e.node);
}

struct Parser {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  std::uint32_t line_base = 0;  // added to every node line (eval snippets)

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos + ahead;
    return i < toks.size() ? toks[i] : toks.back();
  }

  const Token& advance() {
    const Token& t = peek();
    if (pos < toks.size() - 1) ++pos;
    return t;
  }

  std::uint32_t cur_line() const { return peek().line + line_base; }

  [[noreturn]] void fail(const std::string& expected) const {
    throw ParseError(cur_line(), expected);
  }

  bool check(TokenKind k) const { return peek().kind == k; }

  bool accept(TokenKind k) {
    if (!check(k)) return false;
    advance();
    return true;
  }

  const Token& expect(TokenKind k, const char* what) {
    if (!check(k)) fail(what);
    return advance();
  }

  bool accept_kw(const char* kw) {
    if (!is_keyword(peek(), kw)) return false;
    advance();
    return true;
  }

  // ---------- program ----------

  Body parse_program() {
    Body body;
    while (!check(TokenKind::Eof)) {
      if (accept(TokenKind::OpenTag) || accept(TokenKind::CloseTag)) continue;
      if (check(TokenKind::InlineHtml)) {
        const Token& t = advance();
        body.push_back(make_stmt(InlineHtmlStmt{t.value}, t.line + line_base));
        continue;
      }
      body.push_back(parse_statement());
    }
    return body;
  }

  Body parse_block_or_single() {
    Body body;
    if (accept(TokenKind::LBrace)) {
      while (!check(TokenKind::RBrace)) {
        if (check(TokenKind::Eof)) fail("'}'");
        body.push_back(parse_statement());
      }
      advance();
      return body;
    }
    body.push_back(parse_statement());
    return body;
  }

  // ---------- statements ----------

  StmtPtr parse_statement() {
    const Token& t = peek();
    std::uint32_t line = cur_line();

    if (t.kind == TokenKind::Semi) {
      advance();
      return make_stmt(ExprStmt{make_expr(LiteralExpr{Literal::null()}, line)}, line);
    }
    if (t.kind == TokenKind::LBrace) {
      // Bare block: flatten into an if(true)-free representation is overkill;
      // parse as statement sequence wrapped in an always-true if.
      Body body = parse_block_or_single();
      IfStmt ifs;
      ifs.arms.push_back({make_expr(LiteralExpr{Literal::boolean(true)}, line),
                          std::move(body)});
      return make_stmt(std::move(ifs), line);
    }
    if (t.kind == TokenKind::Identifier) {
      std::string kw = lower(t.value);
      if (kw == "if") return parse_if();
      if (kw == "while") return parse_while();
      if (kw == "for") return parse_for();
      if (kw == "foreach") return parse_foreach();
      if (kw == "switch") return parse_switch();
      if (kw == "break") {
        advance();
        if (!check(TokenKind::Semi)) fail("';' (break levels not supported)");
        advance();
        return make_stmt(BreakStmt{}, line);
      }
      if (kw == "continue") {
        advance();
        if (!check(TokenKind::Semi)) fail("';' (continue levels not supported)");
        advance();
        return make_stmt(ContinueStmt{}, line);
      }
      if (kw == "return") {
        advance();
        ReturnStmt ret;
        if (!check(TokenKind::Semi)) ret.value = parse_expr();
        expect(TokenKind::Semi, "';'");
        return make_stmt(std::move(ret), line);
      }
      if (kw == "global") {
        advance();
        GlobalStmt g;
        do {
          g.names.push_back(expect(TokenKind::Variable, "variable").value);
        } while (accept(TokenKind::Comma));
        expect(TokenKind::Semi, "';'");
        return make_stmt(std::move(g), line);
      }
      if (kw == "static" && peek(1).kind == TokenKind::Variable) {
        advance();
        StaticVarStmt s;
        do {
          std::string name = expect(TokenKind::Variable, "variable").value;
          std::optional<Literal> init;
          if (accept(TokenKind::Assign)) init = parse_const_literal();
          s.vars.emplace_back(std::move(name), std::move(init));
        } while (accept(TokenKind::Comma));
        expect(TokenKind::Semi, "';'");
        return make_stmt(std::move(s), line);
      }
      if (kw == "echo") {
        advance();
        EchoStmt echo;
        do {
          echo.args.push_back(parse_expr());
        } while (accept(TokenKind::Comma));
        expect(TokenKind::Semi, "';'");
        return make_stmt(std::move(echo), line);
      }
      if (kw == "function" &&
          (peek(1).kind == TokenKind::Identifier ||
           (peek(1).kind == TokenKind::Amp && peek(2).kind == TokenKind::Identifier))) {
        return make_stmt(FunctionDeclStmt{parse_function_decl()}, line);
      }
      if (kw == "class" || kw == "trait") return parse_class_decl();
      if (kw == "abstract" || kw == "final" || kw == "interface")
        fail("supported declaration (abstract/final/interface are out of scope)");
      if (kw == "goto" || kw == "try" || kw == "throw" || kw == "namespace" ||
          kw == "match" || kw == "yield" || kw == "unset" || kw == "do")
        fail(std::string("supported statement ('") + kw + "' is out of scope)");
    }

    ExprPtr e = parse_expr();
    expect(TokenKind::Semi, "';'");
    return make_stmt(ExprStmt{std::move(e)}, line);
  }

  StmtPtr parse_if() {
    std::uint32_t line = cur_line();
    advance();  // if
    IfStmt out;
    expect(TokenKind::LParen, "'('");
    ExprPtr cond = parse_expr();
    expect(TokenKind::RParen, "')'");
    out.arms.push_back({std::move(cond), parse_block_or_single()});
    while (true) {
      if (is_keyword(peek(), "elseif") ||
          (is_keyword(peek(), "else") && is_keyword(peek(1), "if"))) {
        if (accept_kw("elseif")) {
        } else {
          advance();
          advance();
        }
        expect(TokenKind::LParen, "'('");
        ExprPtr c = parse_expr();
        expect(TokenKind::RParen, "')'");
        out.arms.push_back({std::move(c), parse_block_or_single()});
        continue;
      }
      if (accept_kw("else")) {
        out.else_body = parse_block_or_single();
      }
      break;
    }
    return make_stmt(std::move(out), line);
  }

  StmtPtr parse_while() {
    std::uint32_t line = cur_line();
    advance();
    expect(TokenKind::LParen, "'('");
    WhileStmt out;
    out.cond = parse_expr();
    expect(TokenKind::RParen, "')'");
    out.body = parse_block_or_single();
    return make_stmt(std::move(out), line);
  }

  StmtPtr parse_for() {
    std::uint32_t line = cur_line();
    advance();
    expect(TokenKind::LParen, "'('");
    ForStmt out;
    if (!check(TokenKind::Semi))
      do {
        out.init.push_back(parse_expr());
      } while (accept(TokenKind::Comma));
    expect(TokenKind::Semi, "';'");
    if (!check(TokenKind::Semi))
      do {
        out.cond.push_back(parse_expr());
      } while (accept(TokenKind::Comma));
    expect(TokenKind::Semi, "';'");
    if (!check(TokenKind::RParen))
      do {
        out.step.push_back(parse_expr());
      } while (accept(TokenKind::Comma));
    expect(TokenKind::RParen, "')'");
    out.body = parse_block_or_single();
    return make_stmt(std::move(out), line);
  }

  StmtPtr parse_foreach() {
    std::uint32_t line = cur_line();
    advance();
    expect(TokenKind::LParen, "'('");
    ForeachStmt out;
    out.subject = parse_expr();
    if (!accept_kw("as")) fail("'as'");
    std::string first = expect(TokenKind::Variable, "variable").value;
    if (accept(TokenKind::DoubleArrow)) {
      out.key_var = first;
      out.value_var = expect(TokenKind::Variable, "variable").value;
    } else {
      out.value_var = first;
    }
    expect(TokenKind::RParen, "')'");
    out.body = parse_block_or_single();
    return make_stmt(std::move(out), line);
  }

  StmtPtr parse_switch() {
    std::uint32_t line = cur_line();
    advance();
    expect(TokenKind::LParen, "'('");
    SwitchStmt out;
    out.subject = parse_expr();
    expect(TokenKind::RParen, "')'");
    expect(TokenKind::LBrace, "'{'");
    while (!accept(TokenKind::RBrace)) {
      if (check(TokenKind::Eof)) fail("'}'");
      SwitchStmt::CaseArm arm;
      if (accept_kw("case")) {
        arm.value = parse_expr();
      } else if (accept_kw("default")) {
        arm.value = nullptr;
      } else {
        fail("'case' or 'default'");
      }
      if (!accept(TokenKind::Colon)) expect(TokenKind::Semi, "':'");
      while (!check(TokenKind::RBrace) && !is_keyword(peek(), "case") &&
             !is_keyword(peek(), "default")) {
        if (check(TokenKind::Eof)) fail("'}'");
        arm.body.push_back(parse_statement());
      }
      out.cases.push_back(std::move(arm));
    }
    return make_stmt(std::move(out), line);
  }

  FunctionDecl parse_function_decl() {
    FunctionDecl decl;
    decl.line = cur_line();
    advance();                  // function
    accept(TokenKind::Amp);     // return-by-ref marker, tolerated
    decl.name = expect(TokenKind::Identifier, "function name").value;
    expect(TokenKind::LParen, "'('");
    if (!check(TokenKind::RParen)) {
      do {
        ParamDecl p;
        if (accept(TokenKind::Amp)) p.by_ref = true;
        if (accept(TokenKind::Ellipsis)) p.variadic = true;
        p.name = expect(TokenKind::Variable, "parameter variable").value;
        if (accept(TokenKind::Assign)) p.default_value = parse_const_literal();
        decl.params.push_back(std::move(p));
      } while (accept(TokenKind::Comma));
    }
    expect(TokenKind::RParen, "')'");
    expect(TokenKind::LBrace, "'{'");
    while (!check(TokenKind::RBrace)) {
      if (check(TokenKind::Eof)) fail("'}'");
      decl.body.push_back(parse_statement());
    }
    advance();
    return decl;
  }

  StmtPtr parse_class_decl() {
    std::uint32_t line = cur_line();
    ClassDecl decl;
    decl.is_trait = lower(peek().value) == "trait";
    advance();  // class | trait
    decl.name = expect(TokenKind::Identifier, "class name").value;
    if (accept_kw("extends"))
      decl.parent = expect(TokenKind::Identifier, "parent class name").value;
    if (is_keyword(peek(), "implements")) fail("class body (interfaces are out of scope)");
    expect(TokenKind::LBrace, "'{'");
    while (!accept(TokenKind::RBrace)) {
      if (check(TokenKind::Eof)) fail("'}'");
      if (accept_kw("use")) {
        do {
          decl.traits.push_back(expect(TokenKind::Identifier, "trait name").value);
        } while (accept(TokenKind::Comma));
        expect(TokenKind::Semi, "';'");
        continue;
      }
      bool is_static = false;
      while (true) {
        if (is_keyword(peek(), "public") || is_keyword(peek(), "private") ||
            is_keyword(peek(), "protected") || is_keyword(peek(), "var")) {
          advance();
          continue;
        }
        if (is_keyword(peek(), "static")) {
          is_static = true;
          advance();
          continue;
        }
        break;
      }
      if (is_keyword(peek(), "function")) {
        decl.methods.push_back(parse_function_decl());
        continue;
      }
      if (check(TokenKind::Variable)) {
        do {
          PropDecl p;
          p.name = expect(TokenKind::Variable, "property variable").value;
          p.is_static = is_static;
          if (accept(TokenKind::Assign)) p.default_value = parse_const_literal();
          decl.props.push_back(std::move(p));
        } while (accept(TokenKind::Comma));
        expect(TokenKind::Semi, "';'");
        continue;
      }
      fail("class member");
    }
    return make_stmt(ClassDeclStmt{std::move(decl)}, line);
  }

  // Compile-time constant literal (parameter/property defaults, static vars).
  Literal parse_const_literal() {
    ExprPtr e = parse_ternary();
    std::optional<Literal> lit = const_fold(*e);
    if (!lit) fail("constant expression");
    return *lit;
  }

  std::optional<Literal> const_fold(const Expr& e) const {
    if (const auto* lit = std::get_if<LiteralExpr>(&e.node)) return lit->value;
    if (const auto* un = std::get_if<UnaryExpr>(&e.node)) {
      if (un->op == UnOp::Neg) {
        auto inner = const_fold(*un->operand);
        if (inner && inner->is_int()) return Literal::integer(-inner->as_int());
        if (inner && inner->is_float()) return Literal::real(-inner->as_float());
      }
      return std::nullopt;
    }
    if (const auto* arr = std::get_if<ArrayExpr>(&e.node)) {
      Literal::Array out;
      std::int64_t next = 0;
      for (const auto& item : arr->items) {
        auto value = const_fold(*item.value);
        if (!value) return std::nullopt;
        if (item.key) {
          auto key = const_fold(*item.key);
          if (!key || key->is_array()) return std::nullopt;
          ArrayKey k = php_normalize_key(*key);
          if (std::holds_alternative<std::int64_t>(k))
            next = std::max(next, std::get<std::int64_t>(k) + 1);
          out.items.emplace_back(std::move(k), std::move(*value));
        } else {
          out.items.emplace_back(next++, std::move(*value));
        }
      }
      return Literal::array(std::move(out));
    }
    return std::nullopt;
  }

  // ---------- expressions ----------

  ExprPtr parse_expr() { return parse_assignment(); }

  ExprPtr parse_assignment() {
    ExprPtr lhs = parse_ternary();
    AssignOp op;
    switch (peek().kind) {
      case TokenKind::Assign: op = AssignOp::Plain; break;
      case TokenKind::DotEq: op = AssignOp::Concat; break;
      case TokenKind::PlusEq: op = AssignOp::Add; break;
      case TokenKind::MinusEq: op = AssignOp::Sub; break;
      case TokenKind::StarEq: op = AssignOp::Mul; break;
      case TokenKind::SlashEq: op = AssignOp::Div; break;
      default: return lhs;
    }
    std::uint32_t line = cur_line();
    if (!is_lvalue(*lhs)) fail("assignable target");
    advance();
    if (check(TokenKind::Amp)) fail("expression (assignment by reference is out of scope)");
    ExprPtr rhs = parse_assignment();
    return make_expr(AssignExpr{op, std::move(lhs), std::move(rhs)}, line);
  }

  ExprPtr parse_ternary() {
    ExprPtr cond = parse_or();
    if (!check(TokenKind::Question)) return cond;
    std::uint32_t line = cur_line();
    advance();
    ExprPtr then_e;
    if (!check(TokenKind::Colon)) then_e = parse_expr();
    expect(TokenKind::Colon, "':'");
    ExprPtr else_e = parse_ternary();
    return make_expr(TernaryExpr{std::move(cond), std::move(then_e), std::move(else_e)},
                     line);
  }

  ExprPtr parse_or() {
    ExprPtr lhs = parse_and();
    while (check(TokenKind::OrOr)) {
      std::uint32_t line = cur_line();
      advance();
      lhs = make_expr(BinaryExpr{BinOp::Or, std::move(lhs), parse_and()}, line);
    }
    return lhs;
  }

  ExprPtr parse_and() {
    ExprPtr lhs = parse_comparison();
    while (check(TokenKind::AndAnd)) {
      std::uint32_t line = cur_line();
      advance();
      lhs = make_expr(BinaryExpr{BinOp::And, std::move(lhs), parse_comparison()}, line);
    }
    return lhs;
  }

  ExprPtr parse_comparison() {
    ExprPtr lhs = parse_additive();
    while (true) {
      BinOp op;
      switch (peek().kind) {
        case TokenKind::EqEq: op = BinOp::Eq; break;
        case TokenKind::BangEq: op = BinOp::NotEq; break;
        case TokenKind::EqEqEq: op = BinOp::Identical; break;
        case TokenKind::BangEqEq: op = BinOp::NotIdentical; break;
        case TokenKind::Lt: op = BinOp::Lt; break;
        case TokenKind::Le: op = BinOp::Le; break;
        case TokenKind::Gt: op = BinOp::Gt; break;
        case TokenKind::Ge: op = BinOp::Ge; break;
        default: return lhs;
      }
      std::uint32_t line = cur_line();
      advance();
      lhs = make_expr(BinaryExpr{op, std::move(lhs), parse_additive()}, line);
    }
  }

  ExprPtr parse_additive() {
    ExprPtr lhs = parse_multiplicative();
    while (true) {
      BinOp op;
      switch (peek().kind) {
        case TokenKind::Plus: op = BinOp::Add; break;
        case TokenKind::Minus: op = BinOp::Sub; break;
        case TokenKind::Dot: op = BinOp::Concat; break;
        default: return lhs;
      }
      std::uint32_t line = cur_line();
      advance();
      lhs = make_expr(BinaryExpr{op, std::move(lhs), parse_multiplicative()}, line);
    }
  }

  ExprPtr parse_multiplicative() {
    ExprPtr lhs = parse_unary();
    while (true) {
      BinOp op;
      switch (peek().kind) {
        case TokenKind::Star: op = BinOp::Mul; break;
        case TokenKind::Slash: op = BinOp::Div; break;
        case TokenKind::Percent: op = BinOp::Mod; break;
        default: return lhs;
      }
      std::uint32_t line = cur_line();
      advance();
      lhs = make_expr(BinaryExpr{op, std::move(lhs), parse_unary()}, line);
    }
  }

  ExprPtr parse_unary() {
    std::uint32_t line = cur_line();
    if (accept(TokenKind::Bang))
      return make_expr(UnaryExpr{UnOp::Not, parse_unary()}, line);
    if (accept(TokenKind::Minus))
      return make_expr(UnaryExpr{UnOp::Neg, parse_unary()}, line);
    if (accept(TokenKind::Plus)) return parse_unary();
    if (check(TokenKind::Inc) || check(TokenKind::Dec)) {
      bool inc = advance().kind == TokenKind::Inc;
      ExprPtr target = parse_unary();
      if (!is_lvalue(*target)) fail("assignable target of ++/--");
      return make_expr(IncDecExpr{std::move(target), inc, true}, line);
    }
    return parse_postfix();
  }

  std::vector<Arg> parse_args() {
    std::vector<Arg> args;
    expect(TokenKind::LParen, "'('");
    if (!check(TokenKind::RParen)) {
      do {
        if (check(TokenKind::RParen)) break;  // trailing comma
        Arg a;
        if (accept(TokenKind::Ellipsis)) a.unpack = true;
        a.value = parse_expr();
        args.push_back(std::move(a));
      } while (accept(TokenKind::Comma));
    }
    expect(TokenKind::RParen, "')'");
    return args;
  }

  ExprPtr parse_postfix() {
    ExprPtr base = parse_primary();
    while (true) {
      std::uint32_t line = cur_line();
      if (check(TokenKind::LParen)) {
        if (auto* prop = std::get_if<PropExpr>(&base->node)) {
          MethodCallExpr call;
          call.base = std::move(prop->base);
          call.name = prop->name;
          call.dyn_name = std::move(prop->dyn_name);
          call.args = parse_args();
          base = make_expr(std::move(call), line);
        } else if (auto* cref = std::get_if<ConstExpr>(&base->node)) {
          CallExpr call;
          call.name = cref->name;
          call.args = parse_args();
          base = make_expr(std::move(call), line);
        } else {
          CallExpr call;
          call.callee_expr = std::move(base);
          call.args = parse_args();
          base = make_expr(std::move(call), line);
        }
        continue;
      }
      if (check(TokenKind::LBracket)) {
        advance();
        IndexExpr idx;
        idx.base = std::move(base);
        if (!check(TokenKind::RBracket)) idx.index = parse_expr();
        expect(TokenKind::RBracket, "']'");
        base = make_expr(std::move(idx), line);
        continue;
      }
      if (check(TokenKind::Arrow)) {
        advance();
        PropExpr prop;
        prop.base = std::move(base);
        if (check(TokenKind::Identifier)) {
          prop.name = advance().value;
        } else if (check(TokenKind::Variable)) {
          const Token& v = advance();
          prop.dyn_name = make_expr(VarExpr{v.value}, v.line + line_base);
        } else {
          fail("property or method name");
        }
        base = make_expr(std::move(prop), line);
        continue;
      }
      if (check(TokenKind::DoubleColon)) {
        auto* cref = std::get_if<ConstExpr>(&base->node);
        if (!cref) fail("class name before '::'");
        advance();
        StaticCallExpr call;
        call.class_name = cref->name;
        call.name = expect(TokenKind::Identifier, "static method name").value;
        if (!check(TokenKind::LParen))
          fail("'(' (class constants and static properties are out of scope)");
        call.args = parse_args();
        base = make_expr(std::move(call), line);
        continue;
      }
      if (check(TokenKind::Inc) || check(TokenKind::Dec)) {
        if (!is_lvalue(*base)) return base;
        bool inc = advance().kind == TokenKind::Inc;
        base = make_expr(IncDecExpr{std::move(base), inc, false}, line);
        continue;
      }
      return base;
    }
  }

  ExprPtr parse_dollar_var() {
    std::uint32_t line = cur_line();
    advance();  // $
    if (check(TokenKind::Variable)) {
      const Token& v = advance();
      return make_expr(VarVarExpr{make_expr(VarExpr{v.value}, v.line + line_base)}, line);
    }
    if (check(TokenKind::Dollar)) {
      return make_expr(VarVarExpr{parse_dollar_var()}, line);
    }
    if (accept(TokenKind::LBrace)) {
      ExprPtr inner = parse_expr();
      expect(TokenKind::RBrace, "'}'");
      return make_expr(VarVarExpr{std::move(inner)}, line);
    }
    fail("variable name after '$'");
  }

  Literal int_literal_from(const Token& t) const {
    const std::string& s = t.lexeme;
    if (s.size() > 2 && (s[1] == 'x' || s[1] == 'X'))
      return Literal::integer(std::strtoll(s.c_str() + 2, nullptr, 16));
    return Literal::integer(std::strtoll(s.c_str(), nullptr, 10));
  }

  ExprPtr parse_primary() {
    const Token& t = peek();
    std::uint32_t line = cur_line();
    switch (t.kind) {
      case TokenKind::IntLit: {
        advance();
        return make_expr(LiteralExpr{int_literal_from(t)}, line);
      }
      case TokenKind::FloatLit: {
        advance();
        return make_expr(LiteralExpr{Literal::real(std::strtod(t.lexeme.c_str(), nullptr))},
                         line);
      }
      case TokenKind::SqString: {
        advance();
        return make_expr(LiteralExpr{Literal::str(t.value)}, line);
      }
      case TokenKind::DqString: {
        advance();
        return parse_interpolated(t.value, line);
      }
      case TokenKind::Variable: {
        advance();
        return make_expr(VarExpr{t.value}, line);
      }
      case TokenKind::Dollar: return parse_dollar_var();
      case TokenKind::LParen: {
        advance();
        ExprPtr e = parse_expr();
        expect(TokenKind::RParen, "')'");
        return e;
      }
      case TokenKind::LBracket: {
        advance();
        return parse_array_items(TokenKind::RBracket, line);
      }
      case TokenKind::Identifier: {
        std::string kw = lower(t.value);
        if (kw == "true") { advance(); return make_expr(LiteralExpr{Literal::boolean(true)}, line); }
        if (kw == "false") { advance(); return make_expr(LiteralExpr{Literal::boolean(false)}, line); }
        if (kw == "null") { advance(); return make_expr(LiteralExpr{Literal::null()}, line); }
        if (kw == "array" && peek(1).kind == TokenKind::LParen) {
          advance();
          advance();
          return parse_array_items(TokenKind::RParen, line);
        }
        if (kw == "isset" || kw == "empty") {
          advance();
          expect(TokenKind::LParen, "'('");
          IssetExpr e;
          e.is_empty = kw == "empty";
          do {
            e.args.push_back(parse_expr());
          } while (accept(TokenKind::Comma));
          expect(TokenKind::RParen, "')'");
          return make_expr(std::move(e), line);
        }
        if (kw == "include" || kw == "include_once" || kw == "require" ||
            kw == "require_once") {
          advance();
          IncludeFlavor flavor = kw == "include"        ? IncludeFlavor::Include
                                 : kw == "include_once" ? IncludeFlavor::IncludeOnce
                                 : kw == "require"      ? IncludeFlavor::Require
                                                        : IncludeFlavor::RequireOnce;
          return make_expr(IncludeExpr{flavor, parse_expr()}, line);
        }
        if (kw == "eval") {
          advance();
          expect(TokenKind::LParen, "'('");
          ExprPtr code = parse_expr();
          expect(TokenKind::RParen, "')'");
          return make_expr(IncludeExpr{IncludeFlavor::Eval, std::move(code)}, line);
        }
        if (kw == "exit" || kw == "die") {
          advance();
          ExitExpr e;
          if (accept(TokenKind::LParen)) {
            if (!check(TokenKind::RParen)) e.value = parse_expr();
            expect(TokenKind::RParen, "')'");
          }
          return make_expr(std::move(e), line);
        }
        if (kw == "print") {
          advance();
          return make_expr(PrintExpr{parse_expr()}, line);
        }
        if (kw == "new") {
          advance();
          NewExpr e;
          if (check(TokenKind::Identifier)) {
            e.class_name = advance().value;
          } else if (check(TokenKind::Variable)) {
            const Token& v = advance();
            e.dyn_class = make_expr(VarExpr{v.value}, v.line + line_base);
          } else {
            fail("class name");
          }
          if (check(TokenKind::LParen)) e.args = parse_args();
          return make_expr(std::move(e), line);
        }
        if (kw == "function") fail("expression (closures are out of scope)");
        advance();
        return make_expr(ConstExpr{t.value}, line);
      }
      default: fail("expression");
    }
  }

  ExprPtr parse_array_items(TokenKind closer, std::uint32_t line) {
    ArrayExpr arr;
    if (!check(closer)) {
      do {
        if (check(closer)) break;  // trailing comma
        ArrayExpr::Item item;
        item.value = parse_expr();
        if (accept(TokenKind::DoubleArrow)) {
          item.key = std::move(item.value);
          item.value = parse_expr();
        }
        arr.items.push_back(std::move(item));
      } while (accept(TokenKind::Comma));
    }
    expect(closer, closer == TokenKind::RParen ? "')'" : "']'");
    return make_expr(std::move(arr), line);
  }

  // ---------- double-quoted string interpolation ----------

  ExprPtr parse_interpolated(const std::string& raw, std::uint32_t line);
};

// Decodes double-quote escapes in a literal chunk.
std::string decode_dq_chunk(const std::string& raw) {
  std::string out;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    char c = raw[i];
    if (c != '\\' || i + 1 >= raw.size()) {
      out += c;
      continue;
    }
    char e = raw[++i];
    switch (e) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case 'v': out += '\v'; break;
      case 'f': out += '\f'; break;
      case 'e': out += '\x1b'; break;
      case '\\': out += '\\'; break;
      case '$': out += '$'; break;
      case '"': out += '"'; break;
      case 'x': {
        std::size_t j = i + 1, val = 0, digits = 0;
        while (j < raw.size() && digits < 2 &&
               std::isxdigit(static_cast<unsigned char>(raw[j]))) {
          val = val * 16 + (std::isdigit(static_cast<unsigned char>(raw[j]))
                                ? raw[j] - '0'
                                : (std::tolower(raw[j]) - 'a' + 10));
          ++j;
          ++digits;
        }
        if (digits > 0) {
          out += static_cast<char>(val);
          i = j - 1;
        } else {
          out += "\\x";
        }
        break;
      }
      default:
        out += '\\';
        out += e;
    }
  }
  return out;
}

ExprPtr Parser::parse_interpolated(const std::string& raw, std::uint32_t line) {
  std::vector<ExprPtr> parts;
  std::string chunk;
  std::uint32_t cur = line;

  auto flush_chunk = [&] {
    if (chunk.empty()) return;
    parts.push_back(make_expr(LiteralExpr{Literal::str(decode_dq_chunk(chunk))}, cur));
    chunk.clear();
  };

  std::size_t i = 0;
  while (i < raw.size()) {
    char c = raw[i];
    if (c == '\n') ++cur;
    if (c == '\\' && i + 1 < raw.size()) {
      chunk += c;
      chunk += raw[i + 1];
      i += 2;
      continue;
    }
    if (c == '$' && i + 1 < raw.size() &&
        (std::isalpha(static_cast<unsigned char>(raw[i + 1])) || raw[i + 1] == '_')) {
      flush_chunk();
      std::size_t j = i + 1;
      while (j < raw.size() &&
             (std::isalnum(static_cast<unsigned char>(raw[j])) || raw[j] == '_'))
        ++j;
      ExprPtr var = make_expr(VarExpr{raw.substr(i + 1, j - i - 1)}, cur);
      i = j;
      // Simple syntax allows one [index] or one ->prop.
      if (i < raw.size() && raw[i] == '[') {
        std::size_t close = raw.find(']', i);
        if (close == std::string::npos) {
          chunk += '[';
          ++i;
          parts.push_back(std::move(var));
          continue;
        }
        std::string key = raw.substr(i + 1, close - i - 1);
        ExprPtr key_expr;
        if (!key.empty() && key[0] == '$') {
          key_expr = make_expr(VarExpr{key.substr(1)}, cur);
        } else if (!key.empty() &&
                   (std::isdigit(static_cast<unsigned char>(key[0])) || key[0] == '-')) {
          key_expr =
              make_expr(LiteralExpr{Literal::integer(std::strtoll(key.c_str(), nullptr, 10))},
                        cur);
        } else {
          key_expr = make_expr(LiteralExpr{Literal::str(key)}, cur);
        }
        IndexExpr idx;
        idx.base = std::move(var);
        idx.index = std::move(key_expr);
        var = make_expr(std::move(idx), cur);
        i = close + 1;
      } else if (i + 1 < raw.size() && raw[i] == '-' && raw[i + 1] == '>' &&
                 i + 2 < raw.size() &&
                 (std::isalpha(static_cast<unsigned char>(raw[i + 2])) || raw[i + 2] == '_')) {
        std::size_t j2 = i + 2;
        while (j2 < raw.size() &&
               (std::isalnum(static_cast<unsigned char>(raw[j2])) || raw[j2] == '_'))
          ++j2;
        PropExpr prop;
        prop.base = std::move(var);
        prop.name = raw.substr(i + 2, j2 - i - 2);
        var = make_expr(std::move(prop), cur);
        i = j2;
      }
      parts.push_back(std::move(var));
      continue;
    }
    if (c == '{' && i + 1 < raw.size() && raw[i + 1] == '$') {
      // Complex syntax: balanced braces, quote-aware; inner text reparsed.
      std::size_t j = i + 1;
      int depth = 1;
      char quote = 0;
      for (; j < raw.size(); ++j) {
        char d = raw[j];
        if (quote) {
          if (d == '\\') ++j;
          else if (d == quote) quote = 0;
          continue;
        }
        if (d == '\'' || d == '"') quote = d;
        else if (d == '{') ++depth;
        else if (d == '}' && --depth == 0) break;
      }
      if (j >= raw.size()) {
        chunk += c;
        ++i;
        continue;
      }
      flush_chunk();
      std::string inner = raw.substr(i + 1, j - i - 1);
      parts.push_back(parse_expression_source(inner, cur - 1));
      i = j + 1;
      continue;
    }
    chunk += c;
    ++i;
  }
  flush_chunk();

  if (parts.empty())
    return make_expr(LiteralExpr{Literal::str("")}, line);
  if (parts.size() == 1 && std::holds_alternative<LiteralExpr>(parts[0]->node))
    return std::move(parts[0]);
  return make_expr(InterpExpr{std::move(parts)}, line);
}

}  // namespace

ast::Body parse(const std::vector<Token>& tokens) {
  if (tokens.empty()) return {};
  Parser p{tokens};
  return p.parse_program();
}

ast::ExprPtr parse_expression_source(const std::string& source, std::uint32_t line_base) {
  std::vector<Token> toks = lex("<?php " + source);
  Parser p{toks, 0, line_base};
  if (!p.accept(TokenKind::OpenTag)) p.fail("expression");
  ast::ExprPtr e = p.parse_expr();
  if (!p.check(TokenKind::Eof)) p.fail("end of expression");
  return e;
}

}  // namespace opflow
