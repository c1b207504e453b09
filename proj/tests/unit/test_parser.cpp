#include "doctest.h"
#include "opflow/lexer.hpp"
#include "opflow/parser.hpp"

using namespace opflow;
using namespace opflow::ast;

namespace {

Body parse_php(const std::string& src) { return parse(lex(src)); }

const Expr& expr_of(const Stmt& s) {
  return *std::get<ExprStmt>(s.node).expr;
}

}  // namespace

TEST_CASE("array append assignment node") {
  // $array[] = $b; at line 4 becomes an assignment whose target has no index.
  Body body = parse_php(
      "<?php\n$b = $_GET['p1'];\n$array = array('abc', 'def', 'ghi');\n$array[] = "
      "$b;\nif($array[1]){\n  echo $array[4];\n}\n");
  REQUIRE(body.size() >= 4);
  const Stmt& s = *body[2];
  CHECK(s.line == 4);
  const auto& assign = std::get<AssignExpr>(expr_of(s).node);
  const auto& target = std::get<IndexExpr>(assign.target->node);
  CHECK(target.index == nullptr);  // [] append
  CHECK(std::get<VarExpr>(target.base->node).name == "array");
}

TEST_CASE("variadic declaration") {
  Body body = parse_php(
      "<?php\nfunction sum(...$numbers){\n  foreach ($numbers as $n) {\n    echo $n;\n "
      " }\n}\n$b = $_GET[\"p1\"];\nsum(1, 2, 3, $b);\n");
  const auto& decl = std::get<FunctionDeclStmt>(body[0]->node).decl;
  CHECK(decl.name == "sum");
  REQUIRE(decl.params.size() == 1);
  CHECK(decl.params[0].name == "numbers");
  CHECK(decl.params[0].variadic);
}

TEST_CASE("missing expression is a parse error at line 1") {
  try {
    parse_php("<?php $a = ;");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 1);
  }
}

TEST_CASE("precedence: assignment < ternary < or < and < comparison < concat < mul") {
  Body body = parse_php("<?php $x = $a == 1 . 2 * 3 && $b || $c ? 'y' : 'n';");
  const auto& assign = std::get<AssignExpr>(expr_of(*body[0]).node);
  const auto& ternary = std::get<TernaryExpr>(assign.value->node);
  const auto& or_node = std::get<BinaryExpr>(ternary.cond->node);
  CHECK(or_node.op == BinOp::Or);
  const auto& and_node = std::get<BinaryExpr>(or_node.lhs->node);
  CHECK(and_node.op == BinOp::And);
  const auto& eq_node = std::get<BinaryExpr>(and_node.lhs->node);
  CHECK(eq_node.op == BinOp::Eq);
  const auto& concat_node = std::get<BinaryExpr>(eq_node.rhs->node);
  CHECK(concat_node.op == BinOp::Concat);
  const auto& mul_node = std::get<BinaryExpr>(concat_node.rhs->node);
  CHECK(mul_node.op == BinOp::Mul);
}

TEST_CASE("postfix chains") {
  Body body = parse_php("<?php $o->a->b('x')[0]();");
  const Expr& e = expr_of(*body[0]);
  const auto& outer_call = std::get<CallExpr>(e.node);
  CHECK(outer_call.name.empty());
  const auto& idx = std::get<IndexExpr>(outer_call.callee_expr->node);
  const auto& method = std::get<MethodCallExpr>(idx.base->node);
  CHECK(method.name == "b");
  const auto& prop = std::get<PropExpr>(method.base->node);
  CHECK(prop.name == "a");
}

TEST_CASE("variable variables and dynamic calls") {
  Body body = parse_php("<?php $$x = 1; $f($page); $o->$m(); new $cls(1);");
  CHECK(std::holds_alternative<VarVarExpr>(
      std::get<AssignExpr>(expr_of(*body[0]).node).target->node));
  const auto& dyn_call = std::get<CallExpr>(expr_of(*body[1]).node);
  CHECK(dyn_call.name.empty());
  CHECK(std::holds_alternative<VarExpr>(dyn_call.callee_expr->node));
  const auto& dyn_method = std::get<MethodCallExpr>(expr_of(*body[2]).node);
  CHECK(dyn_method.name.empty());
  CHECK(dyn_method.dyn_name != nullptr);
  const auto& dyn_new = std::get<NewExpr>(expr_of(*body[3]).node);
  CHECK(dyn_new.class_name.empty());
  CHECK(dyn_new.dyn_class != nullptr);
}

TEST_CASE("interpolation forms") {
  Body body = parse_php(R"(<?php $s = "a$x b$arr[k] c{$o->p}{$a['q']} d\n";)");
  const auto& assign = std::get<AssignExpr>(expr_of(*body[0]).node);
  const auto& interp = std::get<InterpExpr>(assign.value->node);
  REQUIRE(interp.parts.size() >= 7);
  CHECK(std::holds_alternative<VarExpr>(interp.parts[1]->node));
  CHECK(std::holds_alternative<IndexExpr>(interp.parts[3]->node));
  CHECK(std::holds_alternative<PropExpr>(interp.parts[5]->node));
  CHECK(std::holds_alternative<IndexExpr>(interp.parts[6]->node));
  const auto& tail = std::get<LiteralExpr>(interp.parts.back()->node);
  CHECK(tail.value.as_string() == " d\n");
}

TEST_CASE("class declarations") {
  Body body = parse_php(
      "<?php class B extends A { use T; public $p = 1; private static $q; function "
      "m($x) { return $x; } }");
  const auto& decl = std::get<ClassDeclStmt>(body[0]->node).decl;
  CHECK(decl.name == "B");
  CHECK(decl.parent == "A");
  REQUIRE(decl.traits.size() == 1);
  CHECK(decl.traits[0] == "T");
  REQUIRE(decl.props.size() == 2);
  CHECK(decl.props[0].default_value == Literal::integer(1));
  CHECK(decl.props[1].is_static);
  REQUIRE(decl.methods.size() == 1);
}

TEST_CASE("switch with default and fallthrough bodies") {
  Body body = parse_php(
      "<?php switch($x){ case 'a': echo 1; break; case 'b': default: echo 2; }");
  const auto& sw = std::get<SwitchStmt>(body[0]->node);
  REQUIRE(sw.cases.size() == 3);
  CHECK(sw.cases[0].value != nullptr);
  CHECK(sw.cases[1].body.empty());
  CHECK(sw.cases[2].value == nullptr);
}

TEST_CASE("unsupported constructs fail loudly") {
  CHECK_THROWS_AS(parse_php("<?php goto end;"), ParseError);
  CHECK_THROWS_AS(parse_php("<?php $f = function() { return 1; };"), ParseError);
  CHECK_THROWS_AS(parse_php("<?php try { x(); } catch (E $e) {}"), ParseError);
  CHECK_THROWS_AS(parse_php("<?php $a = &$b;"), ParseError);
  CHECK_THROWS_AS(parse_php("<?php break 2;"), ParseError);
}

TEST_CASE("include and eval expression forms") {
  Body body = parse_php(
      "<?php include 'a.php'; include_once('b.php'); require $x; eval('echo 1;');");
  CHECK(std::get<IncludeExpr>(expr_of(*body[0]).node).flavor == IncludeFlavor::Include);
  CHECK(std::get<IncludeExpr>(expr_of(*body[1]).node).flavor ==
        IncludeFlavor::IncludeOnce);
  CHECK(std::get<IncludeExpr>(expr_of(*body[2]).node).flavor == IncludeFlavor::Require);
  CHECK(std::get<IncludeExpr>(expr_of(*body[3]).node).flavor == IncludeFlavor::Eval);
}

TEST_CASE("keywords are case-insensitive") {
  Body body = parse_php("<?php IF (TRUE) { ECHO 1; } ELSE { Echo 2; }");
  CHECK(std::holds_alternative<IfStmt>(body[0]->node));
}
