#pragma once

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "opflow/ir.hpp"
#include "opflow/literal.hpp"

namespace opflow::ast {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using Body = std::vector<StmtPtr>;

enum class BinOp {
  Concat, Add, Sub, Mul, Div, Mod,
  Eq, NotEq, Identical, NotIdentical, Lt, Le, Gt, Ge,
  And, Or,
};

enum class UnOp { Not, Neg };
enum class AssignOp { Plain, Concat, Add, Sub, Mul, Div };

struct LiteralExpr { Literal value; };
struct VarExpr { std::string name; };
struct VarVarExpr { ExprPtr name_expr; };  // $$x
// "a{$b}c" after interpolation splitting; parts concatenate left to right.
struct InterpExpr { std::vector<ExprPtr> parts; };
struct ArrayExpr {
  struct Item { ExprPtr key; ExprPtr value; };  // key may be null
  std::vector<Item> items;
};
struct IndexExpr { ExprPtr base; ExprPtr index; };  // index null = [] append target
struct PropExpr { ExprPtr base; std::string name; ExprPtr dyn_name; };
struct ConstExpr { std::string name; };  // bare identifier constant ref

struct Arg { ExprPtr value; bool unpack = false; };

struct CallExpr {
  std::string name;     // empty when dynamic
  ExprPtr callee_expr;  // $f(...) / expression callee
  std::vector<Arg> args;
};
struct MethodCallExpr {
  ExprPtr base;
  std::string name;  // empty when dynamic
  ExprPtr dyn_name;
  std::vector<Arg> args;
};
struct StaticCallExpr { std::string class_name; std::string name; std::vector<Arg> args; };
struct NewExpr { std::string class_name; ExprPtr dyn_class; std::vector<Arg> args; };

struct BinaryExpr { BinOp op; ExprPtr lhs; ExprPtr rhs; };
struct UnaryExpr { UnOp op; ExprPtr operand; };
struct AssignExpr { AssignOp op; ExprPtr target; ExprPtr value; };
struct TernaryExpr { ExprPtr cond; ExprPtr then_expr; ExprPtr else_expr; };  // then may be null (?:)
struct IncDecExpr { ExprPtr target; bool increment; bool prefix; };
struct IssetExpr { std::vector<ExprPtr> args; bool is_empty; };
struct IncludeExpr { IncludeFlavor flavor; ExprPtr path; };  // Eval flavor covers eval()
struct ExitExpr { ExprPtr value; };  // exit/die
struct PrintExpr { ExprPtr value; };

using ExprNode = std::variant<LiteralExpr, VarExpr, VarVarExpr, InterpExpr, ArrayExpr,
                              IndexExpr, PropExpr, ConstExpr, CallExpr, MethodCallExpr,
                              StaticCallExpr, NewExpr, BinaryExpr, UnaryExpr, AssignExpr,
                              TernaryExpr, IncDecExpr, IssetExpr, IncludeExpr, ExitExpr,
                              PrintExpr>;

struct Expr {
  ExprNode node;
  std::uint32_t line = 1;
};

struct ParamDecl {
  std::string name;
  bool by_ref = false;
  bool variadic = false;
  std::optional<Literal> default_value;
};

struct FunctionDecl {
  std::string name;
  std::vector<ParamDecl> params;
  Body body;
  std::uint32_t line = 1;
};

struct PropDecl {
  std::string name;
  Literal default_value;
  bool is_static = false;
};

struct ClassDecl {
  std::string name;
  std::optional<std::string> parent;
  std::vector<std::string> traits;
  std::vector<PropDecl> props;
  std::vector<FunctionDecl> methods;
  bool is_trait = false;
};

struct ExprStmt { ExprPtr expr; };
struct EchoStmt { std::vector<ExprPtr> args; };
struct IfStmt {
  struct Arm { ExprPtr cond; Body body; };  // first arm = if, rest = elseif
  std::vector<Arm> arms;
  std::optional<Body> else_body;
};
struct WhileStmt { ExprPtr cond; Body body; };
struct ForStmt {
  std::vector<ExprPtr> init;
  std::vector<ExprPtr> cond;  // last one decides
  std::vector<ExprPtr> step;
  Body body;
};
struct ForeachStmt {
  ExprPtr subject;
  std::optional<std::string> key_var;
  std::string value_var;
  Body body;
};
struct SwitchStmt {
  struct CaseArm { ExprPtr value; Body body; };  // null value = default
  ExprPtr subject;
  std::vector<CaseArm> cases;
};
struct BreakStmt {};
struct ContinueStmt {};
struct ReturnStmt { ExprPtr value; };  // may be null
struct GlobalStmt { std::vector<std::string> names; };
struct StaticVarStmt { std::vector<std::pair<std::string, std::optional<Literal>>> vars; };
struct FunctionDeclStmt { FunctionDecl decl; };
struct ClassDeclStmt { ClassDecl decl; };
struct InlineHtmlStmt { std::string html; };

using StmtNode = std::variant<ExprStmt, EchoStmt, IfStmt, WhileStmt, ForStmt,
                              ForeachStmt, SwitchStmt, BreakStmt, ContinueStmt,
                              ReturnStmt, GlobalStmt, StaticVarStmt, FunctionDeclStmt,
                              ClassDeclStmt, InlineHtmlStmt>;

struct Stmt {
  StmtNode node;
  std::uint32_t line = 1;
};

inline ExprPtr make_expr(ExprNode node, std::uint32_t line) {
  auto e = std::make_unique<Expr>();
  e->node = std::move(node);
  e->line = line;
  return e;
}

inline StmtPtr make_stmt(StmtNode node, std::uint32_t line) {
  auto s = std::make_unique<Stmt>();
  s->node = std::move(node);
  s->line = line;
  return s;
}

}  // namespace opflow::ast
