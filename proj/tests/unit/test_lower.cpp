#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "opflow/dump.hpp"
#include "opflow/frontend.hpp"
#include "support/test_util.hpp"

using namespace opflow;

namespace {

std::vector<OpcodeKind> opcode_sequence(const OpUnit& unit) {
  std::vector<OpcodeKind> kinds;
  for (const auto& op : unit.oplines) kinds.push_back(op.opcode);
  return kinds;
}

int count_kind(const OpUnit& unit, OpcodeKind kind) {
  int n = 0;
  for (const auto& op : unit.oplines) n += op.opcode == kind ? 1 : 0;
  return n;
}

const Opline* first_of(const OpUnit& unit, OpcodeKind kind) {
  for (const auto& op : unit.oplines)
    if (op.opcode == kind) return &op;
  return nullptr;
}

}  // namespace

TEST_CASE("canonical branch shape for if") {
  // if($c){echo 1;} -> JMPZ(c, ->L), ECHO(1), L: next
  LoweredFile file = compile_source("<?php if($c){echo 1;}", "t.php");
  const OpUnit& main = file.main;
  REQUIRE(validate_unit(main).empty());
  const Opline* jmpz = first_of(main, OpcodeKind::JMPZ);
  REQUIRE(jmpz != nullptr);
  CHECK(jmpz->op1 == Operand::cv("c"));
  const Opline* echo = first_of(main, OpcodeKind::ECHO);
  REQUIRE(echo != nullptr);
  CHECK(echo->op1.literal == Literal::integer(1));
  // The JMPZ target lies beyond the echo.
  std::size_t echo_index = 0;
  for (std::size_t i = 0; i < main.oplines.size(); ++i)
    if (&main.oplines[i] == echo) echo_index = i;
  CHECK(jmpz->op2.index > echo_index);
}

TEST_CASE("for-loop shape: backward JMP and exiting JMPZ") {
  LoweredFile file = compile_source(
      "<?php\n$x = 10; $y = 0;\nfor ($i=0; $i < 10; $i++) { \n    if($i == 20){\n       "
      " $z = $_POST['xss']; echo $z;\n    }\n}\n",
      "t.php");
  const OpUnit& main = file.main;
  REQUIRE(validate_unit(main).empty());

  bool backward_jmp = false;
  for (std::size_t i = 0; i < main.oplines.size(); ++i) {
    const Opline& op = main.oplines[i];
    if (op.opcode == OpcodeKind::JMP && op.op1.index < i) backward_jmp = true;
  }
  CHECK(backward_jmp);

  const Opline* jmpz = first_of(main, OpcodeKind::JMPZ);
  REQUIRE(jmpz != nullptr);  // loop condition exit
  CHECK(count_kind(main, OpcodeKind::IS_SMALLER) == 1);
}

TEST_CASE("dynamic call lowering") {
  LoweredFile file =
      compile_source("<?php\n$func = \"dvwaHtmlEcho\";\n$func($page);\n", "t.php");
  const OpUnit& main = file.main;
  const Opline* init = first_of(main, OpcodeKind::INIT_DYNAMIC_CALL);
  REQUIRE(init != nullptr);
  CHECK(init->op1 == Operand::cv("func"));
  const Opline* send = first_of(main, OpcodeKind::SEND_VAR);
  REQUIRE(send != nullptr);
  CHECK(send->op1 == Operand::cv("page"));
  CHECK(first_of(main, OpcodeKind::DO_FCALL) != nullptr);
}

TEST_CASE("foreach compiles to FE_RESET/FE_FETCH loop") {
  LoweredFile file =
      compile_source("<?php foreach ($xs as $k => $v) { echo $v; }", "t.php");
  const OpUnit& main = file.main;
  REQUIRE(validate_unit(main).empty());
  auto kinds = opcode_sequence(main);
  CHECK(std::count(kinds.begin(), kinds.end(), OpcodeKind::FE_RESET) == 1);
  CHECK(std::count(kinds.begin(), kinds.end(), OpcodeKind::FE_FETCH) == 1);
  CHECK(std::count(kinds.begin(), kinds.end(), OpcodeKind::FE_KEY) == 1);
}

TEST_CASE("variable variable read goes through FETCH_R on a temp") {
  LoweredFile file = compile_source("<?php $y = $$x;", "t.php");
  const Opline* fetch = first_of(file.main, OpcodeKind::FETCH_R);
  REQUIRE(fetch != nullptr);
  CHECK(fetch->op1.kind == Operand::Kind::CompiledVar);  // $x read directly
}

TEST_CASE("superglobal access fetches the superglobal handle first") {
  LoweredFile file = compile_source("<?php $a = $_GET['x'];", "t.php");
  const OpUnit& main = file.main;
  const Opline* fetch = first_of(main, OpcodeKind::FETCH_R);
  REQUIRE(fetch != nullptr);
  CHECK(fetch->op1.literal == Literal::str("_GET"));
  CHECK(first_of(main, OpcodeKind::FETCH_DIM_R) != nullptr);
}

TEST_CASE("define and include lower to dedicated oplines") {
  LoweredFile file = compile_source(
      "<?php define('ROOT', 'www/'); include ROOT . 'a.php'; require_once 'b.php';",
      "t.php");
  const OpUnit& main = file.main;
  CHECK(first_of(main, OpcodeKind::DECLARE_CONST) != nullptr);
  CHECK(first_of(main, OpcodeKind::FETCH_CONSTANT) != nullptr);
  CHECK(count_kind(main, OpcodeKind::INCLUDE_OR_EVAL) == 2);
  const Opline* inc = first_of(main, OpcodeKind::INCLUDE_OR_EVAL);
  CHECK(inc->extended_value == static_cast<int>(IncludeFlavor::Include));
}

TEST_CASE("method calls and new lower to their INIT forms") {
  LoweredFile file = compile_source(
      "<?php $o = new A(1); $o->m($x); A::stat($y); $o->$dyn();", "t.php");
  const OpUnit& main = file.main;
  CHECK(first_of(main, OpcodeKind::NEW) != nullptr);
  CHECK(count_kind(main, OpcodeKind::INIT_METHOD_CALL) == 2);
  CHECK(first_of(main, OpcodeKind::INIT_STATIC_METHOD_CALL) != nullptr);
  CHECK(count_kind(main, OpcodeKind::DO_FCALL) == 4);
}

TEST_CASE("compound array assignment reads through the write place") {
  LoweredFile file = compile_source("<?php $page['body'] .= \"x{$html}y\";", "t.php");
  const OpUnit& main = file.main;
  const Opline* fetch_w = first_of(main, OpcodeKind::FETCH_DIM_W);
  REQUIRE(fetch_w != nullptr);
  CHECK(fetch_w->op1 == Operand::cv("page"));
  CHECK(fetch_w->op2.literal == Literal::str("body"));
  const Opline* concat_assign = first_of(main, OpcodeKind::ASSIGN_CONCAT);
  REQUIRE(concat_assign != nullptr);
  CHECK(concat_assign->op1.kind == Operand::Kind::Var);
}

TEST_CASE("string interpolation lowers to CONCAT chains") {
  LoweredFile file = compile_source("<?php $s = \"a{$v}b\";", "t.php");
  CHECK(count_kind(file.main, OpcodeKind::CONCAT) == 3);  // '' . a . v . b
}

TEST_CASE("short-circuit operators lower to jump chains") {
  LoweredFile file = compile_source("<?php $r = f() && g();", "t.php");
  const OpUnit& main = file.main;
  CHECK(first_of(main, OpcodeKind::JMPZ) != nullptr);
  CHECK(count_kind(main, OpcodeKind::BOOL_AND) == 0);
  CHECK(count_kind(main, OpcodeKind::DO_FCALL) == 2);
}

TEST_CASE("switch lowers to CASE dispatch") {
  LoweredFile file = compile_source(
      "<?php switch($x){ case 'a': echo 1; break; default: echo 2; }", "t.php");
  const OpUnit& main = file.main;
  CHECK(count_kind(main, OpcodeKind::CASE) == 1);
  CHECK(first_of(main, OpcodeKind::JMPNZ) != nullptr);
}

TEST_CASE("every unit ends with RETURN and validates") {
  LoweredFile file = compile_source(
      "<?php function f($a) { if ($a) { return 1; } } echo f(2);", "t.php");
  REQUIRE(!file.main.oplines.empty());
  CHECK(file.main.oplines.back().opcode == OpcodeKind::RETURN);
  CHECK(file.main.oplines.back().op1.literal == Literal::integer(1));
  REQUIRE(file.functions.size() == 1);
  CHECK(file.functions[0].oplines.back().opcode == OpcodeKind::RETURN);
  CHECK(validate_unit(file.functions[0]).empty());
  CHECK(file.functions[0].declared_in == "t.php");
}

TEST_CASE("line fidelity") {
  LoweredFile file = compile_source("<?php\n$a = 1;\n\necho $a;\n", "t.php");
  const Opline* assign = first_of(file.main, OpcodeKind::ASSIGN);
  REQUIRE(assign != nullptr);
  CHECK(assign->source_line == 2);
  const Opline* echo = first_of(file.main, OpcodeKind::ECHO);
  REQUIRE(echo != nullptr);
  CHECK(echo->source_line == 4);
}

TEST_CASE("lower errors on out-of-subset constructs") {
  CHECK_THROWS_AS(compile_source("<?php static $x = 1;", "t.php"), LowerError);
  CHECK_THROWS_AS(compile_source("<?php break;", "t.php"), LowerError);
  CHECK_THROWS_AS(
      compile_source("<?php class A { function __destruct() {} }", "t.php"), LowerError);
  try {
    compile_source("<?php\n\ncontinue;\n", "t.php");
    FAIL("expected LowerError");
  } catch (const LowerError& e) {
    CHECK(e.line == 3);
  }
}

TEST_CASE("lowering is deterministic (byte-identical dumps)") {
  const char* src =
      "<?php function f($x) { return $x . 'k'; } $a = $_GET['q']; echo f($a);";
  LoweredFile one = compile_source(src, "t.php");
  LoweredFile two = compile_source(src, "t.php");
  DumpDocument d1, d2;
  d1.units.push_back(one.main);
  for (const auto& fn : one.functions) d1.units.push_back(fn);
  d2.units.push_back(two.main);
  for (const auto& fn : two.functions) d2.units.push_back(fn);
  CHECK(write_dump(d1) == write_dump(d2));
}

// Round-trip law over the whole fixture corpus: lower -> write -> read yields
// structurally equal units for every corpus file.
TEST_CASE("corpus-wide frontend/dump round trip") {
  namespace fs = std::filesystem;
  int checked = 0;
  for (const auto& dirent :
       fs::recursive_directory_iterator(opflow::test::test_dir() + "/corpus")) {
    if (!dirent.is_regular_file() || dirent.path().extension() != ".php") continue;
    std::string path = dirent.path().generic_string();
    LoweredFile file = compile_source(opflow::test::read_file(path), path);
    DumpDocument doc;
    doc.units.push_back(file.main);
    for (const auto& fn : file.functions) doc.units.push_back(fn);
    doc.classes = file.classes;
    CAPTURE(path);
    CHECK(read_dump(write_dump(doc)) == doc);
    ++checked;
  }
  CHECK(checked >= 50);
}

// Golden dump: lowering output is pinned byte-for-byte for a representative
// source (line fidelity and format stability in one check).
TEST_CASE("golden dump") {
  std::string src = opflow::test::read_file(opflow::test::test_dir() + "/golden/sample.php");
  std::string golden =
      opflow::test::read_file(opflow::test::test_dir() + "/golden/sample.opcode");
  LoweredFile file = compile_source(src, "tests/golden/sample.php");
  DumpDocument doc;
  doc.units.push_back(file.main);
  for (const auto& fn : file.functions) doc.units.push_back(fn);
  doc.classes = file.classes;
  CHECK(write_dump(doc) == golden);
}

// Round-trip law: lower -> write -> read yields structurally equal units.
TEST_CASE("frontend/dump round trip") {
  const char* src =
      "<?php\nclass P { public $v = 'd'; function get() { return $this->v; } }\n"
      "function helper(...$rest) { return $rest; }\n"
      "$o = new P();\necho $o->get();\n";
  LoweredFile file = compile_source(src, "rt.php");
  DumpDocument doc;
  doc.units.push_back(file.main);
  for (const auto& fn : file.functions) doc.units.push_back(fn);
  doc.classes = file.classes;
  CHECK(read_dump(write_dump(doc)) == doc);
}
