#include "doctest.h"
#include "support/test_util.hpp"

using namespace opflow;
using opflow::test::analyze_snippet;
using opflow::test::analyze_sources;

namespace {

int count_class(const EntryResult& r, VulnClass c) {
  int n = 0;
  for (const auto& f : r.findings) n += f.vuln_class == c ? 1 : 0;
  return n;
}

// A DVWA-style reflected-XSS app: switch-driven include, array-element
// taint, and a variable function call crossing three files.
std::map<std::string, std::string> reflected_xss_corpus() {
  return {
      {"app/vulnerabilities/xss_r/index.php",
       "<?php\n"
       "define('ROOT', '../../');\n"
       "require_once ROOT.'dvwa/includes/dvwaPage.inc.php';\n"
       "switch($_COOKIE['security']) {\n"
       "  case 'low': $vulFile = 'low.php';break;\n"
       "  case 'impossible': $vulFile = 'impossible.php';break;\n"
       "}\n"
       "require_once ROOT.\"vulnerabilities/xss_r/source/{$vulFile}\";\n"
       "$page['body'] .= \"</form>{$html}</div>\";\n"
       "$func = \"dvwaHtmlEcho\";\n"
       "$func($page);\n"},
      {"app/vulnerabilities/xss_r/source/low.php",
       "<?php\n"
       "if (array_key_exists(\"name\", $_GET) && $_GET['name'] != NULL) {\n"
       "  $html .= '<pre>Hello'.$_GET['name'].'</pre>';\n"
       "}\n"},
      {"app/vulnerabilities/xss_r/source/impossible.php",
       "<?php\n"
       "if (array_key_exists(\"name\", $_GET) && $_GET['name'] != NULL) {\n"
       "  $html .= '<pre>Hello'.htmlspecialchars($_GET['name']).'</pre>';\n"
       "}\n"},
      {"app/dvwa/includes/dvwaPage.inc.php",
       "<?php\n"
       "function dvwaHtmlEcho($pPage){\n"
       "  echo \"... {$pPage['body']}...\";\n"
       "}\n"},
  };
}

}  // namespace

// ---- analyze_entry spec examples ----

TEST_CASE("reflected-xss app: one XSS from $_GET['name'] to the echo in dvwaHtmlEcho") {
  EntryResult r =
      analyze_sources(reflected_xss_corpus(), "app/vulnerabilities/xss_r/index.php");
  REQUIRE_FALSE(r.failed);
  REQUIRE(count_class(r, VulnClass::XSS) == 1);
  REQUIRE(r.findings.size() == 1);
  const Finding& f = r.findings[0];
  CHECK(f.sink.callee == "echo");
  CHECK(f.sink.file == "app/dvwa/includes/dvwaPage.inc.php");
  CHECK(f.sink.line == 3);
  REQUIRE(f.sources.size() == 1);
  const TaintLabel& src = *f.sources.begin();
  CHECK(src.kind == SourceKind::Get);
  CHECK(src.access_path == "name");
  CHECK(src.file == "app/vulnerabilities/xss_r/source/low.php");
  CHECK(src.line == 3);
  // Trace starts at the source and ends at the sink.
  REQUIRE(!f.trace.empty());
  CHECK(f.trace.front().file == src.file);
  CHECK(f.trace.front().line == src.line);
  CHECK(f.trace.back().file == f.sink.file);
  CHECK(f.trace.back().line == f.sink.line);
}

TEST_CASE("bounded loop: the unreachable branch stays unreported") {
  EntryResult r = analyze_snippet(
      "<?php\n$x = 10; $y = 0;\nfor ($i=0; $i < 10; $i++) { \n    if($i == 20){\n      "
      "  $z = $_POST['xss']; echo $z;\n    }\n}\n");
  CHECK(r.findings.empty());
}

TEST_CASE("empty file yields zero findings") {
  EntryResult r = analyze_snippet("<?php\n");
  CHECK(r.findings.empty());
}

// ---- transfer spec examples ----

TEST_CASE("shortest source-to-sink chain") {
  EntryResult r = analyze_snippet("<?php $a = $_GET['x']; echo $a;");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].vuln_class == VulnClass::XSS);
  CHECK(r.findings[0].sink.line == 1);
}

TEST_CASE("reversible sanitization blocks, decode restores") {
  // htmlspecialchars then echo: stack non-empty blocks effective taint.
  EntryResult blocked =
      analyze_snippet("<?php $a = htmlspecialchars($_GET['x']); echo $a;");
  CHECK(blocked.findings.empty());

  // encode then paired decode then echo: taint restored.
  EntryResult restored = analyze_snippet(
      "<?php $a = htmlspecialchars($_GET['x']); $b = htmlspecialchars_decode($a); echo "
      "$b;");
  REQUIRE(restored.findings.size() == 1);
  CHECK(restored.findings[0].vuln_class == VulnClass::XSS);

  // A decode without its encoder on top is a stack no-op.
  EntryResult mismatched = analyze_snippet(
      "<?php $a = htmlspecialchars($_GET['x']); $b = urldecode($a); echo $b;");
  CHECK(mismatched.findings.empty());
}

TEST_CASE("encode/decode pairing restores the pre-encode predicate") {
  for (const char* pair : {"urlencode/urldecode", "base64_encode/base64_decode",
                           "htmlentities/html_entity_decode", "addslashes/stripslashes"}) {
    std::string names(pair);
    std::string enc = names.substr(0, names.find('/'));
    std::string dec = names.substr(names.find('/') + 1);
    EntryResult r = analyze_snippet("<?php $a = " + enc + "($_GET['x']); $b = " + dec +
                                    "($a); echo $b;");
    CAPTURE(pair);
    CHECK(r.findings.size() == 1);
  }
}

// ---- eval_branch spec examples ----

TEST_CASE("concrete conditions prune; unknown conditions fork") {
  // concrete Int 1: truthy, only the taken branch is analyzed.
  EntryResult t = analyze_snippet(
      "<?php if (1) { echo $_GET['a']; } else { system($_GET['b']); }");
  CHECK(count_class(t, VulnClass::XSS) == 1);
  CHECK(count_class(t, VulnClass::RCE) == 0);

  // concrete false: the other way around.
  EntryResult f = analyze_snippet(
      "<?php $c = 0; if ($c) { echo $_GET['a']; } else { system($_GET['b']); }");
  CHECK(count_class(f, VulnClass::XSS) == 0);
  CHECK(count_class(f, VulnClass::RCE) == 1);

  // unknown: both arms explored.
  EntryResult both = analyze_snippet(
      "<?php if ($_GET['c']) { echo $_GET['a']; } else { system($_GET['b']); }");
  CHECK(count_class(both, VulnClass::XSS) == 1);
  CHECK(count_class(both, VulnClass::RCE) == 1);
}

// ---- run_loop spec examples ----

TEST_CASE("bounded loop runs exactly 10 concrete iterations") {
  // $i is concrete 10 after the loop, so the guarded sink fires only for ==10.
  EntryResult hit = analyze_snippet(
      "<?php for ($i=0; $i < 10; $i++) { $y = $i; } if ($i == 10) { echo $_GET['x']; }");
  CHECK(hit.findings.size() == 1);
  EntryResult miss = analyze_snippet(
      "<?php for ($i=0; $i < 10; $i++) { $y = $i; } if ($i == 11) { echo $_GET['x']; }");
  CHECK(miss.findings.empty());
}

TEST_CASE("zero-iteration concrete loop never analyzes its body") {
  EntryResult r = analyze_snippet("<?php while (0) { echo $_GET['x']; }");
  CHECK(r.findings.empty());
}

TEST_CASE("symbolic loop reaches a fixpoint that keeps taint") {
  // 0-vs-more iterations: $x tainted after the loop on the >=1 path.
  EntryResult r = analyze_snippet(
      "<?php while($_GET['c']){$x=$_GET['v'];} echo $x;");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].vuln_class == VulnClass::XSS);
}

TEST_CASE("long concrete loops exhaust the budget and still terminate") {
  AnalysisConfig config = test::default_config();
  config.max_loop_iterations = 16;
  EntryResult r = analyze_snippet(
      "<?php for ($i = 0; $i < 1000; $i++) { $acc = $acc . $i; } echo $_GET['x'];",
      config);
  REQUIRE_FALSE(r.failed);
  CHECK(r.findings.size() == 1);  // the code after the loop is reached
}

// ---- resolve_include spec examples ----

TEST_CASE("the four include path cases resolve and report") {
  std::map<std::string, std::string> sources = {
      {"site/index.php",
       "<?php\n"
       "define('DIR_ROOT', 'www/');\n"
       "$a = array('upload/','images/');\n"
       "include(DIR_ROOT . $a[0] .'a.php');\n"
       "set_include_path( get_include_path() . 'lib/' );\n"
       "include('Model/Init.php');\n"
       "chdir(\"config/\");\n"
       "include(\"db.php\");\n"
       "include($_GET['filepath']);\n"},
      {"site/www/upload/a.php", "<?php $case1 = $_GET['a'];\n"},
      {"site/lib/Model/Init.php", "<?php $case2 = $_GET['b'];\n"},
      {"site/config/db.php", "<?php echo $case1 . $case2;\n"},
  };
  EntryResult r = analyze_sources(sources, "site/index.php");
  REQUIRE_FALSE(r.failed);
  // Cases 1-3 resolve: taint from a.php and Init.php reaches the echo in db.php.
  REQUIRE(count_class(r, VulnClass::XSS) == 1);
  const Finding* xss = nullptr;
  for (const auto& f : r.findings)
    if (f.vuln_class == VulnClass::XSS) xss = &f;
  REQUIRE(xss != nullptr);
  CHECK(xss->sink.file == "site/config/db.php");
  CHECK(xss->sources.size() == 2);
  // Case 4: tainted include path reports FI.
  REQUIRE(count_class(r, VulnClass::FI) == 1);
}

TEST_CASE("unresolved concrete include logs and continues") {
  EntryResult r = analyze_snippet("<?php include('missing.php'); echo $_GET['x'];");
  CHECK(r.findings.size() == 1);
  bool logged = false;
  for (const auto& log : r.logs)
    logged = logged || log.find("include target not found") != std::string::npos;
  CHECK(logged);
}

TEST_CASE("include_once suppresses re-inclusion on the same path") {
  std::map<std::string, std::string> sources = {
      {"a/main.php",
       "<?php include_once('inc.php'); include_once('inc.php'); echo $n;\n"},
      {"a/inc.php", "<?php $n = $n . $_GET['x'];\n"},
  };
  EntryResult r = analyze_sources(sources, "a/main.php");
  REQUIRE(r.findings.size() == 1);
  // One inclusion: exactly one source hop chain, not a doubled concat.
  CHECK(r.findings[0].sources.size() == 1);
}

TEST_CASE("includes execute in the caller's variable scope") {
  std::map<std::string, std::string> sources = {
      {"b/main.php", "<?php $x = $_GET['q']; include('use.php');\n"},
      {"b/use.php", "<?php echo $x;\n"},
  };
  EntryResult r = analyze_sources(sources, "b/main.php");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].sink.file == "b/use.php");
}

// ---- call_function spec examples ----

TEST_CASE("dynamic call with concrete name resolves") {
  EntryResult r = analyze_snippet(
      "<?php function sink($v) { echo $v; } $func = 'sink'; $func($_GET['n']);");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].sink.callee == "echo");
}

TEST_CASE("variadic packing taints the appended argument") {
  EntryResult r = analyze_snippet(
      "<?php\nfunction sum(...$numbers){\n  foreach ($numbers as $n) {\n    echo $n;\n  "
      "}\n}\n$b = $_GET[\"p1\"];\nsum(1, 2, 3, $b);\n");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].vuln_class == VulnClass::XSS);
  CHECK(r.findings[0].sink.line == 4);  // echo $n
  CHECK(r.findings[0].sources.begin()->access_path == "p1");
}

TEST_CASE("identity function passes taint through its return") {
  EntryResult r = analyze_snippet(
      "<?php function f($x){return $x;} echo f($_GET['a']);");
  CHECK(r.findings.size() == 1);
}

TEST_CASE("by-ref parameters write back") {
  EntryResult r = analyze_snippet(
      "<?php function fill(&$out){ $out = $_GET['v']; } fill($x); echo $x;");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("by-ref writeback survives nested calls in the callee body") {
  EntryResult r = analyze_snippet(
      "<?php function noise() { return 1; } "
      "function fill(&$out){ noise(); $out = $_GET['v']; noise(); } "
      "fill($x); echo $x;");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("default parameters apply when arguments are missing") {
  EntryResult r = analyze_snippet(
      "<?php function f($a, $b = 'safe') { echo $b; } f($_GET['x']);");
  CHECK(r.findings.empty());
}

TEST_CASE("method calls resolve through the object's class and parents") {
  EntryResult r = analyze_snippet(
      "<?php class Base { function show($v) { echo $v; } } class Child extends Base {} "
      "$o = new Child(); $o->show($_GET['x']);");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("constructor wires tainted state into properties") {
  EntryResult r = analyze_snippet(
      "<?php class Box { public $v = ''; function __construct($x) { $this->v = $x; } "
      "function out() { echo $this->v; } } $b = new Box($_GET['p']); $b->out();");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("__call handles unresolved methods") {
  EntryResult r = analyze_snippet(
      "<?php class Proxy { function __call($name, $args) { echo $args[0]; } } $p = new "
      "Proxy(); $p->whatever($_GET['x']);");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("__get serves undeclared properties") {
  EntryResult r = analyze_snippet(
      "<?php class Bag { function __get($name) { return $_GET[$name]; } } $b = new "
      "Bag(); echo $b->anything;");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("unresolved dynamic callee over-approximates with argument taints") {
  EntryResult r = analyze_snippet(
      "<?php $f = $_GET['fn']; $out = $f($_GET['x']); echo $out;");
  // The call cannot resolve; its result carries the argument taints.
  REQUIRE_FALSE(r.findings.empty());
  bool logged = false;
  for (const auto& log : r.logs)
    logged = logged || log.find("unresolved dynamic call") != std::string::npos;
  CHECK(logged);
}

TEST_CASE("recursion terminates via the call-depth budget") {
  AnalysisConfig config = test::default_config();
  config.max_call_depth = 12;
  EntryResult r = analyze_snippet(
      "<?php function rec($n, $t) { if ($n) { return rec($n - 1, $t); } return $t; } "
      "echo rec($_GET['d'], $_GET['x']);",
      config);
  REQUIRE_FALSE(r.failed);
  // Unknown-with-arg-taints at the cut keeps the sink reported.
  CHECK(r.findings.size() == 1);

  EntryResult mutual = analyze_snippet(
      "<?php function a($x) { return b($x); } function b($x) { return a($x); } echo "
      "a($_GET['x']);",
      config);
  REQUIRE_FALSE(mutual.failed);
}

TEST_CASE("polyvariance: tainted call site reports, clean call site does not") {
  EntryResult r = analyze_snippet(
      "<?php function render($v) { echo $v; }\n"
      "render($_GET['dirty']);\n"
      "render('clean');\n");
  REQUIRE(r.findings.size() == 1);
  REQUIRE(r.findings[0].sources.size() == 1);
  CHECK(r.findings[0].sources.begin()->access_path == "dirty");
}

// ---- check_sink spec examples ----

TEST_CASE("system with tainted argument is RCE at position 0") {
  EntryResult r = analyze_snippet("<?php system($_GET['c']);");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].vuln_class == VulnClass::RCE);
  CHECK(r.findings[0].sink.callee == "system");
  CHECK(r.findings[0].sink.arg_position == 0);
}

TEST_CASE("system with a constant argument is clean") {
  EntryResult r = analyze_snippet("<?php system(\"ls\");");
  CHECK(r.findings.empty());
}

TEST_CASE("array_pad propagates taint to the padded tail") {
  EntryResult vulnerable = analyze_snippet(
      "<?php\n$val = $_GET[\"p1\"];\n$input = array(12, 10, 9);\n$result = "
      "array_pad($input, 5, $val);\necho $result[3];\n");
  REQUIRE(vulnerable.findings.size() == 1);
  CHECK(vulnerable.findings[0].sink.line == 5);

  EntryResult safe = analyze_snippet(
      "<?php\n$val = $_GET[\"p1\"];\n$input = array(12, 10, 9);\n$result = "
      "array_pad($input, 5, $val);\necho $result[0];\n");
  CHECK(safe.findings.empty());
}

TEST_CASE("dangerous positions are positional") {
  // move_uploaded_file: position 1 (destination) is the dangerous one.
  EntryResult pos1 = analyze_snippet(
      "<?php move_uploaded_file($_FILES['f'], '/tmp/up');");
  CHECK(pos1.findings.empty());
  EntryResult pos1_hit = analyze_snippet(
      "<?php move_uploaded_file('/tmp/x', $_POST['dest']);");
  REQUIRE(pos1_hit.findings.size() == 1);
  CHECK(pos1_hit.findings[0].vuln_class == VulnClass::UFU);
}

// ---- dynamic features ----

TEST_CASE("variable variables resolve concretely") {
  EntryResult r = analyze_snippet(
      "<?php $x = 'a'; $$x = $_GET['p']; echo $a;");
  REQUIRE(r.findings.size() == 1);

  EntryResult safe = analyze_snippet(
      "<?php $x = 'a'; $$x = htmlspecialchars($_GET['p']); echo $a;");
  CHECK(safe.findings.empty());
}

TEST_CASE("unknown dynamic names fall back conservatively") {
  EntryResult r = analyze_snippet(
      "<?php $a = 'clean'; $x = $_GET['which']; $$x = $_GET['p']; echo $a;");
  // The write joins into every local, so $a may carry taint.
  CHECK(r.findings.size() == 1);
}

TEST_CASE("eval of concrete code is analyzed inline") {
  EntryResult r = analyze_snippet("<?php eval('echo $_GET[\"x\"];');");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].vuln_class == VulnClass::XSS);
}

TEST_CASE("eval of tainted code is RCE") {
  EntryResult r = analyze_snippet("<?php eval($_GET['code']);");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].vuln_class == VulnClass::RCE);
  CHECK(r.findings[0].sink.callee == "eval");
}

TEST_CASE("variable object with concrete class name") {
  EntryResult r = analyze_snippet(
      "<?php class W { function go($v) { echo $v; } } $c = 'W'; $o = new $c(); "
      "$o->go($_GET['x']);");
  REQUIRE(r.findings.size() == 1);
}

// ---- state model details observable through the engine ----

TEST_CASE("two reads of $_GET['x'] on one line mint equal labels") {
  EntryResult r = analyze_snippet("<?php $a = $_GET['x']; $b = $_GET['x']; echo $a . $b;");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].sources.size() == 1);  // equal labels merge
}

TEST_CASE("$_SERVER and $_SESSION stay untainted") {
  EntryResult r = analyze_snippet(
      "<?php echo $_SERVER['HTTP_HOST']; echo $_SESSION['u']; echo $_ENV['PATH']; "
      "echo $GLOBALS['g'];");
  CHECK(r.findings.empty());
}

TEST_CASE("dynamic property names resolve concretely and join when unknown") {
  EntryResult concrete = analyze_snippet(
      "<?php class B { public $x = ''; } $o = new B(); $o->x = $_GET['v']; "
      "$p = 'x'; echo $o->$p;");
  REQUIRE(concrete.findings.size() == 1);

  EntryResult unknown = analyze_snippet(
      "<?php class B { public $x = ''; } $o = new B(); $o->x = $_GET['v']; "
      "$p = $_GET['which']; echo $o->$p;");
  CHECK(unknown.findings.size() == 1);  // join over all properties keeps taint
}

TEST_CASE("all five sources are tainted") {
  EntryResult r = analyze_snippet(
      "<?php echo $_GET['a']; echo $_POST['b']; echo $_FILES['c']; echo $_COOKIE['d']; "
      "echo $_REQUEST['e'];");
  CHECK(r.findings.size() == 5);
}

TEST_CASE("global statement binds function locals to the global scope") {
  EntryResult r = analyze_snippet(
      "<?php $g = $_GET['x']; function show() { global $g; echo $g; } show();");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("static variables persist across calls within an entry") {
  EntryResult r = analyze_snippet(
      "<?php function acc($v) { static $s = ''; $s = $s . $v; echo $s; } acc('a'); "
      "acc($_GET['x']); ");
  // Second call echoes tainted accumulated state.
  CHECK(r.findings.size() == 1);
}

TEST_CASE("object property defaults flow from class metadata") {
  EntryResult r = analyze_snippet(
      "<?php class C { public $p = 'safe'; } $o = new C(); echo $o->p; ");
  CHECK(r.findings.empty());
}

TEST_CASE("exit terminates the path") {
  EntryResult r = analyze_snippet("<?php exit(0); echo $_GET['x'];");
  CHECK(r.findings.empty());
}

TEST_CASE("ternary keeps concrete values per branch") {
  EntryResult r = analyze_snippet(
      "<?php $m = 1 ? 'safe' : $_GET['x']; echo $m;");
  CHECK(r.findings.empty());
}

// ---- invariants ----

TEST_CASE("determinism: repeated runs produce identical findings") {
  auto corpus = reflected_xss_corpus();
  EntryResult a = analyze_sources(corpus, "app/vulnerabilities/xss_r/index.php");
  EntryResult b = analyze_sources(corpus, "app/vulnerabilities/xss_r/index.php");
  REQUIRE(a.findings.size() == b.findings.size());
  for (std::size_t i = 0; i < a.findings.size(); ++i)
    CHECK(a.findings[i] == b.findings[i]);
}

TEST_CASE("sanitizer-removal monotonicity") {
  const char* with_sanitizer =
      "<?php $a = htmlspecialchars($_GET['x']); $b = $_GET['y']; echo $a; echo $b;";
  const char* without_sanitizer =
      "<?php $a = $_GET['x']; $b = $_GET['y']; echo $a; echo $b;";
  EntryResult with_s = analyze_snippet(with_sanitizer);
  EntryResult without_s = analyze_snippet(without_sanitizer);
  // Deleting the sanitizer call never shrinks the finding set.
  CHECK(without_s.findings.size() >= with_s.findings.size());
  for (const auto& f : with_s.findings) {
    bool found = false;
    for (const auto& g : without_s.findings)
      found = found || (g.sink.line == f.sink.line && g.vuln_class == f.vuln_class);
    CHECK(found);
  }
}

TEST_CASE("numeric-context SQLI through mysql_real_escape_string still reports") {
  EntryResult r = analyze_snippet(
      "<?php $id = mysql_real_escape_string($_GET['id']); mysql_query(\"SELECT * FROM "
      "t WHERE id=\" . $id);");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].vuln_class == VulnClass::SQLI);
}

TEST_CASE("branch split budget degrades to joins without losing findings") {
  AnalysisConfig config = test::default_config();
  config.branch_split_budget = 2;
  std::string many_branches = "<?php $t = $_GET['x'];\n";
  for (int i = 0; i < 12; ++i)
    many_branches += "if ($_GET['c" + std::to_string(i) + "']) { $t = $t . 'a'; }\n";
  many_branches += "echo $t;\n";
  EntryResult r = analyze_snippet(many_branches, config);
  REQUIRE_FALSE(r.failed);
  CHECK(r.findings.size() == 1);
}

TEST_CASE("method call on an array-held receiver resolves") {
  EntryResult r = analyze_snippet(
      "<?php class R { function go($v) { echo $v; } } $objs = array(new R()); "
      "$objs[0]->go($_GET['x']);");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("switch case bodies fall through") {
  // Unknown subject: the 'a' arm falls into the 'b' arm, so the taint
  // assigned under 'a' reaches the echo under 'b'.
  EntryResult r = analyze_snippet(
      "<?php switch($_GET['s']){ case 'a': $t = $_GET['x']; case 'b': echo $t; break; "
      "default: echo 'safe'; }");
  REQUIRE(r.findings.size() == 1);

  // A break stops the fallthrough.
  EntryResult stopped = analyze_snippet(
      "<?php switch($_GET['s']){ case 'a': $t = $_GET['x']; break; case 'b': echo 'c'; "
      "break; } echo 'done';");
  CHECK(stopped.findings.empty());
}

TEST_CASE("include expressions yield the included file's return value") {
  std::map<std::string, std::string> sources = {
      {"r/main.php", "<?php $v = include('ret.php'); echo $v;"},
      {"r/ret.php", "<?php return $_GET['x'];"},
  };
  EntryResult r = analyze_sources(sources, "r/main.php");
  REQUIRE(r.findings.size() == 1);
  CHECK(r.findings[0].sink.file == "r/main.php");
}

TEST_CASE("self-including files terminate via the depth budget") {
  AnalysisConfig config = test::default_config();
  config.max_call_depth = 8;
  std::map<std::string, std::string> sources = {
      {"s/loop.php", "<?php include('loop.php'); echo $_GET['x'];"},
  };
  EntryResult r = analyze_sources(sources, "s/loop.php", config);
  REQUIRE_FALSE(r.failed);
  CHECK(r.findings.size() == 1);
}

TEST_CASE("parent constructors run for subclasses") {
  EntryResult r = analyze_snippet(
      "<?php class P { public $v = ''; function __construct($x) { $this->v = $x; } } "
      "class C extends P { function out() { echo $this->v; } } "
      "$o = new C($_GET['q']); $o->out();");
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("budget exhaustion fails the entry; other entries continue") {
  AnalysisConfig config = test::default_config();
  config.max_steps_per_entry = 200;
  std::map<std::string, std::string> sources = {
      {"big.php",
       "<?php for ($i = 0; $i < 100000; $i++) { $a = $a . $i; } echo $a;"},
      {"small.php", "<?php echo $_GET['x'];"},
  };
  CorpusLoad load = load_sources(sources);
  RuleSet rules = default_rules();
  BuiltinRegistry registry = register_minimum_set();
  Engine engine(load.db, rules, registry, config);

  EntryResult big = engine.analyze_entry("big.php");
  CHECK(big.failed);
  CHECK(big.error.find("budget") != std::string::npos);

  EntryResult small = engine.analyze_entry("small.php");
  CHECK_FALSE(small.failed);
  CHECK(small.findings.size() == 1);
}

TEST_CASE("symbolic loops with appends terminate and keep element taint") {
  EntryResult r = analyze_snippet(
      "<?php while($_GET['c']) { $a[] = $_GET['x']; } echo $a[0];");
  REQUIRE_FALSE(r.failed);
  REQUIRE(r.findings.size() == 1);
}

TEST_CASE("deeply nested unknown branches stay within budget") {
  std::string src = "<?php\n";
  for (int i = 0; i < 40; ++i) src += "if ($_GET['c" + std::to_string(i) + "']) {\n";
  src += "$t = $_GET['x'];\n";
  for (int i = 0; i < 40; ++i) src += "}\n";
  src += "echo $t;\n";
  EntryResult r = analyze_snippet(src);
  REQUIRE_FALSE(r.failed);
  CHECK(r.findings.size() == 1);
}

TEST_CASE("foreach over a tainted-source superglobal taints both key and value") {
  EntryResult r = analyze_snippet(
      "<?php foreach ($_POST as $k => $v) { echo $v; echo $k; }");
  CHECK(r.findings.size() >= 1);
}
