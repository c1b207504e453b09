#include <benchmark/benchmark.h>

#include <map>
#include <sstream>
#include <string>

#include "opflow/cfg.hpp"
#include "opflow/driver.hpp"
#include "opflow/frontend.hpp"
#include "opflow/lexer.hpp"
#include "opflow/parser.hpp"

namespace {

using namespace opflow;

// Deterministic synthetic file: functions, loops, branches, sources and sinks.
std::string synth_file(int index, int statements) {
  std::ostringstream out;
  out << "<?php\n";
  out << "function fmt" << index << "($x, $n) {\n"
      << "  $acc = '';\n"
      << "  for ($i = 0; $i < $n; $i++) { $acc = $acc . $x; }\n"
      << "  return $acc;\n"
      << "}\n";
  for (int s = 0; s < statements; ++s) {
    switch (s % 6) {
      case 0: out << "$v" << s % 8 << " = 'lit" << s << "';\n"; break;
      case 1: out << "$v" << s % 8 << " = $_GET['p" << s % 4 << "'];\n"; break;
      case 2: out << "$v" << s % 8 << " = htmlspecialchars($v" << (s + 1) % 8 << ");\n"; break;
      case 3: out << "$v" << s % 8 << " = fmt" << index << "($v" << (s + 2) % 8 << ", 3);\n"; break;
      case 4: out << "if ($v" << s % 8 << ") { $v" << (s + 3) % 8 << " = $v" << s % 8 << " . 'x'; }\n"; break;
      case 5: out << "echo $v" << s % 8 << ";\n"; break;
    }
  }
  return out.str();
}

void BM_Lex(benchmark::State& state) {
  std::string src = synth_file(0, 200);
  for (auto _ : state) benchmark::DoNotOptimize(lex(src));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * src.size()));
}
BENCHMARK(BM_Lex);

void BM_Compile(benchmark::State& state) {
  std::string src = synth_file(0, 200);
  for (auto _ : state) benchmark::DoNotOptimize(compile_source(src, "bench.php"));
}
BENCHMARK(BM_Compile);

void BM_BuildCfg(benchmark::State& state) {
  LoweredFile file = compile_source(synth_file(0, 200), "bench.php");
  for (auto _ : state) benchmark::DoNotOptimize(build_cfg(file.main));
}
BENCHMARK(BM_BuildCfg);

void BM_AnalyzeFile(benchmark::State& state) {
  std::map<std::string, std::string> sources{
      {"bench.php", synth_file(0, static_cast<int>(state.range(0)))}};
  CorpusLoad load = load_sources(sources);
  RuleSet rules = default_rules();
  BuiltinRegistry registry = register_minimum_set();
  AnalysisConfig config;
  Engine engine(load.db, rules, registry, config);
  for (auto _ : state) benchmark::DoNotOptimize(engine.analyze_entry("bench.php"));
}
// Branch-dense single files grow super-linearly in the split budget;
// lower --branch-split-budget for adversarially branchy units.
BENCHMARK(BM_AnalyzeFile)->Arg(50)->Arg(200);

void BM_AnalyzeCorpus(benchmark::State& state) {
  std::map<std::string, std::string> sources;
  for (int i = 0; i < static_cast<int>(state.range(0)); ++i)
    sources["f" + std::to_string(i) + ".php"] = synth_file(i, 80);
  CorpusLoad load = load_sources(sources);
  RuleSet rules = default_rules();
  BuiltinRegistry registry = register_minimum_set();
  AnalysisConfig config;
  Engine engine(load.db, rules, registry, config);
  std::vector<std::string> entries = enumerate_entries(config, load.db);
  for (auto _ : state)
    benchmark::DoNotOptimize(run_entries(engine, entries, 1));
}
BENCHMARK(BM_AnalyzeCorpus)->Arg(8)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
