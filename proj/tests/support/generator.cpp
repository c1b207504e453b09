#include "support/generator.hpp"

#include <algorithm>
#include <array>
#include <optional>
#include <vector>
#include <sstream>

namespace opflow::test {

namespace {

int pick(std::mt19937& rng, int bound) {
  return static_cast<int>(rng() % static_cast<unsigned>(bound));
}

}  // namespace

OpUnit generate_straightline(std::mt19937& rng) {
  OpUnit unit;
  unit.kind = UnitKind::FileMain;
  unit.name = "gen.php";
  std::uint32_t next_temp = 0;
  std::uint32_t next_var = 0;
  std::uint32_t line = 1;

  // Generator-side typing keeps the program oracle-friendly: scalar vars and
  // array vars never mix.
  std::array<bool, 4> scalar_live{};
  std::array<bool, 2> array_live{};

  auto cv = [](int i) { return Operand::cv("v" + std::to_string(i)); };
  auto acv = [](int i) { return Operand::cv("a" + std::to_string(i)); };

  auto emit = [&](OpcodeKind kind, Operand op1, Operand op2, Operand result,
                  std::int64_t ext = 0) {
    unit.oplines.push_back(
        make_opline(kind, std::move(op1), std::move(op2), std::move(result), ext, line));
    ++line;
  };

  auto any_scalar = [&](std::mt19937& r) -> std::optional<int> {
    std::vector<int> live;
    for (int i = 0; i < 4; ++i)
      if (scalar_live[static_cast<std::size_t>(i)]) live.push_back(i);
    if (live.empty()) return std::nullopt;
    return live[static_cast<std::size_t>(pick(r, static_cast<int>(live.size())))];
  };
  auto any_array = [&](std::mt19937& r) -> std::optional<int> {
    std::vector<int> live;
    for (int i = 0; i < 2; ++i)
      if (array_live[static_cast<std::size_t>(i)]) live.push_back(i);
    if (live.empty()) return std::nullopt;
    return live[static_cast<std::size_t>(pick(r, static_cast<int>(live.size())))];
  };

  auto scalar_operand = [&](std::mt19937& r) -> Operand {
    if (auto v = any_scalar(r); v && pick(r, 3) != 0) return cv(*v);
    if (pick(r, 2) == 0)
      return Operand::constant(Literal::str("s" + std::to_string(pick(r, 5))));
    return Operand::constant(Literal::integer(pick(r, 100)));
  };

  auto call1 = [&](const std::string& name, Operand arg) -> Operand {
    emit(OpcodeKind::INIT_FCALL, Operand::constant(Literal::str(name)),
         Operand::unused(), Operand::unused());
    OpcodeKind send = arg.kind == Operand::Kind::CompiledVar ? OpcodeKind::SEND_VAR
                                                             : OpcodeKind::SEND_VAL;
    emit(send, std::move(arg), Operand::unused(), Operand::unused(), 0);
    Operand result = Operand::temp(next_temp++);
    emit(OpcodeKind::DO_FCALL, Operand::unused(), Operand::unused(), result);
    return result;
  };

  const int ops = 6 + pick(rng, 24);
  for (int n = 0; n < ops; ++n) {
    switch (pick(rng, 12)) {
      case 0: {  // tainted fetch into a scalar
        int target = pick(rng, 4);
        Operand sg = Operand::temp(next_temp++);
        const char* which = pick(rng, 2) == 0 ? "_GET" : "_POST";
        emit(OpcodeKind::FETCH_R, Operand::constant(Literal::str(which)),
             Operand::unused(), sg);
        Operand value = Operand::temp(next_temp++);
        emit(OpcodeKind::FETCH_DIM_R, sg,
             Operand::constant(Literal::str("k" + std::to_string(pick(rng, 3)))), value);
        emit(OpcodeKind::ASSIGN, cv(target), value, Operand::unused());
        scalar_live[static_cast<std::size_t>(target)] = true;
        break;
      }
      case 1: {  // constant assign
        int target = pick(rng, 4);
        emit(OpcodeKind::ASSIGN, cv(target), scalar_operand(rng), Operand::unused());
        scalar_live[static_cast<std::size_t>(target)] = true;
        break;
      }
      case 2: {  // copy
        if (auto src = any_scalar(rng)) {
          int target = pick(rng, 4);
          emit(OpcodeKind::ASSIGN, cv(target), cv(*src), Operand::unused());
          scalar_live[static_cast<std::size_t>(target)] = true;
        }
        break;
      }
      case 3: {  // concat
        int target = pick(rng, 4);
        Operand result = Operand::temp(next_temp++);
        emit(OpcodeKind::CONCAT, scalar_operand(rng), scalar_operand(rng), result);
        emit(OpcodeKind::ASSIGN, cv(target), result, Operand::unused());
        scalar_live[static_cast<std::size_t>(target)] = true;
        break;
      }
      case 4: {  // arithmetic
        int target = pick(rng, 4);
        Operand result = Operand::temp(next_temp++);
        OpcodeKind kind = pick(rng, 3) == 0   ? OpcodeKind::ADD
                          : pick(rng, 2) == 0 ? OpcodeKind::SUB
                                              : OpcodeKind::MUL;
        emit(kind, scalar_operand(rng), scalar_operand(rng), result);
        emit(OpcodeKind::ASSIGN, cv(target), result, Operand::unused());
        scalar_live[static_cast<std::size_t>(target)] = true;
        break;
      }
      case 5: {  // sanitizer / string builtin
        if (auto src = any_scalar(rng)) {
          static const char* fns[] = {"htmlspecialchars", "intval", "strtolower",
                                      "trim", "urlencode"};
          Operand result = call1(fns[pick(rng, 5)], cv(*src));
          emit(OpcodeKind::ASSIGN, cv(*src), result, Operand::unused());
        }
        break;
      }
      case 6: {  // decoder
        if (auto src = any_scalar(rng)) {
          static const char* fns[] = {"htmlspecialchars_decode", "urldecode"};
          Operand result = call1(fns[pick(rng, 2)], cv(*src));
          emit(OpcodeKind::ASSIGN, cv(*src), result, Operand::unused());
        }
        break;
      }
      case 7: {  // array init
        int target = pick(rng, 2);
        Operand arr = Operand::temp(next_temp++);
        if (pick(rng, 2) == 0) {
          emit(OpcodeKind::INIT_ARRAY, scalar_operand(rng), Operand::unused(), arr);
        } else {
          emit(OpcodeKind::INIT_ARRAY, Operand::unused(), Operand::unused(), arr);
        }
        emit(OpcodeKind::ASSIGN, acv(target), arr, Operand::unused());
        array_live[static_cast<std::size_t>(target)] = true;
        break;
      }
      case 8: {  // array append / keyed write
        if (auto arr = any_array(rng)) {
          Operand place = Operand::var(next_var++);
          if (pick(rng, 2) == 0) {
            emit(OpcodeKind::FETCH_DIM_W, acv(*arr), Operand::unused(), place);
          } else {
            emit(OpcodeKind::FETCH_DIM_W, acv(*arr),
                 Operand::constant(Literal::integer(pick(rng, 4))), place);
          }
          emit(OpcodeKind::ASSIGN_DIM, place, scalar_operand(rng), Operand::unused());
        }
        break;
      }
      case 9: {  // array element read
        if (auto arr = any_array(rng)) {
          int target = pick(rng, 4);
          Operand value = Operand::temp(next_temp++);
          emit(OpcodeKind::FETCH_DIM_R, acv(*arr),
               Operand::constant(Literal::integer(pick(rng, 4))), value);
          emit(OpcodeKind::ASSIGN, cv(target), value, Operand::unused());
          scalar_live[static_cast<std::size_t>(target)] = true;
        }
        break;
      }
      case 10: {  // echo
        if (auto src = any_scalar(rng))
          emit(OpcodeKind::ECHO, cv(*src), Operand::unused(), Operand::unused());
        break;
      }
      case 11: {  // command sink
        if (auto src = any_scalar(rng)) call1("system", cv(*src));
        break;
      }
    }
  }
  emit(OpcodeKind::RETURN, Operand::constant(Literal::integer(1)), Operand::unused(),
       Operand::unused());
  return unit;
}

OpUnit generate_cfg_fuzz_unit(std::mt19937& rng) {
  OpUnit unit;
  unit.kind = UnitKind::FileMain;
  unit.name = "fuzz.php";
  const int n = 1 + pick(rng, 40);
  for (int i = 0; i < n; ++i) {
    auto target = [&] {
      return Operand::jump(static_cast<std::uint32_t>(pick(rng, n)));
    };
    switch (pick(rng, 8)) {
      case 0:
        unit.oplines.push_back(make_opline(OpcodeKind::JMP, target(), Operand::unused(),
                                           Operand::unused(), 0, 1));
        break;
      case 1:
        unit.oplines.push_back(make_opline(OpcodeKind::JMPZ, Operand::cv("c"), target(),
                                           Operand::unused(), 0, 1));
        break;
      case 2:
        unit.oplines.push_back(make_opline(OpcodeKind::JMPNZ, Operand::cv("c"), target(),
                                           Operand::unused(), 0, 1));
        break;
      case 3:
        unit.oplines.push_back(make_opline(OpcodeKind::RETURN,
                                           Operand::constant(Literal::null()),
                                           Operand::unused(), Operand::unused(), 0, 1));
        break;
      case 4:
        unit.oplines.push_back(make_opline(
            OpcodeKind::ASSIGN, Operand::cv("x"),
            Operand::constant(Literal::integer(pick(rng, 10))), Operand::unused(), 0, 1));
        break;
      case 5:
        unit.oplines.push_back(make_opline(OpcodeKind::ECHO, Operand::cv("x"),
                                           Operand::unused(), Operand::unused(), 0, 1));
        break;
      case 6:
        unit.oplines.push_back(make_opline(OpcodeKind::CONCAT, Operand::cv("x"),
                                           Operand::cv("y"),
                                           Operand::temp(static_cast<std::uint32_t>(i)),
                                           0, 1));
        break;
      case 7:
        unit.oplines.push_back(make_opline(OpcodeKind::NOP, Operand::unused(),
                                           Operand::unused(), Operand::unused(), 0, 1));
        break;
    }
  }
  return unit;
}

std::map<std::string, std::string> generate_synthetic_corpus(unsigned seed,
                                                             std::size_t target_lines) {
  std::mt19937 rng(seed);
  std::map<std::string, std::string> files;
  std::size_t total_lines = 0;
  int file_index = 0;

  while (total_lines < target_lines) {
    std::ostringstream out;
    out << "<?php\n";
    int fn_count = 2 + pick(rng, 3);
    for (int f = 0; f < fn_count; ++f) {
      std::string fn = "work" + std::to_string(file_index) + "_" + std::to_string(f);
      out << "function " << fn << "($x, $y = 3) {\n";
      out << "  $acc = '';\n";
      out << "  for ($i = 0; $i < " << (2 + pick(rng, 6)) << "; $i++) {\n";
      out << "    $acc = $acc . $x . $i;\n";
      out << "  }\n";
      out << "  if ($y > 10) {\n";
      out << "    $acc = strtoupper($acc);\n";
      out << "  } else {\n";
      out << "    $acc = strtolower($acc);\n";
      out << "  }\n";
      out << "  return $acc . $y;\n";
      out << "}\n";
    }
    int stmts = 30 + pick(rng, 40);
    for (int s = 0; s < stmts; ++s) {
      switch (pick(rng, 7)) {
        case 0:
          out << "$v" << pick(rng, 8) << " = 'lit" << pick(rng, 100) << "';\n";
          break;
        case 1:
          out << "$v" << pick(rng, 8) << " = $_GET['p" << pick(rng, 5) << "'];\n";
          break;
        case 2:
          out << "$v" << pick(rng, 8) << " = htmlspecialchars($v" << pick(rng, 8)
              << ");\n";
          break;
        case 3:
          out << "$v" << pick(rng, 8) << " = work" << file_index << "_"
              << pick(rng, fn_count) << "($v" << pick(rng, 8) << ", " << pick(rng, 20)
              << ");\n";
          break;
        case 4:
          out << "echo $v" << pick(rng, 8) << ";\n";
          break;
        case 5:
          out << "$arr" << pick(rng, 3) << "[] = $v" << pick(rng, 8) << ";\n";
          break;
        case 6:
          out << "if ($v" << pick(rng, 8) << ") { $v" << pick(rng, 8) << " = $v"
              << pick(rng, 8) << " . 'x'; }\n";
          break;
      }
    }
    out << "echo 'done" << file_index << "';\n";
    std::string contents = out.str();
    std::size_t lines = static_cast<std::size_t>(
        std::count(contents.begin(), contents.end(), '\n'));
    total_lines += lines;
    files["synth/file" + std::to_string(file_index) + ".php"] = std::move(contents);
    ++file_index;
  }
  return files;
}

}  // namespace opflow::test
