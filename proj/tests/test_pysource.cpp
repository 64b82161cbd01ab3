#include <doctest.h>

#include <algorithm>

#include "pgo/error.hpp"
#include "pgo/pysource.hpp"

using namespace pgo;
using namespace pgo::py;

namespace {

std::vector<std::string> texts(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.text);
  return out;
}

int count(const std::vector<Token>& toks, TokenKind k) {
  return static_cast<int>(std::count_if(toks.begin(), toks.end(), [&](const Token& t) { return t.kind == k; }));
}

std::string parse_error(const std::string& src) {
  try {
    parse_module(src);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ParseError);
    return e.what();
  }
  return "";
}

const FunctionInfo* fn(const ModuleInfo& m, const std::string& q) {
  for (const auto& f : m.functions) {
    if (f.qualname == q) return &f;
  }
  return nullptr;
}

bool refs(const FunctionInfo& f, const std::string& name) {
  return std::any_of(f.refs.begin(), f.refs.end(), [&](const NameRef& r) { return r.name == name; });
}

}  // namespace

TEST_CASE("tokens, indentation and operators") {
  const auto toks = tokenize("if x:\n    y = a ** 2 // 3\n    z += 1\nw\n");
  CHECK(count(toks, TokenKind::Indent) == 1);
  CHECK(count(toks, TokenKind::Dedent) == 1);
  const auto t = texts(toks);
  CHECK(std::find(t.begin(), t.end(), "**") != t.end());
  CHECK(std::find(t.begin(), t.end(), "//") != t.end());
  CHECK(std::find(t.begin(), t.end(), "+=") != t.end());
  CHECK(toks.back().kind == TokenKind::EndMarker);
}

TEST_CASE("brackets, continuations and comments do not produce newlines") {
  const auto toks = tokenize("x = (1,\n  2)  # c\ny = 1 + \\\n  2\n\n# only a comment\n");
  CHECK(count(toks, TokenKind::Newline) == 2);
  CHECK(count(toks, TokenKind::Indent) == 0);
}

TEST_CASE("string forms") {
  const auto toks = tokenize("a = rb'x\\'y'\nb = \"\"\"multi\nline\"\"\"\nc = f'{heavy.x!r:>{w}}'\n");
  int strings = 0;
  for (const auto& t : toks) {
    if (t.kind != TokenKind::String) continue;
    ++strings;
    if (t.text.front() == 'f') {
      const auto inner = texts(t.embedded);
      CHECK(std::find(inner.begin(), inner.end(), "heavy") != inner.end());
      CHECK(std::find(inner.begin(), inner.end(), "w") != inner.end());
    }
  }
  CHECK(strings == 3);
  const auto multi = std::find_if(toks.begin(), toks.end(), [](const Token& t) { return t.text.rfind("\"\"\"", 0) == 0; });
  REQUIRE(multi != toks.end());
  CHECK(multi->line == 2);
  CHECK(multi->end_line == 3);
}

TEST_CASE("tokenizer errors") {
  CHECK(parse_error("x = 'unterminated\n").find("1:") == 0);
  CHECK(!parse_error("x = (1,\n").empty());
  CHECK(!parse_error("x = 1)\n").empty());
  CHECK(parse_error("def f():\nreturn 1\n").find("expected an indented block") != std::string::npos);
  CHECK(parse_error("x = 1\n    y = 2\n").find("unexpected indent") != std::string::npos);
  CHECK(!parse_error("if x:\n        a\n    b\n").empty());  // dedent to an unknown level
  CHECK(!parse_error("a = \"\"\"never closed\n").empty());
}

TEST_CASE("statement tree") {
  const auto m = parse_module("import a\n\nclass K:\n    def f(self):\n        return 1\n\nx = 1; y = 2\n");
  REQUIRE(m.body.size() == 3);  // one node per logical line, so `x = 1; y = 2` is one
  CHECK(m.body[1].keyword() == "class");
  REQUIRE(m.body[1].body.size() == 1);
  CHECK(m.body[1].body[0].keyword() == "def");
  CHECK(m.body[1].body[0].first_line == 4);
  CHECK(m.body[1].body[0].last_line == 4);
  CHECK(m.body[1].body[0].body[0].first_line == 5);
}

TEST_CASE("module-level imports and guards") {
  const auto info = analyze(parse_module(
      "import os, sys as system\nfrom ..pkg.sub import (a,\n    b as c)\nfrom x import *\n"
      "try:\n    import fast\nexcept ImportError:\n    fast = None\nif True:\n    import cond\n"
      "def f():\n    import inner\n"));
  REQUIRE(info.imports.size() == 3);
  CHECK(info.imports[0].names.size() == 2);
  CHECK(info.imports[0].names[1].binding(false) == "system");
  CHECK(info.imports[1].from_import);
  CHECK(info.imports[1].level == 2);
  CHECK(info.imports[1].module == "pkg.sub");
  CHECK(info.imports[1].first_line == 2);
  CHECK(info.imports[1].last_line == 3);
  CHECK(info.imports[1].names[1].binding(true) == "c");
  CHECK(info.imports[2].star);
  REQUIRE(info.guarded.size() == 2);
  CHECK(info.guarded[0].guard == "try");
  CHECK(info.guarded[1].guard == "conditional");
  CHECK(info.module_bindings.at("fast") == 2);
  CHECK(ImportAlias{"a.b.c", ""}.binding(false) == "a");
}

TEST_CASE("function scopes") {
  const auto info = analyze(parse_module(
      "import heavy\n\n"
      "@deco(heavy.opt)\n"
      "def f(a, b=heavy.DEFAULT, *args, c: int = 1, **kw):\n"
      "    \"\"\"doc\"\"\"\n"
      "    x = heavy.run(a)\n"
      "    for i, j in y: pass\n"
      "    return lambda q: q + heavy.z\n\n"
      "class C:\n"
      "    attr = heavy.k\n"
      "    def m(self):\n"
      "        def inner():\n"
      "            nonlocal self\n"
      "            return heavy\n"
      "        return inner\n"
      "def g(): return heavy\n"
      "x = __import__('mod')\n"));
  const auto* f = fn(info, "f");
  REQUIRE(f != nullptr);
  CHECK(f->insert_before_line == 6);
  CHECK(f->body_indent == "    ");
  CHECK(f->params == std::set<std::string>{"a", "b", "args", "c", "kw"});
  CHECK(f->assigned.count("x"));
  CHECK(f->assigned.count("i"));
  CHECK(f->assigned.count("j"));
  CHECK(refs(*f, "heavy"));
  CHECK_FALSE(refs(*f, "q"));
  const auto* inner = fn(info, "C.m.<locals>.inner");
  REQUIRE(inner != nullptr);
  CHECK(refs(*inner, "heavy"));
  CHECK(inner->globals.count("self"));
  CHECK_FALSE(refs(*fn(info, "C.m"), "heavy"));
  CHECK(fn(info, "g")->inline_body);
  // Decorators, defaults and class bodies run at import time.
  int module_uses = 0;
  for (const auto& r : info.module_refs) module_uses += r.name == "heavy";
  CHECK(module_uses == 3);
  CHECK(info.dynamic_import_lines == std::vector<int>{18});
}

TEST_CASE("lambda parameters shadow only inside their body") {
  const auto info = analyze(parse_module(
      "def f():\n    g = lambda heavy, *rest: heavy.x + len(rest)\n    return g\n"
      "def h():\n    return (lambda heavy: heavy)(1), heavy\n"
      "def k():\n    return lambda a=heavy.d: a\n"));
  CHECK_FALSE(refs(*fn(info, "f"), "heavy"));
  CHECK_FALSE(refs(*fn(info, "f"), "rest"));
  CHECK(refs(*fn(info, "f"), "len"));
  CHECK(refs(*fn(info, "h"), "heavy"));
  CHECK(refs(*fn(info, "k"), "heavy"));
  CHECK_FALSE(refs(*fn(info, "k"), "a"));
}

TEST_CASE("attribute chains, keywords and comprehensions") {
  const auto info = analyze(parse_module(
      "def f():\n    return call(x=nltk.sem.logic, y=[v for v in w]).attr\n"));
  const auto* f = fn(info, "f");
  REQUIRE(f != nullptr);
  const auto it = std::find_if(f->refs.begin(), f->refs.end(), [](const NameRef& r) { return r.name == "nltk"; });
  REQUIRE(it != f->refs.end());
  CHECK(it->chain == std::vector<std::string>{"sem", "logic"});
  CHECK_FALSE(refs(*f, "x"));
  CHECK_FALSE(refs(*f, "attr"));
  CHECK(refs(*f, "w"));
}
