#pragma once

// Python 3 source reading for the import rewriter: a tokenizer that follows
// the reference tokenizer's INDENT/DEDENT/NEWLINE rules, a statement tree
// built from logical lines, and a scope analysis that records which names
// each function body references.
//
// This is not a full expression parser. It recovers exactly what the
// rewriter needs: module-level import statements, function scopes with their
// insertion points, name references with attribute chains, and bindings.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace pgo::py {

enum class TokenKind { Name, Number, String, Op, Newline, Indent, Dedent, EndMarker };

struct Token {
  TokenKind kind = TokenKind::Op;
  std::string text;
  int line = 0;  // 1-based
  int col = 0;   // 0-based
  int end_line = 0;
  std::vector<Token> embedded;  // tokens of replacement fields inside f-strings
};

/// Throws Error(ParseError) with "line:col: message".
std::vector<Token> tokenize(std::string_view source);

bool is_keyword(std::string_view name);

struct Stmt {
  std::vector<Token> tokens;  // one logical line, without NEWLINE
  int first_line = 0;  // span of the logical line itself, not of its block
  int last_line = 0;
  std::vector<Stmt> body;  // block following a header line ending in ':'

  std::string_view keyword() const;  // first token text when it is a keyword
};

struct Module {
  std::vector<Stmt> body;
  std::vector<std::string> lines;  // physical lines without terminators
};

Module parse_module(std::string_view source);

struct ImportAlias {
  std::string name;    // dotted module for `import`, attribute for `from`
  std::string asname;  // empty when no alias

  /// Name bound in the importing scope.
  std::string binding(bool from_import) const;
};

struct ImportStmt {
  bool from_import = false;
  std::string module;  // `from` target without leading dots
  int level = 0;       // relative import depth
  bool star = false;
  std::vector<ImportAlias> names;
  int first_line = 0;  // span of the logical line itself, not of its block
  int last_line = 0;
  bool shares_line = false;  // another statement on the same logical line
};

struct NameRef {
  std::string name;
  std::vector<std::string> chain;  // attribute accesses following the name
  int line = 0;
};

struct FunctionInfo {
  std::string qualname;
  int def_line = 0;
  bool inline_body = false;
  int insert_before_line = 0;  // first body statement, after any docstring
  std::string body_indent;
  std::vector<NameRef> refs;  // evaluated in this scope, nested def bodies excluded
  std::set<std::string> params;
  std::set<std::string> assigned;
  std::set<std::string> globals;  // global / nonlocal declarations
  std::vector<ImportStmt> imports;  // imports executed in this scope
};

struct GuardedImport {
  ImportStmt stmt;
  std::string guard;  // "try" or "conditional"
};

struct ModuleInfo {
  std::vector<ImportStmt> imports;  // unguarded module-level imports
  std::vector<GuardedImport> guarded;
  std::vector<FunctionInfo> functions;
  std::vector<NameRef> module_refs;  // evaluated at import time, import statements excluded
  std::map<std::string, int> module_bindings;  // name -> number of binding sites
  std::vector<int> dynamic_import_lines;
};

ModuleInfo analyze(const Module& module);

}  // namespace pgo::py
