#include "pgo/pysource.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <deque>
#include <set>

#include "pgo/error.hpp"

namespace pgo::py {

namespace {

constexpr std::array<std::string_view, 35> kKeywords = {
    "False", "None",   "True",    "and",      "as",     "assert", "async", "await",  "break",
    "class", "continue", "def",   "del",      "elif",   "else",   "except", "finally", "for",
    "from",  "global", "if",      "import",   "in",     "is",     "lambda", "nonlocal", "not",
    "or",    "pass",   "raise",   "return",   "try",    "while",  "with",  "yield"};

constexpr std::array<std::string_view, 4> kOps3 = {"**=", "//=", ">>=", "<<="};
constexpr std::array<std::string_view, 20> kOps2 = {"**", "//", "<<", ">>", "<=", ">=", "==", "!=", "->", "+=",
                                                    "-=", "*=", "/=", "%=", "&=", "|=", "^=", "@=", ":=", "<>"};
constexpr std::string_view kOps1 = "+-*/%@&|^~<>()[]{},:.;=!";

[[noreturn]] void fail(int line, int col, const std::string& msg) {
  throw Error(ErrorKind::ParseError, std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
}

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool ident_char(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

bool string_prefix(std::string_view p) {
  std::string lower;
  for (char c : p) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "r" || lower == "u" || lower == "f" || lower == "b" || lower == "br" || lower == "rb" ||
         lower == "fr" || lower == "rf";
}

class Tokenizer {
 public:
  explicit Tokenizer(std::string_view src, bool lenient = false) : src_(src), lenient_(lenient) {}

  std::vector<Token> run() {
    while (pos_ < src_.size()) {
      if (at_line_start_ && brackets_.empty()) {
        if (!handle_indentation()) continue;
      }
      const char c = src_[pos_];
      if (c == ' ' || c == '\t' || c == '\f') {
        advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance();
      } else if (c == '\\' && (peek(1) == '\n' || (peek(1) == '\r' && peek(2) == '\n'))) {
        advance();
        newline_char();
      } else if (c == '\n' || c == '\r') {
        if (brackets_.empty() && line_has_tokens_) {
          emit(TokenKind::Newline, "", line_, col_);
          line_has_tokens_ = false;
        }
        newline_char();
        at_line_start_ = brackets_.empty();
      } else if (ident_start(static_cast<unsigned char>(c))) {
        read_name_or_string();
      } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                 (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
        read_number();
      } else if (c == '"' || c == '\'') {
        read_string(pos_, line_, col_);
      } else {
        read_op();
      }
    }
    if (!brackets_.empty() && !lenient_) fail(line_, col_, "unexpected EOF in multi-line statement");
    if (line_has_tokens_) emit(TokenKind::Newline, "", line_, col_);
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(TokenKind::Dedent, "", line_, 0);
    }
    emit(TokenKind::EndMarker, "", line_, 0);
    return std::move(tokens_);
  }

 private:
  char peek(std::size_t k) const { return pos_ + k < src_.size() ? src_[pos_ + k] : '\0'; }

  void advance() {
    ++pos_;
    ++col_;
  }

  void newline_char() {
    if (src_[pos_] == '\r' && peek(1) == '\n') ++pos_;
    ++pos_;
    ++line_;
    col_ = 0;
  }

  void emit(TokenKind kind, std::string text, int line, int col) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.line = line;
    t.col = col;
    t.end_line = line_;
    tokens_.push_back(std::move(t));
    if (kind != TokenKind::Newline && kind != TokenKind::Indent && kind != TokenKind::Dedent) line_has_tokens_ = true;
  }

  // Returns false when the line is blank or comment-only (already consumed).
  bool handle_indentation() {
    int width = 0;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == ' ') {
        ++width;
      } else if (c == '\t') {
        width = (width / 8 + 1) * 8;
      } else if (c == '\f') {
        width = 0;
      } else {
        break;
      }
      advance();
    }
    if (pos_ >= src_.size()) return false;
    const char c = src_[pos_];
    if (c == '\n' || c == '\r') {
      newline_char();
      return false;
    }
    if (c == '#') {
      while (pos_ < src_.size() && src_[pos_] != '\n' && src_[pos_] != '\r') advance();
      return false;
    }
    if (c == '\\' && (peek(1) == '\n' || peek(1) == '\r')) {
      // A backslash continuation at the start of a line joins with the next one.
      at_line_start_ = false;
      return true;
    }
    at_line_start_ = false;
    if (lenient_) return true;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(TokenKind::Indent, "", line_, 0);
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(TokenKind::Dedent, "", line_, 0);
      }
      if (width != indents_.back()) fail(line_, col_, "unindent does not match any outer indentation level");
    }
    return true;
  }

  void read_name_or_string() {
    const std::size_t start = pos_;
    const int line = line_;
    const int col = col_;
    while (pos_ < src_.size() && ident_char(static_cast<unsigned char>(src_[pos_]))) advance();
    std::string_view word = src_.substr(start, pos_ - start);
    if (pos_ < src_.size() && (src_[pos_] == '"' || src_[pos_] == '\'') && string_prefix(word)) {
      read_string(start, line, col);
      return;
    }
    emit(TokenKind::Name, std::string(word), line, col);
  }

  void read_number() {
    const std::size_t start = pos_;
    const int col = col_;
    const bool hex = src_[pos_] == '0' && (peek(1) == 'x' || peek(1) == 'X');
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.') {
        advance();
      } else if ((c == '+' || c == '-') && !hex && pos_ > start &&
                 (src_[pos_ - 1] == 'e' || src_[pos_ - 1] == 'E')) {
        advance();
      } else {
        break;
      }
    }
    emit(TokenKind::Number, std::string(src_.substr(start, pos_ - start)), line_, col);
  }

  void read_string(std::size_t start, int line, int col) {
    std::string prefix;
    for (std::size_t i = start; i < pos_; ++i) {
      prefix.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(src_[i]))));
    }
    const bool fstring = prefix.find('f') != std::string::npos;
    const char q = src_[pos_];
    const bool triple = peek(1) == q && peek(2) == q;
    const std::size_t quote_len = triple ? 3 : 1;
    for (std::size_t i = 0; i < quote_len; ++i) advance();
    const std::size_t body_start = pos_;
    std::size_t body_end = std::string_view::npos;
    while (pos_ < src_.size()) {
      const char c = src_[pos_];
      if (c == '\\') {
        advance();
        if (pos_ < src_.size()) {
          if (src_[pos_] == '\n' || src_[pos_] == '\r') {
            newline_char();
          } else {
            advance();
          }
        }
        continue;
      }
      if (c == '\n' || c == '\r') {
        if (!triple) fail(line, col, "unterminated string literal");
        newline_char();
        continue;
      }
      if (c == q && (!triple || (peek(1) == q && peek(2) == q))) {
        body_end = pos_;
        for (std::size_t i = 0; i < quote_len; ++i) advance();
        break;
      }
      advance();
    }
    if (body_end == std::string_view::npos) {
      fail(line, col, triple ? "unterminated triple-quoted string literal" : "unterminated string literal");
    }
    emit(TokenKind::String, std::string(src_.substr(start, pos_ - start)), line, col);
    if (fstring) tokens_.back().embedded = fstring_fields(src_.substr(body_start, body_end - body_start), line);
  }

  static std::vector<Token> fstring_fields(std::string_view body, int line) {
    std::vector<Token> out;
    for (std::size_t i = 0; i < body.size(); ++i) {
      if (body[i] == '{') {
        if (i + 1 < body.size() && body[i + 1] == '{') {
          ++i;
          continue;
        }
        int depth = 1;
        std::size_t j = i + 1;
        char in_quote = 0;
        for (; j < body.size() && depth > 0; ++j) {
          const char c = body[j];
          if (in_quote) {
            if (c == in_quote) in_quote = 0;
          } else if (c == '\'' || c == '"') {
            in_quote = c;
          } else if (c == '{' || c == '(' || c == '[') {
            ++depth;
          } else if (c == '}' || c == ')' || c == ']') {
            --depth;
          }
        }
        std::string_view field = body.substr(i + 1, j - i - 2 + (depth > 0 ? 1 : 0));
        try {
          Tokenizer inner(field, true);
          for (auto& t : inner.run()) {
            if (t.kind == TokenKind::Name || t.kind == TokenKind::Op || t.kind == TokenKind::String) {
              t.line = line;
              t.end_line = line;
              out.push_back(std::move(t));
            }
          }
        } catch (const Error&) {
          // Replacement fields that do not tokenize contribute no names.
        }
        out.push_back(Token{TokenKind::Op, ";", line, 0, line, {}});
        i = j - 1;
      }
    }
    return out;
  }

  void read_op() {
    const int col = col_;
    std::string_view rest = src_.substr(pos_);
    for (auto op : kOps3) {
      if (rest.starts_with(op)) {
        for (std::size_t i = 0; i < op.size(); ++i) advance();
        emit(TokenKind::Op, std::string(op), line_, col);
        return;
      }
    }
    if (rest.starts_with("...")) {
      for (int i = 0; i < 3; ++i) advance();
      emit(TokenKind::Op, "...", line_, col);
      return;
    }
    for (auto op : kOps2) {
      if (rest.starts_with(op)) {
        advance();
        advance();
        emit(TokenKind::Op, std::string(op), line_, col);
        return;
      }
    }
    const char c = src_[pos_];
    if (kOps1.find(c) == std::string_view::npos) {
      if (lenient_) {
        advance();
        return;
      }
      fail(line_, col_, std::string("invalid character '") + c + "'");
    }
    if (c == '(' || c == '[' || c == '{') {
      brackets_.push_back(c);
    } else if (c == ')' || c == ']' || c == '}') {
      const char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (brackets_.empty() || brackets_.back() != open) {
        if (!lenient_) fail(line_, col_, std::string("unmatched '") + c + "'");
      } else {
        brackets_.pop_back();
      }
    }
    advance();
    emit(TokenKind::Op, std::string(1, c), line_, col);
  }

  std::string_view src_;
  bool lenient_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 0;
  bool at_line_start_ = true;
  bool line_has_tokens_ = false;
  std::vector<int> indents_{0};
  std::vector<char> brackets_;
  std::vector<Token> tokens_;
};

// ---------------------------------------------------------------------------
// Statement tree

class StmtParser {
 public:
  explicit StmtParser(const std::vector<Token>& toks) : toks_(toks) {}

  std::vector<Stmt> module() {
    auto body = block();
    if (toks_[i_].kind != TokenKind::EndMarker) fail(toks_[i_].line, toks_[i_].col, "unexpected dedent");
    return body;
  }

 private:
  std::vector<Stmt> block() {
    std::vector<Stmt> out;
    while (toks_[i_].kind != TokenKind::Dedent && toks_[i_].kind != TokenKind::EndMarker) {
      if (toks_[i_].kind == TokenKind::Indent) fail(toks_[i_].line, 0, "unexpected indent");
      Stmt s;
      s.first_line = toks_[i_].line;
      s.last_line = toks_[i_].end_line;
      while (toks_[i_].kind != TokenKind::Newline) {
        if (toks_[i_].kind == TokenKind::EndMarker) fail(toks_[i_].line, 0, "unexpected end of file");
        s.last_line = std::max(s.last_line, toks_[i_].end_line);
        s.tokens.push_back(toks_[i_]);
        ++i_;
      }
      ++i_;  // NEWLINE
      const bool header = s.tokens.back().kind == TokenKind::Op && s.tokens.back().text == ":";
      if (header) {
        if (toks_[i_].kind != TokenKind::Indent) fail(toks_[i_].line, 0, "expected an indented block");
        ++i_;
        s.body = block();
        if (toks_[i_].kind == TokenKind::Dedent) ++i_;
      } else if (toks_[i_].kind == TokenKind::Indent) {
        fail(toks_[i_].line, 0, "unexpected indent");
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  const std::vector<Token>& toks_;
  std::size_t i_ = 0;
};

// ---------------------------------------------------------------------------
// Scope analysis

using TokenSpan = std::vector<Token>;

bool is_op(const Token& t, std::string_view op) { return t.kind == TokenKind::Op && t.text == op; }
bool is_name(const Token& t, std::string_view name) { return t.kind == TokenKind::Name && t.text == name; }
bool is_open(const Token& t) { return t.kind == TokenKind::Op && (t.text == "(" || t.text == "[" || t.text == "{"); }
bool is_close(const Token& t) { return t.kind == TokenKind::Op && (t.text == ")" || t.text == "]" || t.text == "}"); }
bool is_plain_name(const Token& t) { return t.kind == TokenKind::Name && !is_keyword(t.text); }

TokenSpan slice(const TokenSpan& toks, std::size_t from, std::size_t to) {
  from = std::min(from, toks.size());
  to = std::min(to, toks.size());
  return TokenSpan(toks.begin() + static_cast<std::ptrdiff_t>(from), toks.begin() + static_cast<std::ptrdiff_t>(to));
}

// Splits on top-level occurrences of op.
std::vector<TokenSpan> split_top(const TokenSpan& toks, std::string_view op) {
  std::vector<TokenSpan> parts(1);
  int depth = 0;
  for (const auto& t : toks) {
    if (is_open(t)) ++depth;
    if (is_close(t)) --depth;
    if (depth == 0 && is_op(t, op)) {
      parts.emplace_back();
      continue;
    }
    parts.back().push_back(t);
  }
  return parts;
}

std::size_t find_top(const TokenSpan& toks, std::string_view op, std::size_t from = 0) {
  int depth = 0;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (is_open(toks[i])) ++depth;
    if (is_close(toks[i])) --depth;
    if (i >= from && depth == 0 && is_op(toks[i], op)) return i;
  }
  return toks.size();
}

std::size_t matching_close(const TokenSpan& toks, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < toks.size(); ++i) {
    if (is_open(toks[i])) ++depth;
    if (is_close(toks[i]) && --depth == 0) return i;
  }
  return toks.size();
}

// Name references with attribute chains. Skips attribute names, keyword
// argument names, lambda parameters and their uses inside the lambda body.
void collect_refs(const TokenSpan& toks, std::vector<NameRef>& out) {
  struct Lambda {
    std::size_t depth;  // bracket depth of the `lambda` keyword
    bool in_body = false;
    std::set<std::string> params;
  };
  std::vector<char> brackets;
  std::vector<Lambda> lambdas;
  auto shadowed = [&](const std::string& name) {
    return std::any_of(lambdas.begin(), lambdas.end(),
                       [&](const Lambda& l) { return l.in_body && l.params.count(name); });
  };
  for (std::size_t i = 0; i < toks.size(); ++i) {
    const Token& t = toks[i];
    if (!t.embedded.empty()) collect_refs(t.embedded, out);
    if (t.kind == TokenKind::Op) {
      if (is_close(t) && !brackets.empty()) brackets.pop_back();
      // A body ends at a comma on its own level or when its bracket closes.
      while (!lambdas.empty() && lambdas.back().in_body &&
             (brackets.size() < lambdas.back().depth || (t.text == "," && brackets.size() == lambdas.back().depth))) {
        lambdas.pop_back();
      }
      if (is_open(t)) brackets.push_back(t.text[0]);
      if (t.text == ":" && !lambdas.empty() && !lambdas.back().in_body && lambdas.back().depth == brackets.size()) {
        lambdas.back().in_body = true;
      }
      continue;
    }
    if (is_name(t, "lambda")) {
      lambdas.push_back({brackets.size()});
      continue;
    }
    if (!is_plain_name(t)) continue;
    const Token* prev = i > 0 ? &toks[i - 1] : nullptr;
    if (prev && is_op(*prev, ".")) continue;
    if (!lambdas.empty() && !lambdas.back().in_body && brackets.size() == lambdas.back().depth && prev &&
        (is_name(*prev, "lambda") || is_op(*prev, ",") || is_op(*prev, "*") || is_op(*prev, "**"))) {
      lambdas.back().params.insert(t.text);
      continue;
    }
    if (shadowed(t.text)) continue;
    const bool kwarg = i + 1 < toks.size() && is_op(toks[i + 1], "=") && !brackets.empty() && brackets.back() == '(' &&
                       prev && (is_op(*prev, "(") || is_op(*prev, ","));
    if (kwarg) continue;
    NameRef r;
    r.name = t.text;
    r.line = t.line;
    for (std::size_t j = i + 1; j + 1 < toks.size() && is_op(toks[j], ".") && is_plain_name(toks[j + 1]); j += 2) {
      r.chain.push_back(toks[j + 1].text);
    }
    out.push_back(std::move(r));
  }
}

// Names bound by a target list such as `a, (b, c)` or `*rest`.
void collect_targets(const TokenSpan& toks, std::set<std::string>& out) {
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!is_plain_name(toks[i])) continue;
    if (i > 0 && is_op(toks[i - 1], ".")) continue;
    if (i + 1 < toks.size() && (is_op(toks[i + 1], ".") || is_op(toks[i + 1], "[") || is_op(toks[i + 1], "("))) {
      continue;
    }
    out.insert(toks[i].text);
  }
}

// Names bound by `... as NAME` clauses.
void collect_as_targets(const TokenSpan& toks, std::set<std::string>& out) {
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
    if (!is_name(toks[i], "as")) continue;
    std::size_t j = i + 1;
    TokenSpan target;
    int depth = 0;
    for (; j < toks.size(); ++j) {
      if (is_open(toks[j])) ++depth;
      if (is_close(toks[j])) {
        if (depth == 0) break;
        --depth;
      }
      if (depth == 0 && (is_op(toks[j], ",") || is_op(toks[j], ":"))) break;
      target.push_back(toks[j]);
    }
    collect_targets(target, out);
  }
}

bool parse_dotted(const TokenSpan& toks, std::size_t& i, std::string& out) {
  if (i >= toks.size() || toks[i].kind != TokenKind::Name) return false;
  out = toks[i++].text;
  while (i + 1 < toks.size() && is_op(toks[i], ".") && toks[i + 1].kind == TokenKind::Name) {
    out += "." + toks[i + 1].text;
    i += 2;
  }
  return true;
}

std::optional<ImportStmt> parse_import(const TokenSpan& toks, int first_line, int last_line) {
  if (toks.empty()) return std::nullopt;
  ImportStmt s;
  s.first_line = first_line;
  s.last_line = last_line;
  std::size_t i = 0;
  if (is_name(toks[0], "import")) {
    i = 1;
    while (i < toks.size()) {
      ImportAlias a;
      if (!parse_dotted(toks, i, a.name)) fail(toks[i].line, toks[i].col, "invalid import statement");
      if (i < toks.size() && is_name(toks[i], "as")) {
        ++i;
        if (i >= toks.size() || toks[i].kind != TokenKind::Name) fail(first_line, 0, "invalid import alias");
        a.asname = toks[i++].text;
      }
      s.names.push_back(std::move(a));
      if (i < toks.size() && is_op(toks[i], ",")) {
        ++i;
      } else {
        break;
      }
    }
    if (i != toks.size()) fail(toks[i].line, toks[i].col, "invalid import statement");
    return s;
  }
  if (!is_name(toks[0], "from")) return std::nullopt;
  s.from_import = true;
  i = 1;
  while (i < toks.size() && (is_op(toks[i], ".") || is_op(toks[i], "..."))) {
    s.level += static_cast<int>(toks[i].text.size());
    ++i;
  }
  if (i < toks.size() && !is_name(toks[i], "import")) {
    if (!parse_dotted(toks, i, s.module)) fail(toks[i].line, toks[i].col, "invalid from-import");
  }
  if (i >= toks.size() || !is_name(toks[i], "import")) fail(first_line, 0, "expected 'import'");
  ++i;
  if (i < toks.size() && is_op(toks[i], "*")) {
    s.star = true;
    ++i;
  } else {
    const bool paren = i < toks.size() && is_op(toks[i], "(");
    if (paren) ++i;
    while (i < toks.size() && !is_op(toks[i], ")")) {
      ImportAlias a;
      if (toks[i].kind != TokenKind::Name) fail(toks[i].line, toks[i].col, "invalid from-import name");
      a.name = toks[i++].text;
      if (i < toks.size() && is_name(toks[i], "as")) {
        ++i;
        if (i >= toks.size() || toks[i].kind != TokenKind::Name) fail(first_line, 0, "invalid import alias");
        a.asname = toks[i++].text;
      }
      s.names.push_back(std::move(a));
      if (i < toks.size() && is_op(toks[i], ",")) ++i;
    }
    if (paren) {
      if (i >= toks.size()) fail(first_line, 0, "missing ')' in import");
      ++i;
    }
    if (s.names.empty()) fail(first_line, 0, "empty import list");
  }
  if (i != toks.size()) fail(toks[i].line, toks[i].col, "invalid from-import");
  return s;
}

struct Context {
  FunctionInfo* fn = nullptr;  // null at module level (including class bodies there)
  std::string qual_prefix;
  std::string guard;  // module-level compound guard
  bool module_scope = true;  // bindings go to the module namespace
};

class Analyzer {
 public:
  explicit Analyzer(const Module& m) : module_(m) {}

  ModuleInfo run() {
    Context ctx;
    walk(module_.body, ctx);
    for (auto& f : functions_) info_.functions.push_back(std::move(f));
    return std::move(info_);
  }

 private:
  void add_refs(const TokenSpan& toks, Context& ctx) {
    std::vector<NameRef> refs;
    collect_refs(toks, refs);
    for (const auto& r : refs) {
      if (r.name == "__import__" || (r.name == "importlib" && !r.chain.empty() && r.chain[0] == "import_module")) {
        info_.dynamic_import_lines.push_back(r.line);
      }
    }
    auto& dst = ctx.fn ? ctx.fn->refs : info_.module_refs;
    dst.insert(dst.end(), refs.begin(), refs.end());
  }

  void bind(const std::set<std::string>& names, Context& ctx) {
    for (const auto& n : names) {
      if (ctx.fn) {
        ctx.fn->assigned.insert(n);
      } else if (ctx.module_scope) {
        ++info_.module_bindings[n];
      }
    }
  }

  std::string indent_of(int line) const {
    const std::string& text = module_.lines[static_cast<std::size_t>(line - 1)];
    return text.substr(0, text.find_first_not_of(" \t\f"));
  }

  void walk(const std::vector<Stmt>& stmts, Context& ctx) {
    std::string last_header;
    for (const auto& s : stmts) {
      const std::string_view kw = s.keyword();
      const bool is_async = kw == "async";
      const std::string_view head = is_async && s.tokens.size() > 1 ? std::string_view(s.tokens[1].text) : kw;
      if (head == "def") {
        function(s, ctx, is_async ? 1 : 0);
      } else if (head == "class") {
        klass(s, ctx);
      } else if (!s.body.empty()) {
        compound(s, ctx, std::string(head), last_header);
      } else if (!s.tokens.empty() && is_op(s.tokens[0], "@")) {
        add_refs(slice(s.tokens, 1, s.tokens.size()), ctx);
      } else {
        simple_line(s, ctx);
      }
      if (!s.body.empty() || head == "def" || head == "class") last_header = std::string(head);
    }
  }

  void compound(const Stmt& s, Context& ctx, const std::string& head, const std::string& last_header) {
    const TokenSpan& t = s.tokens;
    TokenSpan header = slice(t, 0, t.size() - 1);  // drop trailing ':'
    if (head == "for" || (head == "async" && t.size() > 1 && is_name(t[1], "for"))) {
      const std::size_t start = head == "for" ? 1 : 2;
      const std::size_t in_at = [&] {
        for (std::size_t i = start; i < header.size(); ++i) {
          if (is_name(header[i], "in")) return i;
        }
        return header.size();
      }();
      std::set<std::string> targets;
      collect_targets(slice(header, start, in_at), targets);
      bind(targets, ctx);
    }
    if (head == "with" || head == "except" || head == "async") {
      std::set<std::string> targets;
      collect_as_targets(header, targets);
      bind(targets, ctx);
    }
    add_refs(header, ctx);
    Context inner = ctx;
    if (!ctx.fn && ctx.guard.empty() && ctx.qual_prefix.empty()) {
      const bool try_family = head == "try" || head == "except" || head == "finally" ||
                              (head == "else" && (last_header == "try" || last_header == "except"));
      inner.guard = try_family ? "try" : "conditional";
    }
    walk(s.body, inner);
  }

  void simple_line(const Stmt& s, Context& ctx) {
    auto parts = split_top(s.tokens, ";");
    std::erase_if(parts, [](const TokenSpan& p) { return p.empty(); });
    const bool shares = parts.size() > 1;
    for (auto& part : parts) simple(part, s, ctx, shares);
  }

  void simple(const TokenSpan& toks, const Stmt& s, Context& ctx, bool shares_line) {
    if (toks.empty()) return;
    const Token& first = toks[0];
    if (is_name(first, "import") || is_name(first, "from")) {
      auto imp = parse_import(toks, s.first_line, s.last_line);
      if (!imp) return;
      imp->shares_line = shares_line;
      std::set<std::string> names;
      for (const auto& a : imp->names) names.insert(a.binding(imp->from_import));
      if (ctx.fn) {
        ctx.fn->imports.push_back(*imp);
      } else if (ctx.module_scope && ctx.guard.empty()) {
        info_.imports.push_back(*imp);
      } else if (ctx.module_scope) {
        info_.guarded.push_back({*imp, ctx.guard});
      }
      if (!ctx.fn) bind(names, ctx);
      return;
    }
    if (is_name(first, "global") || is_name(first, "nonlocal")) {
      for (std::size_t i = 1; i < toks.size(); ++i) {
        if (toks[i].kind == TokenKind::Name && ctx.fn) ctx.fn->globals.insert(toks[i].text);
      }
      if (!ctx.fn) add_refs(slice(toks, 1, toks.size()), ctx);
      return;
    }
    // Inline compound statement: `if cond: body` etc. Header keywords are
    // skipped by collect_refs; targets of inline `for`/`with` are bound.
    if (is_name(first, "for") || is_name(first, "with") || is_name(first, "except")) {
      std::set<std::string> targets;
      if (is_name(first, "for")) {
        std::size_t in_at = 1;
        while (in_at < toks.size() && !is_name(toks[in_at], "in")) ++in_at;
        collect_targets(slice(toks, 1, in_at), targets);
      } else {
        collect_as_targets(toks, targets);
      }
      bind(targets, ctx);
    }
    std::set<std::string> targets;
    const auto assign_parts = split_top(toks, "=");
    if (assign_parts.size() > 1) {
      for (std::size_t p = 0; p + 1 < assign_parts.size(); ++p) collect_targets(assign_parts[p], targets);
    } else {
      for (std::string_view aug : {"+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="}) {
        const std::size_t at = find_top(toks, aug);
        if (at < toks.size()) {
          collect_targets(slice(toks, 0, at), targets);
          break;
        }
      }
    }
    const std::size_t colon = find_top(toks, ":");
    const std::size_t eq = find_top(toks, "=");
    if (colon < toks.size() && colon < eq && !is_keyword(first.text) && first.kind == TokenKind::Name) {
      collect_targets(slice(toks, 0, colon), targets);
    }
    for (std::size_t i = 0; i + 1 < toks.size(); ++i) {
      if (is_op(toks[i + 1], ":=") && is_plain_name(toks[i])) targets.insert(toks[i].text);
    }
    bind(targets, ctx);
    add_refs(toks, ctx);
  }

  void klass(const Stmt& s, Context& ctx) {
    const TokenSpan& t = s.tokens;
    if (t.size() < 2) fail(s.first_line, 0, "invalid class statement");
    const std::string name = t[1].text;
    bind({name}, ctx);
    const std::size_t colon = find_top(t, ":", 2);
    add_refs(slice(t, 2, colon), ctx);
    Context inner = ctx;
    inner.qual_prefix = ctx.qual_prefix + name + ".";
    inner.module_scope = false;
    if (colon + 1 < t.size()) {
      TokenSpan inline_body = slice(t, colon + 1, t.size());
      for (auto& part : split_top(inline_body, ";")) simple(part, s, inner, false);
    }
    walk(s.body, inner);
  }

  void function(const Stmt& s, Context& ctx, std::size_t def_at) {
    const TokenSpan& t = s.tokens;
    if (def_at + 1 >= t.size() || t[def_at + 1].kind != TokenKind::Name) fail(s.first_line, 0, "invalid def");
    const std::string name = t[def_at + 1].text;
    bind({name}, ctx);
    const std::size_t open = def_at + 2;
    if (open >= t.size() || !is_op(t[open], "(")) fail(s.first_line, 0, "expected '(' after function name");
    const std::size_t close = matching_close(t, open);
    if (close >= t.size()) fail(s.first_line, 0, "unclosed parameter list");

    functions_.emplace_back();
    FunctionInfo& fn = functions_.back();
    fn.qualname = ctx.qual_prefix + name;
    fn.def_line = s.first_line;

    // Parameters: names are locals of the new scope; defaults and
    // annotations are evaluated in the enclosing scope.
    for (const auto& param : split_top(slice(t, open + 1, close), ",")) {
      std::size_t i = 0;
      while (i < param.size() && (is_op(param[i], "*") || is_op(param[i], "**") || is_op(param[i], "/"))) ++i;
      if (i < param.size() && param[i].kind == TokenKind::Name) fn.params.insert(param[i].text);
      if (i + 1 < param.size()) add_refs(slice(param, i + 1, param.size()), ctx);
    }
    const std::size_t colon = find_top(t, ":", close + 1);
    add_refs(slice(t, close + 1, colon), ctx);  // return annotation

    Context inner;
    inner.fn = &fn;
    inner.qual_prefix = fn.qualname + ".<locals>.";
    inner.module_scope = false;
    if (colon + 1 < t.size()) {
      fn.inline_body = true;
      fn.insert_before_line = s.first_line;
      TokenSpan inline_body = slice(t, colon + 1, t.size());
      for (auto& part : split_top(inline_body, ";")) simple(part, s, inner, false);
      return;
    }
    const Stmt& first = s.body.front();
    const bool docstring = std::all_of(first.tokens.begin(), first.tokens.end(),
                                       [](const Token& tok) { return tok.kind == TokenKind::String; });
    fn.body_indent = indent_of(first.first_line);
    if (docstring && s.body.size() > 1) {
      fn.insert_before_line = s.body[1].first_line;
    } else if (docstring) {
      fn.insert_before_line = first.last_line + 1;
    } else {
      fn.insert_before_line = first.first_line;
    }
    walk(s.body, inner);
  }

  const Module& module_;
  ModuleInfo info_;
  std::deque<FunctionInfo> functions_;
};

}  // namespace

bool is_keyword(std::string_view name) {
  return std::find(kKeywords.begin(), kKeywords.end(), name) != kKeywords.end();
}

std::vector<Token> tokenize(std::string_view source) { return Tokenizer(source).run(); }

std::string_view Stmt::keyword() const {
  if (tokens.empty() || tokens[0].kind != TokenKind::Name || !is_keyword(tokens[0].text)) return {};
  return tokens[0].text;
}

Module parse_module(std::string_view source) {
  const auto toks = tokenize(source);
  Module m;
  m.body = StmtParser(toks).module();
  std::size_t pos = 0;
  while (pos < source.size()) {
    auto end = source.find('\n', pos);
    if (end == std::string_view::npos) end = source.size();
    std::string_view line = source.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    m.lines.emplace_back(line);
    pos = end + 1;
  }
  return m;
}

std::string ImportAlias::binding(bool from_import) const {
  if (!asname.empty()) return asname;
  if (from_import) return name;
  return name.substr(0, name.find('.'));
}

ModuleInfo analyze(const Module& module) { return Analyzer(module).run(); }

}  // namespace pgo::py
