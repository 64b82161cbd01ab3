#include "pgo/rewriter.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "pgo/digest.hpp"
#include "pgo/error.hpp"
#include "pgo/pysource.hpp"

namespace pgo {

namespace {

using py::FunctionInfo;
using py::ImportAlias;
using py::ImportStmt;
using py::NameRef;

bool within(const std::string& module, const std::set<std::string>& roots) {
  for (const auto& r : roots) {
    if (module == r) return true;
    if (module.size() > r.size() && module.compare(0, r.size(), r) == 0 && module[r.size()] == '.') return true;
  }
  return false;
}

bool alias_matches(const ImportStmt& s, const ImportAlias& a, const std::set<std::string>& roots) {
  if (s.level > 0) return false;
  if (!s.from_import) return within(a.name, roots);
  return within(s.module, roots) || within(s.module + "." + a.name, roots);
}

// `import a.b.c` without an alias binds `a`; when `a` stays bound by another
// statement only references going through `a.b.c` need this import.
bool plain_dotted(const ImportStmt& s, const ImportAlias& a) {
  return !s.from_import && a.asname.empty() && a.name.find('.') != std::string::npos;
}

std::vector<std::string> tail_components(const std::string& dotted) {
  std::vector<std::string> parts;
  std::size_t start = dotted.find('.');
  while (start != std::string::npos) {
    const std::size_t next = dotted.find('.', start + 1);
    parts.push_back(dotted.substr(start + 1, next == std::string::npos ? std::string::npos : next - start - 1));
    start = next;
  }
  return parts;
}

int count_of(const std::map<std::string, int>& m, const std::string& k) {
  auto it = m.find(k);
  return it == m.end() ? 0 : it->second;
}

bool ref_uses(const NameRef& r, const ImportStmt& s, const ImportAlias& a, int remaining_sites) {
  if (r.name != a.binding(s.from_import)) return false;
  if (!plain_dotted(s, a) || remaining_sites <= 0) return true;
  const auto want = tail_components(a.name);
  return r.chain.size() >= want.size() && std::equal(want.begin(), want.end(), r.chain.begin());
}

std::string describe(const ImportStmt& s) {
  std::string out;
  if (s.from_import) {
    out = "from " + std::string(static_cast<std::size_t>(s.level), '.') + s.module + " import ";
    if (s.star) return out + "*";
  } else {
    out = "import ";
  }
  for (std::size_t i = 0; i < s.names.size(); ++i) {
    if (i) out += ", ";
    out += s.names[i].name;
    if (!s.names[i].asname.empty()) out += " as " + s.names[i].asname;
  }
  return out;
}

std::string import_text(const ImportStmt& s, const std::vector<const ImportAlias*>& used) {
  ImportStmt copy = s;
  copy.names.clear();
  for (const auto* a : used) copy.names.push_back(*a);
  return describe(copy);
}

std::string at_line(const ImportStmt& s) { return describe(s) + " (line " + std::to_string(s.first_line) + ")"; }

std::string enclosing_function(const std::string& qualname) {
  const auto pos = qualname.rfind(".<locals>.");
  return pos == std::string::npos ? std::string() : qualname.substr(0, pos);
}

struct ScopeIndex {
  std::map<std::string, const FunctionInfo*> by_name;

  explicit ScopeIndex(const std::vector<FunctionInfo>& fns) {
    for (const auto& f : fns) by_name.emplace(f.qualname, &f);
  }

  // True when `name` resolves to a local of fn or of an enclosing function.
  bool shadowed(const FunctionInfo& fn, const std::string& name, bool count_imports) const {
    const FunctionInfo* cur = &fn;
    while (cur) {
      if (cur->params.contains(name) || (cur->assigned.contains(name) && !cur->globals.contains(name))) return true;
      if (count_imports) {
        for (const auto& imp : cur->imports) {
          for (const auto& a : imp.names) {
            if (a.binding(imp.from_import) == name) return true;
          }
        }
      }
      auto it = by_name.find(enclosing_function(cur->qualname));
      cur = it == by_name.end() ? nullptr : it->second;
    }
    return false;
  }
};

struct Candidate {
  const ImportStmt* stmt;
  bool skipped = false;
};

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    end = end == std::string_view::npos ? text.size() : end + 1;
    lines.emplace_back(text.substr(pos, end - pos));
    pos = end;
  }
  return lines;
}

std::pair<std::string, std::string> split_terminator(const std::string& line) {
  std::size_t n = 0;
  if (line.size() >= 2 && line.compare(line.size() - 2, 2, "\r\n") == 0) {
    n = 2;
  } else if (!line.empty() && line.back() == '\n') {
    n = 1;
  }
  return {line.substr(0, line.size() - n), line.substr(line.size() - n)};
}

std::string detect_eol(const std::vector<std::string>& lines) {
  for (const auto& l : lines) {
    auto [body, term] = split_terminator(l);
    if (!term.empty()) return term;
  }
  return "\n";
}

struct Op {
  char tag;  // ' ', '-', '+'
  std::string text;
};

std::vector<Op> edit_script(std::string_view source, const RewritePlan& p) {
  const auto lines = split_lines(source);
  std::set<int> removed;
  for (const auto& [a, b] : p.removals) {
    for (int l = a; l <= b; ++l) removed.insert(l);
  }
  std::map<int, std::vector<std::string>> inserts;
  for (const auto& ins : p.insertions) inserts[ins.before_line].push_back(ins.text);
  std::vector<Op> ops;
  for (int i = 1; i <= static_cast<int>(lines.size()) + 1; ++i) {
    if (auto it = inserts.find(i); it != inserts.end()) {
      for (const auto& t : it->second) ops.push_back({'+', t});
    }
    if (i > static_cast<int>(lines.size())) break;
    auto [body, term] = split_terminator(lines[static_cast<std::size_t>(i - 1)]);
    if (removed.contains(i)) {
      ops.push_back({'-', body});
      ops.push_back({'+', std::string(kDeferredMarker) + body});
    } else {
      ops.push_back({' ', body});
    }
  }
  // Within each run of changes, removals come before additions.
  for (auto it = ops.begin(); it != ops.end();) {
    if (it->tag == ' ') {
      ++it;
      continue;
    }
    auto run_end = std::find_if(it, ops.end(), [](const Op& o) { return o.tag == ' '; });
    std::stable_partition(it, run_end, [](const Op& o) { return o.tag == '-'; });
    it = run_end;
  }
  return ops;
}

struct Deferred {
  std::vector<ImportStmt> stmts;
  std::vector<std::string> errors;
};

// Marker blocks in rewritten text, parsed back into import statements.
Deferred deferred_imports(std::string_view rewritten) {
  Deferred out;
  const auto lines = split_lines(rewritten);
  std::string block;
  int block_start = 0;
  auto flush = [&] {
    if (block.empty()) return;
    try {
      auto info = py::analyze(py::parse_module(block));
      for (auto& s : info.imports) out.stmts.push_back(std::move(s));
    } catch (const Error& e) {
      out.errors.push_back("marker block at line " + std::to_string(block_start) + " does not parse: " + e.what());
    }
    block.clear();
  };
  for (std::size_t i = 0; i < lines.size(); ++i) {
    auto [body, term] = split_terminator(lines[i]);
    if (body.compare(0, kDeferredMarker.size(), kDeferredMarker) == 0) {
      if (block.empty()) block_start = static_cast<int>(i + 1);
      block += body.substr(kDeferredMarker.size()) + "\n";
    } else {
      flush();
    }
  }
  flush();
  return out;
}

}  // namespace

std::vector<GlobalImport> scan_imports(std::string_view source, const std::string& file) {
  const auto info = py::analyze(py::parse_module(source));
  std::vector<GlobalImport> out;
  for (const auto& s : info.imports) {
    GlobalImport g;
    g.source_file = file;
    g.line_span = {s.first_line, s.last_line};
    if (s.from_import) {
      g.kind = ImportKind::From;
      g.target_module = std::string(static_cast<std::size_t>(s.level), '.') + s.module;
      g.star = s.star;
      for (const auto& a : s.names) {
        const std::string prefix = s.module.empty() ? g.target_module : g.target_module + ".";
        g.bound_names.push_back({a.binding(true), prefix + a.name});
      }
      out.push_back(std::move(g));
    } else {
      for (const auto& a : s.names) {
        GlobalImport each = g;
        each.kind = ImportKind::Plain;
        each.target_module = a.name;
        each.bound_names.push_back({a.binding(false), a.name});
        out.push_back(std::move(each));
      }
    }
  }
  return out;
}

RewritePlan plan(std::string_view source, const PlanOptions& opts) {
  RewritePlan p;
  p.file = opts.file;
  p.source_digest = sha256_hex(source);
  const py::Module module = py::parse_module(source);
  const py::ModuleInfo info = py::analyze(module);
  const ScopeIndex scopes(info.functions);

  auto stmt_flagged = [&](const ImportStmt& s) {
    if (s.star) return s.level == 0 && within(s.module, opts.flagged);
    return std::any_of(s.names.begin(), s.names.end(), [&](const ImportAlias& a) {
      return alias_matches(s, a, opts.flagged);
    });
  };

  for (const auto& g : info.guarded) {
    if (stmt_flagged(g.stmt)) {
      p.skipped.push_back({g.guard == "try" ? "try-import" : "conditional-import", at_line(g.stmt)});
    }
  }

  std::vector<Candidate> cands;
  for (const auto& s : info.imports) {
    if (!stmt_flagged(s)) continue;
    if (s.star) {
      p.skipped.push_back({"star-import", at_line(s)});
      continue;
    }
    const auto n_flagged = std::count_if(s.names.begin(), s.names.end(),
                                         [&](const ImportAlias& a) { return alias_matches(s, a, opts.flagged); });
    if (static_cast<std::size_t>(n_flagged) != s.names.size()) {
      p.skipped.push_back({"mixed-import", at_line(s) + " also imports modules that are not flagged"});
      continue;
    }
    if (s.shares_line) {
      p.skipped.push_back({"compound-statement", at_line(s) + " shares its line with another statement"});
      continue;
    }
    const bool denied = std::any_of(s.names.begin(), s.names.end(),
                                    [&](const ImportAlias& a) { return alias_matches(s, a, opts.denylist); });
    if (denied) {
      p.skipped.push_back({"denylist", at_line(s)});
      continue;
    }
    bool global_decl = false;
    for (const auto& a : s.names) {
      for (const auto& fn : info.functions) {
        if (fn.globals.contains(a.binding(s.from_import))) {
          p.skipped.push_back({"global-rebind", at_line(s) + ": '" + a.binding(s.from_import) +
                                                    "' is declared global in " + fn.qualname});
          global_decl = true;
          break;
        }
      }
      if (global_decl) break;
    }
    if (!global_decl) cands.push_back({&s});
  }

  // Skipping one candidate can narrow what counts as a use of another, so
  // iterate until no further candidate is skipped.
  std::map<std::string, int> remaining;
  for (bool changed = true; changed;) {
    changed = false;
    remaining = info.module_bindings;
    for (const auto& c : cands) {
      if (c.skipped) continue;
      for (const auto& a : c.stmt->names) --remaining[a.binding(c.stmt->from_import)];
    }
    for (auto& c : cands) {
      if (c.skipped) continue;
      const ImportStmt& s = *c.stmt;
      for (const auto& a : s.names) {
        const std::string b = a.binding(s.from_import);
        if (!plain_dotted(s, a) && count_of(remaining, b) > 0) {
          p.skipped.push_back({"rebound", at_line(s) + ": '" + b + "' is bound more than once at module level"});
          c.skipped = changed = true;
          break;
        }
        auto hit = std::find_if(info.module_refs.begin(), info.module_refs.end(), [&](const NameRef& r) {
          return ref_uses(r, s, a, count_of(remaining, b));
        });
        if (hit != info.module_refs.end()) {
          p.skipped.push_back({"module-level use", at_line(s) + ": '" + b + "' is used at module level (line " +
                                                       std::to_string(hit->line) + ")"});
          c.skipped = changed = true;
          break;
        }
      }
    }
  }

  // Per scope, the aliases of each candidate that the scope uses.
  auto used_in = [&](const FunctionInfo& fn, const ImportStmt& s) {
    std::vector<const ImportAlias*> used;
    for (const auto& a : s.names) {
      const std::string b = a.binding(s.from_import);
      if (scopes.shadowed(fn, b, true)) continue;
      const bool uses = std::any_of(fn.refs.begin(), fn.refs.end(),
                                    [&](const NameRef& r) { return ref_uses(r, s, a, count_of(remaining, b)); });
      if (uses) used.push_back(&a);
    }
    return used;
  };

  for (auto& c : cands) {
    if (c.skipped) continue;
    for (const auto& fn : info.functions) {
      if (fn.inline_body && !used_in(fn, *c.stmt).empty()) {
        p.skipped.push_back({"inline-body", at_line(*c.stmt) + ": used by " + fn.qualname +
                                                ", whose body shares the def line"});
        c.skipped = true;
        break;
      }
    }
  }

  for (const auto& fn : info.functions) {
    for (const auto& c : cands) {
      if (c.skipped) continue;
      const auto used = used_in(fn, *c.stmt);
      if (used.empty()) continue;
      p.insertions.push_back({fn.qualname, fn.insert_before_line, fn.body_indent + import_text(*c.stmt, used)});
    }
  }
  std::stable_sort(p.insertions.begin(), p.insertions.end(),
                   [](const Insertion& a, const Insertion& b) { return a.before_line < b.before_line; });
  for (const auto& c : cands) {
    if (!c.skipped) p.removals.emplace_back(c.stmt->first_line, c.stmt->last_line);
  }
  for (int line : info.dynamic_import_lines) {
    p.skipped.push_back({"dynamic-import", "import by string name at line " + std::to_string(line)});
  }
  return p;
}

std::string apply(std::string_view source, const RewritePlan& plan) {
  if (sha256_hex(source) != plan.source_digest) {
    throw Error(ErrorKind::StaleSource, "source of " + (plan.file.empty() ? std::string("<input>") : plan.file) +
                                            " changed since the plan was made");
  }
  if (plan.empty()) return std::string(source);
  const auto lines = split_lines(source);
  const std::string eol = detect_eol(lines);
  std::set<int> removed;
  for (const auto& [a, b] : plan.removals) {
    for (int l = a; l <= b; ++l) removed.insert(l);
  }
  std::map<int, std::vector<std::string>> inserts;
  for (const auto& ins : plan.insertions) inserts[ins.before_line].push_back(ins.text);

  std::string out;
  out.reserve(source.size() + 256);
  const int n = static_cast<int>(lines.size());
  for (int i = 1; i <= n + 1; ++i) {
    if (auto it = inserts.find(i); it != inserts.end()) {
      if (i == n + 1 && !out.empty() && out.back() != '\n') out += eol;
      for (const auto& t : it->second) out += t + eol;
    }
    if (i > n) break;
    const std::string& line = lines[static_cast<std::size_t>(i - 1)];
    if (removed.contains(i)) {
      out += std::string(kDeferredMarker) + line;
    } else {
      out += line;
    }
  }
  return out;
}

VerificationReport check(std::string_view original, std::string_view rewritten) {
  VerificationReport rep;
  auto fail = [&](std::string msg) {
    rep.ok = false;
    rep.failures.push_back(std::move(msg));
  };
  py::ModuleInfo orig;
  py::ModuleInfo rew;
  try {
    orig = py::analyze(py::parse_module(original));
  } catch (const Error& e) {
    fail(std::string("original does not parse: ") + e.what());
  }
  try {
    rew = py::analyze(py::parse_module(rewritten));
  } catch (const Error& e) {
    fail(std::string("rewritten does not parse: ") + e.what());
    return rep;
  }
  if (!rep.ok) return rep;

  const Deferred deferred = deferred_imports(rewritten);
  for (const auto& e : deferred.errors) fail(e);

  std::map<std::string, int> deferred_sites;
  for (const auto& s : deferred.stmts) {
    for (const auto& a : s.names) ++deferred_sites[a.binding(s.from_import)];
  }
  std::set<std::string> names;
  for (const auto& [n, c] : orig.module_bindings) names.insert(n);
  for (const auto& [n, c] : rew.module_bindings) names.insert(n);
  std::vector<std::string> diverged;
  for (const auto& n : names) {
    if (count_of(orig.module_bindings, n) - count_of(deferred_sites, n) != count_of(rew.module_bindings, n)) {
      diverged.push_back(n);
    }
  }
  if (!diverged.empty()) {
    std::string msg = "bindings diverged:";
    for (const auto& n : diverged) msg += " " + n;
    fail(msg);
  }

  const ScopeIndex scopes(rew.functions);
  for (const auto& fn : rew.functions) {
    for (const auto& s : deferred.stmts) {
      for (const auto& a : s.names) {
        const std::string b = a.binding(s.from_import);
        if (scopes.shadowed(fn, b, true)) continue;
        const int remaining = count_of(rew.module_bindings, b);
        const bool uses = std::any_of(fn.refs.begin(), fn.refs.end(),
                                      [&](const NameRef& r) { return ref_uses(r, s, a, remaining); });
        if (uses) fail("scope " + fn.qualname + " uses deferred binding '" + b + "' without re-importing it");
      }
    }
  }
  for (const auto& s : deferred.stmts) {
    for (const auto& a : s.names) {
      const std::string b = a.binding(s.from_import);
      for (const auto& r : rew.module_refs) {
        if (ref_uses(r, s, a, count_of(rew.module_bindings, b))) {
          fail("deferred binding '" + b + "' is used at module level (line " + std::to_string(r.line) + ")");
          break;
        }
      }
    }
  }
  return rep;
}

VerificationReport verify(std::string_view original, std::string_view rewritten) {
  auto rep = check(original, rewritten);
  if (!rep.ok) {
    std::string msg = "verification failed:";
    for (const auto& f : rep.failures) msg += "\n  " + f;
    throw Error(ErrorKind::VerificationFailure, msg);
  }
  return rep;
}

std::string patch_summary_json(const RewritePlan& plan) {
  nlohmann::ordered_json j;
  j["file"] = plan.file;
  auto removed = nlohmann::ordered_json::array();
  for (const auto& [a, b] : plan.removals) {
    for (int l = a; l <= b; ++l) removed.push_back(l);
  }
  j["removed"] = std::move(removed);
  auto inserted = nlohmann::ordered_json::array();
  for (const auto& ins : plan.insertions) inserted.push_back({{"scope", ins.scope}, {"line", ins.before_line}});
  j["inserted"] = std::move(inserted);
  auto skipped = nlohmann::ordered_json::array();
  for (const auto& s : plan.skipped) skipped.push_back({{"reason", s.reason}, {"detail", s.detail}});
  j["skipped"] = std::move(skipped);
  return j.dump();
}

std::string plans_to_json(const std::vector<RewritePlan>& plans) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& p : plans) {
    nlohmann::ordered_json j;
    j["file"] = p.file;
    j["source_digest"] = p.source_digest;
    auto removals = nlohmann::ordered_json::array();
    for (const auto& [a, b] : p.removals) removals.push_back({a, b});
    j["removals"] = std::move(removals);
    auto insertions = nlohmann::ordered_json::array();
    for (const auto& ins : p.insertions) {
      insertions.push_back({{"scope", ins.scope}, {"before_line", ins.before_line}, {"text", ins.text}});
    }
    j["insertions"] = std::move(insertions);
    auto skipped = nlohmann::ordered_json::array();
    for (const auto& s : p.skipped) skipped.push_back({{"reason", s.reason}, {"detail", s.detail}});
    j["skipped"] = std::move(skipped);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<RewritePlan> plans_from_json(std::string_view text) {
  std::vector<RewritePlan> out;
  try {
    for (const auto& j : nlohmann::json::parse(text)) {
      RewritePlan p;
      p.file = j.at("file").get<std::string>();
      p.source_digest = j.at("source_digest").get<std::string>();
      for (const auto& r : j.at("removals")) p.removals.emplace_back(r.at(0).get<int>(), r.at(1).get<int>());
      for (const auto& i : j.at("insertions")) {
        p.insertions.push_back(
            {i.at("scope").get<std::string>(), i.at("before_line").get<int>(), i.at("text").get<std::string>()});
      }
      for (const auto& s : j.value("skipped", nlohmann::json::array())) {
        p.skipped.push_back({s.at("reason").get<std::string>(), s.at("detail").get<std::string>()});
      }
      out.push_back(std::move(p));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("invalid plan file: ") + e.what());
  }
  return out;
}

std::string unified_diff(std::string_view source, const RewritePlan& plan, const std::string& path) {
  if (plan.empty()) return {};
  const auto ops = edit_script(source, plan);
  constexpr std::size_t kContext = 3;
  std::string out = "--- a/" + path + "\n+++ b/" + path + "\n";
  std::size_t i = 0;
  while (i < ops.size()) {
    if (ops[i].tag == ' ') {
      ++i;
      continue;
    }
    // Grow a hunk while changes are within 2*context of each other.
    std::size_t start = i >= kContext ? i - kContext : 0;
    std::size_t end = i;
    std::size_t last_change = i;
    while (end < ops.size()) {
      if (ops[end].tag != ' ') last_change = end;
      if (end - last_change > 2 * kContext) break;
      ++end;
    }
    end = std::min(ops.size(), last_change + kContext + 1);
    int old_start = 1;
    int new_start = 1;
    for (std::size_t k = 0; k < start; ++k) {
      if (ops[k].tag != '+') ++old_start;
      if (ops[k].tag != '-') ++new_start;
    }
    int old_len = 0;
    int new_len = 0;
    std::string body;
    for (std::size_t k = start; k < end; ++k) {
      if (ops[k].tag != '+') ++old_len;
      if (ops[k].tag != '-') ++new_len;
      body += ops[k].tag + ops[k].text + "\n";
    }
    out += "@@ -" + std::to_string(old_len ? old_start : old_start - 1) + "," + std::to_string(old_len) + " +" +
           std::to_string(new_len ? new_start : new_start - 1) + "," + std::to_string(new_len) + " @@\n" + body;
    i = end;
  }
  return out;
}

}  // namespace pgo
