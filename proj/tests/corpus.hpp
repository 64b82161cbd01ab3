#pragma once

// Runs one rewriter corpus case: plan, apply and verify, then execute the
// original and the rewritten program under python3 and compare.

#include <json.hpp>

#include <string>
#include <vector>

#include "pgo/rewriter.hpp"
#include "test_support.hpp"

namespace pgo::test {

struct CaseOutcome {
  std::string name;
  std::vector<std::string> problems;

  bool ok() const { return problems.empty(); }
};

inline nlohmann::json harness(const fs::path& app_dir, const fs::path& case_json) {
  const auto r = python(quote(fixture("rewriter_corpus/harness.py").string()) + " " + quote(app_dir.string()) + " " +
                        quote(case_json.string()));
  if (r.status != 0) return nullptr;
  try {
    return nlohmann::json::parse(r.out);
  } catch (const nlohmann::json::exception&) {
    return nullptr;
  }
}

inline bool python_parses(const fs::path& file) {
  return python("-c " + quote("import ast, sys; ast.parse(open(sys.argv[1]).read())") + " " + quote(file.string()))
             .status == 0;
}

inline std::vector<fs::path> corpus_cases() {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(fixture("rewriter_corpus/cases"))) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

inline CaseOutcome run_corpus_case(const fs::path& dir) {
  CaseOutcome res;
  res.name = dir.filename().string();
  auto problem = [&](const std::string& p) { res.problems.push_back(p); };

  const auto case_path = dir / "case.json";
  const auto spec = nlohmann::json::parse(slurp(case_path));
  const std::string source = slurp(dir / "app.py");
  PlanOptions opts;
  opts.file = "app.py";
  for (const auto& f : spec.at("flagged")) opts.flagged.insert(f.get<std::string>());
  const RewritePlan p = plan(source, opts);

  const auto original = harness(dir, case_path);
  if (original.is_null()) {
    problem("original program failed to run");
    return res;
  }

  if (spec.at("expect") == "skip") {
    const auto reason = spec.at("reason").get<std::string>();
    if (!p.empty()) problem("expected an empty plan");
    if (std::none_of(p.skipped.begin(), p.skipped.end(), [&](const Skip& s) { return s.reason == reason; })) {
      problem("missing skip reason '" + reason + "'");
    }
    if (pgo::apply(source, p) != source) problem("empty plan changed the source");
    return res;
  }

  if (static_cast<int>(p.removals.size()) != spec.at("removals").get<int>()) {
    problem("removals " + std::to_string(p.removals.size()) + " != " + spec.at("removals").dump());
  }
  if (static_cast<int>(p.insertions.size()) != spec.at("insertions").get<int>()) {
    problem("insertions " + std::to_string(p.insertions.size()) + " != " + spec.at("insertions").dump());
  }
  const std::string rewritten = pgo::apply(source, p);
  const auto report = check(source, rewritten);
  for (const auto& f : report.failures) problem("verify: " + f);

  TempDir tmp;
  spit(tmp / "app.py", rewritten);
  if (!python_parses(tmp / "app.py")) problem("rewritten program does not parse");
  const auto after = harness(tmp.path(), case_path);
  if (after.is_null()) {
    problem("rewritten program failed to run");
    return res;
  }

  // Same results and output for every call, in order.
  const auto& c0 = original.at("calls");
  const auto& c1 = after.at("calls");
  if (c0.size() != c1.size()) problem("call count differs");
  for (std::size_t i = 0; i < std::min(c0.size(), c1.size()); ++i) {
    if (c0[i].at("result") != c1[i].at("result") || c0[i].at("stdout") != c1[i].at("stdout")) {
      problem("call " + std::to_string(i) + " (" + c0[i].at("entry").get<std::string>() + ") differs: " +
              c0[i].dump() + " vs " + c1[i].dump());
    }
  }

  // Loaded eagerly before, lazily after: absent at import, present once a
  // using scope has run.
  for (const auto& [mod, loaded] : original.at("after_import").items()) {
    if (!loaded.get<bool>()) problem("original did not load " + mod + " at import");
  }
  for (const auto& [mod, loaded] : after.at("after_import").items()) {
    if (loaded.get<bool>()) problem(mod + " loaded at import after rewriting");
  }
  if (!c1.empty()) {
    for (const auto& mod : spec.at("loads")) {
      if (!c1.back().at("loaded").at(mod.get<std::string>()).get<bool>()) {
        problem(mod.get<std::string>() + " never loaded by its users");
      }
    }
  }

  if (!plan(rewritten, opts).empty()) problem("re-planning the rewritten source is not empty");
  if (std::count(rewritten.begin(), rewritten.end(), '\n') < std::count(source.begin(), source.end(), '\n')) {
    problem("output has fewer lines than input");
  }
  return res;
}

}  // namespace pgo::test
