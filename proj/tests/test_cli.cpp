#include <doctest.h>

#include <json.hpp>

#include "test_support.hpp"

using namespace pgo::test;

namespace {

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_CASE("cli: full pipeline and exit codes") {
  TempDir dir;
  const auto ing = pgo_cli("ingest " + quote(fixture("profiles/demo").string()) + " --out " + quote((dir / "runs").string()));
  REQUIRE(ing.status == 0);
  const std::string store = first_line(ing.out);
  CHECK(fs::exists(store));

  const auto an = pgo_cli("analyze " + quote(store) + " --out " + quote((dir / "a").string()));
  REQUIRE(an.status == 0);
  const auto report = (dir / "a" / "report.json").string();
  CHECK(fs::exists(report));

  const auto md = pgo_cli("report " + quote(report) + " --format markdown");
  CHECK(md.status == 0);
  CHECK(md.out.find("| + | slowlib |") != std::string::npos);
  CHECK(pgo_cli("report " + quote(report) + " --format html").status == 1);

  fs::copy(fixture("demo_app"), dir / "app", fs::copy_options::recursive);
  const auto plans = (dir / "plans.json").string();
  const auto dry = pgo_cli("optimize --dry-run --save-plans " + quote(plans) + " " + quote(report) + " " +
                           quote((dir / "app").string()));
  CHECK(dry.status == 0);
  CHECK(dry.out.find("+++ b/handler.py") != std::string::npos);

  // A plan whose insertions were dropped cannot verify.
  auto j = nlohmann::json::parse(slurp(plans));
  j[0]["insertions"] = nlohmann::json::array();
  spit(dir / "broken.json", j.dump());
  CHECK(pgo_cli("optimize --plans " + quote((dir / "broken.json").string()) + " " + quote(report) + " " +
                quote((dir / "app").string()))
            .status == 3);

  const auto ok = pgo_cli("optimize " + quote(report) + " " + quote((dir / "app").string()));
  CHECK(ok.status == 0);
  CHECK(nlohmann::json::parse(ok.out).at("files")[0].at("verified") == true);
}

TEST_CASE("cli: usage, config and data errors") {
  TempDir dir;
  CHECK(pgo_cli("").status == 1);
  CHECK(pgo_cli("frobnicate").status == 1);
  spit(dir / "bad.json", "{\"no_such_key\": 1}");
  CHECK(pgo_cli("--config " + quote((dir / "bad.json").string()) + " simulate --windows 2").status == 1);
  spit(dir / "broken.pgoprof.jsonl", "{not json\n");
  CHECK(pgo_cli("ingest " + quote((dir / "broken.pgoprof.jsonl").string()) + " --out " + quote((dir / "o").string()))
            .status == 2);
  CHECK(pgo_cli("analyze " + quote((dir / "missing").string())).status == 2);
}

TEST_CASE("cli: simulate and watch") {
  TempDir dir;
  const auto trace = (dir / "t.csv").string();
  REQUIRE(pgo_cli("simulate --windows 10 --shift 4 --out " + quote(trace)).status == 0);
  const auto w = pgo_cli("watch --no-auto " + quote(trace) + " --out " + quote((dir / "w").string()));
  CHECK(w.status == 0);
  const auto recs = slurp(dir / "w" / "triggers.jsonl");
  CHECK(recs.find("\"window\":4") != std::string::npos);
  CHECK(std::count(recs.begin(), recs.end(), '\n') == 1);
  CHECK(pgo_cli("watch --auto --no-auto " + quote(trace)).status == 1);
}
