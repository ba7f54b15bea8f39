#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "bceh_cli_test" / name;
  fs::remove_all(p);
  return p;
}

int run(const std::string& args) {
  const std::string cmd = std::string("\"") + BCEH_CLI_PATH + "\" " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json report(const fs::path& dir) { return json::parse(slurp(dir / "report.json")); }

void check_manifest(const fs::path& dir) {
  const json r = report(dir);
  CHECK(r["schema"] == 1);
  REQUIRE(r["outputs"].is_array());
  for (const auto& f : r["outputs"]) {
    INFO(f.get<std::string>());
    CHECK(fs::exists(dir / f.get<std::string>()));
  }
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");
}

}  // namespace

TEST_CASE("analyze") {
  const auto d = scratch("analyze_parabola");
  CHECK(run("analyze --builtin parabola:1 --dim 1 --out " + d.string()) == 0);
  check_manifest(d);
  const json r = report(d);
  CHECK(r["command"] == "analyze");
  CHECK(fs::exists(d / "xi_dir000.csv"));
  CHECK(slurp(d / "xi_dir000.csv").starts_with("t,xi,flagged\n"));

  const auto h = scratch("analyze_hyperbola");
  CHECK(run("analyze --builtin hyperbola --dim 1 --out " + h.string()) == 1);
  check_manifest(h);
  CHECK(slurp(h / "report.json").find("\"fails\"") != std::string::npos);

  CHECK(run("analyze --function \"x1^\" --dim 1 --out " + scratch("analyze_bad").string()) == 64);
  CHECK(run("analyze --function \"sqrt(1 + x1^2)\" --dim 1 --out " + scratch("analyze_expr").string()) == 1);
}

TEST_CASE("approximate") {
  const auto d = scratch("approx_cone");
  CHECK(run("approximate --builtin truncated_cone:1 --dim 1 --epsilon 0.1 --radius 2 --out " + d.string()) == 0);
  check_manifest(d);
  const json r = report(d)["result"];
  const std::string s = r.dump();
  CHECK(s.find("\"r\":0.95") != std::string::npos);
  CHECK(slurp(d / "comparison.csv").starts_with("x,"));

  CHECK(run("approximate --function \"max(0,x1)\" --dim 1 --epsilon 0.1 --radius 2 --out " +
            scratch("approx_sub").string()) == 3);
  CHECK(run("approximate --builtin truncated_cone:1 --dim 1 --radius 2 --out " + scratch("approx_usage").string()) == 64);
}

TEST_CASE("exhaust") {
  const auto d = scratch("exhaust_parabola");
  CHECK(run("exhaust --builtin parabola:1 --dim 1 --levels 4 --r0 1 --out " + d.string()) == 0);
  check_manifest(d);
  const json r = report(d)["result"];
  CHECK(r["levels"].size() == 5);
  CHECK(r["nesting"]["nested"] == true);
  CHECK(r["containment"]["ok"] == true);
  CHECK(r["caps"].size() == 3);
  CHECK(fs::exists(d / "levels.svg"));

  CHECK(run("exhaust --builtin truncated_cone:1 --dim 1 --levels 2 --r0 1 --out " + scratch("exhaust_cone").string()) == 1);

  const auto z = scratch("exhaust_zero");
  CHECK(run("exhaust --builtin parabola:1 --dim 1 --levels 0 --r0 1 --out " + z.string()) == 0);
  const json rz = report(z)["result"];
  CHECK(rz["levels"].size() == 1);
  CHECK(rz["caps"].empty());
}

TEST_CASE("plot") {
  const auto d = scratch("plot");
  CHECK(run("plot --kind xi --builtin arctan_primitive --dim 1 --out " + d.string()) == 0);
  CHECK(fs::exists(d / "xi.svg"));
  const std::string first = slurp(d / "xi.svg");
  CHECK(run("plot --kind xi --builtin arctan_primitive --dim 1 --out " + d.string()) == 0);
  CHECK(slurp(d / "xi.svg") == first);
  CHECK(run("plot --kind hull --builtin parabola:1 --point 0,-1 --out " + d.string()) == 0);
  CHECK(fs::exists(d / "hull.svg"));
  CHECK(run("plot --kind nosuch --out " + d.string()) == 64);
}

TEST_CASE("config file is overridden by flags") {
  const auto d = scratch("config");
  fs::create_directories(d);
  {
    std::ofstream cfg(d / "run.cfg");
    cfg << "# minorant settings\nbuiltin=truncated_cone:1\ndim=1\nepsilon=0.5\nradius=2\n";
  }
  const auto out = d / "out";
  CHECK(run("approximate --config " + (d / "run.cfg").string() + " --epsilon 0.1 --out " + out.string()) == 0);
  CHECK(report(out)["result"].dump().find("\"r\":0.95") != std::string::npos);
}

TEST_CASE("identical exhaust runs are byte-identical") {
  const auto a = scratch("det_a"), b = scratch("det_b");
  const std::string args = "exhaust --builtin parabola:1 --dim 1 --levels 3 --r0 1 --seed 7 --out ";
  REQUIRE(run(args + a.string()) == 0);
  REQUIRE(run(args + b.string()) == 0);
  const std::string ra = slurp(a / "report.json");
  const std::string rb = slurp(b / "report.json");
  // the report echoes argv, which differs only in the output directory
  CHECK(json::parse(ra)["result"] == json::parse(rb)["result"]);
  CHECK(slurp(a / "levels.svg") == slurp(b / "levels.svg"));
  REQUIRE(run(args + a.string()) == 0);
  CHECK(slurp(a / "report.json") == ra);
}
