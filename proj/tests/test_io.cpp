#include <bceh/io.hpp>

#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>

using namespace bceh;
using namespace bceh::io;

namespace {
std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}
}  // namespace

TEST_CASE("fmt12") {
  CHECK(fmt12(0.1) == "0.1");
  CHECK(fmt12(1.0 / 3.0) == "0.333333333333");
  CHECK(fmt12(2.0) == "2");
  CHECK(fmt12(1e300) == "1e+300");
  CHECK(fmt12(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(fmt12(-std::numeric_limits<double>::infinity()) == "-inf");
  CHECK(fmt12(std::nan("")) == "nan");
}

TEST_CASE("csv tables") {
  CsvTable t({"a", "b"});
  t.add({1.0, 0.5});
  t.add({std::numbers::pi, -2.0});
  CHECK(t.str() == "a,b\n1,0.5\n3.14159265359,-2\n");
  CHECK(t.size() == 2);
  CHECK_THROWS_AS(t.add({1.0}), PreconditionError);
}

TEST_CASE("xi csv round trip") {
  const auto p = xi_profile(builtin("parabola", {1.0}), Direction{1.0});
  const std::string s = xi_csv(p).str();
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  CHECK(line == "t,xi,flagged");
  std::size_t n = 0;
  while (std::getline(in, line)) {
    double t = 0, xi = 0, fl = 0;
    REQUIRE(std::sscanf(line.c_str(), "%lf,%lf,%lf", &t, &xi, &fl) == 3);
    CHECK(std::fabs(t - p.samples[n].t) <= 1e-11 * p.samples[n].t);
    CHECK(std::fabs(xi - p.samples[n].xi) <= 1e-11 * std::fabs(p.samples[n].xi));
    CHECK(fl == 0.0);
    ++n;
  }
  CHECK(n == p.samples.size());
}

TEST_CASE("svg output is deterministic with six-decimal coordinates") {
  auto draw = [] {
    SvgPlot plot(-2.0, 2.0, -1.0, 4.0);
    std::vector<Point2> pts;
    for (int i = 0; i <= 40; ++i) {
      const double x = -2.0 + i * 0.1;
      pts.push_back({x, x * x});
    }
    plot.polyline(pts, palette(0));
    plot.circle(0.0, 0.0, 1.0, palette(1));
    plot.dot(0.5, 0.25, palette(2));
    plot.label("a < b & c");
    return plot.str();
  };
  const std::string a = draw();
  CHECK(a == draw());
  CHECK(a.starts_with("<svg "));
  CHECK(a.ends_with("</svg>\n"));
  CHECK(a.find("a &lt; b &amp; c") != std::string::npos);
  // every number in an attribute carries exactly six decimals
  const std::regex attr("(points|cx|cy|rx|ry|x1|y1|x2|y2)=\"([^\"]*)\"");
  const std::regex six("^-?[0-9]+\\.[0-9]{6}$");
  int seen = 0;
  for (auto it = std::sregex_iterator(a.begin(), a.end(), attr); it != std::sregex_iterator(); ++it) {
    std::string v = (*it)[2];
    for (char& c : v)
      if (c == ',') c = ' ';
    std::istringstream toks(v);
    std::string tok;
    while (toks >> tok) {
      CHECK(std::regex_match(tok, six));
      ++seen;
    }
  }
  CHECK(seen > 80);
  SvgPlot p(0.0, 1.0, 0.0, 1.0);
  CHECK(p.px(0.0) == SvgPlot::kMargin);
  CHECK(p.py(0.0) == SvgPlot::kHeight - SvgPlot::kMargin);
}

TEST_CASE("svg skips non-finite points") {
  SvgPlot plot(0.0, 1.0, 0.0, 1.0);
  plot.polyline({{0.0, 0.0}, {0.5, std::numeric_limits<double>::infinity()}, {1.0, 1.0}}, palette(0));
  const std::string s = plot.str();
  CHECK(s.find("inf") == std::string::npos);
  CHECK(s.find("nan") == std::string::npos);
}

TEST_CASE("json numbers") {
  CHECK(number(1.5) == json(1.5));
  CHECK(number(std::numeric_limits<double>::infinity()) == json("+inf"));
  CHECK(number(-std::numeric_limits<double>::infinity()) == json("-inf"));
  CHECK(number(std::nan("")) == json("nan"));
  CHECK(number(ExtendedReal::infinity()) == json("+inf"));
  CHECK(number(ExtendedReal(2.0)) == json(2.0));
  // a dump never contains bare inf or nan tokens
  const json j = to_json(asymptote_test(builtin("parabola", {1.0})));
  const std::string d = j.dump();
  CHECK(d.find("inf,") == std::string::npos);
  CHECK(j["status"] == "holds");
}

TEST_CASE("json exports of constructions") {
  const auto v = to_json(bceh_verdict(builtin("hyperbola")));
  CHECK(v["status"] == "fails");
  CHECK(v["witness"].is_array());
  const auto rec = bceh_minorant(builtin("truncated_cone", {1.0}), 0.1, 2.0);
  const json m = to_json(rec);
  CHECK(m["r"] == 0.95);
  CHECK(m["verification"]["closeness"]["ok"] == true);
  CHECK(m["verification"]["bceh_ladder"]["verdict"] == "holds");
  CHECK(m["h_params"]["nodes"] == 64);
  const auto f = builtin("parabola", {1.0});
  const auto lv = exhaustion_sequence(f, {1.0, 10.0});
  const json l = to_json(lv[1]);
  CHECK(l["k"] == 1);
  CHECK(l["r"] == 1.0);
  const Cap cap = build_cap(lv[0].phi, lv[1].phi, 0.25, 0.75);
  const json c = to_json(cap);
  CHECK(c["axioms"]["monotone"] == "holds");
  CHECK(c["bounding_box"]["lo"].size() == 2);
  const auto csv = cap_csv(cap, 11);
  CHECK(csv.size() == 11);
}

TEST_CASE("atomic writes") {
  const auto dir = std::filesystem::temp_directory_path() / "bceh_io_test";
  std::filesystem::remove_all(dir);
  const auto p = dir / "sub" / "out.txt";
  write_file_atomic(p, "first\n");
  CHECK(slurp(p) == "first\n");
  write_file_atomic(p, "second\n");
  CHECK(slurp(p) == "second\n");
  auto tmp = p;
  tmp += ".tmp";
  CHECK_FALSE(std::filesystem::exists(tmp));
  std::filesystem::remove_all(dir);
}
