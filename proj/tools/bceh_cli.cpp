// bceh: analyze convex functions for bounded convex exhaustion hulls, build minorants,
// generate exhaustions and plot them.
//
// Exit codes: 0 holds/ok, 1 fails, 2 inconclusive, 3 growth failure, 4 other errors, 64 usage.

#include <bceh/approximation.hpp>
#include <bceh/bceh.hpp>
#include <bceh/exhaustion.hpp>
#include <bceh/hulls.hpp>
#include <bceh/io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using bceh::io::json;
using bceh::io::number;

namespace {

constexpr int kExitHolds = 0;
constexpr int kExitFails = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitGrowth = 3;
constexpr int kExitError = 4;
constexpr int kExitUsage = 64;

struct Options {
  std::string function;
  std::string builtin;
  int dim = 1;
  double epsilon = 0.0;
  double radius = 0.0;
  int levels = 0;
  double r0 = 1.0;
  int directions = 0;
  std::uint64_t seed = 42;
  std::string out = "bceh_out";
  std::string kind;
  std::string point;
  std::string report;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_for(bceh::Status s) {
  switch (s) {
    case bceh::Status::Holds: return kExitHolds;
    case bceh::Status::Fails: return kExitFails;
    case bceh::Status::Inconclusive: return kExitInconclusive;
  }
  return kExitError;
}

/// Everything a command produces; written only once the command has a result.
struct Run {
  std::string command;
  std::vector<std::string> argv;
  Options opt;
  json report = json::object();
  std::map<std::string, std::string> files;  // name relative to --out → content
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::map<std::string, double> timings;

  void mark(const std::string& phase) {
    timings[phase] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  void add(const std::string& name, std::string content) { files[name] = std::move(content); }

  void flush() {
    const fs::path dir(opt.out);
    json manifest = json::array();
    for (const auto& [name, _] : files) manifest.push_back(name);
    manifest.push_back("report.json");
    manifest.push_back("timings.json");
    json r;
    r["schema"] = 1;
    r["command"] = command;
    r["argv"] = argv;
    r["input"] = {{"function", opt.function}, {"builtin", opt.builtin}, {"dim", opt.dim},
                  {"directions", opt.directions}, {"seed", opt.seed}};
    r["result"] = report;
    r["outputs"] = manifest;
    r["timings"] = "timings.json";
    for (const auto& [name, content] : files) bceh::io::write_file_atomic(dir / name, content);
    json t = json::object();
    for (const auto& [k, v] : timings) t[k] = v;
    bceh::io::write_file_atomic(dir / "timings.json", t.dump(2) + "\n");
    bceh::io::write_file_atomic(dir / "report.json", r.dump(2) + "\n");
  }
};

bceh::ConvexFunction load_function(const Options& o) {
  if (o.dim < 1) throw UsageError("--dim must be at least 1");
  if (!o.function.empty() && !o.builtin.empty()) throw UsageError("give either --function or --builtin, not both");
  if (!o.function.empty()) return bceh::parse_function(o.function, o.dim);
  if (!o.builtin.empty()) return bceh::builtin_from_spec(o.builtin, o.dim);
  throw UsageError("one of --function or --builtin is required");
}

bceh::AnalysisConfig config_for(const Options& o) {
  bceh::AnalysisConfig cfg;
  cfg.direction_count = o.directions;
  cfg.seed = o.seed;
  return cfg;
}

std::string dir_label(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "xi_dir%03zu.csv", i);
  return buf;
}

// ---- analyze ----------------------------------------------------------------

int cmd_analyze(Run& run) {
  const auto f = load_function(run.opt);
  const auto cfg = config_for(run.opt);
  json& r = run.report;

  r["convexity"] = bceh::io::to_json(bceh::convexity_check(f, 10.0, 1000, false, cfg.seed));
  run.mark("convexity");

  const auto dirs = bceh::analysis_directions(f.dim(), cfg);
  json sweep = json::array();
  for (const auto& v : dirs)
    sweep.push_back({{"direction", bceh::io::vector_json(v.vec())},
                     {"recession_slope", number(bceh::recession_slope(f, v, cfg.t_schedule))}});
  r["recession"] = sweep;
  run.mark("recession");

  r["asymptote_test"] = bceh::io::to_json(bceh::asymptote_test(f, cfg));
  run.mark("asymptote_test");
  r["radial_test"] = bceh::io::to_json(bceh::radial_test(f, cfg));
  run.mark("radial_test");
  const bceh::Verdict verdict = bceh::bceh_verdict(f, cfg);
  r["bceh_verdict"] = bceh::io::to_json(verdict);
  run.mark("bceh_verdict");

  const bceh::Normalization norm = bceh::normalize(f);
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    try {
      run.add(dir_label(i), bceh::io::xi_csv(bceh::xi_profile(f, dirs[i], cfg, &norm)).str());
    } catch (const bceh::Error& e) {
      r["xi_errors"].push_back({{"direction", i}, {"error", e.what()}});
    }
  }
  run.mark("xi_profiles");

  std::cout << "bceh_verdict: " << bceh::to_string(verdict.status) << "\n";
  if (verdict.witness) std::cout << "witness: " << bceh::io::vector_json(*verdict.witness).dump() << "\n";
  return exit_for(verdict.status);
}

// ---- approximate --------------------------------------------------------------

int cmd_approximate(Run& run) {
  if (!(run.opt.epsilon > 0.0)) throw UsageError("--epsilon > 0 is required");
  if (!(run.opt.radius > 0.0)) throw UsageError("--radius > 0 is required");
  const auto f = load_function(run.opt);
  const auto cfg = config_for(run.opt);
  try {
    const auto g = bceh::growth_constant(f, cfg);
    run.report["growth_constant"] = {{"value", number(g.value)}, {"superlinear", g.superlinear},
                                     {"worst_direction", bceh::io::vector_json(g.worst_direction)}};
  } catch (const bceh::PreconditionError& e) {
    run.report["error"] = e.what();
    std::cerr << "growth failure: " << e.what() << "\n";
    return kExitGrowth;
  }
  run.mark("growth_constant");
  try {
    const auto rec = bceh::bceh_minorant(f, run.opt.epsilon, run.opt.radius, cfg);
    run.mark("minorant");
    run.report["recipe"] = bceh::io::to_json(rec);
    bceh::io::CsvTable t({"x", "phi", "psi", "phi_minus_psi"});
    const double X = 2.0 * rec.R;
    for (int i = 0; i <= 400; ++i) {
      bceh::Vec x(static_cast<std::size_t>(f.dim()), 0.0);
      x[0] = -X + 2.0 * X * i / 400.0;
      const double a = f(x), b = rec.psi(x);
      t.add({x[0], a, b, a - b});
    }
    run.add("comparison.csv", t.str());
    std::cout << "r = " << rec.r << ", delta = " << rec.delta << ", A = " << rec.A << ", R = " << rec.R << "\n";
    return kExitHolds;
  } catch (const bceh::ConstructionError& e) {
    run.report["error"] = e.what();
    std::cerr << e.what() << "\n";
    return kExitFails;
  }
}

// ---- exhaust ----------------------------------------------------------------

struct ExhaustionBundle {
  std::vector<double> schedule;
  std::vector<bceh::ExhaustionLevel> levels;
};

std::string levels_svg(const ExhaustionBundle& b) {
  double X = std::max(1.0, b.schedule.front());
  for (const auto& l : b.levels) X = std::max(X, l.match_radius);
  X *= 1.25;
  double ylo = 0.0, yhi = 0.0;
  std::vector<std::vector<bceh::Point2>> curves;
  for (const auto& l : b.levels) {
    std::vector<bceh::Point2> pts;
    for (int i = 0; i <= 600; ++i) {
      bceh::Vec x(static_cast<std::size_t>(l.phi.dim()), 0.0);
      x[0] = -X + 2.0 * X * i / 600.0;
      const double y = l.phi(x);
      pts.push_back({x[0], y});
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
    curves.push_back(std::move(pts));
  }
  yhi = std::min(yhi, 2.0 * X);
  bceh::io::SvgPlot svg(-X, X, ylo - 0.05 * (yhi - ylo), yhi);
  for (std::size_t i = 0; i < curves.size(); ++i) svg.polyline(curves[i], bceh::io::palette(i));
  for (double r : b.schedule) svg.circle(0.0, 0.0, r, "#777777");
  svg.label("exhaustion levels (section along x1)");
  return svg.str();
}

int cmd_exhaust(Run& run) {
  if (run.opt.levels < 0) throw UsageError("--levels must be nonnegative");
  if (!(run.opt.r0 > 0.0)) throw UsageError("--r0 must be positive");
  const auto f = load_function(run.opt);
  const auto cfg = config_for(run.opt);
  json& r = run.report;

  const bceh::Verdict seed = bceh::bceh_verdict(f, cfg);
  r["seed_bceh_verdict"] = bceh::io::to_json(seed);
  run.mark("seed_verdict");
  if (!seed.ok()) {
    std::cerr << "seed does not have BCEH: " << bceh::to_string(seed.status) << "\n";
    return kExitFails;
  }
  ExhaustionBundle b;
  try {
    b.schedule = bceh::radius_schedule(f, run.opt.levels, run.opt.r0, cfg);
    run.mark("radius_schedule");
    b.levels = bceh::exhaustion_sequence(f, b.schedule, cfg);
    run.mark("exhaustion_sequence");
  } catch (const bceh::Error& e) {
    r["error"] = e.what();
    std::cerr << e.what() << "\n";
    return kExitFails;
  }

  json sched = json::array();
  for (double x : b.schedule) sched.push_back(number(x));
  r["radius_schedule"] = sched;

  // eq. containment: h(E_0, r_k B) inside r_{k+1} B with margin
  json contain = json::array();
  bool contained = true;
  for (std::size_t k = 0; k + 1 < b.schedule.size(); ++k) {
    const auto bound = bceh::exhaustion_hull_bound(f, b.schedule[k], cfg);
    const double margin = b.schedule[k + 1] - bound.value();
    contained = contained && bound.is_finite() && margin >= 1.0;
    contain.push_back({{"k", k}, {"bound", number(bound)}, {"r_next", number(b.schedule[k + 1])},
                       {"margin", number(margin)}});
  }
  r["containment"] = {{"ok", contained}, {"levels", contain}};

  json levels = json::array();
  for (const auto& l : b.levels) levels.push_back(bceh::io::to_json(l));
  r["levels"] = levels;

  // nesting and agreement with the seed beyond each match radius
  bool nested = true, agrees = true;
  const auto pts = bceh::detail::comparison_points(f.dim(), 1e4, 500, cfg.seed);
  for (std::size_t k = 0; k + 1 < b.levels.size(); ++k)
    for (const auto& x : pts) {
      const double a = b.levels[k].phi(x), c = b.levels[k + 1].phi(x);
      if (c > a + 1e-12 * (1.0 + std::fabs(a))) nested = false;
    }
  for (const auto& l : b.levels)
    for (const auto& x : pts)
      if (bceh::norm(x) >= l.match_radius && std::fabs(l.phi(x) - f(x)) > 1e-9 * (1.0 + std::fabs(f(x)))) agrees = false;
  r["nesting"] = {{"nested", nested}, {"agrees_beyond_match_radius", agrees}};
  run.mark("verification");

  json caps = json::array();
  for (std::size_t k = 0; k + 2 < b.levels.size(); ++k) {
    const bceh::Cap cap = bceh::build_cap(b.levels[k].phi, b.levels[k + 2].phi, 0.25, 0.75, cfg);
    json j = bceh::io::to_json(cap);
    j["pair"] = {k, k + 2};
    const std::string name = "cap_" + std::to_string(k) + "_" + std::to_string(k + 2) + ".csv";
    j["surface_samples"] = name;
    run.add(name, bceh::io::cap_csv(cap).str());
    caps.push_back(j);
  }
  r["caps"] = caps;
  run.mark("caps");

  if (f.dim() <= 2) run.add("levels.svg", levels_svg(b));
  run.mark("svg");

  const bool ok = contained && nested && agrees;
  std::cout << b.levels.size() << " levels, nesting " << (nested ? "verified" : "violated") << "\n";
  return ok ? kExitHolds : kExitFails;
}

// ---- plot -------------------------------------------------------------------

void load_from_report(Options& o) {
  std::ifstream in(o.report);
  if (!in) throw UsageError("cannot read report " + o.report);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(std::string("report is not valid JSON: ") + e.what());
  }
  const json& input = j.at("input");
  if (o.function.empty() && o.builtin.empty()) {
    o.function = input.value("function", "");
    o.builtin = input.value("builtin", "");
  }
  o.dim = input.value("dim", o.dim);
}

bceh::Point2 parse_point(const std::string& s) {
  const auto comma = s.find(',');
  if (comma == std::string::npos) throw UsageError("--point expects x,y");
  try {
    return {std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1))};
  } catch (const std::exception&) {
    throw UsageError("--point expects two numbers x,y");
  }
}

int cmd_plot(Run& run) {
  const std::string kind = run.opt.kind;
  if (kind != "xi" && kind != "hull" && kind != "levels") throw UsageError("unknown plot kind '" + kind + "'");
  if (!run.opt.report.empty()) load_from_report(run.opt);
  const auto f = load_function(run.opt);
  const auto cfg = config_for(run.opt);

  if (kind == "xi") {
    bceh::Vec e(static_cast<std::size_t>(f.dim()), 0.0);
    e[0] = 1.0;
    const auto p = bceh::xi_profile(f, bceh::Direction(e), cfg);
    std::vector<bceh::Point2> pts;
    double lo = 0.0, hi = 0.0;
    for (const auto& s : p.samples)
      if (!s.flagged && std::isfinite(s.xi)) {
        pts.push_back({std::log10(s.t), s.xi});
        lo = std::min(lo, s.xi);
        hi = std::max(hi, s.xi);
      }
    bceh::io::SvgPlot svg(0.0, std::log10(cfg.t_schedule.back()), lo, std::max(hi, 1.0));
    svg.polyline(pts, bceh::io::palette(0), 2.0);
    svg.label("xi_v(t) along +e1 against log10 t");
    run.add("xi.svg", svg.str());
    run.add("xi.csv", bceh::io::xi_csv(p).str());
    return kExitHolds;
  }

  if (kind == "hull") {
    if (f.dim() != 1) throw UsageError("--kind hull needs --dim 1");
    bceh::PiecewiseBoundary2D b;
    std::optional<bceh::Point2> p;
    if (!run.opt.point.empty()) {
      p = parse_point(run.opt.point);
      b = bceh::hull_with_point_2d(f, *p);
    } else {
      const double r = run.opt.radius > 0.0 ? run.opt.radius : 1.0;
      b = bceh::ball_hull_boundary(f, bceh::hull_with_ball(f, r, cfg));
    }
    double X = 2.0;
    for (const auto& a : b.arcs) {
      if (std::isfinite(a.s0)) X = std::max(X, 1.5 * std::fabs(a.s0));
      if (std::isfinite(a.s1)) X = std::max(X, 1.5 * std::fabs(a.s1));
    }
    std::vector<bceh::Point2> graph, boundary;
    double lo = p ? (*p)[1] : 0.0, hi = 0.0;
    for (int i = 0; i <= 600; ++i) {
      const double x = -X + 2.0 * X * i / 600.0;
      graph.push_back({x, f({x})});
      boundary.push_back({x, b.lower_boundary(x)});
      lo = std::min(lo, boundary.back()[1]);
      hi = std::max(hi, graph.back()[1]);
    }
    bceh::io::SvgPlot svg(-X, X, lo - 0.05 * (hi - lo), hi);
    svg.polyline(graph, "#aaaaaa", 1.0);
    svg.polyline(boundary, bceh::io::palette(1), 2.0);
    if (p) svg.dot((*p)[0], (*p)[1], "#000000");
    svg.label(p ? "Conv(E with a point)" : "Conv(E with a ball)");
    run.add("hull.svg", svg.str());
    run.report["boundary"] = bceh::io::to_json(b);
    return kExitHolds;
  }

  ExhaustionBundle bundle;
  bundle.schedule = bceh::radius_schedule(f, std::max(run.opt.levels, 0), run.opt.r0, cfg);
  bundle.levels = bceh::exhaustion_sequence(f, bundle.schedule, cfg);
  run.add("levels.svg", levels_svg(bundle));
  return kExitHolds;
}

void read_config_file(const std::string& path, std::vector<std::string>& args) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::string line;
  std::vector<std::string> extra;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) throw UsageError("config line without '=': " + line);
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = "--" + trim(line.substr(0, eq));
    // flags on the command line win; --function and --builtin name the same input
    auto given = [&](const std::string& k) { return std::find(args.begin(), args.end(), k) != args.end(); };
    const bool input_key = key == "--function" || key == "--builtin";
    if (given(key) || (input_key && (given("--function") || given("--builtin")))) continue;
    extra.push_back(key);
    extra.push_back(trim(line.substr(eq + 1)));
  }
  args.insert(args.begin() + 1, extra.begin(), extra.end());
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  // the subcommand stays in front; --config FILE is expanded in place
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i)
      if (args[i] == "--config") {
        const std::string path = args[i + 1];
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
        if (args.empty()) throw UsageError("--config needs a subcommand");
        read_config_file(path, args);
        break;
      }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  }

  Options opt;
  CLI::App app{"Bounded convex exhaustion hulls: analysis, minorants and exhaustions"};
  app.require_subcommand(1);
  auto add_common = [&opt](CLI::App* sub) {
    sub->add_option("--function", opt.function, "expression in x1..xm");
    sub->add_option("--builtin", opt.builtin, "catalog entry name[:p1,p2]");
    sub->add_option("--dim", opt.dim, "number of variables");
    sub->add_option("--directions", opt.directions, "direction count (0: default)");
    sub->add_option("--seed", opt.seed, "random seed");
    sub->add_option("--out", opt.out, "output directory");
  };
  auto* analyze = app.add_subcommand("analyze", "decide BCEH for an epigraph");
  auto* approximate = app.add_subcommand("approximate", "build a BCEH minorant");
  auto* exhaust = app.add_subcommand("exhaust", "generate an exhaustion by hulls");
  auto* plot = app.add_subcommand("plot", "write an SVG plot");
  for (auto* s : {analyze, approximate, exhaust, plot}) add_common(s);
  approximate->add_option("--epsilon", opt.epsilon, "closeness on |x| <= R");
  approximate->add_option("--radius", opt.radius, "closeness radius R");
  exhaust->add_option("--levels", opt.levels, "k_max");
  exhaust->add_option("--r0", opt.r0, "first radius");
  plot->add_option("--kind", opt.kind, "xi | hull | levels")->required();
  plot->add_option("--point", opt.point, "x,y for --kind hull");
  plot->add_option("--radius", opt.radius, "ball radius for --kind hull");
  plot->add_option("--levels", opt.levels, "k_max for --kind levels");
  plot->add_option("--r0", opt.r0, "first radius for --kind levels");
  plot->add_option("--report", opt.report, "take the function from a prior report.json");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  Run run;
  run.opt = opt;
  run.argv = args;
  run.command = app.get_subcommands().front()->get_name();
  int code = kExitError;
  try {
    if (run.command == "analyze") code = cmd_analyze(run);
    else if (run.command == "approximate") code = cmd_approximate(run);
    else if (run.command == "exhaust") code = cmd_exhaust(run);
    else code = cmd_plot(run);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bceh::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bceh::DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bceh::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    run.report["error"] = e.what();
    code = kExitError;
  }
  run.report["exit_code"] = code;
  try {
    run.flush();
  } catch (const std::exception& e) {
    std::cerr << "cannot write outputs: " << e.what() << "\n";
    return kExitError;
  }
  return code;
}
