#pragma once

// Output helpers: atomic file writes, CSV tables, fixed-format SVG and JSON exports.

#include <bceh/approximation.hpp>
#include <bceh/bceh.hpp>
#include <bceh/exhaustion.hpp>
#include <bceh/hulls.hpp>

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace bceh::io {

using nlohmann::json;

/// Writes `content` to a sibling temporary and renames it over `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("write to " + tmp.string() + " failed");
  }
  std::filesystem::rename(tmp, path);
}

/// %.12g, with inf and nan spelled out.
inline std::string fmt12(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  void add(const std::vector<double>& row) {
    if (row.size() != header_.size()) throw PreconditionError("csv row width does not match the header");
    rows_.push_back(row);
  }

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < header_.size(); ++i) s += (i ? "," : "") + header_[i];
    s += "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i) s += (i ? "," : "") + fmt12(r[i]);
      s += "\n";
    }
    return s;
  }

  std::size_t size() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

inline CsvTable xi_csv(const XiProfile& p) {
  CsvTable t({"t", "xi", "flagged"});
  for (const auto& s : p.samples) t.add({s.t, s.xi, s.flagged ? 1.0 : 0.0});
  return t;
}

/// Minimal SVG canvas with a fixed 800x600 size and six-decimal coordinates.
class SvgPlot {
 public:
  static constexpr double kWidth = 800.0, kHeight = 600.0, kMargin = 50.0;

  SvgPlot(double xmin, double xmax, double ymin, double ymax) : x0_(xmin), x1_(xmax), y0_(ymin), y1_(ymax) {
    if (!(x1_ > x0_)) x1_ = x0_ + 1.0;
    if (!(y1_ > y0_)) y1_ = y0_ + 1.0;
  }

  static std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
  }

  double px(double x) const { return kMargin + (x - x0_) / (x1_ - x0_) * (kWidth - 2 * kMargin); }
  double py(double y) const { return kHeight - kMargin - (y - y0_) / (y1_ - y0_) * (kHeight - 2 * kMargin); }

  void polyline(const std::vector<Point2>& pts, const std::string& color, double width = 1.5) {
    std::string s = "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + num(width) + "\" points=\"";
    bool first = true;
    for (const auto& p : pts) {
      if (!std::isfinite(p[0]) || !std::isfinite(p[1])) continue;
      s += (first ? "" : " ") + num(px(p[0])) + "," + num(py(p[1]));
      first = false;
    }
    body_ += s + "\"/>\n";
  }

  void circle(double cx, double cy, double r_data, const std::string& color) {
    const double rx = r_data / (x1_ - x0_) * (kWidth - 2 * kMargin);
    const double ry = r_data / (y1_ - y0_) * (kHeight - 2 * kMargin);
    body_ += "<ellipse fill=\"none\" stroke=\"" + color + "\" stroke-dasharray=\"4,3\" cx=\"" + num(px(cx)) +
             "\" cy=\"" + num(py(cy)) + "\" rx=\"" + num(rx) + "\" ry=\"" + num(ry) + "\"/>\n";
  }

  void dot(double x, double y, const std::string& color) {
    body_ += "<circle fill=\"" + color + "\" cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"3.000000\"/>\n";
  }

  void label(const std::string& text) {
    body_ += "<text x=\"" + num(kMargin) + "\" y=\"" + num(kMargin / 2) + "\" font-family=\"monospace\" font-size=\"14\">" +
             escape(text) + "</text>\n";
  }

  std::string str() const {
    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" viewBox=\"0 0 800 600\">\n";
    s += "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n";
    // axes through the origin when visible, else along the frame
    const double ax = std::clamp(0.0, y0_, y1_), ay = std::clamp(0.0, x0_, x1_);
    s += "<line stroke=\"#888888\" x1=\"" + num(px(x0_)) + "\" y1=\"" + num(py(ax)) + "\" x2=\"" + num(px(x1_)) +
         "\" y2=\"" + num(py(ax)) + "\"/>\n";
    s += "<line stroke=\"#888888\" x1=\"" + num(px(ay)) + "\" y1=\"" + num(py(y0_)) + "\" x2=\"" + num(px(ay)) +
         "\" y2=\"" + num(py(y1_)) + "\"/>\n";
    s += "<text x=\"" + num(kWidth - kMargin) + "\" y=\"" + num(kHeight - kMargin / 3) +
         "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">x in [" + num(x0_) + ", " + num(x1_) +
         "], y in [" + num(y0_) + ", " + num(y1_) + "]</text>\n";
    return s + body_ + "</svg>\n";
  }

 private:
  static std::string escape(const std::string& t) {
    std::string o;
    for (char c : t) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  }

  double x0_, x1_, y0_, y1_;
  std::string body_;
};

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  return colors[i % 8];
}

// ---- JSON -----------------------------------------------------------------

/// Finite numbers as numbers; infinities and NaN as strings.
inline json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "+inf" : "-inf";
  return v;
}

inline json number(const ExtendedReal& v) { return v.is_infinite() ? json("+inf") : number(v.value()); }

inline json vector_json(const Vec& v) {
  json a = json::array();
  for (double c : v) a.push_back(number(c));
  return a;
}

inline json to_json(const Verdict& v) {
  json j;
  j["status"] = to_string(v.status);
  j["witness"] = v.witness ? vector_json(*v.witness) : json(nullptr);
  json d = json::object();
  for (const auto& [k, x] : v.diagnostics) d[k] = number(x);
  j["diagnostics"] = d;
  j["notes"] = v.notes;
  return j;
}

inline json to_json(const PiecewiseBoundary2D& b) {
  json arcs = json::array();
  for (const auto& a : b.arcs) {
    json j;
    j["kind"] = to_string(a.kind);
    j["params"] = {number(a.s0), number(a.s1)};
    j["endpoints"] = {{number(a.start[0]), number(a.start[1])}, {number(a.end[0]), number(a.end[1])}};
    if (a.kind == PiecewiseBoundary2D::Kind::Circle) j["radius"] = number(a.radius);
    arcs.push_back(j);
  }
  return arcs;
}

inline json to_json(const HullWithBallResult& h) {
  return {{"tau", number(h.tau)}, {"match_radius", number(h.match_radius)}, {"psi", h.psi.descriptor()}};
}

inline json to_json(const LadderCertificate& l) {
  return {{"c", number(l.c)},           {"t0", number(l.t0)},         {"a", number(l.a)},
          {"log_t1", number(l.log_t1)}, {"log_t_star", number(l.log_t_star)},
          {"min_bound", number(l.min_bound)}, {"min_xi", number(l.min_xi)},
          {"t_star_representable", l.t_star_representable}, {"ok", l.ok}};
}

inline json to_json(const MinorantRecipe& r) {
  json ver;
  ver["convexity"] = to_string(r.verification.convexity);
  ver["closeness"] = {{"max_gap_on_R", number(r.verification.max_gap_on_R)}, {"epsilon", number(r.epsilon)},
                      {"ok", r.verification.max_gap_on_R < r.epsilon}};
  ver["minorant"] = {{"max_psi_minus_phi", number(r.verification.max_excess_over_phi)},
                     {"strict_violations", r.verification.strict_violations}};
  json ladder = json::array();
  for (const auto& l : r.verification.ladder) ladder.push_back(to_json(l));
  ver["bceh_ladder"] = {{"verdict", to_string(r.verification.bceh)}, {"certificates", ladder}};
  return {{"r", number(r.r)},
          {"delta", number(r.delta)},
          {"A", number(r.A)},
          {"A_superlinear", r.A_superlinear},
          {"R", number(r.R)},
          {"R_requested", number(r.R_requested)},
          {"sup_phi_on_R", number(r.sup_phi_on_R)},
          {"premollified", r.premollified},
          {"h_params", {{"profile", "smoothed shifted arctan"}, {"R", number(r.h_spec.R)},
                        {"smoothing_width", number(r.h_spec.width)}, {"nodes", r.h_spec.shifts.size()}}},
          {"psi", r.psi.descriptor()},
          {"verification", ver}};
}

inline json to_json(const ExhaustionLevel& l) {
  return {{"k", l.k},
          {"r", number(l.r)},
          {"match_radius", number(l.match_radius)},
          {"tau", number(l.tau)},
          {"phi", l.phi.descriptor()},
          {"bceh", to_string(l.bceh)},
          {"provenance", l.provenance}};
}

inline json to_json(const Cap& c) {
  return {{"t0", number(c.t0)},
          {"t1", number(c.t1)},
          {"family", c.family},
          {"match_radius", number(c.match_radius)},
          {"bounding_box", {{"lo", vector_json(c.box_lo)}, {"hi", vector_json(c.box_hi)}}},
          {"axioms", {{"strict_convexity", to_string(c.strict_convexity)},
                      {"monotone", to_string(c.monotone)},
                      {"agree_outside", to_string(c.agree_outside)}}},
          {"omega0", c.omega0}};
}

/// Surface samples of a cap along e1 as a CSV table (x, base, top).
inline CsvTable cap_csv(const Cap& c, int samples = 201) {
  CsvTable t({"x", "base", "top"});
  const std::size_t m = c.box_lo.size() - 1;
  for (int i = 0; i < samples; ++i) {
    Vec x(m, 0.0);
    x[0] = c.box_lo[0] + (c.box_hi[0] - c.box_lo[0]) * i / (samples - 1);
    t.add({x[0], c.base(x), c.top(x)});
  }
  return t;
}

}  // namespace bceh::io
