#include "lanegraph/plot.hpp"

#include <algorithm>
#include <cstdarg>
#include <cstdio>

namespace lanegraph::plot {

namespace {

struct Frame {
  double min_x = 1e300, min_y = 1e300, max_x = -1e300, max_y = -1e300;
  double scale = 1.0;

  void grow(const Point2& p) {
    min_x = std::min(min_x, p.x);
    min_y = std::min(min_y, p.y);
    max_x = std::max(max_x, p.x);
    max_y = std::max(max_y, p.y);
  }
  double width() const { return (max_x - min_x) * scale; }
  double height() const { return (max_y - min_y) * scale; }
  // SVG y grows downward.
  double px(double x) const { return (x - min_x) * scale; }
  double py(double y) const { return (max_y - y) * scale; }
};

void append(std::string& out, const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof(buf), fmt, args);
  va_end(args);
  out += buf;
}

void draw_polyline(std::string& out, const Frame& f, const Polyline& p,
                   const char* stroke, double width, double opacity) {
  if (p.size() < 2) return;
  out += "<polyline fill=\"none\" points=\"";
  char buf[64];
  for (size_t i = 0; i < p.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s%.2f,%.2f", i ? " " : "", f.px(p.pts[i].x),
                  f.py(p.pts[i].y));
    out += buf;
  }
  append(out, "\" stroke=\"%s\" stroke-width=\"%.2f\" stroke-opacity=\"%.2f\"/>\n",
         stroke, width, opacity);
}

void draw_segment(std::string& out, const Frame& f, const Point2& a, const Point2& b,
                  const char* stroke, double width, double opacity) {
  append(out,
         "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" stroke=\"%s\" "
         "stroke-width=\"%.2f\" stroke-opacity=\"%.2f\"/>\n",
         f.px(a.x), f.py(a.y), f.px(b.x), f.py(b.y), stroke, width, opacity);
}

void draw_dot(std::string& out, const Frame& f, const Point2& p, const char* fill,
              double r) {
  append(out, "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"%.2f\" fill=\"%s\"/>\n", f.px(p.x),
         f.py(p.y), r, fill);
}

void draw_pairs(std::string& out, const Frame& f, const std::vector<LanePair>& pairs,
                const std::vector<uint8_t>* adj, const char* color, double width) {
  size_t n = pairs.size();
  for (const auto& lp : pairs) {
    if (!lp.matched) continue;
    draw_segment(out, f, lp.left, lp.right, color, width, 0.9);
    draw_dot(out, f, lp.left, color, 1.6);
    draw_dot(out, f, lp.right, color, 1.6);
  }
  if (!adj || adj->size() != n * n) return;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if ((*adj)[i * n + j]) draw_segment(out, f, pairs[i].center, pairs[j].center, color,
                                          width * 0.6, 0.5);
}

}  // namespace

std::string render_svg(const MinimapRecord& rec, const LaneGraph* pred,
                       const PlotOptions& opt) {
  Frame f;
  f.scale = opt.scale;
  for (const auto& p : rec.polylines)
    for (const auto& q : p.pts) f.grow(q);
  for (const auto& b : rec.gt.boundaries)
    for (const auto& q : b.pts) f.grow(q);
  for (const auto& c : rec.centers) f.grow(c.pos);
  if (f.min_x > f.max_x) f = Frame{0, 0, 1, 1, opt.scale};
  f.min_x -= opt.margin;
  f.min_y -= opt.margin;
  f.max_x += opt.margin;
  f.max_y += opt.margin;

  std::string out;
  append(out,
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
         "viewBox=\"0 0 %.2f %.2f\">\n",
         f.width(), f.height(), f.width(), f.height());
  append(out, "<rect width=\"100%%\" height=\"100%%\" fill=\"white\"/>\n");
  append(out, "<!-- %s %s tile %d,%d -->\n", rec.scenario.c_str(), rec.stage.c_str(),
         rec.tile.q, rec.tile.r);

  for (const auto& p : rec.polylines) {
    if (p.kind == PolylineKind::Trace)
      draw_polyline(out, f, p, "#b0c4de", 1.0, 0.6);
    else
      draw_polyline(out, f, p, "#555555", 1.2, 0.8);
  }
  if (opt.draw_gt) {
    for (const auto& b : rec.gt.boundaries) draw_polyline(out, f, b, "#1f77b4", 0.8, 0.8);
    std::vector<uint8_t> gt_adj =
        edges_to_adjacency(rec.gt_edges, static_cast<int>(rec.gt_pairs.size()));
    draw_pairs(out, f, rec.gt_pairs, &gt_adj, "#2ca02c", 1.0);
  }
  for (const auto& c : rec.centers) {
    draw_dot(out, f, c.pos, "#000000", 2.0);
    draw_segment(out, f, c.pos, c.pos + c.dir * 2.5, "#000000", 0.8, 0.8);
  }
  if (pred) draw_pairs(out, f, pred->pairs, &pred->adj, "#d62728", 1.2);

  out += "</svg>\n";
  return out;
}

}  // namespace lanegraph::plot
