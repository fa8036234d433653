#include "goodweights/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace goodweights::plot {

namespace {

constexpr double kPanelWidth = 420.0;
constexpr double kPanelHeight = 320.0;
constexpr double kLeft = 62.0;
constexpr double kRight = 14.0;
constexpr double kTop = 34.0;
constexpr double kBottom = 48.0;

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::abs(v) >= 1e4 || std::abs(v) < 1e-2))
    std::snprintf(buf, sizeof buf, "%.1e", v);
  else
    std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v) const {
    if (log) v = std::log10(v);
    return (v - lo) / (hi - lo);
  }
};

Axis make_axis(std::vector<double> values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v) || (log && v <= 0.0)) continue;
    const double t = log ? std::log10(v) : v;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.04 * (hi - lo);
  a.lo = lo - pad;
  a.hi = hi + pad;
  return a;
}

std::vector<double> ticks(const Axis& a) {
  std::vector<double> out;
  if (a.log) {
    for (double e = std::ceil(a.lo); e <= a.hi; e += 1.0) out.push_back(std::pow(10.0, e));
    if (out.size() >= 2) return out;
    out.clear();
  }
  const double lo = a.log ? std::pow(10.0, a.lo) : a.lo;
  const double hi = a.log ? std::pow(10.0, a.hi) : a.hi;
  const double raw = (hi - lo) / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (m * mag >= raw) {
      step = m * mag;
      break;
    }
  for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step)
    out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
  return out;
}

void render_panel(std::ostringstream& os, const Panel& p, double x0) {
  std::vector<double> xs;
  std::vector<double> ys;
  for (const auto& s : p.series) {
    xs.insert(xs.end(), s.x.begin(), s.x.end());
    ys.insert(ys.end(), s.y.begin(), s.y.end());
    ys.insert(ys.end(), s.band_lo.begin(), s.band_lo.end());
    ys.insert(ys.end(), s.band_hi.begin(), s.band_hi.end());
  }
  for (const auto& b : p.bars) {
    xs.insert(xs.end(), b.edges.begin(), b.edges.end());
    ys.insert(ys.end(), b.values.begin(), b.values.end());
    if (!p.log_y) ys.push_back(0.0);
  }
  const Axis ax = make_axis(xs, p.log_x);
  const Axis ay = make_axis(ys, p.log_y);
  const double w = kPanelWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  const auto px = [&](double v) { return x0 + kLeft + w * ax.map(v); };
  const auto py = [&](double v) { return kTop + h * (1.0 - ay.map(v)); };
  const auto valid = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && !(p.log_x && x <= 0.0) && !(p.log_y && y <= 0.0);
  };

  os << "<g>\n<rect x=\"" << num(x0 + kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(w)
     << "\" height=\"" << num(h) << "\" fill=\"white\" stroke=\"#444\"/>\n";
  for (double t : ticks(ax)) {
    const double x = px(t);
    if (x < x0 + kLeft - 0.5 || x > x0 + kLeft + w + 0.5) continue;
    os << "<line x1=\"" << num(x) << "\" y1=\"" << num(kTop + h) << "\" x2=\"" << num(x) << "\" y2=\""
       << num(kTop + h + 4) << "\" stroke=\"#444\"/>\n"
       << "<text x=\"" << num(x) << "\" y=\"" << num(kTop + h + 16) << "\" text-anchor=\"middle\">"
       << tick_label(t) << "</text>\n";
  }
  for (double t : ticks(ay)) {
    const double y = py(t);
    if (y < kTop - 0.5 || y > kTop + h + 0.5) continue;
    os << "<line x1=\"" << num(x0 + kLeft - 4) << "\" y1=\"" << num(y) << "\" x2=\"" << num(x0 + kLeft)
       << "\" y2=\"" << num(y) << "\" stroke=\"#444\"/>\n"
       << "<text x=\"" << num(x0 + kLeft - 6) << "\" y=\"" << num(y + 4) << "\" text-anchor=\"end\">"
       << tick_label(t) << "</text>\n";
  }
  os << "<text x=\"" << num(x0 + kLeft + w / 2) << "\" y=\"" << num(kTop - 12)
     << "\" text-anchor=\"middle\" font-weight=\"bold\">" << escape(p.title) << "</text>\n"
     << "<text x=\"" << num(x0 + kLeft + w / 2) << "\" y=\"" << num(kPanelHeight - 10)
     << "\" text-anchor=\"middle\">" << escape(p.xlabel) << "</text>\n"
     << "<text transform=\"translate(" << num(x0 + 14) << "," << num(kTop + h / 2)
     << ") rotate(-90)\" text-anchor=\"middle\">" << escape(p.ylabel) << "</text>\n";

  std::size_t color = 0;
  std::vector<std::pair<std::string, std::string>> legend;
  for (const auto& b : p.bars) {
    const char* c = kPalette[color++ % kPalette.size()];
    std::string path;
    for (std::size_t i = 0; i < b.values.size() && i + 1 < b.edges.size(); ++i) {
      const double base = p.log_y ? std::pow(10.0, ay.lo) : 0.0;
      const double v = valid(b.edges[i], b.values[i]) ? b.values[i] : base;
      path += (path.empty() ? "M" : "L") + num(px(b.edges[i])) + "," + num(py(v)) + "L" + num(px(b.edges[i + 1])) +
              "," + num(py(v));
    }
    os << "<path d=\"" << path << "\" fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.4\"/>\n";
    legend.emplace_back(b.label, c);
  }
  for (const auto& s : p.series) {
    const char* c = kPalette[color++ % kPalette.size()];
    if (!s.band_lo.empty() && s.band_lo.size() == s.x.size() && s.band_hi.size() == s.x.size()) {
      std::string poly;
      for (std::size_t i = 0; i < s.x.size(); ++i)
        if (valid(s.x[i], s.band_hi[i])) poly += num(px(s.x[i])) + "," + num(py(s.band_hi[i])) + " ";
      for (std::size_t i = s.x.size(); i-- > 0;)
        if (valid(s.x[i], s.band_lo[i])) poly += num(px(s.x[i])) + "," + num(py(s.band_lo[i])) + " ";
      os << "<polygon points=\"" << poly << "\" fill=\"" << c << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    }
    if (s.line) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        if (valid(s.x[i], s.y[i])) pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
      os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.6\"/>\n";
    }
    if (s.markers)
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i)
        if (valid(s.x[i], s.y[i]))
          os << "<circle cx=\"" << num(px(s.x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"2.2\" fill=\"" << c
             << "\"/>\n";
    legend.emplace_back(s.label, c);
  }
  double ly = kTop + 14;
  for (const auto& [label, c] : legend) {
    if (label.empty()) continue;
    os << "<rect x=\"" << num(x0 + kLeft + w - 118) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
       << c << "\"/>\n<text x=\"" << num(x0 + kLeft + w - 104) << "\" y=\"" << num(ly + 1) << "\">" << escape(label)
       << "</text>\n";
    ly += 15;
  }
  os << "</g>\n";
}

std::string header(double width, double height) {
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(height)
     << "\" viewBox=\"0 0 " << num(width) << " " << num(height)
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return os.str();
}

// Piecewise-linear blue-white-red scale on t in [0, 1].
std::string color_at(double t) {
  if (!std::isfinite(t)) return "#cccccc";
  t = std::clamp(t, 0.0, 1.0);
  const std::array<std::array<double, 3>, 3> stops = {{{49, 54, 149}, {255, 255, 191}, {165, 0, 38}}};
  const double u = t < 0.5 ? t * 2.0 : (t - 0.5) * 2.0;
  const auto& a = stops[t < 0.5 ? 0 : 1];
  const auto& b = stops[t < 0.5 ? 1 : 2];
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(a[0] + u * (b[0] - a[0])),
                static_cast<int>(a[1] + u * (b[1] - a[1])), static_cast<int>(a[2] + u * (b[2] - a[2])));
  return buf;
}

}  // namespace

std::string render(const std::vector<Panel>& panels) {
  std::ostringstream os;
  os << header(kPanelWidth * static_cast<double>(std::max<std::size_t>(panels.size(), 1)), kPanelHeight);
  for (std::size_t i = 0; i < panels.size(); ++i) render_panel(os, panels[i], kPanelWidth * static_cast<double>(i));
  os << "</svg>\n";
  return os.str();
}

std::string render_heatmap(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                           const std::vector<double>& x_centers, const std::vector<double>& y_centers,
                           const std::vector<std::vector<double>>& values, const std::string& value_label) {
  const double width = kPanelWidth + 80.0;
  const double w = kPanelWidth - kLeft - kRight;
  const double h = kPanelHeight - kTop - kBottom;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& row : values)
    for (double v : row)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) lo = hi = 0.0;
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream os;
  os << header(width, kPanelHeight);
  const std::size_t nx = x_centers.size();
  const std::size_t ny = y_centers.size();
  const double cw = nx > 0 ? w / static_cast<double>(nx) : w;
  const double ch = ny > 0 ? h / static_cast<double>(ny) : h;
  for (std::size_t r = 0; r < ny && r < values.size(); ++r)
    for (std::size_t c = 0; c < nx && c < values[r].size(); ++c)
      os << "<rect x=\"" << num(kLeft + cw * static_cast<double>(c)) << "\" y=\""
         << num(kTop + h - ch * static_cast<double>(r + 1)) << "\" width=\"" << num(cw + 0.3) << "\" height=\""
         << num(ch + 0.3) << "\" fill=\"" << color_at((values[r][c] - lo) / span) << "\"/>\n";
  os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  const std::size_t xstep = std::max<std::size_t>(1, nx / 5);
  for (std::size_t c = 0; c < nx; c += xstep)
    os << "<text x=\"" << num(kLeft + cw * (static_cast<double>(c) + 0.5)) << "\" y=\"" << num(kTop + h + 16)
       << "\" text-anchor=\"middle\">" << tick_label(x_centers[c]) << "</text>\n";
  const std::size_t ystep = std::max<std::size_t>(1, ny / 5);
  for (std::size_t r = 0; r < ny; r += ystep)
    os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(kTop + h - ch * (static_cast<double>(r) + 0.5) + 4)
       << "\" text-anchor=\"end\">" << tick_label(y_centers[r]) << "</text>\n";
  os << "<text x=\"" << num(kLeft + w / 2) << "\" y=\"" << num(kTop - 12)
     << "\" text-anchor=\"middle\" font-weight=\"bold\">" << escape(title) << "</text>\n"
     << "<text x=\"" << num(kLeft + w / 2) << "\" y=\"" << num(kPanelHeight - 10) << "\" text-anchor=\"middle\">"
     << escape(xlabel) << "</text>\n"
     << "<text transform=\"translate(14," << num(kTop + h / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(ylabel) << "</text>\n";
  const double bx = kPanelWidth + 10.0;
  for (int i = 0; i < 50; ++i) {
    const double t = (i + 0.5) / 50.0;
    os << "<rect x=\"" << num(bx) << "\" y=\"" << num(kTop + h * (1.0 - (i + 1) / 50.0)) << "\" width=\"14\" height=\""
       << num(h / 50.0 + 0.3) << "\" fill=\"" << color_at(t) << "\"/>\n";
  }
  os << "<text x=\"" << num(bx + 18) << "\" y=\"" << num(kTop + 8) << "\">" << tick_label(hi) << "</text>\n"
     << "<text x=\"" << num(bx + 18) << "\" y=\"" << num(kTop + h) << "\">" << tick_label(lo) << "</text>\n"
     << "<text x=\"" << num(bx) << "\" y=\"" << num(kTop - 8) << "\">" << escape(value_label) << "</text>\n"
     << "</svg>\n";
  return os.str();
}

}  // namespace goodweights::plot
