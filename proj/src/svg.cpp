#include "blurgeom/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace blurgeom::svg {

namespace {

constexpr double kWidth = 640, kHeight = 480;
constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(lo <= hi)) {
      lo = 0.0;
      hi = 1.0;
    }
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
};

void header(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

void axes(std::ostringstream& os, const Range& xr, const Range& yr, const std::string& xlabel,
          const std::string& ylabel, bool xticks) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  os << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double py = y0 + f * (y1 - y0);
    os << "<text x=\"" << x0 - 6 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
       << num(yr.lo + f * (yr.hi - yr.lo)) << "</text>\n";
    if (xticks) {
      const double px = x0 + f * (x1 - x0);
      os << "<text x=\"" << px << "\" y=\"" << y0 + 18 << "\" text-anchor=\"middle\">"
         << num(xr.lo + f * (xr.hi - xr.lo)) << "</text>\n";
    }
  }
  os << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kHeight - 15 << "\" text-anchor=\"middle\">"
     << escape(xlabel) << "</text>\n"
     << "<text transform=\"translate(18," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(ylabel) << "</text>\n";
}

}  // namespace

std::string scatter(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                    std::span<const Series> series) {
  Range xr, yr;
  for (const auto& s : series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  std::ostringstream os;
  header(os, title);
  axes(os, xr, yr, xlabel, ylabel, true);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  int legend = 0;
  for (const auto& s : series) {
    const std::size_t m = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < m; ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      const double px = x0 + (s.x[i] - xr.lo) / (xr.hi - xr.lo) * (x1 - x0);
      const double py = y0 + (s.y[i] - yr.lo) / (yr.hi - yr.lo) * (y1 - y0);
      os << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py) << "\" r=\"2.5\" fill=\"" << s.color
         << "\" fill-opacity=\"0.7\"/>\n";
    }
    const double ly = kTop + 14 * legend++;
    os << "<circle cx=\"" << x1 - 110 << "\" cy=\"" << ly << "\" r=\"4\" fill=\"" << s.color << "\"/>"
       << "<text x=\"" << x1 - 100 << "\" y=\"" << ly + 4 << "\">" << escape(s.name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string bars(const std::string& title, const std::string& ylabel, std::span<const Bar> bars) {
  Range yr;
  yr.add(0.0);
  for (const auto& b : bars) {
    yr.add(b.value);
    if (b.hi) yr.add(*b.hi);
    if (b.lo) yr.add(*b.lo);
  }
  yr.finish();
  std::ostringstream os;
  header(os, title);
  axes(os, Range{0, 1}, yr, "", ylabel, false);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  const auto py = [&](double v) { return y0 + (v - yr.lo) / (yr.hi - yr.lo) * (y1 - y0); };
  const double slot = bars.empty() ? 0.0 : (x1 - x0) / static_cast<double>(bars.size());
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double cx = x0 + slot * (static_cast<double>(i) + 0.5);
    const double top = py(std::isfinite(b.value) ? b.value : 0.0);
    const double base = py(0.0);
    os << "<rect x=\"" << num(cx - 0.35 * slot) << "\" y=\"" << num(std::min(top, base)) << "\" width=\""
       << num(0.7 * slot) << "\" height=\"" << num(std::abs(base - top)) << "\" fill=\"#4c72b0\"/>\n";
    if (b.lo && b.hi) {
      os << "<line x1=\"" << num(cx) << "\" y1=\"" << num(py(*b.lo)) << "\" x2=\"" << num(cx) << "\" y2=\""
         << num(py(*b.hi)) << "\" stroke=\"black\"/>\n";
    }
    os << "<text x=\"" << num(cx) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\" font-size=\"10\">"
       << escape(b.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace blurgeom::svg
