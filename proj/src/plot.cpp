#include "csqbm/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csqbm/errors.hpp"
#include "csqbm/metrics.hpp"

namespace csqbm {

namespace {

constexpr double kWidth = 640.0;
constexpr double kPanelHeight = 220.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kGap = 50.0;

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string label(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", x);
  return buf;
}

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

void panel(std::ostringstream& svg, double top, const std::vector<double>& xs,
           const std::vector<double>& ys, const std::string& ylabel, const char* color) {
  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kPanelHeight;
  double xmin = xs.front(), xmax = xs.back();
  double ymin = ys.front(), ymax = ys.front();
  for (double y : ys) {
    if (std::isfinite(y)) {
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (!std::isfinite(ymin) || !std::isfinite(ymax)) ymin = ymax = 0.0;
  if (xmax == xmin) {
    xmin -= 0.5;
    xmax += 0.5;
  }
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }
  auto px = [&](double x) { return kMarginLeft + (x - xmin) / (xmax - xmin) * plot_w; };
  auto py = [&](double y) { return top + plot_h - (y - ymin) / (ymax - ymin) * plot_h; };

  svg << "<rect x=\"" << num(kMarginLeft) << "\" y=\"" << num(top) << "\" width=\"" << num(plot_w)
      << "\" height=\"" << num(plot_h) << "\" fill=\"none\" stroke=\"#444\"/>\n";
  svg << "<text x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(top + 10)
      << "\" text-anchor=\"end\" font-size=\"10\">" << label(ymax) << "</text>\n";
  svg << "<text x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(top + plot_h)
      << "\" text-anchor=\"end\" font-size=\"10\">" << label(ymin) << "</text>\n";
  svg << "<text x=\"" << num(kMarginLeft) << "\" y=\"" << num(top + plot_h + 14)
      << "\" font-size=\"10\">" << label(xs.front()) << "</text>\n";
  svg << "<text x=\"" << num(kWidth - kMarginRight) << "\" y=\"" << num(top + plot_h + 14)
      << "\" text-anchor=\"end\" font-size=\"10\">" << label(xs.back()) << "</text>\n";
  svg << "<text x=\"14\" y=\"" << num(top + plot_h / 2) << "\" font-size=\"11\" transform=\"rotate(-90 14 "
      << num(top + plot_h / 2) << ")\" text-anchor=\"middle\">" << escape(ylabel) << "</text>\n";

  if (xs.size() == 1) {
    svg << "<circle cx=\"" << num(px(xs[0])) << "\" cy=\"" << num(py(ys[0])) << "\" r=\"3\" fill=\""
        << color << "\"/>\n";
    return;
  }
  svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1\" points=\"";
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double y = std::isfinite(ys[k]) ? ys[k] : ymin;
    if (k) svg << ' ';
    svg << num(px(xs[k])) << ',' << num(py(y));
  }
  svg << "\"/>\n";
}

}  // namespace

std::string render_learning_curve(const std::vector<EpisodeRecord>& records,
                                  const std::string& title) {
  if (records.empty()) throw InvalidArgument("no episode records to plot");
  std::vector<double> xs, ret, td;
  for (const auto& r : records) {
    xs.push_back(static_cast<double>(r.episode));
    ret.push_back(r.ret);
    td.push_back(r.mean_abs_td);
  }
  const double height = kMarginTop + 2 * kPanelHeight + kGap + 30.0;
  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(kWidth) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(kWidth) << ' ' << num(height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(title) << "</text>\n";
  panel(svg, kMarginTop, xs, ret, "return", "#1f77b4");
  panel(svg, kMarginTop + kPanelHeight + kGap, xs, td, "mean |td|", "#d62728");
  svg << "<text x=\"" << num(kMarginLeft + (kWidth - kMarginLeft - kMarginRight) / 2) << "\" y=\""
      << num(height - 4) << "\" text-anchor=\"middle\" font-size=\"11\">episode</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void plot_metrics_file(const std::filesystem::path& metrics_path,
                       const std::filesystem::path& svg_path) {
  const MetricsFile metrics = read_metrics(metrics_path);
  if (metrics.records.empty()) {
    throw ConfigError(metrics_path.string() + ": no episode records to plot");
  }
  const std::string svg = render_learning_curve(metrics.records, metrics.header.env + " learning curve");
  std::ofstream out(svg_path, std::ios::binary);
  if (!out) throw IoError("cannot write plot " + svg_path.string());
  out << svg;
}

}  // namespace csqbm
