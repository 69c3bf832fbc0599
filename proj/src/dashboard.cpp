#include "motifdash/dashboard.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace motifdash::dashboard {

namespace {

constexpr double kCellW = 11.0;
constexpr double kCellH = 18.0;
constexpr double kLogoColW = 16.0;
constexpr double kLogoH = 64.0;  // 2 bits

const char* base_color(char b) {
  switch (b) {
    case 'A': return "#1fa05a";
    case 'C': return "#2a5bc7";
    case 'G': return "#f0a63c";
    case 'T': return "#d44040";
    default: return "#888888";
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
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

// white -> red ramp for saliency magnitudes (monotone in the magnitude)
std::string saliency_color(double norm) {
  const int level = static_cast<int>(std::lround(255.0 * std::clamp(norm, 0.0, 1.0)));
  char buf[16];
  std::snprintf(buf, sizeof buf, "#ff%02x%02x", 255 - level, 255 - level);
  return buf;
}

// blue (negative prediction) -> white -> red (positive)
std::string temporal_color(double score) {
  const double s = std::clamp(score, 0.0, 1.0);
  char buf[16];
  if (s < 0.5) {
    const int level = static_cast<int>(std::lround(255.0 * (1.0 - 2.0 * (0.5 - s))));
    std::snprintf(buf, sizeof buf, "#%02x%02xff", level, level);
  } else {
    const int level = static_cast<int>(std::lround(255.0 * (1.0 - 2.0 * (s - 0.5))));
    std::snprintf(buf, sizeof buf, "#ff%02x%02x", level, level);
  }
  return buf;
}

}  // namespace

std::string render_logo(const Pwm& p) {
  std::ostringstream svg;
  const double width = kLogoColW * p.width();
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
      << "\" height=\"" << fmt(kLogoH) << "\" viewBox=\"0 0 " << fmt(width) << " "
      << fmt(kLogoH) << "\">";
  for (int col = 0; col < p.width(); ++col) {
    double ic = 2.0;
    for (int b = 0; b < 4; ++b) {
      const double prob = p.probs(col, b);
      if (prob > 0.0) ic += prob * std::log2(prob);
    }
    ic = std::max(0.0, ic);
    // stack ascending so the tallest letter ends on top
    std::array<int, 4> order{0, 1, 2, 3};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return p.probs(col, a) < p.probs(col, b); });
    double y = kLogoH;  // baseline accumulates upward
    for (int b : order) {
      const double h = p.probs(col, b) * ic / 2.0 * kLogoH;
      if (h < 0.01) continue;
      const double x = col * kLogoColW;
      // glyph drawn in a 1x1 box then scaled to the stack slot
      svg << "<text x=\"0\" y=\"0\" transform=\"translate(" << fmt(x) << "," << fmt(y)
          << ") scale(" << fmt(kLogoColW / 10.0) << "," << fmt(h / 10.0)
          << ")\" font-family=\"monospace\" font-size=\"13\" fill=\""
          << base_color(kAlphabet[b]) << "\">" << kAlphabet[b] << "</text>";
      y -= h;
    }
  }
  svg << "</svg>";
  return svg.str();
}

namespace {

void validate(const DashboardSpec& spec) {
  const int T = static_cast<int>(spec.sequence.size());
  for (const auto& m : spec.models) {
    if (static_cast<int>(m.saliency.size()) != T)
      throw DashboardError("saliency length mismatch for model '" + m.model_name + "'");
    if (m.has_temporal && (static_cast<int>(m.temporal_forward.size()) != T ||
                           static_cast<int>(m.temporal_backward.size()) != T))
      throw DashboardError("temporal length mismatch for model '" + m.model_name + "'");
  }
  for (const auto& a : spec.annotations)
    if (a.start < 0 || a.width < 1 || a.start + a.width > T)
      throw DashboardError("annotation '" + a.name + "' out of sequence bounds");
}

void annotation_boxes(std::ostringstream& svg, const DashboardSpec& spec, double row_h) {
  for (const auto& a : spec.annotations) {
    svg << "<rect x=\"" << fmt(a.start * kCellW) << "\" y=\"0.5\" width=\""
        << fmt(a.width * kCellW) << "\" height=\"" << fmt(row_h - 1.0)
        << "\" fill=\"none\" stroke=\"#ff69b4\" stroke-width=\"2\"/>";
  }
}

void sequence_row(std::ostringstream& html, const DashboardSpec& spec) {
  const int T = static_cast<int>(spec.sequence.size());
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(T * kCellW)
      << "\" height=\"" << fmt(kCellH) << "\">";
  for (int t = 0; t < T; ++t) {
    svg << "<text x=\"" << fmt(t * kCellW + 2.0) << "\" y=\"" << fmt(kCellH - 5.0)
        << "\" font-family=\"monospace\" font-size=\"12\" fill=\""
        << base_color(spec.sequence[static_cast<std::size_t>(t)]) << "\">"
        << spec.sequence[static_cast<std::size_t>(t)] << "</text>";
  }
  annotation_boxes(svg, spec, kCellH);
  svg << "</svg>";
  html << "<div class=\"seqrow\">" << svg.str() << "</div>\n";
}

}  // namespace

std::string render_dashboard_html(const DashboardSpec& spec) {
  validate(spec);
  const int T = static_cast<int>(spec.sequence.size());

  std::ostringstream html;
  html << "<!DOCTYPE html>\n<html xmlns=\"http://www.w3.org/1999/xhtml\">\n<head>\n"
       << "<meta charset=\"utf-8\"/>\n<title>" << escape(spec.title) << "</title>\n"
       << "<style>\nbody{font-family:sans-serif;margin:24px;}\n"
       << "h2{border-bottom:1px solid #ccc;padding-bottom:4px;}\n"
       << ".label{display:inline-block;width:170px;font-size:13px;vertical-align:top;}\n"
       << ".viz{display:inline-block;vertical-align:top;}\n"
       << ".placeholder{color:#999;font-style:italic;}\n"
       << ".seqrow{margin:2px 0 2px 170px;}\n</style>\n</head>\n<body>\n"
       << "<h1>" << escape(spec.title) << "</h1>\n"
       << "<p>Sequence <code>" << escape(spec.sequence_id) << "</code>, length " << T
       << "</p>\n";

  // class optimization section
  html << "<h2>Class optimization</h2>\n";
  bool any_logo = false;
  for (const auto& m : spec.models) {
    if (!m.class_opt_logo) continue;
    any_logo = true;
    html << "<div><span class=\"label\">" << escape(m.model_name)
         << "</span><span class=\"viz\">" << render_logo(*m.class_opt_logo)
         << "</span></div>\n";
  }
  if (!any_logo) html << "<p class=\"placeholder\">no class optimization available</p>\n";

  // saliency section
  html << "<h2>Saliency maps</h2>\n";
  if (spec.models.empty()) {
    html << "<p class=\"placeholder\">no models</p>\n";
  } else {
    sequence_row(html, spec);
    for (const auto& m : spec.models) {
      double max_mag = 0.0;
      for (double v : m.saliency) max_mag = std::max(max_mag, v);
      std::ostringstream svg;
      svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(T * kCellW)
          << "\" height=\"" << fmt(kCellH) << "\">";
      for (int t = 0; t < T; ++t) {
        const double norm =
            max_mag > 0.0 ? m.saliency[static_cast<std::size_t>(t)] / max_mag : 0.0;
        svg << "<rect x=\"" << fmt(t * kCellW) << "\" y=\"0\" width=\"" << fmt(kCellW)
            << "\" height=\"" << fmt(kCellH) << "\" fill=\"" << saliency_color(norm)
            << "\"/>";
      }
      annotation_boxes(svg, spec, kCellH);
      svg << "</svg>";
      html << "<div><span class=\"label\">" << escape(m.model_name) << " ("
           << fmt(m.score) << ")</span><span class=\"viz\">" << svg.str()
           << "</span></div>\n";
    }
  }

  // temporal section
  html << "<h2>Temporal output scores</h2>\n";
  bool any_temporal = false;
  for (const auto& m : spec.models) {
    if (!m.has_temporal) {
      html << "<div><span class=\"label\">" << escape(m.model_name)
           << "</span><span class=\"viz placeholder\">not applicable</span></div>\n";
      continue;
    }
    any_temporal = true;
    for (int track = 0; track < 2; ++track) {
      const auto& scores = track == 0 ? m.temporal_forward : m.temporal_backward;
      std::ostringstream svg;
      svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(T * kCellW)
          << "\" height=\"" << fmt(kCellH) << "\">";
      for (int t = 0; t < T; ++t) {
        svg << "<rect x=\"" << fmt(t * kCellW) << "\" y=\"0\" width=\"" << fmt(kCellW)
            << "\" height=\"" << fmt(kCellH) << "\" fill=\""
            << temporal_color(scores[static_cast<std::size_t>(t)]) << "\"/>";
      }
      annotation_boxes(svg, spec, kCellH);
      svg << "</svg>";
      html << "<div><span class=\"label\">" << escape(m.model_name)
           << (track == 0 ? " forward" : " backward") << "</span><span class=\"viz\">"
           << svg.str() << "</span></div>\n";
    }
  }
  if (spec.models.empty() || !any_temporal)
    html << "<p class=\"placeholder\">no temporal scores available</p>\n";

  html << "</body>\n</html>\n";
  return html.str();
}

void render_dashboard(const DashboardSpec& spec, const std::string& path) {
  const std::string doc = render_dashboard_html(spec);
  std::ofstream out(path);
  if (!out) throw DashboardError("cannot write dashboard file: " + path);
  out << doc;
}

}  // namespace motifdash::dashboard
