#pragma once

// Static SVG overlay of a decoded document: one rectangle per token filled
// by label (code gray, description green, quantity yellow, price red), one
// outline per product group on a blue-to-purple ramp, and a dashed stroke on
// words whose label came from a correction rule.

#include <cstdio>
#include <string>
#include <string_view>

#include "result.hpp"

namespace receipt_kie {

inline std::string_view label_color(EntityLabel label) {
  switch (label) {
    case EntityLabel::Code: return "#808080";
    case EntityLabel::Description: return "#2ca02c";
    case EntityLabel::Quantity: return "#ffd700";
    case EntityLabel::Price: return "#d62728";
    case EntityLabel::Untagged: break;
  }
  return "none";
}

// Hue in degrees for group i of n: 220 (blue) to 290 (purple).
inline double group_hue(std::size_t i, std::size_t n) {
  if (n <= 1) return 220.0;
  return 220.0 + 70.0 * static_cast<double>(i) / static_cast<double>(n - 1);
}

inline std::string xml_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string render_svg(const DecodeResult& result) {
  const Document& doc = result.doc;
  const double w = doc.page_width, h = doc.page_height;
  char buf[512];
  std::string svg;
  std::snprintf(buf, sizeof buf,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%d\" height=\"%d\" "
                "viewBox=\"0 0 %d %d\">\n",
                doc.page_width, doc.page_height, doc.page_width, doc.page_height);
  svg += buf;
  svg += "<rect class=\"page\" x=\"0\" y=\"0\" width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  svg += "<g class=\"tokens\">\n";
  for (const Token& t : doc.tokens) {
    const bool corrected = t.source == LabelSource::Correction;
    std::snprintf(buf, sizeof buf,
                  "<rect class=\"token label-%s%s\" data-id=\"%zu\" x=\"%.2f\" y=\"%.2f\" "
                  "width=\"%.2f\" height=\"%.2f\" fill=\"%s\" fill-opacity=\"0.5\" "
                  "stroke=\"#333333\" stroke-width=\"1\"%s>",
                  std::string(to_string(t.label)).c_str(), corrected ? " corrected" : "", t.id,
                  t.bbox.x_min * w, t.bbox.y_min * h, t.bbox.width() * w, t.bbox.height() * h,
                  std::string(label_color(t.label)).c_str(),
                  corrected ? " stroke-dasharray=\"4 2\"" : "");
    svg += buf;
    svg += "<title>" + xml_escape(t.text) + "</title></rect>\n";
  }
  svg += "</g>\n<g class=\"groups\">\n";
  for (std::size_t i = 0; i < result.groups.size(); ++i) {
    const ProductGroup& g = result.groups[i];
    std::snprintf(buf, sizeof buf,
                  "<rect class=\"group\" data-group=\"%zu\" x=\"%.2f\" y=\"%.2f\" width=\"%.2f\" "
                  "height=\"%.2f\" fill=\"none\" stroke=\"hsl(%.1f, 80%%, 50%%)\" "
                  "stroke-width=\"3\"/>\n",
                  g.group_id, g.bbox.x_min * w, g.bbox.y_min * h, g.bbox.width() * w,
                  g.bbox.height() * h, group_hue(i, result.groups.size()));
    svg += buf;
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace receipt_kie
