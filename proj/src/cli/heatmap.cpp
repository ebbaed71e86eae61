#include "selfattn/cli/heatmap.hpp"

#include "selfattn/attention.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace selfattn::cli {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string html_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

std::string number(double v, const char* format) {
  char buf[48];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

struct Row {
  std::string kind;
  std::vector<float> weights;
};

std::vector<Row> rows_of(const HeatmapDoc& doc, HeatmapMode mode) {
  std::vector<Row> rows;
  if (mode == HeatmapMode::overall) {
    rows.push_back({"overall", {doc.overall.data(), doc.overall.data() + doc.overall.size()}});
    return rows;
  }
  const auto a = doc.hops.mat();
  for (Index i = 0; i < a.rows(); ++i) {
    Row row{"hop" + std::to_string(i), {}};
    for (Index j = 0; j < a.cols(); ++j) row.weights.push_back(a(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

HeatmapMode parse_heatmap_mode(std::string_view text) {
  if (text == "per-hop") return HeatmapMode::per_hop;
  if (text == "overall") return HeatmapMode::overall;
  throw InvalidInputError("unknown heatmap mode '" + std::string(text) + "' (expected per-hop or overall)");
}

HeatmapDoc make_heatmap(std::string model_id, std::size_t sentence_id, std::vector<std::string> tokens,
                        const Tensor<float>& annotation, int predicted, double confidence) {
  if (annotation.rank() != 2 || annotation.cols() != static_cast<Index>(tokens.size())) {
    throw DimensionError("heatmap: annotation " + shape_string(annotation.shape()) + " does not match " +
                         std::to_string(tokens.size()) + " tokens");
  }
  HeatmapDoc doc;
  doc.model_id = std::move(model_id);
  doc.sentence_id = sentence_id;
  doc.tokens = std::move(tokens);
  doc.hops = annotation;
  doc.overall = overall_attention(annotation);
  doc.predicted = predicted;
  doc.confidence = confidence;
  return doc;
}

std::string heat_colour(double weight, double max) {
  const double t = max > 0 ? std::clamp(weight / max, 0.0, 1.0) : 0.0;
  const int fade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  char buf[24];
  std::snprintf(buf, sizeof buf, "rgb(255,%d,%d)", fade, fade);
  return buf;
}

void render_csv(std::ostream& out, const std::vector<HeatmapDoc>& docs, HeatmapMode mode) {
  out << "sentence_id,kind,predicted,confidence,values\n";
  for (const auto& doc : docs) {
    auto head = [&](const std::string& kind) {
      return std::to_string(doc.sentence_id) + "," + kind + "," + std::to_string(doc.predicted) + "," +
             number(doc.confidence, "%.9g");
    };
    out << head("tokens");
    for (const auto& token : doc.tokens) out << ',' << csv_field(token);
    out << '\n';
    for (const auto& row : rows_of(doc, mode)) {
      out << head(row.kind);
      for (const float w : row.weights) out << ',' << number(w, "%.9g");
      out << '\n';
    }
  }
}

void render_html(std::ostream& out, const std::vector<HeatmapDoc>& docs, HeatmapMode mode) {
  out << "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>attention heatmap</title>\n"
         "<style>\n"
         "body { font-family: sans-serif; }\n"
         ".sentence { margin: 1em 0; }\n"
         ".meta { color: #555; font-size: 0.85em; }\n"
         ".row { margin: 2px 0; line-height: 1.8; }\n"
         ".tok { padding: 1px 3px; }\n"
         "</style>\n</head>\n<body>\n";
  for (const auto& doc : docs) {
    const auto rows = rows_of(doc, mode);
    float peak = 0;
    for (const auto& row : rows) {
      for (const float w : row.weights) peak = std::max(peak, w);
    }
    out << "<div class=\"sentence\">\n<div class=\"meta\">model " << html_escape(doc.model_id) << ", sentence "
        << doc.sentence_id;
    if (doc.predicted >= 0) out << ", predicted " << doc.predicted << " (" << number(doc.confidence, "%.4f") << ")";
    out << "</div>\n";
    for (const auto& row : rows) {
      out << "<div class=\"row\" title=\"" << row.kind << "\">";
      for (std::size_t j = 0; j < doc.tokens.size(); ++j) {
        out << "<span class=\"tok\" style=\"background:" << heat_colour(row.weights[j], peak) << "\" title=\""
            << number(row.weights[j], "%.9g") << "\">" << html_escape(doc.tokens[j]) << "</span> ";
      }
      out << "</div>\n";
    }
    out << "</div>\n";
  }
  out << "</body>\n</html>\n";
}

}  // namespace selfattn::cli
