#pragma once

#include "selfattn/tensor.hpp"

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace selfattn::cli {

enum class HeatmapMode { per_hop, overall };

/// Accepts "per-hop" or "overall".
HeatmapMode parse_heatmap_mode(std::string_view text);

/// Attention weights of one sentence together with what the model predicted for it.
struct HeatmapDoc {
  std::string model_id;
  std::size_t sentence_id = 0;
  std::vector<std::string> tokens;
  Tensor<float> hops;     // r x n
  Tensor<float> overall;  // n
  int predicted = -1;     // -1 when the model gives no single-sentence prediction
  double confidence = 0;
};

/// Builds a document from an annotation matrix; `overall` is its normalized column sum.
HeatmapDoc make_heatmap(std::string model_id, std::size_t sentence_id, std::vector<std::string> tokens,
                        const Tensor<float>& annotation, int predicted, double confidence);

/**
 * CSV with header "sentence_id,kind,predicted,confidence,values". Every
 * sentence contributes a "tokens" row followed by one "hop<i>" row per hop
 * or a single "overall" row. Weights use %.9g, which round-trips float.
 */
void render_csv(std::ostream& out, const std::vector<HeatmapDoc>& docs, HeatmapMode mode);

/// Static HTML page; each token's background runs from white (0) to red (sentence max).
void render_html(std::ostream& out, const std::vector<HeatmapDoc>& docs, HeatmapMode mode);

/// Background colour for `weight` on a white-to-red scale over [0, max].
std::string heat_colour(double weight, double max);

}  // namespace selfattn::cli
