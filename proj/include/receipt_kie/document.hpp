#pragma once

// Core value types shared by every pipeline stage.
//
// Coordinate convention: every BBox is page-normalized. x runs left to right
// and y runs top to bottom, both in [0, 1]. Ingestion divides pixel
// coordinates by the page width/height, so all geometric thresholds in this
// library are resolution independent.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace receipt_kie {

// ----------------------------------------------------------------------------
// Errors
// ----------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke a documented precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

// ----------------------------------------------------------------------------
// Geometry
// ----------------------------------------------------------------------------

struct BBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double x_center() const { return 0.5 * (x_min + x_max); }
  double y_center() const { return 0.5 * (y_min + y_max); }

  bool valid() const {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    return x_min <= x_max && y_min <= y_max && in_unit(x_min) &&
           in_unit(y_min) && in_unit(x_max) && in_unit(y_max);
  }

  bool contains(const BBox& other) const {
    return x_min <= other.x_min && y_min <= other.y_min &&
           x_max >= other.x_max && y_max >= other.y_max;
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline BBox union_bbox(const BBox& a, const BBox& b) {
  return {std::min(a.x_min, b.x_min), std::min(a.y_min, b.y_min),
          std::max(a.x_max, b.x_max), std::max(a.y_max, b.y_max)};
}

// Componentwise min/max envelope of a non-empty list of boxes.
inline BBox union_bbox(std::span<const BBox> boxes) {
  if (boxes.empty()) {
    throw ContractError("union_bbox: empty box list");
  }
  BBox out = boxes.front();
  for (const BBox& b : boxes.subspan(1)) {
    out = union_bbox(out, b);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Labels
// ----------------------------------------------------------------------------

enum class EntityLabel { Description, Code, Quantity, Price, Untagged };

enum class LabelSource { Model, Heuristic, Correction, GroundTruth };

inline constexpr EntityLabel kEntityLabels[] = {
    EntityLabel::Description, EntityLabel::Code, EntityLabel::Quantity,
    EntityLabel::Price};

inline std::string_view to_string(EntityLabel label) {
  switch (label) {
    case EntityLabel::Description: return "description";
    case EntityLabel::Code: return "code";
    case EntityLabel::Quantity: return "quantity";
    case EntityLabel::Price: return "price";
    case EntityLabel::Untagged: return "untagged";
  }
  return "untagged";
}

inline std::optional<EntityLabel> parse_entity_label(std::string_view s) {
  if (s == "description") return EntityLabel::Description;
  if (s == "code") return EntityLabel::Code;
  if (s == "quantity") return EntityLabel::Quantity;
  if (s == "price") return EntityLabel::Price;
  if (s == "untagged") return EntityLabel::Untagged;
  return std::nullopt;
}

inline std::string_view to_string(LabelSource source) {
  switch (source) {
    case LabelSource::Model: return "model";
    case LabelSource::Heuristic: return "heuristic";
    case LabelSource::Correction: return "correction";
    case LabelSource::GroundTruth: return "ground_truth";
  }
  return "model";
}

inline std::optional<LabelSource> parse_label_source(std::string_view s) {
  if (s == "model") return LabelSource::Model;
  if (s == "heuristic") return LabelSource::Heuristic;
  if (s == "correction") return LabelSource::Correction;
  if (s == "ground_truth") return LabelSource::GroundTruth;
  return std::nullopt;
}

// ----------------------------------------------------------------------------
// Tokens and documents
// ----------------------------------------------------------------------------

using TokenId = std::size_t;

struct Token {
  TokenId id = 0;
  std::string text;
  BBox bbox;
  EntityLabel label = EntityLabel::Untagged;
  std::optional<LabelSource> source;  // absent iff label == Untagged
  std::optional<double> confidence;

  bool tagged() const { return label != EntityLabel::Untagged; }

  void set_label(EntityLabel l, LabelSource s) {
    label = l;
    source = s;
  }

  void clear_label() {
    label = EntityLabel::Untagged;
    source.reset();
  }

  friend bool operator==(const Token&, const Token&) = default;
};

struct Document {
  std::string doc_id;
  std::vector<Token> tokens;  // OCR reading order; informational only
  int page_width = 1;
  int page_height = 1;

  const Token& token(TokenId id) const {
    if (id >= tokens.size()) {
      throw ContractError("token id " + std::to_string(id) +
                          " out of range in document '" + doc_id + "'");
    }
    return tokens[id];
  }
  Token& token(TokenId id) {
    return const_cast<Token&>(std::as_const(*this).token(id));
  }

  friend bool operator==(const Document&, const Document&) = default;
};

// One detected text line. Token ids run left to right.
struct Line {
  std::size_t index = 0;  // 0 = topmost
  std::vector<TokenId> token_ids;

  friend bool operator==(const Line&, const Line&) = default;
};

// A contiguous run of lines describing one purchased product. token_ids are
// kept in line-major reading order (top line first, left to right inside a
// line); "topmost-then-leftmost" tie breaks elsewhere mean "first in
// token_ids".
struct ProductGroup {
  std::size_t group_id = 0;
  std::vector<std::size_t> line_indices;
  std::vector<TokenId> token_ids;
  BBox bbox;
  bool incomplete = false;  // closed by end of document, not by an entity line

  friend bool operator==(const ProductGroup&, const ProductGroup&) = default;
};

// Reports every broken type invariant. Never throws.
inline std::vector<std::string> validate_document(const Document& doc) {
  std::vector<std::string> violations;
  if (doc.page_width <= 0 || doc.page_height <= 0) {
    violations.push_back("page size must be positive, got " +
                         std::to_string(doc.page_width) + "x" +
                         std::to_string(doc.page_height));
  }
  std::set<TokenId> seen;
  for (std::size_t pos = 0; pos < doc.tokens.size(); ++pos) {
    const Token& t = doc.tokens[pos];
    const std::string name = "token " + std::to_string(t.id);
    if (!seen.insert(t.id).second) {
      violations.push_back("duplicate token id " + std::to_string(t.id));
    } else if (t.id != pos) {
      violations.push_back(name + " at position " + std::to_string(pos) +
                           " breaks dense id order");
    }
    if (t.text.empty()) {
      violations.push_back(name + " has empty text");
    }
    if (!t.bbox.valid()) {
      violations.push_back(name + " has invalid bbox");
    }
    if (t.tagged() != t.source.has_value()) {
      violations.push_back(name + (t.tagged() ? " is labeled without a source"
                                              : " is untagged but has a source"));
    }
    if (t.confidence && !(*t.confidence >= 0.0 && *t.confidence <= 1.0)) {
      violations.push_back(name + " has confidence outside [0,1]");
    }
  }
  return violations;
}

}  // namespace receipt_kie
