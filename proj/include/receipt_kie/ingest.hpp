#pragma once

// Readers and writers for the OCR input and ground-truth JSON files.
//
// OCR input:
//   {"doc_id": str, "page": {"width": int, "height": int},
//    "words": [{"text": str, "polygon": [[x,y],...], "confidence": float?}]}
// Ground truth:
//   {"doc_id": str,
//    "products": [{"description_ids": [int], "code_id": int?,
//                  "quantity_id": int?, "price_id": int?,
//                  "description_values": [str]?, "code_value": str?,
//                  "quantity_value": str?, "price_value": str?}]}
//
// The *_value fields carry the true transcription of a word. When omitted
// they default to the companion OCR document's text. Unknown fields are
// ignored on read.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "document.hpp"
#include "unicode.hpp"

namespace receipt_kie {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Malformed JSON.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte) : Error(what), byte_(byte) {}
  std::size_t byte() const { return byte_; }

 private:
  std::size_t byte_;
};

// Well-formed JSON that does not match the expected schema.
class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& what,
                       std::optional<std::size_t> record = std::nullopt)
      : Error(what), record_(record) {}
  std::optional<std::size_t> record() const { return record_; }

 private:
  std::optional<std::size_t> record_;
};

// A file refers to a document or token that does not exist, or two records
// claim the same token.
class ReferenceError : public Error {
 public:
  using Error::Error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct OcrWordRecord {
  std::string text;
  std::vector<Point> polygon;  // pixel coordinates
  std::optional<double> confidence;
  friend bool operator==(const OcrWordRecord&, const OcrWordRecord&) = default;
};

struct OcrPage {
  std::string doc_id;
  int width = 1;
  int height = 1;
  std::vector<OcrWordRecord> words;
  friend bool operator==(const OcrPage&, const OcrPage&) = default;
};

struct GroundTruthProduct {
  std::vector<TokenId> description_token_ids;
  std::optional<TokenId> code_token_id;
  std::optional<TokenId> quantity_token_id;
  std::optional<TokenId> price_token_id;
  std::vector<std::string> description_values;  // NFC, parallel to description_token_ids
  std::optional<std::string> code_value;
  std::optional<std::string> quantity_value;
  std::optional<std::string> price_value;

  std::optional<TokenId> token_for(EntityLabel label) const {
    switch (label) {
      case EntityLabel::Code: return code_token_id;
      case EntityLabel::Quantity: return quantity_token_id;
      case EntityLabel::Price: return price_token_id;
      default: return std::nullopt;
    }
  }
  std::optional<std::string> value_for(EntityLabel label) const {
    switch (label) {
      case EntityLabel::Code: return code_value;
      case EntityLabel::Quantity: return quantity_value;
      case EntityLabel::Price: return price_value;
      default: return std::nullopt;
    }
  }

  friend bool operator==(const GroundTruthProduct&, const GroundTruthProduct&) = default;
};

struct GroundTruth {
  std::string doc_id;
  std::vector<GroundTruthProduct> products;
  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

namespace detail {

inline json parse_json_bytes(std::string_view bytes, std::string_view what) {
  try {
    return json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string(what) + ": malformed JSON at byte " +
                         std::to_string(e.byte) + ": " + e.what(),
                     e.byte);
  }
}

inline const json& field(const json& obj, std::string_view key, std::string_view ctx,
                         std::optional<std::size_t> record = std::nullopt) {
  if (!obj.is_object()) throw SchemaError(std::string(ctx) + ": expected an object", record);
  const auto it = obj.find(key);
  if (it == obj.end()) {
    throw SchemaError(std::string(ctx) + ": missing field '" + std::string(key) + "'", record);
  }
  return *it;
}

inline const json* optional_field(const json& obj, std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline std::string as_string(const json& v, std::string_view ctx,
                             std::optional<std::size_t> record = std::nullopt) {
  if (!v.is_string()) throw SchemaError(std::string(ctx) + ": expected a string", record);
  return v.get<std::string>();
}

inline double as_number(const json& v, std::string_view ctx,
                        std::optional<std::size_t> record = std::nullopt) {
  if (!v.is_number()) throw SchemaError(std::string(ctx) + ": expected a number", record);
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(std::string(ctx) + ": non-finite number", record);
  return d;
}

inline std::int64_t as_integer(const json& v, std::string_view ctx,
                               std::optional<std::size_t> record = std::nullopt) {
  if (v.is_number_unsigned()) {
    const auto u = v.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX)) {
      throw SchemaError(std::string(ctx) + ": integer out of range", record);
    }
    return static_cast<std::int64_t>(u);
  }
  if (v.is_number_integer()) return v.get<std::int64_t>();
  throw SchemaError(std::string(ctx) + ": expected an integer", record);
}

inline TokenId as_token_id(const json& v, std::string_view ctx,
                           std::optional<std::size_t> record = std::nullopt) {
  const std::int64_t i = as_integer(v, ctx, record);
  if (i < 0) throw SchemaError(std::string(ctx) + ": negative token id", record);
  return static_cast<TokenId>(i);
}

inline const json& as_array(const json& v, std::string_view ctx,
                            std::optional<std::size_t> record = std::nullopt) {
  if (!v.is_array()) throw SchemaError(std::string(ctx) + ": expected an array", record);
  return v;
}

inline int as_page_dim(const json& v, std::string_view ctx) {
  const std::int64_t i = as_integer(v, ctx);
  if (i <= 0 || i > INT32_MAX) throw SchemaError(std::string(ctx) + ": must be a positive integer");
  return static_cast<int>(i);
}

}  // namespace detail

// ----------------------------------------------------------------------------
// OCR input
// ----------------------------------------------------------------------------

inline OcrPage parse_ocr_page(std::string_view bytes) {
  using namespace detail;
  const json root = parse_json_bytes(bytes, "OCR file");
  OcrPage page;
  page.doc_id = as_string(field(root, "doc_id", "OCR file"), "doc_id");
  const json& pg = field(root, "page", "OCR file");
  page.width = as_page_dim(field(pg, "width", "page"), "page.width");
  page.height = as_page_dim(field(pg, "height", "page"), "page.height");

  const json& words = as_array(field(root, "words", "OCR file"), "words");
  page.words.reserve(words.size());
  for (std::size_t i = 0; i < words.size(); ++i) {
    const json& w = words[i];
    const std::string ctx = "word " + std::to_string(i);
    OcrWordRecord rec;
    rec.text = as_string(field(w, "text", ctx, i), ctx + ".text", i);
    if (rec.text.empty()) throw SchemaError(ctx + ": empty text", i);
    const json& poly = as_array(field(w, "polygon", ctx, i), ctx + ".polygon", i);
    if (poly.size() < 3) throw SchemaError(ctx + ": polygon needs at least 3 vertices", i);
    for (const json& vertex : poly) {
      if (!vertex.is_array() || vertex.size() != 2) {
        throw SchemaError(ctx + ": vertex must be [x, y]", i);
      }
      Point p{as_number(vertex[0], ctx + ".x", i), as_number(vertex[1], ctx + ".y", i)};
      if (p.x < 0 || p.y < 0 || p.x > page.width || p.y > page.height) {
        throw SchemaError(ctx + ": coordinate (" + std::to_string(p.x) + ", " +
                              std::to_string(p.y) + ") outside the page",
                          i);
      }
      rec.polygon.push_back(p);
    }
    if (const json* c = optional_field(w, "confidence")) {
      const double conf = as_number(*c, ctx + ".confidence", i);
      if (conf < 0.0 || conf > 1.0) throw SchemaError(ctx + ": confidence outside [0,1]", i);
      rec.confidence = conf;
    }
    page.words.push_back(std::move(rec));
  }
  return page;
}

// Collapses each polygon to its axis-aligned envelope and normalizes by page
// size. All tokens come out Untagged.
inline Document to_document(const OcrPage& page) {
  Document doc;
  doc.doc_id = page.doc_id;
  doc.page_width = page.width;
  doc.page_height = page.height;
  doc.tokens.reserve(page.words.size());
  for (std::size_t i = 0; i < page.words.size(); ++i) {
    const OcrWordRecord& w = page.words[i];
    double x0 = w.polygon.front().x, x1 = x0;
    double y0 = w.polygon.front().y, y1 = y0;
    for (const Point& p : w.polygon) {
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    }
    Token t;
    t.id = i;
    t.text = w.text;
    t.bbox = {x0 / page.width, y0 / page.height, x1 / page.width, y1 / page.height};
    t.confidence = w.confidence;
    doc.tokens.push_back(std::move(t));
  }
  return doc;
}

inline Document parse_ocr(std::string_view bytes) { return to_document(parse_ocr_page(bytes)); }

inline std::string serialize_ocr_page(const OcrPage& page) {
  ordered_json root;
  root["doc_id"] = page.doc_id;
  root["page"] = {{"width", page.width}, {"height", page.height}};
  ordered_json words = ordered_json::array();
  for (const OcrWordRecord& w : page.words) {
    ordered_json rec;
    rec["text"] = w.text;
    ordered_json poly = ordered_json::array();
    for (const Point& p : w.polygon) poly.push_back({p.x, p.y});
    rec["polygon"] = std::move(poly);
    if (w.confidence) rec["confidence"] = *w.confidence;
    words.push_back(std::move(rec));
  }
  root["words"] = std::move(words);
  return root.dump(2) + "\n";
}

// ----------------------------------------------------------------------------
// Ground truth
// ----------------------------------------------------------------------------

inline std::vector<GroundTruthProduct> parse_ground_truth(std::string_view bytes,
                                                          const Document& doc) {
  using namespace detail;
  const json root = parse_json_bytes(bytes, "ground truth file");
  const std::string doc_id = as_string(field(root, "doc_id", "ground truth file"), "doc_id");
  if (doc_id != doc.doc_id) {
    throw ReferenceError("ground truth doc_id '" + doc_id + "' does not match document '" +
                         doc.doc_id + "'");
  }
  const json& products = as_array(field(root, "products", "ground truth file"), "products");

  std::set<TokenId> claimed;
  auto claim = [&](TokenId id, std::size_t product) {
    if (id >= doc.tokens.size()) {
      throw ReferenceError("ground truth product " + std::to_string(product) +
                           " references unknown token id " + std::to_string(id));
    }
    if (!claimed.insert(id).second) {
      throw ReferenceError("ground truth product " + std::to_string(product) +
                           " reuses token id " + std::to_string(id) +
                           "; products must be disjoint");
    }
  };
  auto value_or_text = [&](const json& p, std::string_view key, TokenId id,
                           std::size_t product) {
    if (const json* v = optional_field(p, key)) {
      return unicode::nfc(as_string(*v, key, product));
    }
    return unicode::nfc(doc.token(id).text);
  };

  std::vector<GroundTruthProduct> out;
  out.reserve(products.size());
  for (std::size_t i = 0; i < products.size(); ++i) {
    const json& p = products[i];
    const std::string ctx = "product " + std::to_string(i);
    GroundTruthProduct gt;
    const json& desc = as_array(field(p, "description_ids", ctx, i), ctx + ".description_ids", i);
    if (desc.empty()) throw SchemaError(ctx + ": description_ids must be non-empty", i);
    for (const json& d : desc) {
      const TokenId id = as_token_id(d, ctx + ".description_ids", i);
      claim(id, i);
      gt.description_token_ids.push_back(id);
    }
    auto opt_id = [&](std::string_view key) -> std::optional<TokenId> {
      const json* v = optional_field(p, key);
      if (!v) return std::nullopt;
      const TokenId id = as_token_id(*v, ctx + "." + std::string(key), i);
      claim(id, i);
      return id;
    };
    gt.code_token_id = opt_id("code_id");
    gt.quantity_token_id = opt_id("quantity_id");
    gt.price_token_id = opt_id("price_id");

    if (const json* values = optional_field(p, "description_values")) {
      as_array(*values, ctx + ".description_values", i);
      if (values->size() != gt.description_token_ids.size()) {
        throw SchemaError(ctx + ": description_values must parallel description_ids", i);
      }
      for (const json& v : *values) {
        gt.description_values.push_back(unicode::nfc(as_string(v, ctx, i)));
      }
    } else {
      for (TokenId id : gt.description_token_ids) {
        gt.description_values.push_back(unicode::nfc(doc.token(id).text));
      }
    }
    if (gt.code_token_id) gt.code_value = value_or_text(p, "code_value", *gt.code_token_id, i);
    if (gt.quantity_token_id) {
      gt.quantity_value = value_or_text(p, "quantity_value", *gt.quantity_token_id, i);
    }
    if (gt.price_token_id) gt.price_value = value_or_text(p, "price_value", *gt.price_token_id, i);
    out.push_back(std::move(gt));
  }
  return out;
}

inline std::string serialize_ground_truth(const GroundTruth& truth) {
  ordered_json root;
  root["doc_id"] = truth.doc_id;
  ordered_json products = ordered_json::array();
  for (const GroundTruthProduct& p : truth.products) {
    ordered_json rec;
    rec["description_ids"] = p.description_token_ids;
    if (p.code_token_id) rec["code_id"] = *p.code_token_id;
    if (p.quantity_token_id) rec["quantity_id"] = *p.quantity_token_id;
    if (p.price_token_id) rec["price_id"] = *p.price_token_id;
    rec["description_values"] = p.description_values;
    if (p.code_value) rec["code_value"] = *p.code_value;
    if (p.quantity_value) rec["quantity_value"] = *p.quantity_value;
    if (p.price_value) rec["price_value"] = *p.price_value;
    products.push_back(std::move(rec));
  }
  root["products"] = std::move(products);
  return root.dump(2) + "\n";
}

// Reads only the doc_id of any of this library's JSON files.
inline std::string peek_doc_id(std::string_view bytes) {
  const json root = detail::parse_json_bytes(bytes, "file");
  return detail::as_string(detail::field(root, "doc_id", "file"), "doc_id");
}

}  // namespace receipt_kie
