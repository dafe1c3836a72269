#pragma once

// Result file: the decoded document echoed back with labels, its detected
// lines, and one entry per product group.
//
//   {"doc_id": str, "page": {"width": int, "height": int},
//    "tokens": [{"id": int, "text": str, "bbox": [x0, y0, x1, y1],
//                "label": str, "source": str?, "confidence": float?}],
//    "lines": [[int, ...], ...],
//    "products": [{"group_id": int, "line_indices": [int],
//                  "entities": {"description": [int], "code": int?,
//                               "quantity": int?, "price": int?},
//                  "corrected": ["code"?, "quantity"?, "price"?],
//                  "incomplete": bool}]}

#include <string>
#include <string_view>
#include <vector>

#include "document.hpp"
#include "ingest.hpp"
#include "layout.hpp"

namespace receipt_kie {

struct DecodeResult {
  Document doc;
  std::vector<Line> lines;
  std::vector<ProductGroup> groups;

  friend bool operator==(const DecodeResult&, const DecodeResult&) = default;
};

// Entities of the assignment that were filled by a correction rule.
inline std::vector<EntityLabel> corrected_entities(const EntityAssignment& a, const Document& doc) {
  std::vector<EntityLabel> out;
  for (EntityLabel label : {EntityLabel::Code, EntityLabel::Quantity, EntityLabel::Price}) {
    const auto id = a.get(label);
    if (id && doc.token(*id).source == LabelSource::Correction) out.push_back(label);
  }
  return out;
}

inline ordered_json result_to_json(const DecodeResult& r) {
  const Document& doc = r.doc;
  ordered_json root;
  root["doc_id"] = doc.doc_id;
  root["page"] = {{"width", doc.page_width}, {"height", doc.page_height}};
  ordered_json tokens = ordered_json::array();
  for (const Token& t : doc.tokens) {
    ordered_json rec;
    rec["id"] = t.id;
    rec["text"] = t.text;
    rec["bbox"] = {t.bbox.x_min, t.bbox.y_min, t.bbox.x_max, t.bbox.y_max};
    rec["label"] = std::string(to_string(t.label));
    if (t.source) rec["source"] = std::string(to_string(*t.source));
    if (t.confidence) rec["confidence"] = *t.confidence;
    tokens.push_back(std::move(rec));
  }
  root["tokens"] = std::move(tokens);
  ordered_json lines = ordered_json::array();
  for (const Line& l : r.lines) lines.push_back(l.token_ids);
  root["lines"] = std::move(lines);

  ordered_json products = ordered_json::array();
  for (const ProductGroup& g : r.groups) {
    const EntityAssignment a = assign_entities(g, doc);
    ordered_json p;
    p["group_id"] = g.group_id;
    p["line_indices"] = g.line_indices;
    ordered_json entities;
    entities["description"] = a.description;
    if (a.code) entities["code"] = *a.code;
    if (a.quantity) entities["quantity"] = *a.quantity;
    if (a.price) entities["price"] = *a.price;
    p["entities"] = std::move(entities);
    ordered_json corrected = ordered_json::array();
    for (EntityLabel e : corrected_entities(a, doc)) corrected.push_back(std::string(to_string(e)));
    p["corrected"] = std::move(corrected);
    p["incomplete"] = g.incomplete;
    products.push_back(std::move(p));
  }
  root["products"] = std::move(products);
  return root;
}

inline std::string serialize_result(const DecodeResult& r) { return result_to_json(r).dump(2) + "\n"; }

inline DecodeResult parse_result(std::string_view bytes) {
  using namespace detail;
  const json root = parse_json_bytes(bytes, "result file");
  DecodeResult r;
  Document& doc = r.doc;
  doc.doc_id = as_string(field(root, "doc_id", "result file"), "doc_id");
  const json& pg = field(root, "page", "result file");
  doc.page_width = as_page_dim(field(pg, "width", "page"), "page.width");
  doc.page_height = as_page_dim(field(pg, "height", "page"), "page.height");

  const json& tokens = as_array(field(root, "tokens", "result file"), "tokens");
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const json& rec = tokens[i];
    const std::string ctx = "token " + std::to_string(i);
    Token t;
    t.id = as_token_id(field(rec, "id", ctx, i), ctx + ".id", i);
    if (t.id != i) throw SchemaError(ctx + ": token ids must be dense and ordered", i);
    t.text = as_string(field(rec, "text", ctx, i), ctx + ".text", i);
    if (t.text.empty()) throw SchemaError(ctx + ": empty text", i);
    const json& box = as_array(field(rec, "bbox", ctx, i), ctx + ".bbox", i);
    if (box.size() != 4) throw SchemaError(ctx + ": bbox must have 4 numbers", i);
    t.bbox = {as_number(box[0], ctx, i), as_number(box[1], ctx, i), as_number(box[2], ctx, i),
              as_number(box[3], ctx, i)};
    if (!t.bbox.valid()) throw SchemaError(ctx + ": invalid bbox", i);
    const std::string label = as_string(field(rec, "label", ctx, i), ctx + ".label", i);
    const auto parsed = parse_entity_label(label);
    if (!parsed) throw SchemaError(ctx + ": unknown label '" + label + "'", i);
    t.label = *parsed;
    if (const json* s = optional_field(rec, "source")) {
      const std::string name = as_string(*s, ctx + ".source", i);
      const auto src = parse_label_source(name);
      if (!src) throw SchemaError(ctx + ": unknown source '" + name + "'", i);
      t.source = *src;
    }
    if (t.tagged() != t.source.has_value()) {
      throw SchemaError(ctx + ": a source is required exactly when the token is labeled", i);
    }
    if (const json* c = optional_field(rec, "confidence")) {
      t.confidence = as_number(*c, ctx + ".confidence", i);
    }
    doc.tokens.push_back(std::move(t));
  }

  std::vector<bool> in_line(doc.tokens.size(), false);
  const json& lines = as_array(field(root, "lines", "result file"), "lines");
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string ctx = "line " + std::to_string(i);
    Line line{i, {}};
    for (const json& v : as_array(lines[i], ctx, i)) {
      const TokenId id = as_token_id(v, ctx, i);
      if (id >= doc.tokens.size()) {
        throw ReferenceError(ctx + " references unknown token id " + std::to_string(id));
      }
      if (in_line[id]) throw ReferenceError("token id " + std::to_string(id) + " is in two lines");
      in_line[id] = true;
      line.token_ids.push_back(id);
    }
    if (line.token_ids.empty()) throw SchemaError(ctx + ": empty line", i);
    r.lines.push_back(std::move(line));
  }

  const json& products = as_array(field(root, "products", "result file"), "products");
  for (std::size_t i = 0; i < products.size(); ++i) {
    const json& p = products[i];
    const std::string ctx = "product " + std::to_string(i);
    const std::int64_t gid = as_integer(field(p, "group_id", ctx, i), ctx + ".group_id", i);
    if (gid < 0) throw SchemaError(ctx + ": negative group_id", i);
    const json& idx = as_array(field(p, "line_indices", ctx, i), ctx + ".line_indices", i);
    if (idx.empty()) throw SchemaError(ctx + ": line_indices must be non-empty", i);
    const TokenId first = as_token_id(idx.front(), ctx, i);
    const TokenId last = as_token_id(idx.back(), ctx, i);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (as_token_id(idx[k], ctx, i) != first + k) {
        throw SchemaError(ctx + ": line_indices must be a contiguous ascending range", i);
      }
    }
    if (last >= r.lines.size()) throw ReferenceError(ctx + " references an unknown line");
    bool incomplete = false;
    if (const json* inc = optional_field(p, "incomplete")) {
      if (!inc->is_boolean()) throw SchemaError(ctx + ".incomplete: expected a boolean", i);
      incomplete = inc->get<bool>();
    }
    ProductGroup g = make_group(doc, r.lines, static_cast<std::size_t>(gid), first, last, incomplete);
    // The entity block is derived data; reject files where it disagrees.
    const json& ent = field(p, "entities", ctx, i);
    const EntityAssignment a = assign_entities(g, doc);
    std::vector<TokenId> desc;
    for (const json& v : as_array(field(ent, "description", ctx, i), ctx, i)) {
      desc.push_back(as_token_id(v, ctx, i));
    }
    auto opt = [&](std::string_view key) -> std::optional<TokenId> {
      const json* v = optional_field(ent, key);
      if (!v) return std::nullopt;
      return as_token_id(*v, ctx, i);
    };
    if (desc != a.description || opt("code") != a.code || opt("quantity") != a.quantity ||
        opt("price") != a.price) {
      throw SchemaError(ctx + ": entities disagree with token labels", i);
    }
    r.groups.push_back(std::move(g));
  }
  return r;
}

}  // namespace receipt_kie
