#pragma once

// Entity tagging: the embedding-fusion contract of the image/text encoder
// architecture, the tagger seam, a deterministic rule-based tagger and an
// importer for externally produced model predictions.

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "document.hpp"
#include "ingest.hpp"
#include "layout.hpp"
#include "numeric.hpp"
#include "unicode.hpp"

namespace receipt_kie {

// ----------------------------------------------------------------------------
// Embeddings
// ----------------------------------------------------------------------------

class EmbeddingVector {
 public:
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw ContractError("EmbeddingVector: dim must be positive");
    for (double v : values_) {
      if (!std::isfinite(v)) throw ContractError("EmbeddingVector: non-finite value");
    }
  }

  static EmbeddingVector zeros(std::size_t dim) {
    return EmbeddingVector(std::vector<double>(dim, 0.0));
  }

  std::size_t dim() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

// Element-wise addition of an image embedding and a text embedding.
inline EmbeddingVector fuse_embeddings(const EmbeddingVector& ie, const EmbeddingVector& te) {
  if (ie.dim() != te.dim()) {
    throw ContractError("fuse_embeddings: dimension mismatch (" + std::to_string(ie.dim()) +
                        " vs " + std::to_string(te.dim()) + ")");
  }
  std::vector<double> out(ie.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = ie[i] + te[i];
  return EmbeddingVector(std::move(out));
}

inline std::vector<EmbeddingVector> fuse_sequences(std::span<const EmbeddingVector> ie,
                                                   std::span<const EmbeddingVector> te) {
  if (ie.size() != te.size()) {
    throw ContractError("fuse_sequences: length mismatch (" + std::to_string(ie.size()) +
                        " vs " + std::to_string(te.size()) + ")");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(ie.size());
  for (std::size_t k = 0; k < ie.size(); ++k) out.push_back(fuse_embeddings(ie[k], te[k]));
  return out;
}

// The visual input for one token: its region on the page.
struct ImageSegment {
  BBox region;
  int page_width = 1;
  int page_height = 1;
};

// Maps one input segment to a fixed-width embedding. Implementations must
// return the same dim() on every call and be safe to call concurrently.
template <typename Segment>
class Encoder {
 public:
  virtual ~Encoder() = default;
  virtual std::size_t dim() const = 0;
  virtual EmbeddingVector encode(const Segment& segment) const = 0;
};

using ImageEncoder = Encoder<ImageSegment>;
using TextEncoder = Encoder<std::string>;

// Per-token combined embeddings for a whole document, in token order.
inline std::vector<EmbeddingVector> combined_embeddings(const Document& doc,
                                                        const ImageEncoder& image_encoder,
                                                        const TextEncoder& text_encoder) {
  if (image_encoder.dim() != text_encoder.dim()) {
    throw ContractError("combined_embeddings: encoder dims differ (" +
                        std::to_string(image_encoder.dim()) + " vs " +
                        std::to_string(text_encoder.dim()) + ")");
  }
  std::vector<EmbeddingVector> image, text;
  image.reserve(doc.tokens.size());
  text.reserve(doc.tokens.size());
  for (const Token& t : doc.tokens) {
    image.push_back(image_encoder.encode({t.bbox, doc.page_width, doc.page_height}));
    text.push_back(text_encoder.encode(t.text));
  }
  return fuse_sequences(image, text);
}

// ----------------------------------------------------------------------------
// Taggers
// ----------------------------------------------------------------------------

// Assigns entity labels. Implementations may only change label, source and
// confidence; ids, texts and boxes must come back untouched. Must be
// reentrant.
class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual Document tag(const Document& doc) const = 0;
};

struct TagRuleConfig {
  double price_band_min = 0.65;    // x-center fraction of page width
  double quantity_band_min = 0.45;
  double quantity_band_max = 0.70;
  std::int64_t max_qty = 99;
  std::size_t min_code_len = 5;
  GroupingConfig line_config;      // used to find product lines
  NumericParseConfig numeric;
};

// Deterministic rule table standing in for a learned tagger. Deliberately
// simple: it produces imperfect labels that the corrections can improve on.
//
//   decimal number, x-center in price band         -> Price
//   integer <= max_qty, x-center in quantity band  -> Quantity
//   digit string of length >= min_code_len         -> Code
//   mostly-alphabetic word on a product line       -> Description
//
// A product line is a detected text line holding at least one number.
class HeuristicTagger : public Tagger {
 public:
  explicit HeuristicTagger(TagRuleConfig config = {}) : config_(std::move(config)) {}

  Document tag(const Document& doc) const override {
    Document out = doc;
    for (Token& t : out.tokens) t.clear_label();

    std::vector<bool> on_product_line(doc.tokens.size(), false);
    for (const Line& line : detect_lines_geometric(doc, config_.line_config)) {
      const bool numeric = std::any_of(line.token_ids.begin(), line.token_ids.end(),
                                       [&](TokenId id) { return is_number(doc.token(id).text); });
      if (!numeric) continue;
      for (TokenId id : line.token_ids) on_product_line[id] = true;
    }

    for (Token& t : out.tokens) {
      const double xc = t.bbox.x_center();
      if (parse_float(t.text, config_.numeric) && xc >= config_.price_band_min) {
        t.set_label(EntityLabel::Price, LabelSource::Heuristic);
      } else if (const auto n = parse_integer(t.text, config_.numeric);
                 n && *n <= config_.max_qty && xc >= config_.quantity_band_min &&
                 xc <= config_.quantity_band_max) {
        t.set_label(EntityLabel::Quantity, LabelSource::Heuristic);
      } else if (is_code_like(t.text)) {
        t.set_label(EntityLabel::Code, LabelSource::Heuristic);
      } else if (on_product_line[t.id] && alphabetic_majority(t.text)) {
        t.set_label(EntityLabel::Description, LabelSource::Heuristic);
      }
    }
    return out;
  }

  const TagRuleConfig& config() const { return config_; }

 private:
  bool is_number(std::string_view text) const {
    return parse_integer(text, config_.numeric) || parse_float(text, config_.numeric);
  }

  bool is_code_like(std::string_view text) const {
    const std::string_view core = detail::strip_affixes(text, config_.numeric);
    return detail::all_digits(core) && core.size() >= config_.min_code_len;
  }

  static bool alphabetic_majority(std::string_view text) {
    std::size_t letters = 0, total = 0;
    for (std::size_t pos = 0; pos < text.size();) {
      const auto cp = unicode::decode_at(text, pos);
      letters += unicode::is_alphabetic(cp.value) ? 1 : 0;
      ++total;
      pos = cp.end;
    }
    return 2 * letters > total;
  }

  TagRuleConfig config_;
};

// One externally predicted label.
struct PredictedLabel {
  TokenId token_id = 0;
  EntityLabel label = EntityLabel::Untagged;
  std::optional<double> confidence;
  friend bool operator==(const PredictedLabel&, const PredictedLabel&) = default;
};

struct PredictionFile {
  std::string doc_id;
  std::vector<PredictedLabel> labels;
};

// {"doc_id": str, "labels": [{"token_id": int, "label": "...", "confidence": float?}]}
inline PredictionFile parse_predictions(std::string_view bytes) {
  using namespace detail;
  const json root = parse_json_bytes(bytes, "prediction file");
  PredictionFile out;
  out.doc_id = as_string(field(root, "doc_id", "prediction file"), "doc_id");
  const json& labels = as_array(field(root, "labels", "prediction file"), "labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const json& rec = labels[i];
    const std::string ctx = "label " + std::to_string(i);
    PredictedLabel p;
    p.token_id = as_token_id(field(rec, "token_id", ctx, i), ctx + ".token_id", i);
    const std::string name = as_string(field(rec, "label", ctx, i), ctx + ".label", i);
    const auto label = parse_entity_label(name);
    if (!label || *label == EntityLabel::Untagged) {
      throw SchemaError(ctx + ": unknown label '" + name + "'", i);
    }
    p.label = *label;
    if (const json* c = optional_field(rec, "confidence")) {
      const double conf = as_number(*c, ctx + ".confidence", i);
      if (conf < 0.0 || conf > 1.0) throw SchemaError(ctx + ": confidence outside [0,1]", i);
      p.confidence = conf;
    }
    out.labels.push_back(p);
  }
  return out;
}

inline std::string serialize_predictions(const PredictionFile& file) {
  ordered_json root;
  root["doc_id"] = file.doc_id;
  ordered_json labels = ordered_json::array();
  for (const PredictedLabel& p : file.labels) {
    ordered_json rec;
    rec["token_id"] = p.token_id;
    rec["label"] = std::string(to_string(p.label));
    if (p.confidence) rec["confidence"] = *p.confidence;
    labels.push_back(std::move(rec));
  }
  root["labels"] = std::move(labels);
  return root.dump(2) + "\n";
}

// Model-sourced labels of a document, in token order.
inline PredictionFile predictions_from(const Document& doc) {
  PredictionFile out{doc.doc_id, {}};
  for (const Token& t : doc.tokens) {
    if (t.tagged()) out.labels.push_back({t.id, t.label, t.confidence});
  }
  return out;
}

// Applies predicted labels with source Model; every other token ends up
// Untagged. Conflicting duplicate labels for one token are rejected.
inline Document import_predictions(const Document& doc, const PredictionFile& predictions) {
  if (predictions.doc_id != doc.doc_id) {
    throw ReferenceError("prediction doc_id '" + predictions.doc_id +
                         "' does not match document '" + doc.doc_id + "'");
  }
  Document out = doc;
  for (Token& t : out.tokens) t.clear_label();
  std::map<TokenId, EntityLabel> assigned;
  for (const PredictedLabel& p : predictions.labels) {
    if (p.token_id >= doc.tokens.size()) {
      throw ReferenceError("prediction references unknown token id " + std::to_string(p.token_id) +
                           " in document '" + doc.doc_id + "'");
    }
    const auto [it, inserted] = assigned.emplace(p.token_id, p.label);
    if (!inserted && it->second != p.label) {
      throw ReferenceError("conflicting labels for token id " + std::to_string(p.token_id) +
                           ": '" + std::string(to_string(it->second)) + "' and '" +
                           std::string(to_string(p.label)) + "'");
    }
    Token& t = out.token(p.token_id);
    t.set_label(p.label, LabelSource::Model);
    if (p.confidence) t.confidence = p.confidence;
  }
  return out;
}

inline Document import_predictions(const Document& doc, std::string_view bytes) {
  return import_predictions(doc, parse_predictions(bytes));
}

// Replays a fixed set of predictions. Documents without an entry come back
// fully Untagged.
class ImportedTagger : public Tagger {
 public:
  explicit ImportedTagger(std::map<std::string, PredictionFile> by_doc)
      : by_doc_(std::move(by_doc)) {}

  Document tag(const Document& doc) const override {
    const auto it = by_doc_.find(doc.doc_id);
    if (it == by_doc_.end()) return import_predictions(doc, PredictionFile{doc.doc_id, {}});
    return import_predictions(doc, it->second);
  }

  bool has(const std::string& doc_id) const { return by_doc_.contains(doc_id); }

 private:
  std::map<std::string, PredictionFile> by_doc_;
};

}  // namespace receipt_kie
