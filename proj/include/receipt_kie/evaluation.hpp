#pragma once

// Scoring against ground truth: per-entity precision/recall/f1, the
// whole-products metric, and strict OCR matching. Counts are micro-averaged
// over the corpus.

#include <array>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "document.hpp"
#include "ingest.hpp"
#include "layout.hpp"
#include "result.hpp"
#include "unicode.hpp"

namespace receipt_kie {

enum class MatchMode { TagOnly, StrictOcr };

inline std::string_view to_string(MatchMode m) { return m == MatchMode::TagOnly ? "tag" : "strict"; }

struct TruthEntity {
  TokenId token_id = 0;
  EntityLabel label = EntityLabel::Untagged;
  std::string text;  // true transcription, NFC
};

// TagOnly: same token and label. StrictOcr: additionally the OCR text must
// equal the true transcription after NFC normalization.
inline bool match_entity(const Token& predicted, const TruthEntity& truth, MatchMode mode) {
  if (predicted.id != truth.token_id || predicted.label != truth.label) return false;
  if (mode == MatchMode::TagOnly) return true;
  return unicode::nfc(predicted.text) == unicode::nfc(truth.text);
}

inline std::vector<TruthEntity> truth_entities(const GroundTruthProduct& p) {
  std::vector<TruthEntity> out;
  for (std::size_t i = 0; i < p.description_token_ids.size(); ++i) {
    out.push_back({p.description_token_ids[i], EntityLabel::Description,
                   i < p.description_values.size() ? p.description_values[i] : std::string{}});
  }
  for (EntityLabel label : {EntityLabel::Code, EntityLabel::Quantity, EntityLabel::Price}) {
    if (const auto id = p.token_for(label)) {
      out.push_back({*id, label, p.value_for(label).value_or(std::string{})});
    }
  }
  return out;
}

struct Counts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  double precision() const { return tp + fp == 0 ? 0.0 : double(tp) / double(tp + fp); }
  double recall() const { return tp + fn == 0 ? 0.0 : double(tp) / double(tp + fn); }
  double f1() const {
    const double p = precision(), r = recall();
    return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
  }

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

inline std::size_t entity_index(EntityLabel label) {
  switch (label) {
    case EntityLabel::Description: return 0;
    case EntityLabel::Code: return 1;
    case EntityLabel::Quantity: return 2;
    case EntityLabel::Price: return 3;
    case EntityLabel::Untagged: break;
  }
  throw ContractError("entity_index: Untagged has no score slot");
}

struct EntityCounts {
  std::array<Counts, 4> by_label{};

  Counts& operator[](EntityLabel label) { return by_label[entity_index(label)]; }
  const Counts& operator[](EntityLabel label) const { return by_label[entity_index(label)]; }

  EntityCounts& operator+=(const EntityCounts& o) {
    for (std::size_t i = 0; i < by_label.size(); ++i) by_label[i] += o.by_label[i];
    return *this;
  }
  friend bool operator==(const EntityCounts&, const EntityCounts&) = default;
};

// Per label: a truth entity is a TP when the predicted document carries the
// same label on that token (and, in strict mode, the right text).
inline EntityCounts score_entities(const Document& predicted, const GroundTruth& truth,
                                   MatchMode mode) {
  if (predicted.doc_id != truth.doc_id) {
    throw ReferenceError("score_entities: document '" + predicted.doc_id +
                         "' scored against truth for '" + truth.doc_id + "'");
  }
  EntityCounts counts;
  std::array<std::size_t, 4> predicted_total{};
  for (const Token& t : predicted.tokens) {
    if (t.tagged()) ++predicted_total[entity_index(t.label)];
  }
  for (const GroundTruthProduct& p : truth.products) {
    for (const TruthEntity& e : truth_entities(p)) {
      if (e.token_id >= predicted.tokens.size()) {
        throw ReferenceError("truth references unknown token id " + std::to_string(e.token_id) +
                             " in document '" + truth.doc_id + "'");
      }
      Counts& c = counts[e.label];
      if (match_entity(predicted.token(e.token_id), e, mode)) {
        ++c.tp;
      } else {
        ++c.fn;
      }
    }
  }
  for (EntityLabel label : kEntityLabels) {
    counts[label].fp = predicted_total[entity_index(label)] - counts[label].tp;
  }
  return counts;
}

namespace detail {

inline bool product_perfect(const EntityAssignment& a, const GroundTruthProduct& p,
                            const Document& doc, MatchMode mode) {
  const std::set<TokenId> predicted(a.description.begin(), a.description.end());
  const std::set<TokenId> expected(p.description_token_ids.begin(), p.description_token_ids.end());
  if (predicted != expected) return false;
  for (const TruthEntity& e : truth_entities(p)) {
    if (e.label == EntityLabel::Description) {
      if (!match_entity(doc.token(e.token_id), e, mode)) return false;
      continue;
    }
    const auto id = a.get(e.label);
    if (!id || !match_entity(doc.token(*id), e, mode)) return false;
  }
  for (EntityLabel label : {EntityLabel::Code, EntityLabel::Quantity, EntityLabel::Price}) {
    if (a.get(label) && !p.token_for(label)) return false;  // spurious extra entity
  }
  return true;
}

}  // namespace detail

// A group is a TP when it maps to exactly one truth product (strict majority
// of its description tokens, unique best overlap), wins that product against
// other groups (larger overlap, then smaller group_id), and has every field
// right. Other groups are FPs; truth products without a TP are FNs.
inline Counts score_whole_products(const Document& doc, const std::vector<ProductGroup>& groups,
                                   const GroundTruth& truth, MatchMode mode) {
  struct Mapping {
    std::size_t product;
    std::size_t overlap;
    std::size_t group_id;
    std::size_t group_pos;
  };
  std::vector<std::optional<Mapping>> winner(truth.products.size());
  std::vector<EntityAssignment> assignments;
  assignments.reserve(groups.size());
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    assignments.push_back(assign_entities(groups[gi], doc));
    const EntityAssignment& a = assignments.back();
    const std::set<TokenId> desc(a.description.begin(), a.description.end());
    std::optional<std::size_t> best;
    std::size_t best_overlap = 0;
    bool tie = false;
    for (std::size_t pi = 0; pi < truth.products.size(); ++pi) {
      std::size_t overlap = 0;
      for (TokenId id : truth.products[pi].description_token_ids) overlap += desc.count(id);
      if (overlap > best_overlap) {
        best = pi;
        best_overlap = overlap;
        tie = false;
      } else if (overlap == best_overlap && overlap > 0) {
        tie = true;
      }
    }
    if (!best || tie || 2 * best_overlap <= desc.size()) continue;
    const Mapping m{*best, best_overlap, groups[gi].group_id, gi};
    auto& w = winner[*best];
    if (!w || m.overlap > w->overlap || (m.overlap == w->overlap && m.group_id < w->group_id)) {
      w = m;
    }
  }
  Counts c;
  for (std::size_t pi = 0; pi < truth.products.size(); ++pi) {
    if (winner[pi] &&
        detail::product_perfect(assignments[winner[pi]->group_pos], truth.products[pi], doc, mode)) {
      ++c.tp;
    }
  }
  c.fp = groups.size() - c.tp;
  c.fn = truth.products.size() - c.tp;
  return c;
}

struct EvalReport {
  EntityCounts entities;
  Counts whole_products;
  std::size_t corpus_size = 0;
  MatchMode mode = MatchMode::TagOnly;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Micro-averaged report. Every prediction must have truth and vice versa.
inline EvalReport build_report(std::span<const DecodeResult> predictions,
                               std::span<const GroundTruth> truth, MatchMode mode) {
  std::map<std::string, const GroundTruth*> by_id;
  for (const GroundTruth& t : truth) {
    if (!by_id.emplace(t.doc_id, &t).second) {
      throw ReferenceError("duplicate ground truth for document '" + t.doc_id + "'");
    }
  }
  EvalReport report;
  report.mode = mode;
  std::set<std::string> seen;
  for (const DecodeResult& r : predictions) {
    const auto it = by_id.find(r.doc.doc_id);
    if (it == by_id.end()) {
      throw ReferenceError("no ground truth for document '" + r.doc.doc_id + "'");
    }
    if (!seen.insert(r.doc.doc_id).second) {
      throw ReferenceError("duplicate prediction for document '" + r.doc.doc_id + "'");
    }
    report.entities += score_entities(r.doc, *it->second, mode);
    report.whole_products += score_whole_products(r.doc, r.groups, *it->second, mode);
    ++report.corpus_size;
  }
  for (const auto& [id, t] : by_id) {
    if (!seen.contains(id)) throw ReferenceError("no prediction for document '" + id + "'");
  }
  return report;
}

inline constexpr std::array<std::pair<EntityLabel, std::string_view>, 4> kReportColumns{{
    {EntityLabel::Description, "descriptions"},
    {EntityLabel::Code, "codes"},
    {EntityLabel::Quantity, "quantities"},
    {EntityLabel::Price, "prices"},
}};

inline ordered_json counts_to_json(const Counts& c) {
  ordered_json j;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["precision"] = c.precision();
  j["recall"] = c.recall();
  j["f1"] = c.f1();
  return j;
}

inline ordered_json report_to_json(const EvalReport& r) {
  ordered_json j;
  j["mode"] = std::string(to_string(r.mode));
  j["corpus_size"] = r.corpus_size;
  for (const auto& [label, name] : kReportColumns) j[std::string(name)] = counts_to_json(r.entities[label]);
  j["whole_products"] = counts_to_json(r.whole_products);
  return j;
}

// f1 scores in percent, one row per (label, report).
inline std::string format_report_table(
    const std::vector<std::pair<std::string, EvalReport>>& rows) {
  std::size_t label_width = 6;
  for (const auto& [label, _] : rows) label_width = std::max(label_width, label.size());
  const std::array<std::string_view, 5> headers{"Descriptions", "Codes", "Quantities", "Prices",
                                                "Whole products"};
  std::string out = std::string(label_width, ' ');
  for (std::string_view h : headers) {
    out += "  ";
    out += h;
  }
  out += '\n';
  char buf[64];
  for (const auto& [label, report] : rows) {
    out += label;
    out += std::string(label_width - label.size(), ' ');
    for (std::size_t i = 0; i < headers.size(); ++i) {
      const double f1 = i < 4 ? report.entities.by_label[i].f1() : report.whole_products.f1();
      std::snprintf(buf, sizeof buf, "  %*.1f", static_cast<int>(headers[i].size()), 100.0 * f1);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace receipt_kie
