#pragma once

// Rule-based corrections for missed product codes, quantities and prices.
//
// Each rule only fills an entity the tagger did not find for a group. It
// looks at the group's untagged words and never touches an existing label:
//   code     = max(integer(pool)), only if it is > min(integer(pool))
//   quantity = min(integer(pool)), only if it is < max(integer(pool))
//   price    = max(float(pool))
// Ties pick the topmost, then leftmost word.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "document.hpp"
#include "layout.hpp"
#include "numeric.hpp"

namespace receipt_kie {

struct PoolEntry {
  TokenId token_id;
  std::string text;
};

// The untagged words of a group, in group reading order.
struct UntaggedWordPool {
  std::vector<PoolEntry> entries;

  static UntaggedWordPool of(const ProductGroup& group, const Document& doc) {
    UntaggedWordPool pool;
    for (TokenId id : group.token_ids) {
      const Token& t = doc.token(id);
      if (!t.tagged()) pool.entries.push_back({id, t.text});
    }
    return pool;
  }

  std::vector<std::int64_t> integers(const NumericParseConfig& cfg) const {
    std::vector<std::int64_t> out;
    for (const PoolEntry& e : entries) {
      if (auto v = parse_integer(e.text, cfg)) out.push_back(*v);
    }
    return out;
  }
};

struct CorrectionRecord {
  std::size_t group_id = 0;
  EntityLabel entity = EntityLabel::Code;
  TokenId token_id = 0;
  std::variant<std::int64_t, double> parsed_value;

  friend bool operator==(const CorrectionRecord&, const CorrectionRecord&) = default;
};

namespace detail {

inline bool group_has(const ProductGroup& group, const Document& doc, EntityLabel label) {
  return std::any_of(group.token_ids.begin(), group.token_ids.end(),
                     [&](TokenId id) { return doc.token(id).label == label; });
}

enum class Extreme { Max, Min };

// First pool entry whose integer value is the extreme one.
inline std::optional<std::pair<TokenId, std::int64_t>> pick_integer(
    const UntaggedWordPool& pool, Extreme which, const NumericParseConfig& cfg) {
  std::optional<std::pair<TokenId, std::int64_t>> best;
  for (const PoolEntry& e : pool.entries) {
    const auto v = parse_integer(e.text, cfg);
    if (!v) continue;
    const bool better = !best || (which == Extreme::Max ? *v > best->second : *v < best->second);
    if (better) best = {e.token_id, *v};
  }
  return best;
}

// `pool` supplies the candidate; `guard_set` is the integer set the strict
// inequality is checked against.
inline std::optional<CorrectionRecord> code_rule(const ProductGroup& group,
                                                 const UntaggedWordPool& pool,
                                                 const std::vector<std::int64_t>& guard_set,
                                                 const NumericParseConfig& cfg) {
  const auto best = pick_integer(pool, Extreme::Max, cfg);
  if (!best || guard_set.empty()) return std::nullopt;
  if (!(best->second > *std::min_element(guard_set.begin(), guard_set.end()))) return std::nullopt;
  return CorrectionRecord{group.group_id, EntityLabel::Code, best->first, best->second};
}

inline std::optional<CorrectionRecord> quantity_rule(const ProductGroup& group,
                                                     const UntaggedWordPool& pool,
                                                     const std::vector<std::int64_t>& guard_set,
                                                     const NumericParseConfig& cfg) {
  const auto best = pick_integer(pool, Extreme::Min, cfg);
  if (!best || guard_set.empty()) return std::nullopt;
  if (!(best->second < *std::max_element(guard_set.begin(), guard_set.end()))) return std::nullopt;
  return CorrectionRecord{group.group_id, EntityLabel::Quantity, best->first, best->second};
}

inline std::optional<CorrectionRecord> price_rule(const ProductGroup& group,
                                                  const UntaggedWordPool& pool,
                                                  const NumericParseConfig& cfg) {
  std::optional<std::pair<TokenId, double>> best;
  for (const PoolEntry& e : pool.entries) {
    const auto v = parse_float(e.text, cfg);
    if (v && (!best || *v > best->second)) best = {e.token_id, *v};
  }
  if (!best) return std::nullopt;
  return CorrectionRecord{group.group_id, EntityLabel::Price, best->first, best->second};
}

}  // namespace detail

inline std::optional<CorrectionRecord> correct_code(const ProductGroup& group, const Document& doc,
                                                    const NumericParseConfig& cfg = {}) {
  if (detail::group_has(group, doc, EntityLabel::Code)) return std::nullopt;
  const auto pool = UntaggedWordPool::of(group, doc);
  return detail::code_rule(group, pool, pool.integers(cfg), cfg);
}

inline std::optional<CorrectionRecord> correct_quantity(const ProductGroup& group,
                                                        const Document& doc,
                                                        const NumericParseConfig& cfg = {}) {
  if (detail::group_has(group, doc, EntityLabel::Quantity)) return std::nullopt;
  const auto pool = UntaggedWordPool::of(group, doc);
  return detail::quantity_rule(group, pool, pool.integers(cfg), cfg);
}

inline std::optional<CorrectionRecord> correct_price(const ProductGroup& group,
                                                     const Document& doc,
                                                     const NumericParseConfig& cfg = {}) {
  if (detail::group_has(group, doc, EntityLabel::Price)) return std::nullopt;
  return detail::price_rule(group, UntaggedWordPool::of(group, doc), cfg);
}

struct CorrectionResult {
  Document doc;
  std::vector<CorrectionRecord> records;
};

// Runs code, then quantity, then price on every group. A corrected word
// leaves the pool before the next rule picks a candidate. The guards always
// compare against the integers of the words the tagger left untagged, i.e.
// the group's pool before any correction.
inline CorrectionResult apply_corrections(const Document& doc,
                                          const std::vector<ProductGroup>& groups,
                                          const NumericParseConfig& cfg = {}) {
  cfg.validate();
  CorrectionResult result{doc, {}};
  Document& out = result.doc;
  auto commit = [&](const std::optional<CorrectionRecord>& rec) {
    if (!rec) return;
    Token& t = out.token(rec->token_id);
    t.set_label(rec->entity, LabelSource::Correction);
    result.records.push_back(*rec);
  };
  for (const ProductGroup& group : groups) {
    const std::vector<std::int64_t> guard_set = UntaggedWordPool::of(group, out).integers(cfg);
    if (!detail::group_has(group, out, EntityLabel::Code)) {
      commit(detail::code_rule(group, UntaggedWordPool::of(group, out), guard_set, cfg));
    }
    if (!detail::group_has(group, out, EntityLabel::Quantity)) {
      commit(detail::quantity_rule(group, UntaggedWordPool::of(group, out), guard_set, cfg));
    }
    if (!detail::group_has(group, out, EntityLabel::Price)) {
      commit(detail::price_rule(group, UntaggedWordPool::of(group, out), cfg));
    }
  }
  return result;
}

}  // namespace receipt_kie
