#pragma once

// Text-line detection and product line grouping.

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "document.hpp"

namespace receipt_kie {

struct GroupingConfig {
  double y_overlap_threshold = 0.4;  // in (0, 1]

  void validate() const {
    if (!(y_overlap_threshold > 0.0 && y_overlap_threshold <= 1.0)) {
      throw ContractError("GroupingConfig: y_overlap_threshold must be in (0,1]");
    }
  }
};

// Intersection height over the smaller box height. Zero-height boxes count
// as fully overlapping anything whose vertical extent touches them.
inline double vertical_overlap_ratio(const BBox& a, const BBox& b) {
  const double inter = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (inter < 0.0) return 0.0;
  const double min_h = std::min(a.height(), b.height());
  if (min_h <= 0.0) return 1.0;
  return std::min(1.0, inter / min_h);
}

class LineDetector {
 public:
  virtual ~LineDetector() = default;
  // Every token lands in exactly one line; lines come back top to bottom and
  // left to right inside a line.
  virtual std::vector<Line> detect(const Document& doc) const = 0;
};

namespace detail {

// Orders raw token clusters into Lines: by mean y-center, then by the
// leftmost member, then by smallest id.
inline std::vector<Line> finalize_lines(const Document& doc,
                                        std::vector<std::vector<TokenId>> clusters) {
  struct Keyed {
    double mean_y;
    double min_x;
    TokenId min_id;
    std::vector<TokenId> ids;
  };
  std::vector<Keyed> keyed;
  keyed.reserve(clusters.size());
  for (auto& ids : clusters) {
    std::sort(ids.begin(), ids.end(), [&](TokenId a, TokenId b) {
      const double xa = doc.token(a).bbox.x_min, xb = doc.token(b).bbox.x_min;
      return xa != xb ? xa < xb : a < b;
    });
    double sum = 0.0;
    for (TokenId id : ids) sum += doc.token(id).bbox.y_center();
    keyed.push_back({sum / static_cast<double>(ids.size()), doc.token(ids.front()).bbox.x_min,
                     *std::min_element(ids.begin(), ids.end()), std::move(ids)});
  }
  std::sort(keyed.begin(), keyed.end(), [](const Keyed& a, const Keyed& b) {
    if (a.mean_y != b.mean_y) return a.mean_y < b.mean_y;
    if (a.min_x != b.min_x) return a.min_x < b.min_x;
    return a.min_id < b.min_id;
  });
  std::vector<Line> lines;
  lines.reserve(keyed.size());
  for (std::size_t i = 0; i < keyed.size(); ++i) lines.push_back({i, std::move(keyed[i].ids)});
  return lines;
}

}  // namespace detail

// Single-linkage clustering: two tokens share a line when their vertical
// overlap ratio reaches the threshold, transitively.
inline std::vector<Line> detect_lines_geometric(const Document& doc,
                                                const GroupingConfig& config = {}) {
  config.validate();
  const std::size_t n = doc.tokens.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (vertical_overlap_ratio(doc.tokens[i].bbox, doc.tokens[j].bbox) >=
          config.y_overlap_threshold) {
        const std::size_t ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
    }
  }
  std::vector<std::vector<TokenId>> clusters;
  std::vector<std::size_t> slot(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find(i);
    if (slot[r] == n) {
      slot[r] = clusters.size();
      clusters.emplace_back();
    }
    clusters[slot[r]].push_back(doc.tokens[i].id);
  }
  return detail::finalize_lines(doc, std::move(clusters));
}

class GeometricLineDetector : public LineDetector {
 public:
  explicit GeometricLineDetector(GroupingConfig config = {}) : config_(config) {
    config_.validate();
  }
  std::vector<Line> detect(const Document& doc) const override {
    return detect_lines_geometric(doc, config_);
  }

 private:
  GroupingConfig config_;
};

// Which entity labels a line carries.
struct LineProfile {
  bool description = false;
  bool code = false;
  bool quantity = false;
  bool price = false;

  bool other() const { return code || quantity || price; }

  static LineProfile of(const Document& doc, const Line& line) {
    LineProfile p;
    for (TokenId id : line.token_ids) {
      switch (doc.token(id).label) {
        case EntityLabel::Description: p.description = true; break;
        case EntityLabel::Code: p.code = true; break;
        case EntityLabel::Quantity: p.quantity = true; break;
        case EntityLabel::Price: p.price = true; break;
        case EntityLabel::Untagged: break;
      }
    }
    return p;
  }
};

inline ProductGroup make_group(const Document& doc, const std::vector<Line>& lines,
                               std::size_t group_id, std::size_t first, std::size_t last,
                               bool incomplete) {
  ProductGroup g;
  g.group_id = group_id;
  g.incomplete = incomplete;
  std::vector<BBox> boxes;
  for (std::size_t i = first; i <= last; ++i) {
    g.line_indices.push_back(lines[i].index);
    for (TokenId id : lines[i].token_ids) {
      g.token_ids.push_back(id);
      boxes.push_back(doc.token(id).bbox);
    }
  }
  g.bbox = union_bbox(boxes);
  return g;
}

// Groups sorted lines into products:
//  1. skip lines until one carries a Description;
//  2. if that line also has a Quantity and a Price it is a product on its
//     own, otherwise start accumulating;
//  3. following lines accumulate until one carries a non-Description entity,
//     which closes the group (and belongs to it). Lines with no entity at all
//     are absorbed while a group is open.
// A group still open at the end of the document is emitted as incomplete.
inline std::vector<ProductGroup> group_product_lines(const Document& doc,
                                                     const std::vector<Line>& lines) {
  constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  std::vector<ProductGroup> groups;
  std::size_t open = kNone;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const LineProfile p = LineProfile::of(doc, lines[i]);
    if (open == kNone) {
      if (!p.description) continue;
      if (p.quantity && p.price) {
        groups.push_back(make_group(doc, lines, groups.size(), i, i, false));
      } else {
        open = i;
      }
      continue;
    }
    if (p.other()) {
      groups.push_back(make_group(doc, lines, groups.size(), open, i, false));
      open = kNone;
    }
  }
  if (open != kNone) groups.push_back(make_group(doc, lines, groups.size(), open, lines.size() - 1, true));
  return groups;
}

// The entities linked to one product.
struct EntityAssignment {
  std::size_t group_id = 0;
  std::vector<TokenId> description;
  std::optional<TokenId> code;
  std::optional<TokenId> quantity;
  std::optional<TokenId> price;

  std::optional<TokenId> get(EntityLabel label) const {
    switch (label) {
      case EntityLabel::Code: return code;
      case EntityLabel::Quantity: return quantity;
      case EntityLabel::Price: return price;
      default: return std::nullopt;
    }
  }

  friend bool operator==(const EntityAssignment&, const EntityAssignment&) = default;
};

// All descriptions, plus the first (topmost, then leftmost) token of each
// other label.
inline EntityAssignment assign_entities(const ProductGroup& group, const Document& doc) {
  EntityAssignment a;
  a.group_id = group.group_id;
  for (TokenId id : group.token_ids) {
    switch (doc.token(id).label) {
      case EntityLabel::Description: a.description.push_back(id); break;
      case EntityLabel::Code: if (!a.code) a.code = id; break;
      case EntityLabel::Quantity: if (!a.quantity) a.quantity = id; break;
      case EntityLabel::Price: if (!a.price) a.price = id; break;
      case EntityLabel::Untagged: break;
    }
  }
  return a;
}

}  // namespace receipt_kie
