#pragma once

// tag -> detect lines -> group -> correct, for one document.

#include <vector>

#include "corrections.hpp"
#include "layout.hpp"
#include "result.hpp"
#include "tagging.hpp"

namespace receipt_kie {

struct PipelineOptions {
  bool corrections_enabled = true;
  GroupingConfig grouping;
  NumericParseConfig numeric;
};

struct PipelineOutput {
  DecodeResult result;
  std::vector<CorrectionRecord> corrections;
};

// Runs layout and corrections on an already tagged document. Grouping always
// sees the tagger's labels; corrections never regroup.
inline PipelineOutput decode_tagged(const Document& tagged, const LineDetector& detector,
                                    const PipelineOptions& options = {}) {
  PipelineOutput out;
  out.result.lines = detector.detect(tagged);
  out.result.groups = group_product_lines(tagged, out.result.lines);
  if (options.corrections_enabled) {
    CorrectionResult corrected = apply_corrections(tagged, out.result.groups, options.numeric);
    out.result.doc = std::move(corrected.doc);
    out.corrections = std::move(corrected.records);
  } else {
    out.result.doc = tagged;
  }
  return out;
}

inline PipelineOutput decode_tagged(const Document& tagged, const PipelineOptions& options = {}) {
  return decode_tagged(tagged, GeometricLineDetector(options.grouping), options);
}

inline PipelineOutput decode(const Document& doc, const Tagger& tagger,
                             const PipelineOptions& options = {}) {
  return decode_tagged(tagger.tag(doc), options);
}

}  // namespace receipt_kie
