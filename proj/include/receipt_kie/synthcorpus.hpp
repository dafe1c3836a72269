#pragma once

// Seeded synthetic receipts with ground truth, plus controlled corruption of
// truth-as-predictions.
//
// Every generated product obeys the business rules the corrections rely on:
// the code (when printed) is the largest integer of its group, the quantity
// the smallest, and the total price the largest decimal number. A small
// fraction of "adversarial" products breaks the price rule with an unrelated,
// larger decimal number.

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "document.hpp"
#include "ingest.hpp"

namespace receipt_kie {

struct CorpusSpec {
  std::uint64_t seed = 1;
  std::size_t n_docs = 200;
  std::size_t min_products = 3;
  std::size_t max_products = 8;
  double multiline_description_prob = 0.3;
  double code_presence_prob = 0.7;
  double adversarial_rate = 0.05;

  void validate() const {
    auto prob = [](double p, const char* name) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ContractError(std::string("CorpusSpec: ") + name + " must be in [0,1]");
      }
    };
    if (n_docs == 0) throw ContractError("CorpusSpec: n_docs must be positive");
    if (min_products == 0 || min_products > max_products) {
      throw ContractError("CorpusSpec: products_per_doc range must be non-empty and positive");
    }
    prob(multiline_description_prob, "multiline_description_prob");
    prob(code_presence_prob, "code_presence_prob");
    prob(adversarial_rate, "adversarial_rate");
  }
};

struct CorruptionSpec {
  double fn_description = 0.0;
  double fn_code = 0.3;
  double fn_quantity = 0.3;
  double fn_price = 0.3;
  double ocr_noise_rate = 0.0;

  double false_negative_rate(EntityLabel label) const {
    switch (label) {
      case EntityLabel::Description: return fn_description;
      case EntityLabel::Code: return fn_code;
      case EntityLabel::Quantity: return fn_quantity;
      case EntityLabel::Price: return fn_price;
      case EntityLabel::Untagged: break;
    }
    return 0.0;
  }

  void validate() const {
    for (double p : {fn_description, fn_code, fn_quantity, fn_price, ocr_noise_rate}) {
      if (!(p >= 0.0 && p <= 1.0)) throw ContractError("CorruptionSpec: rates must be in [0,1]");
    }
  }
};

struct SyntheticDocument {
  OcrPage page;        // clean OCR words
  Document doc;        // same words, labeled with source GroundTruth
  GroundTruth truth;
};

// Portable draws on top of mt19937_64; the standard distributions are not
// specified bit-exactly across standard libraries.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform01() < p; }

  // Uniform integer in [lo, hi].
  std::uint64_t range(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return engine_();
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do x = engine_();
    while (x >= limit);
    return lo + x % span;
  }

  template <typename T, std::size_t N>
  const T& pick(const std::array<T, N>& items) {
    return items[range(0, N - 1)];
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view salt) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : salt) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::uint64_t z = seed ^ h;  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace synth_detail {

inline constexpr int kPageWidth = 1000;
inline constexpr int kLinePitch = 40;
inline constexpr int kTokenHeight = 26;
inline constexpr int kCharWidth = 12;
inline constexpr int kTopMargin = 30;

inline constexpr std::array<std::string_view, 48> kProductWords{
    "SHAMPOO", "HERBAL",  "MILK",    "WHOLE",  "BREAD",   "RYE",     "BUTTER",  "SALTED",
    "APPLES",  "GALA",    "COFFEE",  "ROAST",  "DARK",    "TEA",     "GREEN",   "RICE",
    "BASMATI", "PASTA",   "PENNE",   "TOMATO", "SAUCE",   "CHEESE",  "CHEDDAR", "YOGURT",
    "GREEK",   "EGGS",    "FREE",    "RANGE",  "OLIVE",   "OIL",     "EXTRA",   "VIRGIN",
    "SOAP",    "LIQUID",  "LEMON",   "ORANGE", "JUICE",   "FRESH",   "CHICKEN", "BREAST",
    "TISSUE",  "SOFT",    "COLA",    "ZERO",   "CEREAL",  "OATS",    "HONEY",   "ORGANIC"};

inline constexpr std::array<std::string_view, 8> kSizeWords{"500ML", "1KG", "250G", "2L",
                                                            "6PK",   "750ML", "1L", "400G"};

inline constexpr std::array<std::string_view, 6> kStoreWords{"FRESH", "MART", "CITY",
                                                             "MARKET", "SUPER", "STORES"};

struct Builder {
  OcrPage page;
  Document doc;
  SeededRng& rng;

  TokenId add_word(std::string text, int x, int line, EntityLabel label) {
    const int y = kTopMargin + line * kLinePitch + static_cast<int>(rng.range(0, 6)) - 3;
    const int jitter_x = static_cast<int>(rng.range(0, 8)) - 4;
    const int x0 = std::max(0, x + jitter_x);
    const int w = static_cast<int>(unicode::code_point_count(text)) * kCharWidth;
    const int x1 = std::min(kPageWidth - 1, x0 + w);
    const int h = kTokenHeight + static_cast<int>(rng.range(0, 2));
    OcrWordRecord rec;
    rec.text = text;
    rec.polygon = {{double(x0), double(y)}, {double(x1), double(y)}, {double(x1), double(y + h)},
                   {double(x0), double(y + h)}};
    page.words.push_back(rec);
    const TokenId id = doc.tokens.size();
    Token t;
    t.id = id;
    t.text = std::move(text);
    if (label != EntityLabel::Untagged) t.set_label(label, LabelSource::GroundTruth);
    doc.tokens.push_back(std::move(t));
    return id;
  }

  // Words laid out left to right from x, one space apart.
  std::vector<TokenId> add_words(const std::vector<std::string>& words, int x, int line,
                                 EntityLabel label) {
    std::vector<TokenId> ids;
    for (const std::string& w : words) {
      ids.push_back(add_word(w, x, line, label));
      x += static_cast<int>(w.size() + 1) * kCharWidth;
    }
    return ids;
  }
};

inline std::string format_cents(std::int64_t cents) {
  std::string frac = std::to_string(cents % 100);
  if (frac.size() < 2) frac.insert(0, "0");
  return std::to_string(cents / 100) + "." + frac;
}

inline std::string random_digits(SeededRng& rng, std::size_t n) {
  std::string s(1, static_cast<char>('1' + rng.range(0, 8)));
  while (s.size() < n) s.push_back(static_cast<char>('0' + rng.range(0, 9)));
  return s;
}

inline std::vector<std::string> description_words(SeededRng& rng, std::size_t lo, std::size_t hi,
                                                  bool allow_size) {
  std::vector<std::string> words;
  const std::size_t n = rng.range(lo, hi);
  std::size_t chars = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::string w(rng.pick(kProductWords));
    if (allow_size && i + 1 == n && n > 1 && rng.chance(0.2)) w = std::string(rng.pick(kSizeWords));
    if (chars + w.size() > 30) break;  // keep descriptions left of the number columns
    chars += w.size() + 1;
    words.push_back(std::move(w));
  }
  if (words.empty()) words.emplace_back(rng.pick(kProductWords));
  return words;
}

}  // namespace synth_detail

inline SyntheticDocument generate_document(const CorpusSpec& spec, std::size_t index,
                                           SeededRng& rng) {
  using namespace synth_detail;
  char id_buf[64];
  std::snprintf(id_buf, sizeof id_buf, "synth-%llu-%04zu",
                static_cast<unsigned long long>(spec.seed), index);

  Builder b{{}, {}, rng};
  GroundTruth truth;
  truth.doc_id = id_buf;
  int line = 0;

  b.add_words({std::string(rng.pick(kStoreWords)), std::string(rng.pick(kStoreWords))}, 380, line++,
              EntityLabel::Untagged);
  b.add_words({"TICKET", random_digits(rng, 4)}, 50, line++, EntityLabel::Untagged);

  const std::size_t n_products = rng.range(spec.min_products, spec.max_products);
  std::int64_t total_cents = 0;
  for (std::size_t p = 0; p < n_products; ++p) {
    GroundTruthProduct gt;
    auto desc = b.add_words(description_words(rng, 2, 4, true), 50, line++,
                            EntityLabel::Description);
    while (rng.chance(spec.multiline_description_prob) && desc.size() < 9) {
      const auto more = b.add_words(description_words(rng, 1, 3, false), 50, line++,
                                    EntityLabel::Description);
      desc.insert(desc.end(), more.begin(), more.end());
      if (!rng.chance(0.3)) break;
    }
    gt.description_token_ids = desc;

    const bool has_code = rng.chance(spec.code_presence_prob);
    const std::int64_t qty = rng.chance(0.5) ? 1 : static_cast<std::int64_t>(rng.range(2, 9));
    const std::int64_t unit_cents = static_cast<std::int64_t>(rng.range(50, 5000));
    const std::int64_t line_cents = qty * unit_cents;
    total_cents += line_cents;
    if (has_code) {
      gt.code_token_id = b.add_word(random_digits(rng, rng.range(7, 13)), 50, line,
                                    EntityLabel::Code);
      // Item reference printed next to the code: above any quantity, below any code.
      b.add_word(std::to_string(rng.range(10, 9999)), 230, line, EntityLabel::Untagged);
    }
    gt.quantity_token_id = b.add_word(std::to_string(qty), 540, line, EntityLabel::Quantity);
    if (qty > 1) b.add_word(format_cents(unit_cents), 580, line, EntityLabel::Untagged);
    if (rng.chance(spec.adversarial_rate)) {
      const std::int64_t bogus = line_cents + static_cast<std::int64_t>(rng.range(100, 99900));
      b.add_word(format_cents(bogus), 670, line, EntityLabel::Untagged);
    }
    gt.price_token_id = b.add_word(format_cents(line_cents), 850, line, EntityLabel::Price);
    ++line;
    truth.products.push_back(std::move(gt));
  }
  b.add_words({"TOTAL"}, 50, line, EntityLabel::Untagged);
  b.add_word(format_cents(total_cents), 850, line++, EntityLabel::Untagged);
  b.add_words({"THANK", "YOU"}, 400, line++, EntityLabel::Untagged);

  const int height = kTopMargin * 2 + line * kLinePitch;
  b.page.doc_id = truth.doc_id;
  b.page.width = kPageWidth;
  b.page.height = height;

  SyntheticDocument out;
  out.doc = to_document(b.page);
  for (std::size_t i = 0; i < out.doc.tokens.size(); ++i) {
    out.doc.tokens[i].label = b.doc.tokens[i].label;
    out.doc.tokens[i].source = b.doc.tokens[i].source;
  }
  for (GroundTruthProduct& p : truth.products) {
    for (TokenId id : p.description_token_ids) p.description_values.push_back(out.doc.token(id).text);
    if (p.code_token_id) p.code_value = out.doc.token(*p.code_token_id).text;
    if (p.quantity_token_id) p.quantity_value = out.doc.token(*p.quantity_token_id).text;
    if (p.price_token_id) p.price_value = out.doc.token(*p.price_token_id).text;
  }
  out.page = std::move(b.page);
  out.truth = std::move(truth);
  return out;
}

// Deterministic in spec.seed; documents come from one sequential stream.
inline std::vector<SyntheticDocument> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  SeededRng rng(spec.seed);
  std::vector<SyntheticDocument> corpus;
  corpus.reserve(spec.n_docs);
  for (std::size_t i = 0; i < spec.n_docs; ++i) corpus.push_back(generate_document(spec, i, rng));
  return corpus;
}

namespace synth_detail {

// Typical OCR confusions; every entry differs from its key.
inline char confuse(char c, SeededRng& rng) {
  static constexpr std::string_view kDigits = "OlZ8ASbTBg";
  if (c >= '0' && c <= '9') return kDigits[static_cast<std::size_t>(c - '0')];
  if (c >= 'A' && c <= 'Z') {
    char r = static_cast<char>('A' + rng.range(0, 24));
    return r >= c ? static_cast<char>(r + 1) : r;
  }
  if (c >= 'a' && c <= 'z') {
    char r = static_cast<char>('a' + rng.range(0, 24));
    return r >= c ? static_cast<char>(r + 1) : r;
  }
  return c == '.' ? ',' : '.';
}

}  // namespace synth_detail

// Truth labels become Model predictions. Independently per entity token, the
// label is dropped with the entity's false-negative rate, and one character
// of the text is substituted with ocr_noise_rate. Deterministic per
// (seed, doc_id).
inline Document corrupt_predictions(const Document& truth_doc, const CorruptionSpec& spec,
                                    std::uint64_t seed) {
  spec.validate();
  SeededRng rng(mix_seed(seed, truth_doc.doc_id));
  Document out = truth_doc;
  for (Token& t : out.tokens) {
    if (!t.tagged()) continue;
    const double drop = spec.false_negative_rate(t.label);
    const bool dropped = rng.chance(drop);
    const bool noisy = rng.chance(spec.ocr_noise_rate);
    if (noisy) {
      const std::size_t pos = rng.range(0, t.text.size() - 1);
      t.text[pos] = synth_detail::confuse(t.text[pos], rng);
    }
    if (dropped) {
      t.clear_label();
    } else {
      t.source = LabelSource::Model;
    }
  }
  return out;
}

// The OCR page a noisy document would have produced: same geometry, the
// document's (possibly corrupted) texts.
inline OcrPage with_texts(OcrPage page, const Document& doc) {
  for (std::size_t i = 0; i < page.words.size(); ++i) page.words[i].text = doc.tokens[i].text;
  return page;
}

}  // namespace receipt_kie
