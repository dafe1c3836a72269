#include <catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "test_support.hpp"

using namespace receipt_kie;
using namespace rkie_test;

namespace {

// Smallest k with P(X <= k) >= q for X ~ Binomial(n, p), from the exact pmf.
std::size_t binomial_quantile(std::size_t n, double p, double q) {
  double cdf = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double log_pmf = std::lgamma(double(n) + 1) - std::lgamma(double(k) + 1) -
                           std::lgamma(double(n - k) + 1) + double(k) * std::log(p) +
                           double(n - k) * std::log1p(-p);
    cdf += std::exp(log_pmf);
    if (cdf >= q) return k;
  }
  return n;
}

const Line& line_of(const std::vector<Line>& lines, TokenId id) {
  for (const Line& l : lines) {
    for (TokenId t : l.token_ids) {
      if (t == id) return l;
    }
  }
  throw std::logic_error("token not on any line");
}

}  // namespace

TEST_CASE("generation is deterministic in the seed", "[synthcorpus]") {
  CorpusSpec spec;
  spec.seed = 7;
  spec.n_docs = 25;
  const auto a = generate_corpus(spec);
  const auto b = generate_corpus(spec);
  REQUIRE(a.size() == 25);
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(serialize_ocr_page(a[i].page) == serialize_ocr_page(b[i].page));
    REQUIRE(serialize_ground_truth(a[i].truth) == serialize_ground_truth(b[i].truth));
    REQUIRE(a[i].doc == b[i].doc);
  }
  spec.seed = 8;
  REQUIRE(serialize_ocr_page(generate_corpus(spec)[0].page) != serialize_ocr_page(a[0].page));
}

TEST_CASE("CorpusSpec validation", "[synthcorpus]") {
  CorpusSpec spec;
  spec.n_docs = 0;
  REQUIRE_THROWS_AS(generate_corpus(spec), ContractError);
  spec.n_docs = 1;
  spec.min_products = 5;
  spec.max_products = 4;
  REQUIRE_THROWS_AS(generate_corpus(spec), ContractError);
  spec.max_products = 5;
  spec.code_presence_prob = 1.5;
  REQUIRE_THROWS_AS(generate_corpus(spec), ContractError);
  CorruptionSpec bad;
  bad.fn_code = -0.1;
  REQUIRE_THROWS_AS(bad.validate(), ContractError);
}

TEST_CASE("code presence probability 0 yields no codes", "[synthcorpus]") {
  CorpusSpec spec;
  spec.n_docs = 30;
  spec.code_presence_prob = 0.0;
  for (const auto& s : generate_corpus(spec)) {
    for (const auto& p : s.truth.products) REQUIRE_FALSE(p.code_token_id);
    for (const Token& t : s.doc.tokens) REQUIRE(t.label != EntityLabel::Code);
  }
}

TEST_CASE("single-product document: the code is the largest integer of its pool", "[synthcorpus]") {
  CorpusSpec spec;
  spec.n_docs = 1;
  spec.min_products = spec.max_products = 1;
  spec.code_presence_prob = 1.0;
  const auto s = generate_corpus(spec).front();
  REQUIRE(s.truth.products.size() == 1);
  const auto lines = detect_lines_geometric(s.doc);
  const auto groups = group_product_lines(s.doc, lines);
  REQUIRE(groups.size() == 1);
  Document stripped = s.doc;
  stripped.token(*s.truth.products[0].code_token_id).clear_label();
  const auto ints = UntaggedWordPool::of(groups[0], stripped).integers({});
  REQUIRE(*std::max_element(ints.begin(), ints.end()) ==
          *parse_integer(s.doc.token(*s.truth.products[0].code_token_id).text));
}

TEST_CASE("generated documents follow the business rules", "[synthcorpus][property]") {
  CorpusSpec spec;
  spec.seed = 99;
  spec.n_docs = 200;
  std::size_t products = 0, adversarial = 0;
  for (const auto& s : generate_corpus(spec)) {
    REQUIRE(validate_document(s.doc).empty());
    REQUIRE(s.truth.products.size() >= spec.min_products);
    REQUIRE(s.truth.products.size() <= spec.max_products);
    const auto lines = detect_lines_geometric(s.doc);
    double sum = 0.0;
    for (const auto& p : s.truth.products) {
      ++products;
      REQUIRE_FALSE(p.description_token_ids.empty());
      REQUIRE(p.quantity_token_id);
      REQUIRE(p.price_token_id);
      const double price = *parse_float(s.doc.token(*p.price_token_id).text);
      const std::int64_t qty = *parse_integer(s.doc.token(*p.quantity_token_id).text);
      sum += price;
      REQUIRE(qty >= 1);
      REQUIRE(qty <= 9);

      // Integers and floats on the product's numeric line.
      std::vector<std::int64_t> ints;
      std::vector<double> floats;
      for (TokenId id : line_of(lines, *p.price_token_id).token_ids) {
        if (auto v = parse_integer(s.doc.token(id).text)) ints.push_back(*v);
        if (auto v = parse_float(s.doc.token(id).text)) floats.push_back(*v);
      }
      REQUIRE(*std::min_element(ints.begin(), ints.end()) == qty);
      if (p.code_token_id) {
        const std::string& code = s.doc.token(*p.code_token_id).text;
        REQUIRE(code.size() >= 7);
        REQUIRE(code.size() <= 13);
        REQUIRE(*std::max_element(ints.begin(), ints.end()) == *parse_integer(code));
        REQUIRE(ints.size() >= 3);  // code, item reference, quantity
      } else {
        REQUIRE(ints.size() == 1);
      }
      const double max_float = *std::max_element(floats.begin(), floats.end());
      if (max_float > price) ++adversarial;
      if (qty > 1) {
        // unit price * quantity = price, to the cent
        bool found = false;
        for (double f : floats) found |= std::llround(f * 100) * qty == std::llround(price * 100);
        REQUIRE(found);
      }
    }
    // The TOTAL line carries the sum of the product prices.
    bool total_ok = false;
    for (const Token& t : s.doc.tokens) {
      if (t.text == "TOTAL") {
        for (TokenId id : line_of(lines, t.id).token_ids) {
          if (auto v = parse_float(s.doc.token(id).text)) {
            total_ok = std::llround(*v * 100) == std::llround(sum * 100);
          }
        }
      }
    }
    REQUIRE(total_ok);
  }
  // About 5% of products carry an adversarial float.
  REQUIRE(adversarial > 0);
  REQUIRE(double(adversarial) / double(products) < 0.1);
}

TEST_CASE("corrupt_predictions with rate 0 is the identity on labels", "[synthcorpus]") {
  CorpusSpec spec;
  spec.n_docs = 20;
  const CorruptionSpec none{0, 0, 0, 0, 0};
  for (const auto& s : generate_corpus(spec)) {
    const Document out = corrupt_predictions(s.doc, none, 3);
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
      REQUIRE(out.tokens[i].label == s.doc.tokens[i].label);
      REQUIRE(out.tokens[i].text == s.doc.tokens[i].text);
      if (out.tokens[i].tagged()) REQUIRE(out.tokens[i].source == LabelSource::Model);
    }
  }
}

TEST_CASE("corrupt_predictions with code rate 1 removes every code", "[synthcorpus]") {
  CorpusSpec spec;
  spec.n_docs = 20;
  const CorruptionSpec codes{0, 1, 0, 0, 0};
  for (const auto& s : generate_corpus(spec)) {
    const Document out = corrupt_predictions(s.doc, codes, 3);
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
      REQUIRE(out.tokens[i].label != EntityLabel::Code);
      if (s.doc.tokens[i].label != EntityLabel::Code) {
        REQUIRE(out.tokens[i].label == s.doc.tokens[i].label);
      }
    }
  }
}

TEST_CASE("code removal count is binomial", "[synthcorpus]") {
  // Exact 99% two-sided interval of Binomial(1000, 0.3) must sit inside [252, 349].
  const std::size_t lo = binomial_quantile(1000, 0.3, 0.005);
  const std::size_t hi = binomial_quantile(1000, 0.3, 0.995);
  REQUIRE(lo >= 252);
  REQUIRE(hi <= 349);

  CorpusSpec spec;
  spec.seed = 4;
  spec.n_docs = 400;
  spec.code_presence_prob = 1.0;
  const CorruptionSpec codes{0, 0.3, 0, 0, 0};
  std::size_t seen = 0, removed = 0;
  for (const auto& s : generate_corpus(spec)) {
    const Document out = corrupt_predictions(s.doc, codes, 12);
    for (std::size_t i = 0; i < out.tokens.size() && seen < 1000; ++i) {
      if (s.doc.tokens[i].label != EntityLabel::Code) continue;
      ++seen;
      removed += out.tokens[i].label == EntityLabel::Code ? 0 : 1;
    }
  }
  REQUIRE(seen == 1000);
  REQUIRE(removed >= 252);
  REQUIRE(removed <= 349);
}

TEST_CASE("OCR noise changes exactly one character of a labeled token", "[synthcorpus]") {
  CorpusSpec spec;
  spec.n_docs = 10;
  const CorruptionSpec noisy{0, 0, 0, 0, 1.0};
  for (const auto& s : generate_corpus(spec)) {
    const Document out = corrupt_predictions(s.doc, noisy, 1);
    for (std::size_t i = 0; i < out.tokens.size(); ++i) {
      const std::string &a = s.doc.tokens[i].text, &b = out.tokens[i].text;
      REQUIRE(a.size() == b.size());
      std::size_t diff = 0;
      for (std::size_t k = 0; k < a.size(); ++k) diff += a[k] != b[k];
      REQUIRE(diff == (s.doc.tokens[i].tagged() ? 1u : 0u));
    }
    const OcrPage page = with_texts(s.page, out);
    REQUIRE(to_document(page).tokens[0].text == out.tokens[0].text);
  }
}

TEST_CASE("corrections restore dropped labels whose guards hold", "[synthcorpus][property]") {
  CorpusSpec spec;
  spec.seed = 31;
  spec.n_docs = 150;
  std::size_t checked = 0;
  for (const auto& s : generate_corpus(spec)) {
    const Document predicted = corrupt_predictions(s.doc, CorruptionSpec{}, 6);
    const auto out = decode_tagged(predicted).result;
    for (const ProductGroup& g : out.groups) {
      // Only groups that hold exactly one product's descriptions.
      std::set<TokenId> desc;
      for (TokenId id : g.token_ids) {
        if (s.doc.token(id).label == EntityLabel::Description) desc.insert(id);
      }
      const GroundTruthProduct* product = nullptr;
      for (const auto& p : s.truth.products) {
        if (std::set<TokenId>(p.description_token_ids.begin(), p.description_token_ids.end()) == desc) {
          product = &p;
        }
      }
      if (!product) continue;
      std::set<std::int64_t> ints;
      double max_untagged_float = -1.0;
      for (TokenId id : g.token_ids) {
        if (predicted.token(id).tagged()) continue;
        if (auto v = parse_integer(predicted.token(id).text)) ints.insert(*v);
        if (s.doc.token(id).tagged()) continue;
        if (auto v = parse_float(predicted.token(id).text)) {
          max_untagged_float = std::max(max_untagged_float, *v);
        }
      }
      for (EntityLabel label : {EntityLabel::Code, EntityLabel::Quantity, EntityLabel::Price}) {
        const auto id = product->token_for(label);
        if (!id || predicted.token(*id).tagged()) continue;
        const bool satisfiable =
            label == EntityLabel::Price
                ? max_untagged_float < *parse_float(s.doc.token(*id).text)
                : ints.size() >= 2;
        if (!satisfiable) continue;
        ++checked;
        REQUIRE(out.doc.token(*id).label == label);
        REQUIRE(out.doc.token(*id).source == LabelSource::Correction);
      }
    }
  }
  REQUIRE(checked > 100);
}
