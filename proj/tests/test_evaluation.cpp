#include <catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace receipt_kie;
using namespace rkie_test;

namespace {

// Three products, one line each: desc, code?, qty, price.
struct Fixture {
  Document doc;
  std::vector<Line> lines;
  GroundTruth truth;
};

Fixture three_products(LabelSource source = LabelSource::Model) {
  LaidOut l = lay_out({{D("SOAP"), C("4902102"), Q("1"), P("2.00")},
                       {D("MILK"), C("4902103"), Q("2"), P("3.00")},
                       {D("TEA"), C("4902104"), Q("3"), P("9.00")}},
                      source);
  Fixture f{l.doc, l.lines, {"fixture", {}}};
  for (std::size_t r = 0; r < 3; ++r) {
    GroundTruthProduct p;
    const TokenId base = 4 * r;
    p.description_token_ids = {base};
    p.code_token_id = base + 1;
    p.quantity_token_id = base + 2;
    p.price_token_id = base + 3;
    p.description_values = {l.doc.token(base).text};
    p.code_value = l.doc.token(base + 1).text;
    p.quantity_value = l.doc.token(base + 2).text;
    p.price_value = l.doc.token(base + 3).text;
    f.truth.products.push_back(p);
  }
  return f;
}

}  // namespace

TEST_CASE("match_entity", "[evaluation]") {
  Token t;
  t.id = 3;
  t.text = "138.O0";
  t.set_label(EntityLabel::Price, LabelSource::Model);
  const TruthEntity truth{3, EntityLabel::Price, "138.00"};
  REQUIRE(match_entity(t, truth, MatchMode::TagOnly));
  REQUIRE_FALSE(match_entity(t, truth, MatchMode::StrictOcr));
  t.text = "138.00";
  REQUIRE(match_entity(t, truth, MatchMode::StrictOcr));
  t.set_label(EntityLabel::Quantity, LabelSource::Model);
  REQUIRE_FALSE(match_entity(t, truth, MatchMode::TagOnly));
  t.set_label(EntityLabel::Price, LabelSource::Model);
  t.id = 4;
  REQUIRE_FALSE(match_entity(t, truth, MatchMode::TagOnly));
}

TEST_CASE("strict matching compares NFC forms", "[evaluation]") {
  Token t;
  t.id = 0;
  t.text = "CAFE\xCC\x81";  // E + combining acute
  t.set_label(EntityLabel::Description, LabelSource::Model);
  REQUIRE(match_entity(t, {0, EntityLabel::Description, "CAF\xC3\x89"}, MatchMode::StrictOcr));
  REQUIRE_FALSE(match_entity(t, {0, EntityLabel::Description, "CAFE"}, MatchMode::StrictOcr));
}

TEST_CASE("Counts arithmetic", "[evaluation]") {
  const Counts c{2, 1, 1};
  REQUIRE(c.precision() == Catch::Approx(2.0 / 3.0));
  REQUIRE(c.recall() == Catch::Approx(2.0 / 3.0));
  REQUIRE(c.f1() == Catch::Approx(2.0 / 3.0));
  const Counts empty{};
  REQUIRE(empty.precision() == 0.0);
  REQUIRE(empty.recall() == 0.0);
  REQUIRE(empty.f1() == 0.0);
}

TEST_CASE("perfect predictions score 1 everywhere", "[evaluation]") {
  const Fixture f = three_products();
  const auto groups = group_product_lines(f.doc, f.lines);
  const EntityCounts c = score_entities(f.doc, f.truth, MatchMode::StrictOcr);
  for (EntityLabel label : kEntityLabels) {
    REQUIRE(c[label] == Counts{3, 0, 0});
    REQUIRE(c[label].f1() == 1.0);
  }
  REQUIRE(score_whole_products(f.doc, groups, f.truth, MatchMode::StrictOcr) == Counts{3, 0, 0});
}

TEST_CASE("empty predictions score 0", "[evaluation]") {
  Fixture f = three_products();
  for (Token& t : f.doc.tokens) t.clear_label();
  const EntityCounts c = score_entities(f.doc, f.truth, MatchMode::TagOnly);
  for (EntityLabel label : kEntityLabels) {
    REQUIRE(c[label] == Counts{0, 0, 3});
    REQUIRE(c[label].f1() == 0.0);
  }
  REQUIRE(score_whole_products(f.doc, {}, f.truth, MatchMode::TagOnly) == Counts{0, 0, 3});
}

TEST_CASE("one missing code gives recall 2/3 and precision 1", "[evaluation]") {
  Fixture f = three_products();
  f.doc.token(5).clear_label();
  const Counts codes = score_entities(f.doc, f.truth, MatchMode::TagOnly)[EntityLabel::Code];
  REQUIRE(codes == Counts{2, 0, 1});
  REQUIRE(codes.recall() == Catch::Approx(2.0 / 3.0));
  REQUIRE(codes.precision() == 1.0);
}

TEST_CASE("a wrong label is one FP and one FN", "[evaluation]") {
  Fixture f = three_products();
  f.doc.token(2).set_label(EntityLabel::Price, LabelSource::Model);  // quantity tagged as price
  const EntityCounts c = score_entities(f.doc, f.truth, MatchMode::TagOnly);
  REQUIRE(c[EntityLabel::Quantity] == Counts{2, 0, 1});
  REQUIRE(c[EntityLabel::Price] == Counts{3, 1, 0});
}

TEST_CASE("whole-product scoring", "[evaluation]") {
  SECTION("swapped code and quantity make one FP and one FN") {
    Fixture f = three_products();
    f.doc.token(5).set_label(EntityLabel::Quantity, LabelSource::Model);
    f.doc.token(6).set_label(EntityLabel::Code, LabelSource::Model);
    const auto groups = group_product_lines(f.doc, f.lines);
    REQUIRE(score_whole_products(f.doc, groups, f.truth, MatchMode::TagOnly) == Counts{2, 1, 1});
  }
  SECTION("a product split over two groups: the larger overlap wins, the other is FP") {
    LaidOut l = lay_out({{D("GREEN"), D("TEA")}, {Q("1"), P("3.00")}, {D("LEAF")}, {P("0.10")}});
    GroundTruth truth{"fixture", {}};
    GroundTruthProduct p;
    p.description_token_ids = {0, 1, 4};
    p.quantity_token_id = 2;
    p.price_token_id = 3;
    truth.products.push_back(p);
    const auto groups = group_product_lines(l.doc, l.lines);
    REQUIRE(groups.size() == 2);
    // Winner has incomplete descriptions, so nothing is a TP.
    REQUIRE(score_whole_products(l.doc, groups, truth, MatchMode::TagOnly) == Counts{0, 2, 1});
  }
  SECTION("a spurious code makes the product wrong") {
    LaidOut l = lay_out({{D("SOAP"), C("123456"), Q("1"), P("2.00")}});
    GroundTruth truth{"fixture", {}};
    GroundTruthProduct p;
    p.description_token_ids = {0};
    p.quantity_token_id = 2;
    p.price_token_id = 3;
    truth.products.push_back(p);
    const auto groups = group_product_lines(l.doc, l.lines);
    REQUIRE(score_whole_products(l.doc, groups, truth, MatchMode::TagOnly) == Counts{0, 1, 1});
  }
  SECTION("strict mode rejects an OCR error") {
    Fixture f = three_products();
    f.doc.token(3).text = "2.0O";
    const auto groups = group_product_lines(f.doc, f.lines);
    REQUIRE(score_whole_products(f.doc, groups, f.truth, MatchMode::TagOnly) == Counts{3, 0, 0});
    REQUIRE(score_whole_products(f.doc, groups, f.truth, MatchMode::StrictOcr) == Counts{2, 1, 1});
  }
}

TEST_CASE("strict counts never exceed tag-only counts", "[evaluation][property]") {
  CorpusSpec spec;
  spec.seed = 8;
  spec.n_docs = 40;
  CorruptionSpec noise;
  noise.ocr_noise_rate = 0.2;
  for (const SyntheticDocument& s : generate_corpus(spec)) {
    const auto out = decode_tagged(corrupt_predictions(s.doc, noise, 2)).result;
    const auto tag = score_entities(out.doc, s.truth, MatchMode::TagOnly);
    const auto strict = score_entities(out.doc, s.truth, MatchMode::StrictOcr);
    for (EntityLabel label : kEntityLabels) REQUIRE(strict[label].tp <= tag[label].tp);
    REQUIRE(score_whole_products(out.doc, out.groups, s.truth, MatchMode::StrictOcr).tp <=
            score_whole_products(out.doc, out.groups, s.truth, MatchMode::TagOnly).tp);
  }
}

TEST_CASE("build_report pairs documents with their truth", "[evaluation]") {
  const Fixture f = three_products();
  const DecodeResult r{f.doc, f.lines, group_product_lines(f.doc, f.lines)};
  const std::vector<DecodeResult> preds{r};
  const std::vector<GroundTruth> truth{f.truth};
  const EvalReport report = build_report(preds, truth, MatchMode::TagOnly);
  REQUIRE(report.corpus_size == 1);
  REQUIRE(report.whole_products == Counts{3, 0, 0});

  GroundTruth other = f.truth;
  other.doc_id = "unknown";
  REQUIRE_THROWS_AS(build_report(preds, std::vector<GroundTruth>{other}, MatchMode::TagOnly),
                    ReferenceError);
  REQUIRE_THROWS_AS(build_report(preds, std::vector<GroundTruth>{f.truth, f.truth}, MatchMode::TagOnly),
                    ReferenceError);
  REQUIRE_THROWS_AS(build_report(std::vector<DecodeResult>{r, r}, truth, MatchMode::TagOnly),
                    ReferenceError);
}

TEST_CASE("report formatting", "[evaluation]") {
  const Fixture f = three_products();
  const DecodeResult r{f.doc, f.lines, group_product_lines(f.doc, f.lines)};
  const EvalReport report =
      build_report(std::vector<DecodeResult>{r}, std::vector<GroundTruth>{f.truth}, MatchMode::TagOnly);
  const std::string table = format_report_table({{"Results", report}});
  REQUIRE(table.find("Descriptions") != std::string::npos);
  REQUIRE(table.find("Whole products") != std::string::npos);
  REQUIRE(table.find("100.0") != std::string::npos);
  const ordered_json j = report_to_json(report);
  REQUIRE(j["codes"]["f1"] == 1.0);
  REQUIRE(j["whole_products"]["tp"] == 3);
  REQUIRE(j["mode"] == "tag");
}
