#pragma once

// Subcommand implementations for the receipt_kie CLI. Each returns the
// process exit code.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <receipt_kie/receipt_kie.hpp>

namespace receipt_kie::cli {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write failed for " + path.string());
}

// Regular *.json files of a directory (sorted), or the path itself.
inline std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const fs::path& p : inputs) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") {
          found.push_back(entry.path());
        }
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else {
      files.push_back(p);
    }
  }
  return files;
}

inline void configure_logging() {
  const char* env = std::getenv("RECEIPT_KIE_LOG");
  const std::string level = env ? env : "warn";
  if (!spdlog::get("receipt_kie")) spdlog::set_default_logger(spdlog::stderr_color_mt("receipt_kie"));
  if (level == "error") spdlog::set_level(spdlog::level::err);
  else if (level == "info") spdlog::set_level(spdlog::level::info);
  else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  else spdlog::set_level(spdlog::level::warn);
  spdlog::set_pattern("%^%l%$: %v");
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned j = 0; j < jobs; ++j) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
}

// ----------------------------------------------------------------------------
// decode
// ----------------------------------------------------------------------------

enum class TaggerKind { Heuristic, Import };

struct DecodeOptions {
  std::vector<fs::path> inputs;
  fs::path out_dir;
  TaggerKind tagger = TaggerKind::Heuristic;
  std::optional<fs::path> predictions;
  bool corrections = true;
  double y_overlap = 0.4;
  unsigned jobs = 1;
  bool fail_fast = false;
  std::optional<fs::path> audit_log;  // default: <out_dir>/audit.jsonl
};

inline std::map<std::string, PredictionFile> load_predictions(const fs::path& path) {
  std::map<std::string, PredictionFile> by_doc;
  for (const fs::path& file : expand_inputs({path})) {
    try {
      PredictionFile p = parse_predictions(read_file(file));
      const std::string id = p.doc_id;
      if (!by_doc.emplace(id, std::move(p)).second) {
        throw ReferenceError("duplicate predictions for document '" + id + "'");
      }
    } catch (const Error& e) {
      throw Error(file.string() + ": " + e.what());
    }
  }
  return by_doc;
}

inline std::string audit_line(const std::string& doc_id, const CorrectionRecord& rec,
                              const Document& doc) {
  ordered_json j;
  j["doc_id"] = doc_id;
  j["group_id"] = rec.group_id;
  j["entity"] = std::string(to_string(rec.entity));
  j["token_id"] = rec.token_id;
  j["text"] = doc.token(rec.token_id).text;
  std::visit([&](auto v) { j["value"] = v; }, rec.parsed_value);
  return j.dump() + "\n";
}

inline int cmd_decode(const DecodeOptions& opt) {
  PipelineOptions pipeline;
  pipeline.corrections_enabled = opt.corrections;
  pipeline.grouping.y_overlap_threshold = opt.y_overlap;
  try {
    pipeline.grouping.validate();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }

  std::unique_ptr<Tagger> tagger;
  if (opt.tagger == TaggerKind::Import) {
    if (!opt.predictions || !fs::exists(*opt.predictions)) {
      spdlog::error("--tagger import requires an existing --predictions path");
      return 1;
    }
    try {
      tagger = std::make_unique<ImportedTagger>(load_predictions(*opt.predictions));
    } catch (const Error& e) {
      spdlog::error("{}", e.what());
      return 1;
    }
  } else {
    tagger = std::make_unique<HeuristicTagger>();
  }

  const std::vector<fs::path> files = expand_inputs(opt.inputs);
  if (files.empty()) {
    spdlog::warn("no input files found");
    return 0;
  }
  fs::create_directories(opt.out_dir);

  struct Outcome {
    std::optional<std::string> error;
    std::string doc_id;
    std::vector<std::string> audit;
  };
  std::vector<Outcome> outcomes(files.size());
  std::atomic<bool> stop{false};
  const auto* imported = dynamic_cast<const ImportedTagger*>(tagger.get());

  parallel_for(files.size(), opt.jobs, [&](std::size_t i) {
    if (stop) {
      outcomes[i].error = "skipped after earlier failure";
      return;
    }
    try {
      const Document doc = parse_ocr(read_file(files[i]));
      if (const auto v = validate_document(doc); !v.empty()) throw Error("invalid document: " + v.front());
      if (imported && !imported->has(doc.doc_id)) {
        throw ReferenceError("no predictions for document '" + doc.doc_id + "'");
      }
      const PipelineOutput out = decode(doc, *tagger, pipeline);
      write_file(opt.out_dir / files[i].filename(), serialize_result(out.result));
      outcomes[i].doc_id = doc.doc_id;
      for (const CorrectionRecord& rec : out.corrections) {
        outcomes[i].audit.push_back(audit_line(doc.doc_id, rec, out.result.doc));
      }
      spdlog::info("{}: {} groups, {} corrections", files[i].string(), out.result.groups.size(),
                   out.corrections.size());
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
      if (opt.fail_fast) stop = true;
    }
  });

  int status = 0;
  std::vector<const Outcome*> ok;
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (outcomes[i].error) {
      spdlog::error("{}: {}", files[i].string(), *outcomes[i].error);
      status = 1;
    } else {
      ok.push_back(&outcomes[i]);
    }
  }
  if (opt.corrections) {
    std::stable_sort(ok.begin(), ok.end(),
                     [](const Outcome* a, const Outcome* b) { return a->doc_id < b->doc_id; });
    std::string log;
    for (const Outcome* o : ok) {
      for (const std::string& line : o->audit) log += line;
    }
    write_file(opt.audit_log.value_or(opt.out_dir / "audit.jsonl"), log);
  }
  return status;
}

// ----------------------------------------------------------------------------
// eval
// ----------------------------------------------------------------------------

struct EvalOptions {
  fs::path results;
  fs::path truth;
  MatchMode mode = MatchMode::TagOnly;
  std::optional<fs::path> compare;
  std::optional<fs::path> json_out;
  std::vector<std::string> min_f1;  // "<entity>=<value>"
};

inline std::vector<DecodeResult> load_results(const fs::path& dir) {
  std::vector<DecodeResult> out;
  for (const fs::path& file : expand_inputs({dir})) {
    try {
      out.push_back(parse_result(read_file(file)));
    } catch (const Error& e) {
      throw Error(file.string() + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<GroundTruth> load_truth(const fs::path& dir,
                                           const std::vector<DecodeResult>& results) {
  std::map<std::string, const Document*> docs;
  for (const DecodeResult& r : results) docs.emplace(r.doc.doc_id, &r.doc);
  std::vector<GroundTruth> out;
  for (const fs::path& file : expand_inputs({dir})) {
    try {
      const std::string bytes = read_file(file);
      const std::string id = peek_doc_id(bytes);
      const auto it = docs.find(id);
      if (it == docs.end()) throw ReferenceError("no result for document '" + id + "'");
      out.push_back({id, parse_ground_truth(bytes, *it->second)});
    } catch (const Error& e) {
      throw Error(file.string() + ": " + e.what());
    }
  }
  return out;
}

inline std::optional<std::pair<std::optional<EntityLabel>, double>> parse_floor(
    const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return std::nullopt;
  const std::string key = spec.substr(0, eq);
  double value = 0.0;
  try {
    std::size_t used = 0;
    value = std::stod(spec.substr(eq + 1), &used);
    if (used != spec.size() - eq - 1) return std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  static const std::map<std::string, std::optional<EntityLabel>> names{
      {"descriptions", EntityLabel::Description}, {"description", EntityLabel::Description},
      {"codes", EntityLabel::Code},               {"code", EntityLabel::Code},
      {"quantities", EntityLabel::Quantity},      {"quantity", EntityLabel::Quantity},
      {"prices", EntityLabel::Price},             {"price", EntityLabel::Price},
      {"whole_products", std::nullopt},           {"whole", std::nullopt}};
  const auto it = names.find(key);
  if (it == names.end()) return std::nullopt;
  return std::pair{it->second, value};
}

inline int cmd_eval(const EvalOptions& opt, std::ostream& out) {
  std::vector<std::pair<std::optional<EntityLabel>, double>> floors;
  for (const std::string& f : opt.min_f1) {
    const auto parsed = parse_floor(f);
    if (!parsed) {
      spdlog::error("bad --min-f1 '{}'; expected <entity>=<value>", f);
      return 1;
    }
    floors.push_back(*parsed);
  }

  EvalReport report;
  std::optional<EvalReport> baseline;
  try {
    const auto results = load_results(opt.results);
    report = build_report(results, load_truth(opt.truth, results), opt.mode);
    if (opt.compare) {
      const auto other = load_results(*opt.compare);
      baseline = build_report(other, load_truth(opt.truth, other), opt.mode);
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }

  std::vector<std::pair<std::string, EvalReport>> rows;
  if (baseline) {
    rows.emplace_back("With only DL", *baseline);
    rows.emplace_back("With rule-based corrections", report);
  } else {
    rows.emplace_back("Results", report);
  }
  out << format_report_table(rows);

  if (opt.json_out) {
    ordered_json j;
    j["results"] = report_to_json(report);
    if (baseline) j["compare"] = report_to_json(*baseline);
    try {
      write_file(*opt.json_out, j.dump(2) + "\n");
    } catch (const Error& e) {
      spdlog::error("{}", e.what());
      return 1;
    }
  }

  int status = 0;
  for (const auto& [label, floor] : floors) {
    const double f1 = label ? report.entities[*label].f1() : report.whole_products.f1();
    if (f1 < floor) {
      spdlog::error("f1 for {} is {:.4f}, below the floor {:.4f}",
                    label ? std::string(to_string(*label)) : "whole_products", f1, floor);
      status = 2;
    }
  }
  return status;
}

// ----------------------------------------------------------------------------
// synth
// ----------------------------------------------------------------------------

struct SynthOptions {
  fs::path out_dir;
  CorpusSpec corpus;
  CorruptionSpec corruption;
  bool force = false;
};

inline ordered_json manifest_json(const SynthOptions& opt, const std::vector<SyntheticDocument>& docs) {
  ordered_json m;
  m["seed"] = opt.corpus.seed;
  m["corpus"] = {{"n_docs", opt.corpus.n_docs},
                 {"min_products", opt.corpus.min_products},
                 {"max_products", opt.corpus.max_products},
                 {"multiline_description_prob", opt.corpus.multiline_description_prob},
                 {"code_presence_prob", opt.corpus.code_presence_prob},
                 {"adversarial_rate", opt.corpus.adversarial_rate}};
  m["corruption"] = {{"seed", opt.corpus.seed},
                     {"fn_description", opt.corruption.fn_description},
                     {"fn_code", opt.corruption.fn_code},
                     {"fn_quantity", opt.corruption.fn_quantity},
                     {"fn_price", opt.corruption.fn_price},
                     {"ocr_noise_rate", opt.corruption.ocr_noise_rate}};
  ordered_json list = ordered_json::array();
  for (const SyntheticDocument& d : docs) {
    const std::string name = d.truth.doc_id + ".json";
    list.push_back({{"doc_id", d.truth.doc_id},
                    {"ocr", "ocr/" + name},
                    {"truth", "truth/" + name},
                    {"predictions", "predictions/" + name}});
  }
  m["docs"] = std::move(list);
  return m;
}

inline int cmd_synth(const SynthOptions& opt) {
  try {
    opt.corpus.validate();
    opt.corruption.validate();
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  if (fs::exists(opt.out_dir) && !fs::is_empty(opt.out_dir)) {
    if (!opt.force) {
      spdlog::error("{} exists and is not empty; pass --force to overwrite", opt.out_dir.string());
      return 1;
    }
    for (const char* sub : {"ocr", "truth", "predictions", "manifest.json"}) {
      fs::remove_all(opt.out_dir / sub);
    }
  }
  try {
    const auto corpus = generate_corpus(opt.corpus);
    for (const SyntheticDocument& d : corpus) {
      const Document noisy = corrupt_predictions(d.doc, opt.corruption, opt.corpus.seed);
      const std::string name = d.truth.doc_id + ".json";
      write_file(opt.out_dir / "ocr" / name, serialize_ocr_page(with_texts(d.page, noisy)));
      write_file(opt.out_dir / "truth" / name, serialize_ground_truth(d.truth));
      write_file(opt.out_dir / "predictions" / name, serialize_predictions(predictions_from(noisy)));
    }
    write_file(opt.out_dir / "manifest.json", manifest_json(opt, corpus).dump(2) + "\n");
    spdlog::info("wrote {} documents to {}", corpus.size(), opt.out_dir.string());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

// ----------------------------------------------------------------------------
// render
// ----------------------------------------------------------------------------

struct RenderOptions {
  fs::path result;
  fs::path ocr;
  std::optional<fs::path> out;  // stdout when absent
};

inline int cmd_render(const RenderOptions& opt, std::ostream& out) {
  try {
    const DecodeResult result = parse_result(read_file(opt.result));
    const OcrPage page = parse_ocr_page(read_file(opt.ocr));
    if (page.doc_id != result.doc.doc_id) {
      spdlog::error("result document '{}' does not match OCR document '{}'", result.doc.doc_id,
                    page.doc_id);
      return 1;
    }
    if (page.words.size() != result.doc.tokens.size()) {
      spdlog::error("result has {} tokens but the OCR file has {} words", result.doc.tokens.size(),
                    page.words.size());
      return 1;
    }
    const std::string svg = render_svg(result);
    if (opt.out) {
      write_file(*opt.out, svg);
    } else {
      out << svg;
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}

}  // namespace receipt_kie::cli
