#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace receipt_kie;
using namespace receipt_kie::cli;

int main(int argc, char** argv) {
  configure_logging();

  CLI::App app{"Key information extraction for purchase documents"};
  app.require_subcommand(1);

  // decode
  DecodeOptions decode_opt;
  std::string tagger = "heuristic";
  bool no_corrections = false;
  auto* decode = app.add_subcommand("decode", "Tag, group and correct OCR files");
  decode->add_option("inputs", decode_opt.inputs, "OCR files or directories")->required();
  decode->add_option("-o,--out", decode_opt.out_dir, "Output directory for result files")->required();
  decode->add_option("--tagger", tagger, "heuristic or import")
      ->check(CLI::IsMember({"heuristic", "import"}));
  decode->add_option("--predictions", decode_opt.predictions, "Prediction file or directory");
  decode->add_flag("--no-corrections", no_corrections, "Skip the rule-based corrections");
  decode->add_option("--y-overlap", decode_opt.y_overlap, "Line overlap threshold in (0,1]")
      ->check(CLI::Range(0.0, 1.0));
  decode->add_option("--jobs", decode_opt.jobs, "Parallel workers")->check(CLI::PositiveNumber);
  decode->add_flag("--fail-fast", decode_opt.fail_fast, "Stop at the first failing file");
  decode->add_option("--audit-log", decode_opt.audit_log, "Correction log (JSON lines)");

  // eval
  EvalOptions eval_opt;
  std::string mode = "tag";
  auto* eval = app.add_subcommand("eval", "Score result files against ground truth");
  eval->add_option("results", eval_opt.results, "Result directory")->required();
  eval->add_option("--truth", eval_opt.truth, "Ground truth directory")->required();
  eval->add_option("--mode", mode, "tag or strict")->check(CLI::IsMember({"tag", "strict"}));
  eval->add_option("--compare", eval_opt.compare, "Baseline result directory");
  eval->add_option("--json", eval_opt.json_out, "Write the report as JSON");
  eval->add_option("--min-f1", eval_opt.min_f1, "Fail with exit 2 below <entity>=<f1>");

  // synth
  SynthOptions synth_opt;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus");
  synth->add_option("-o,--out", synth_opt.out_dir, "Output directory")->required();
  synth->add_option("--seed", synth_opt.corpus.seed, "Corpus and corruption seed");
  synth->add_option("--docs", synth_opt.corpus.n_docs, "Number of documents")
      ->check(CLI::PositiveNumber);
  synth->add_option("--min-products", synth_opt.corpus.min_products)->check(CLI::PositiveNumber);
  synth->add_option("--max-products", synth_opt.corpus.max_products)->check(CLI::PositiveNumber);
  synth->add_option("--multiline-prob", synth_opt.corpus.multiline_description_prob)
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--code-prob", synth_opt.corpus.code_presence_prob)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--adversarial-rate", synth_opt.corpus.adversarial_rate)
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--fn-description", synth_opt.corruption.fn_description)
      ->check(CLI::Range(0.0, 1.0));
  synth->add_option("--fn-code", synth_opt.corruption.fn_code)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--fn-quantity", synth_opt.corruption.fn_quantity)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--fn-price", synth_opt.corruption.fn_price)->check(CLI::Range(0.0, 1.0));
  synth->add_option("--ocr-noise", synth_opt.corruption.ocr_noise_rate)->check(CLI::Range(0.0, 1.0));
  synth->add_flag("--force", synth_opt.force, "Overwrite a non-empty output directory");

  // render
  RenderOptions render_opt;
  auto* render = app.add_subcommand("render", "Draw a result file as an SVG overlay");
  render->add_option("result", render_opt.result, "Result file")->required();
  render->add_option("ocr", render_opt.ocr, "OCR file")->required();
  render->add_option("-o,--out", render_opt.out, "SVG path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (decode->parsed()) {
    decode_opt.tagger = tagger == "import" ? TaggerKind::Import : TaggerKind::Heuristic;
    decode_opt.corrections = !no_corrections;
    return cmd_decode(decode_opt);
  }
  if (eval->parsed()) {
    eval_opt.mode = mode == "strict" ? MatchMode::StrictOcr : MatchMode::TagOnly;
    return cmd_eval(eval_opt, std::cout);
  }
  if (synth->parsed()) return cmd_synth(synth_opt);
  if (render->parsed()) return cmd_render(render_opt, std::cout);
  return 1;
}
