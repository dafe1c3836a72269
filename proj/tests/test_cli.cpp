#include <catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "test_support.hpp"

using namespace receipt_kie;
namespace fs = std::filesystem;

namespace {

const std::string kCli = RKIE_CLI;
const fs::path kFixtures = RKIE_FIXTURES;

fs::path work_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() /
                       ("rkie_cli_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Run {
  int status;
  std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = kCli + " " + args + " 2> " + err.string() + " > " + (dir / "stdout.txt").string();
  const int raw = std::system(cmd.c_str());
  std::ifstream in(err);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = slurp(e.path());
  }
  return out;
}

}  // namespace

TEST_CASE("decode on the sample receipt fills codes, quantities and prices", "[cli]") {
  const fs::path dir = work_dir("fixture");
  const std::string args = "decode " + (kFixtures / "receipt.json").string() +
                           " --tagger import --predictions " +
                           (kFixtures / "receipt.predictions.json").string() + " -o " +
                           (dir / "out").string();
  REQUIRE(run(args, dir).status == 0);
  const DecodeResult r = parse_result(slurp(dir / "out" / "receipt.json"));
  REQUIRE(r.groups.size() == 2);
  const auto a0 = assign_entities(r.groups[0], r.doc);
  REQUIRE(a0.code == 4u);
  REQUIRE(a0.quantity == 5u);
  REQUIRE(a0.price == 7u);
  REQUIRE(corrected_entities(a0, r.doc) ==
          std::vector<EntityLabel>{EntityLabel::Code, EntityLabel::Quantity});
  REQUIRE(assign_entities(r.groups[1], r.doc).price == 11u);

  const std::string audit = slurp(dir / "out" / "audit.jsonl");
  REQUIRE(std::count(audit.begin(), audit.end(), '\n') == 3);

  fs::create_directories(dir / "truth");
  fs::copy_file(kFixtures / "receipt.truth.json", dir / "truth" / "receipt.json");
  fs::remove(dir / "out" / "audit.jsonl");
  const Run eval = run("eval " + (dir / "out").string() + " --truth " + (dir / "truth").string() +
                           " --mode strict --min-f1 whole_products=1 --json " +
                           (dir / "report.json").string(),
                       dir);
  REQUIRE(eval.status == 0);
  const json report = json::parse(slurp(dir / "report.json"));
  REQUIRE(report["results"]["whole_products"]["tp"] == 2);
  REQUIRE(slurp(dir / "stdout.txt").find("Whole products") != std::string::npos);
}

TEST_CASE("decode with and without corrections differs only in corrected labels", "[cli]") {
  const fs::path dir = work_dir("onoff");
  REQUIRE(run("synth -o " + (dir / "corpus").string() + " --seed 3 --docs 20", dir).status == 0);
  const std::string common = (dir / "corpus" / "ocr").string() + " --tagger import --predictions " +
                             (dir / "corpus" / "predictions").string();
  REQUIRE(run("decode " + common + " -o " + (dir / "on").string(), dir).status == 0);
  REQUIRE(run("decode " + common + " --no-corrections -o " + (dir / "off").string(), dir).status == 0);
  REQUIRE_FALSE(fs::exists(dir / "off" / "audit.jsonl"));

  std::size_t corrected = 0;
  for (const auto& e : fs::directory_iterator(dir / "off")) {
    const DecodeResult off = parse_result(slurp(e.path()));
    const DecodeResult on = parse_result(slurp(dir / "on" / e.path().filename()));
    REQUIRE(on.lines == off.lines);
    REQUIRE(on.groups == off.groups);
    for (std::size_t i = 0; i < on.doc.tokens.size(); ++i) {
      const Token &a = on.doc.tokens[i], &b = off.doc.tokens[i];
      if (a.source == LabelSource::Correction) {
        ++corrected;
        REQUIRE_FALSE(b.tagged());
        Token relabeled = a;
        relabeled.clear_label();
        REQUIRE(relabeled == b);
      } else {
        REQUIRE(a == b);
      }
    }
  }
  REQUIRE(corrected > 0);
}

TEST_CASE("decode edge cases", "[cli]") {
  const fs::path dir = work_dir("edges");
  fs::create_directories(dir / "empty");
  REQUIRE(run("decode " + (dir / "empty").string() + " -o " + (dir / "out").string(), dir).status == 0);

  fs::create_directories(dir / "bad");
  std::ofstream(dir / "bad" / "broken.json") << "{\"doc_id\": ";
  fs::copy_file(kFixtures / "receipt.json", dir / "bad" / "good.json");
  const Run r = run("decode " + (dir / "bad").string() + " -o " + (dir / "out2").string(), dir);
  REQUIRE(r.status == 1);
  REQUIRE(r.err.find("broken.json") != std::string::npos);
  REQUIRE(fs::exists(dir / "out2" / "good.json"));  // other files still processed

  REQUIRE(run("decode " + (dir / "bad").string() + " --tagger import -o " + (dir / "out3").string(), dir)
              .status == 1);
}

TEST_CASE("eval floors exit with status 2", "[cli]") {
  const fs::path dir = work_dir("floors");
  REQUIRE(run("synth -o " + (dir / "c").string() + " --docs 10 --fn-code 1", dir).status == 0);
  REQUIRE(run("decode " + (dir / "c" / "ocr").string() + " --tagger import --no-corrections --predictions " +
                  (dir / "c" / "predictions").string() + " -o " + (dir / "r").string(),
              dir)
              .status == 0);
  const std::string eval = "eval " + (dir / "r").string() + " --truth " + (dir / "c" / "truth").string();
  REQUIRE(run(eval + " --min-f1 codes=0.9", dir).status == 2);
  REQUIRE(run(eval + " --min-f1 descriptions=0.9", dir).status == 0);
  REQUIRE(run(eval + " --min-f1 codes", dir).status == 1);
}

TEST_CASE("synth is deterministic and guards its output directory", "[cli]") {
  const fs::path dir = work_dir("synth");
  const std::string args = " --seed 7 --docs 200";
  REQUIRE(run("synth -o " + (dir / "a").string() + args, dir).status == 0);
  REQUIRE(run("synth -o " + (dir / "b").string() + args, dir).status == 0);
  const auto a = tree(dir / "a"), b = tree(dir / "b");
  REQUIRE(a.size() == 601);
  REQUIRE(a == b);

  REQUIRE(run("synth -o " + (dir / "a").string() + args, dir).status == 1);
  REQUIRE(run("synth -o " + (dir / "a").string() + " --seed 7 --docs 5 --force", dir).status == 0);
  REQUIRE(tree(dir / "a").size() == 16);
  REQUIRE(run("synth -o " + (dir / "z").string() + " --docs 0", dir).status != 0);
  REQUIRE(run("synth -o " + (dir / "z").string() + " --fn-code 1.5", dir).status != 0);
}

TEST_CASE("render writes SVG and rejects mismatched inputs", "[cli]") {
  const fs::path dir = work_dir("render");
  REQUIRE(run("decode " + (kFixtures / "receipt.json").string() + " -o " + (dir / "out").string(), dir)
              .status == 0);
  const std::string result = (dir / "out" / "receipt.json").string();
  REQUIRE(run("render " + result + " " + (kFixtures / "receipt.json").string() + " -o " +
                  (dir / "r.svg").string(),
              dir)
              .status == 0);
  REQUIRE(slurp(dir / "r.svg").rfind("<svg", 0) == 0);

  REQUIRE(run("synth -o " + (dir / "c").string() + " --docs 1", dir).status == 0);
  const fs::path other = *fs::directory_iterator(dir / "c" / "ocr");
  REQUIRE(run("render " + result + " " + other.string(), dir).status == 1);
}
