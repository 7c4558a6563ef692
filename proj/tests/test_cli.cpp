#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <json.hpp>

#include "fado/checkpoint.hpp"
#include "fado/corpus.hpp"
#include "fado/emotion.hpp"
#include "fado/eval.hpp"
#include "fado/examples.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace fado;

namespace {

std::string fixture(const std::string& name) {
  return std::string(FADO_FIXTURE_DIR) + "/" + name;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

struct CliRunner {
  std::string bin;
  fs::path root;
  int calls = 0;

  CliRunner() {
    const char* b = std::getenv("FADO_CLI_BIN");
    REQUIRE(b != nullptr);
    bin = b;
    root = fs::temp_directory_path() /
           ("fado-cli-test-" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
  }

  ~CliRunner() { fs::remove_all(root); }

  struct Result {
    int code = -1;
    std::string out;
    std::string err;
  };

  Result run(const std::string& args) {
    fs::path out_file = root / ("stdout-" + std::to_string(calls));
    fs::path err_file = root / ("stderr-" + std::to_string(calls));
    ++calls;
    std::string cmd =
        bin + " " + args + " > " + out_file.string() + " 2> " + err_file.string();
    int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_file);
    r.err = read_file(err_file);
    return r;
  }

  std::string path(const std::string& rel) { return (root / rel).string(); }
};

// tiny-model flags shared by the training runs
const char* kTinyModel =
    " --set model.d=16 --set model.layers=1 --set model.heads=2"
    " --set model.max_positions=64 --set train.epochs=1 --set train.batch_size=4"
    " --set train.lr=1e-3 --set train.warmup_steps=2";

}  // namespace

TEST_CASE("cli pipeline on the bundled fixture") {
  CliRunner cli;

  auto ingest = cli.run("ingest --corpus " + fixture("sample_esconv.json") + " --out " +
                        cli.path("ing"));
  INFO(ingest.err);
  REQUIRE(ingest.code == 0);
  json stats = read_json(cli.path("ing/stats.json"));
  CHECK(stats["dialogues"] == 2);
  CHECK(stats["utterances"] == 12);
  CHECK(read_json(cli.path("ing/rejections.json")).empty());
  json manifest = read_json(cli.path("ing/manifest.json"));
  CHECK(manifest["command"] == "ingest");
  CHECK(manifest["conversations"] == 2);
  CHECK(manifest.contains("generated_at"));

  // config file + flag override: the flag value must win and land in the manifest
  {
    std::ofstream cfg(cli.path("split.cfg"));
    cfg << "# sweep defaults\n"
        << "split.train = 0.5\n"
        << "split.dev = 0.5\n"
        << "split.test = 0.25\n";
  }
  auto split = cli.run("split --corpus " + cli.path("ing/corpus.json") + " --out " +
                       cli.path("sp") + " --seed 7 --config " + cli.path("split.cfg") +
                       " --set split.dev=0.25");
  INFO(split.err);
  REQUIRE(split.code == 0);
  json split_manifest = read_json(cli.path("sp/manifest.json"));
  CHECK(split_manifest["config"]["split.dev"] == "0.25");
  CHECK(split_manifest["seed"] == 7);
  auto train_convs = corpus_from_canonical(read_json(cli.path("sp/train.json")));
  auto dev_convs = read_json(cli.path("sp/dev.json"));
  auto test_convs = read_json(cli.path("sp/test.json"));
  CHECK(train_convs.size() + dev_convs.size() + test_convs.size() == 2);

  auto train1 = cli.run("train --corpus " + cli.path("ing/corpus.json") + " --out " +
                        cli.path("r1") + " --seed 13" + kTinyModel);
  INFO(train1.err);
  REQUIRE(train1.code == 0);
  auto train2 = cli.run("train --corpus " + cli.path("ing/corpus.json") + " --out " +
                        cli.path("r2") + " --seed 13" + kTinyModel);
  REQUIRE(train2.code == 0);
  CHECK(read_file(cli.path("r1/log.jsonl")) == read_file(cli.path("r2/log.jsonl")));
  CHECK(read_file(cli.path("r1/checkpoint-final.bin")) ==
        read_file(cli.path("r2/checkpoint-final.bin")));

  auto seeded = cli.run("train --corpus " + cli.path("ing/corpus.json") + " --out " +
                        cli.path("r3") + " --seed 14" + kTinyModel);
  REQUIRE(seeded.code == 0);
  CHECK(read_file(cli.path("r1/log.jsonl")) != read_file(cli.path("r3/log.jsonl")));

  json log_line = json::parse(read_file(cli.path("r1/log.jsonl")).substr(
      0, read_file(cli.path("r1/log.jsonl")).find('\n')));
  CHECK(log_line["step"] == 1);
  CHECK(log_line.contains("l1"));
  CHECK(log_line.contains("grad_norm"));
  CHECK_FALSE(log_line.contains("generated_at"));

  Checkpoint ckpt = load_checkpoint(cli.path("r1/checkpoint-final.bin"));
  CHECK(ckpt.model.cfg.enc.d == 16);

  auto gen = cli.run("generate --checkpoint " + cli.path("r1/checkpoint-final.bin") +
                     " --corpus " + cli.path("ing/corpus.json") + " --means " +
                     cli.path("r1/means.json") + " --out " + cli.path("gen") +
                     " --seed 5 --set decode.max_new_tokens=8");
  INFO(gen.err);
  REQUIRE(gen.code == 0);
  std::istringstream preds_in(read_file(cli.path("gen/predictions.jsonl")));
  size_t pred_lines = 0;
  for (std::string line; std::getline(preds_in, line);) {
    json p = json::parse(line);
    CHECK(p["strategy"].get<int>() >= 0);
    CHECK(p["strategy"].get<int>() < 8);
    ++pred_lines;
  }
  CHECK(pred_lines == 5);

  auto eval = cli.run("evaluate --checkpoint " + cli.path("r1/checkpoint-final.bin") +
                      " --corpus " + cli.path("ing/corpus.json") + " --means " +
                      cli.path("r1/means.json") + " --predictions " +
                      cli.path("gen/predictions.jsonl") + " --out " + cli.path("ev"));
  INFO(eval.err);
  REQUIRE(eval.code == 0);
  json report = read_json(cli.path("ev/report.json"));
  CHECK(report["acc"].get<double>() >= 0.0);
  CHECK(report["ppl"].get<double>() > 1.0);
  CHECK(report["distribution"].size() == 6);
  CHECK(read_file(cli.path("ev/distribution.csv")).rfind("interval,", 0) == 0);

  // gold-as-predictions self comparison
  {
    Checkpoint ck = load_checkpoint(cli.path("r1/checkpoint-final.bin"));
    auto convs = corpus_from_canonical(read_json(cli.path("ing/corpus.json")));
    LexiconEmotionScorer scorer(ck.vocab, ck.model.cfg.enc.emotion_dim, ck.model.cfg.enc.seed);
    SurveyMeans means = compute_survey_means(convs);
    auto examples = extract_examples(convs, scorer, means);
    std::ofstream out(cli.path("gold.jsonl"));
    for (const auto& ex : examples) {
      Prediction p{example_key(ex), static_cast<int>(*ex.target.strategy), ex.target.text};
      out << prediction_to_json(p).dump() << "\n";
    }
  }
  auto self_eval = cli.run("evaluate --checkpoint " + cli.path("r1/checkpoint-final.bin") +
                           " --corpus " + cli.path("ing/corpus.json") + " --predictions " +
                           cli.path("gold.jsonl") + " --out " + cli.path("ev-gold"));
  INFO(self_eval.err);
  REQUIRE(self_eval.code == 0);
  json gold_report = read_json(cli.path("ev-gold/report.json"));
  CHECK(gold_report["acc"].get<double>() == 1.0);
  CHECK(gold_report["bleu"]["b-2"].get<double>() == 1.0);
  CHECK(gold_report["rouge_l"].get<double>() == 1.0);

  auto afb = cli.run("analyze-feedback --corpus " + cli.path("ing/corpus.json") + " --out " +
                     cli.path("afb"));
  REQUIRE(afb.code == 0);
  json summary = read_json(cli.path("afb/summary.json"));
  CHECK(summary["negative_stress_fraction"].get<double>() == 0.5);
  CHECK(summary["examples"] == 5);
  std::istringstream csv_in(read_file(cli.path("afb/feedback.csv")));
  size_t csv_lines = 0;
  for (std::string line; std::getline(csv_in, line);) ++csv_lines;
  CHECK(csv_lines == 6);

  auto adist = cli.run("analyze-distribution --corpus " + cli.path("ing/corpus.json") +
                       " --out " + cli.path("adist"));
  REQUIRE(adist.code == 0);
  json dist = read_json(cli.path("adist/distribution.json"));
  REQUIRE(dist["distribution"].size() == 6);
  for (const auto& row : dist["distribution"]) {
    double sum = 0.0;
    for (const auto& v : row) sum += v.get<double>();
    CHECK((sum == 0.0 || std::abs(sum - 1.0) < 1e-9));
  }
}

TEST_CASE("cli exit codes") {
  CliRunner cli;

  CHECK(cli.run("train --corpus /nonexistent/corpus.json --out " + cli.path("x")).code == 2);
  CHECK(cli.run("no-such-command").code == 2);
  CHECK(cli.run("train --out " + cli.path("x")).code == 2);

  auto ingest = cli.run("ingest --corpus " + fixture("sample_esconv.json") + " --out " +
                        cli.path("ing"));
  REQUIRE(ingest.code == 0);
  std::string corpus = cli.path("ing/corpus.json");

  CHECK(cli.run("train --corpus " + corpus + " --out " + cli.path("x") +
                " --set train.lr=-1").code == 2);
  CHECK(cli.run("train --corpus " + corpus + " --out " + cli.path("x") +
                " --set bogus.key=1").code == 2);
  CHECK(cli.run("train --corpus " + corpus + " --out " + cli.path("x") +
                " --set model.dict_mode=bananas").code == 2);

  std::ofstream(cli.path("garbage.json")) << "not json";
  CHECK(cli.run("split --corpus " + cli.path("garbage.json") + " --out " +
                cli.path("x")).code == 1);
  std::ofstream(cli.path("empty.json")) << "[]";
  CHECK(cli.run("split --corpus " + cli.path("empty.json") + " --out " +
                cli.path("x")).code == 1);

  auto missing_pred =
      cli.run("evaluate --checkpoint /nope.bin --corpus " + corpus + " --predictions " +
              cli.path("nope.jsonl") + " --out " + cli.path("x"));
  CHECK(missing_pred.code == 2);
}

TEST_CASE("cli env var path fallback") {
  CliRunner cli;
  std::string cmd = "FADO_CORPUS=" + fixture("sample_esconv.json") + " " + cli.bin +
                    " ingest --out " + cli.path("ing-env") + " > " +
                    cli.path("env-out.txt") + " 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(cli.path("ing-env/corpus.json")));
}
