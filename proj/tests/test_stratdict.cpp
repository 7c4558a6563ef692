#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>

#include "fado/stratdict.hpp"

using namespace fado;

namespace {

ModelConfig tiny_config(uint64_t seed = 5) {
  ModelConfig cfg;
  cfg.enc.d = 8;
  cfg.enc.layers = 1;
  cfg.enc.heads = 2;
  cfg.enc.vocab_size = 64;
  cfg.enc.max_positions = 64;
  cfg.enc.emotion_dim = 4;
  cfg.enc.seed = seed;
  return cfg;
}

Mat encode(ModelState& m, const StrategyDictionary& dict, const Vocab& vocab, Strategy s) {
  ad::Tape t;
  nn::ParamBinder bind(t);
  return t.val(encode_description(t, bind, m, dict, vocab, s));
}

}  // namespace

TEST_CASE("dictionary lookup is total with the shipped texts") {
  StrategyDictionary dict;
  CHECK(dict.lookup(Strategy::question)
            .rfind("Asking for information related to the problem", 0) == 0);
  CHECK(dict.lookup(Strategy::others).rfind("Exchange pleasantries", 0) == 0);
  CHECK(dict.lookup(Strategy::reflection) ==
        "Articulate and describe the help-seeker's feelings.");
  for (int i = 0; i < kNumStrategies; ++i) CHECK_FALSE(dict.lookup(strategy_from_id(i)).empty());
}

TEST_CASE("dictionary round-trips through its JSON file bit-exactly") {
  StrategyDictionary dict;
  dict.set(Strategy::others, "Anything else, including small talk.");

  json j = dict.to_json();
  StrategyDictionary back = StrategyDictionary::from_json(j);
  CHECK(back == dict);
  CHECK(back.to_json() == j);

  auto path = std::filesystem::temp_directory_path() / "fado_dict_test.json";
  dict.save(path.string());
  StrategyDictionary loaded = StrategyDictionary::from_file(path.string());
  CHECK(loaded == dict);
  for (int i = 0; i < kNumStrategies; ++i) {
    Strategy s = strategy_from_id(i);
    CHECK(loaded.lookup(s) == dict.lookup(s));
  }
  std::filesystem::remove(path);
}

TEST_CASE("dictionary validation") {
  StrategyDictionary dict;
  CHECK_THROWS_AS(dict.set(Strategy::question, ""), std::invalid_argument);
  json j = dict.to_json();
  j.erase("Information");
  CHECK_THROWS_WITH(StrategyDictionary::from_json(j),
                    Catch::Matchers::ContainsSubstring("Information"));
  json j2 = dict.to_json();
  j2["Information"] = "";
  CHECK_THROWS_AS(StrategyDictionary::from_json(j2), std::invalid_argument);
}

TEST_CASE("description encoding") {
  StrategyDictionary dict;
  std::vector<std::string> texts;
  for (int i = 0; i < kNumStrategies; ++i) texts.push_back(dict.lookup(strategy_from_id(i)));
  Vocab vocab = Vocab::build(texts, 64);
  ModelState m(tiny_config());

  SECTION("row count is description token count plus CLS") {
    for (int i = 0; i < kNumStrategies; ++i) {
      Strategy s = strategy_from_id(i);
      Mat v = encode(m, dict, vocab, s);
      CHECK(v.rows == static_cast<int>(vocab.encode(dict.lookup(s)).size()) + 1);
      CHECK(v.cols == m.cfg.enc.d);
    }
  }
  SECTION("same strategy and parameters give identical V") {
    Mat a = encode(m, dict, vocab, Strategy::question);
    Mat b = encode(m, dict, vocab, Strategy::question);
    CHECK(max_abs_diff(a, b) == 0.0);
  }
  SECTION("question and information encode differently") {
    Mat q = encode(m, dict, vocab, Strategy::question);
    Mat i = encode(m, dict, vocab, Strategy::information);
    bool differ = q.rows != i.rows;
    if (!differ) differ = max_abs_diff(q, i) > 1e-12;
    CHECK(differ);
  }
  SECTION("parameters matter: different seed changes V") {
    ModelState other(tiny_config(9));
    Mat a = encode(m, dict, vocab, Strategy::question);
    Mat b = encode(other, dict, vocab, Strategy::question);
    CHECK(max_abs_diff(a, b) > 0.0);
  }
  SECTION("out-of-vocabulary descriptions fall back to UNK") {
    Vocab tiny = Vocab::build({"hello there"}, 16);
    Mat v = encode(m, dict, tiny, Strategy::reflection);
    CHECK(v.rows ==
          static_cast<int>(word_tokenize(dict.lookup(Strategy::reflection)).size()) + 1);
    CHECK(all_finite(v));
  }
}

TEST_CASE("token-granularity mode") {
  StrategyDictionary dict;
  Vocab vocab = Vocab::build({"placeholder text"}, 32);
  ModelConfig cfg = tiny_config();
  cfg.dict_mode = DictMode::token;
  ModelState m(cfg);

  SECTION("V is CLS plus one marker row") {
    for (int i = 0; i < kNumStrategies; ++i) {
      Mat v = encode(m, dict, vocab, strategy_from_id(i));
      CHECK(v.rows == 2);
      CHECK(v.cols == m.cfg.enc.d);
    }
  }
  SECTION("marker rows separate strategies deterministically") {
    Mat a = encode(m, dict, vocab, Strategy::question);
    Mat b = encode(m, dict, vocab, Strategy::suggestions);
    CHECK(max_abs_diff(a, b) > 1e-12);
    CHECK(max_abs_diff(a, encode(m, dict, vocab, Strategy::question)) == 0.0);
  }
  SECTION("mode names round-trip") {
    CHECK(dict_mode_from_name("description") == DictMode::description);
    CHECK(dict_mode_from_name("token") == DictMode::token);
    CHECK(std::string(dict_mode_name(DictMode::token)) == "token");
    CHECK_THROWS_AS(dict_mode_from_name("sentence"), std::invalid_argument);
  }
}
