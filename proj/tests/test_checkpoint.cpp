#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "fado/checkpoint.hpp"

using namespace fado;
namespace fs = std::filesystem;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.enc.d = 8;
  cfg.enc.layers = 1;
  cfg.enc.heads = 2;
  cfg.enc.vocab_size = Vocab::kNumReserved + 4;
  cfg.enc.max_positions = 16;
  cfg.enc.emotion_dim = 4;
  cfg.enc.seed = 11;
  cfg.flow.alpha = 0.3;
  cfg.flow.beta = 0.1;
  cfg.dict_mode = DictMode::token;
  return cfg;
}

Vocab small_vocab() {
  return Vocab::build({"ship it today", "ship again"}, Vocab::kNumReserved + 4);
}

struct TempFile {
  fs::path path;
  explicit TempFile(const char* name) : path(fs::temp_directory_path() / name) {}
  ~TempFile() { fs::remove(path); }
};

}  // namespace

TEST_CASE("checkpoint round trip") {
  ModelState m(small_config());
  // perturb away from the fresh init so the comparison is meaningful
  Rng rng(93);
  m.visit_params([&](const std::string&, Mat& p) {
    for (double& x : p.a) x += rng.uniform(-0.5, 0.5);
  });
  Vocab vocab = small_vocab();
  REQUIRE(vocab.size() == m.cfg.enc.vocab_size);

  TempFile file("fado_ckpt_test.bin");
  save_checkpoint(file.path.string(), m, vocab);
  CHECK(!fs::exists(file.path.string() + ".tmp"));

  Checkpoint loaded = load_checkpoint(file.path.string());

  CHECK(loaded.model.cfg.enc.d == 8);
  CHECK(loaded.model.cfg.enc.seed == 11);
  CHECK(loaded.model.cfg.flow.alpha == 0.3);
  CHECK(loaded.model.cfg.flow.beta == 0.1);
  CHECK(loaded.model.cfg.dict_mode == DictMode::token);
  CHECK(loaded.vocab.tokens() == vocab.tokens());

  std::vector<Mat*> want;
  m.visit_params([&](const std::string&, Mat& p) { want.push_back(&p); });
  size_t i = 0;
  loaded.model.visit_params([&](const std::string& name, Mat& p) {
    REQUIRE(i < want.size());
    INFO("tensor " << name);
    REQUIRE(max_abs_diff(p, *want[i]) == 0.0);
    ++i;
  });
  CHECK(i == want.size());
}

TEST_CASE("checkpoint rejects malformed input") {
  SECTION("missing file") {
    CHECK_THROWS_AS(load_checkpoint("/nonexistent/fado.bin"), std::runtime_error);
  }

  SECTION("vocab size mismatch on save") {
    ModelState m(small_config());
    Vocab tiny;  // reserved entries only
    TempFile file("fado_ckpt_mismatch.bin");
    CHECK_THROWS_AS(save_checkpoint(file.path.string(), m, tiny), std::invalid_argument);
  }

  SECTION("bad magic") {
    TempFile file("fado_ckpt_magic.bin");
    std::ofstream(file.path, std::ios::binary) << "NOTACKPTxxxxxxxxxxxxxxxx";
    CHECK_THROWS_AS(load_checkpoint(file.path.string()), std::runtime_error);
  }

  SECTION("truncation and trailing bytes") {
    ModelState m(small_config());
    Vocab vocab = small_vocab();
    TempFile file("fado_ckpt_trunc.bin");
    save_checkpoint(file.path.string(), m, vocab);

    auto bytes_of = [&] {
      std::ifstream in(file.path, std::ios::binary);
      return std::string(std::istreambuf_iterator<char>(in), {});
    };
    std::string full = bytes_of();

    std::ofstream(file.path, std::ios::binary | std::ios::trunc)
        << full.substr(0, full.size() - 40);
    CHECK_THROWS_AS(load_checkpoint(file.path.string()), std::runtime_error);

    std::ofstream(file.path, std::ios::binary | std::ios::trunc) << full << 'x';
    CHECK_THROWS_AS(load_checkpoint(file.path.string()), std::runtime_error);

    std::ofstream(file.path, std::ios::binary | std::ios::trunc) << full;
    CHECK_NOTHROW(load_checkpoint(file.path.string()));
  }

  SECTION("unsupported version") {
    ModelState m(small_config());
    Vocab vocab = small_vocab();
    TempFile file("fado_ckpt_version.bin");
    save_checkpoint(file.path.string(), m, vocab);
    std::fstream patch(file.path, std::ios::binary | std::ios::in | std::ios::out);
    patch.seekp(8);
    uint32_t bogus = 999;
    patch.write(reinterpret_cast<const char*>(&bogus), sizeof(bogus));
    patch.close();
    CHECK_THROWS_AS(load_checkpoint(file.path.string()), std::runtime_error);
  }
}

TEST_CASE("model config json round trip") {
  ModelConfig cfg = small_config();
  ModelConfig back = model_config_from_json(model_config_to_json(cfg));
  CHECK(back.enc.d == cfg.enc.d);
  CHECK(back.enc.layers == cfg.enc.layers);
  CHECK(back.enc.heads == cfg.enc.heads);
  CHECK(back.enc.vocab_size == cfg.enc.vocab_size);
  CHECK(back.enc.max_positions == cfg.enc.max_positions);
  CHECK(back.enc.emotion_dim == cfg.enc.emotion_dim);
  CHECK(back.enc.seed == cfg.enc.seed);
  CHECK(back.num_strategies == cfg.num_strategies);
  CHECK(back.dfs_hidden_layers == cfg.dfs_hidden_layers);
  CHECK(back.flow.alpha == cfg.flow.alpha);
  CHECK(back.flow.beta == cfg.flow.beta);
  CHECK(back.dict_mode == cfg.dict_mode);
}
