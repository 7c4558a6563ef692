#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fado/model.hpp"
#include "fado/tokenizer.hpp"

namespace fado {

// Binary checkpoint: 8-byte magic, u32 format version, u64 header length,
// JSON header (model config, vocab tokens, tensor manifest), then raw
// float64 tensor payloads in visit_params order.
inline constexpr char kCheckpointMagic[8] = {'F', 'A', 'D', 'O', 'C', 'K', 'P', 'T'};
inline constexpr uint32_t kCheckpointVersion = 1;

inline nlohmann::json model_config_to_json(const ModelConfig& cfg) {
  return nlohmann::json{{"d", cfg.enc.d},
                        {"layers", cfg.enc.layers},
                        {"heads", cfg.enc.heads},
                        {"vocab_size", cfg.enc.vocab_size},
                        {"max_positions", cfg.enc.max_positions},
                        {"emotion_dim", cfg.enc.emotion_dim},
                        {"seed", cfg.enc.seed},
                        {"num_strategies", cfg.num_strategies},
                        {"dfs_hidden_layers", cfg.dfs_hidden_layers},
                        {"alpha", cfg.flow.alpha},
                        {"beta", cfg.flow.beta},
                        {"dict_mode", dict_mode_name(cfg.dict_mode)}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig cfg;
  cfg.enc.d = j.at("d").get<int>();
  cfg.enc.layers = j.at("layers").get<int>();
  cfg.enc.heads = j.at("heads").get<int>();
  cfg.enc.vocab_size = j.at("vocab_size").get<int>();
  cfg.enc.max_positions = j.at("max_positions").get<int>();
  cfg.enc.emotion_dim = j.at("emotion_dim").get<int>();
  cfg.enc.seed = j.at("seed").get<uint64_t>();
  cfg.num_strategies = j.at("num_strategies").get<int>();
  cfg.dfs_hidden_layers = j.at("dfs_hidden_layers").get<int>();
  cfg.flow.alpha = j.at("alpha").get<double>();
  cfg.flow.beta = j.at("beta").get<double>();
  cfg.dict_mode = dict_mode_from_name(j.at("dict_mode").get<std::string>());
  cfg.validate();
  return cfg;
}

namespace detail {

template <typename T>
void write_pod(std::ostream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return value;
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, ModelState& model, const Vocab& vocab) {
  if (vocab.size() != model.cfg.enc.vocab_size)
    throw std::invalid_argument("save_checkpoint: vocab size does not match the model");

  nlohmann::json manifest = nlohmann::json::array();
  model.visit_params([&](const std::string& name, Mat& p) {
    manifest.push_back({{"name", name}, {"rows", p.rows}, {"cols", p.cols}});
  });
  nlohmann::json header{{"config", model_config_to_json(model.cfg)},
                        {"vocab", vocab.tokens()},
                        {"tensors", manifest}};
  const std::string header_bytes = header.dump();

  namespace fs = std::filesystem;
  fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("save_checkpoint: cannot open " + tmp.string());
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    detail::write_pod(out, kCheckpointVersion);
    detail::write_pod(out, static_cast<uint64_t>(header_bytes.size()));
    out.write(header_bytes.data(), static_cast<std::streamsize>(header_bytes.size()));
    model.visit_params([&](const std::string&, Mat& p) {
      out.write(reinterpret_cast<const char*>(p.a.data()),
                static_cast<std::streamsize>(p.a.size() * sizeof(double)));
    });
    if (!out) throw std::runtime_error("save_checkpoint: write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

struct Checkpoint {
  ModelState model;
  Vocab vocab;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);

  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_checkpoint: not a checkpoint file");
  uint32_t version = detail::read_pod<uint32_t>(in);
  if (version != kCheckpointVersion)
    throw std::runtime_error("load_checkpoint: unsupported version " + std::to_string(version));

  uint64_t header_len = detail::read_pod<uint64_t>(in);
  std::string header_bytes(header_len, '\0');
  in.read(header_bytes.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  nlohmann::json header = nlohmann::json::parse(header_bytes);

  Checkpoint ckpt;
  ckpt.model = ModelState(model_config_from_json(header.at("config")));
  ckpt.vocab = Vocab::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  if (ckpt.vocab.size() != ckpt.model.cfg.enc.vocab_size)
    throw std::runtime_error("load_checkpoint: vocab size does not match the config");

  const nlohmann::json& manifest = header.at("tensors");
  size_t next = 0;
  ckpt.model.visit_params([&](const std::string& name, Mat& p) {
    if (next >= manifest.size()) throw std::runtime_error("checkpoint: tensor manifest too short");
    const nlohmann::json& entry = manifest[next++];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("rows").get<int>() != p.rows || entry.at("cols").get<int>() != p.cols)
      throw std::runtime_error("checkpoint: tensor mismatch at " + name);
    in.read(reinterpret_cast<char*>(p.a.data()),
            static_cast<std::streamsize>(p.a.size() * sizeof(double)));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);
  });
  if (next != manifest.size()) throw std::runtime_error("checkpoint: tensor manifest too long");
  char probe;
  if (in.read(&probe, 1)) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

}  // namespace fado
