#include "cmr/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace cmr {

namespace {

constexpr char kMagic[8] = {'C', 'M', 'R', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

void write_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, 8);
  return d;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint32_t len = read_u32(in);
  std::string s(len, '\0');
  in.read(s.data(), len);
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const std::string& config_fingerprint) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
  out.write(kMagic, 8);
  write_u32(out, kVersion);
  write_string(out, config_fingerprint);
  write_u32(out, static_cast<std::uint32_t>(params.dim));
  write_u32(out, static_cast<std::uint32_t>(params.gcn_layers));
  write_u32(out, static_cast<std::uint32_t>(params.heads));

  const auto& tokens = params.vocab.tokens();
  write_u32(out, static_cast<std::uint32_t>(tokens.size()));
  for (const auto& t : tokens) write_string(out, t);

  const auto named = params.named_parameters();
  write_u32(out, static_cast<std::uint32_t>(named.size()));
  for (const auto& [name, tensor] : named) {
    write_string(out, name);
    write_u32(out, static_cast<std::uint32_t>(tensor->shape.size()));
    for (int e : tensor->shape) write_u32(out, static_cast<std::uint32_t>(e));
    for (double v : tensor->data) write_f64(out, v);
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const std::uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }

  Checkpoint ckpt;
  ckpt.config_fingerprint = read_string(in);
  ModelConfig config;
  config.dim = static_cast<int>(read_u32(in));
  config.gcn_layers = static_cast<int>(read_u32(in));
  config.heads = static_cast<int>(read_u32(in));

  const std::uint32_t vocab_size = read_u32(in);
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::uint32_t i = 0; i < vocab_size; ++i) tokens.push_back(read_string(in));
  const Vocabulary vocab = Vocabulary::from_tokens(tokens);

  ckpt.params = ModelParams::init(config, vocab, 0);
  auto named = ckpt.params.named_parameters();
  const std::uint32_t param_count = read_u32(in);
  if (param_count != named.size()) {
    throw std::runtime_error("checkpoint: parameter count mismatch");
  }
  for (std::uint32_t i = 0; i < param_count; ++i) {
    const std::string name = read_string(in);
    if (name != named[i].first) {
      throw std::runtime_error("checkpoint: unexpected parameter '" + name + "' (wanted '" +
                               named[i].first + "')");
    }
    const std::uint32_t ndims = read_u32(in);
    std::vector<int> shape;
    for (std::uint32_t k = 0; k < ndims; ++k) shape.push_back(static_cast<int>(read_u32(in)));
    if (shape != named[i].second->shape) {
      throw std::runtime_error("checkpoint: shape mismatch for parameter '" + name + "'");
    }
    for (auto& v : named[i].second->data) v = read_f64(in);
  }
  return ckpt;
}

}  // namespace cmr
