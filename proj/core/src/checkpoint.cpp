#include "minigrpo/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "minigrpo/errors.hpp"

namespace minigrpo {

namespace {

constexpr char kMagic[8] = {'C', 'R', 'L', 'P', 'O', 'L', '0', '1'};

void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_f64_le(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

double get_f64_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

}  // namespace

void save_checkpoint(const Policy& policy, const CheckpointMeta& meta,
                     const std::filesystem::path& path) {
  nlohmann::json header;
  header["tokens"] = policy.vocab().tokens;
  header["k"] = policy.context_window();
  header["h"] = policy.hidden_dim();
  header["e"] = policy.embed_dim();
  header["seed"] = meta.seed;
  header["stage"] = meta.stage;
  header["step"] = meta.step;
  const std::string header_str = header.dump();

  std::string blob;
  blob.reserve(16 + header_str.size() + policy.param_count() * 8);
  blob.append(kMagic, sizeof(kMagic));
  put_u32_le(blob, static_cast<std::uint32_t>(header_str.size()));
  blob.append(header_str);
  for (double w : policy.weights()) put_f64_le(blob, w);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " + tmp.string());
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  if (bytes.size() < sizeof(kMagic) + 4) {
    throw IoError("checkpoint truncated: " + path.string());
  }
  if (std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw IoError("bad checkpoint magic in " + path.string());
  }
  const std::uint32_t header_len = get_u32_le(bytes.data() + sizeof(kMagic));
  const std::size_t header_off = sizeof(kMagic) + 4;
  if (bytes.size() < header_off + header_len) {
    throw IoError("checkpoint header truncated: " + path.string());
  }

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(header_off),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(header_off + header_len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError("bad checkpoint header in " + path.string() + ": " + e.what());
  }

  Vocab vocab;
  int k = 0, h = 0, e = 0;
  CheckpointMeta meta;
  try {
    vocab = Vocab::from_tokens(header.at("tokens").get<std::vector<std::string>>());
    k = header.at("k").get<int>();
    h = header.at("h").get<int>();
    e = header.at("e").get<int>();
    meta.seed = header.at("seed").get<std::uint64_t>();
    meta.stage = header.at("stage").get<std::string>();
    meta.step = header.at("step").get<std::int64_t>();
  } catch (const std::exception& ex) {
    throw IoError("bad checkpoint header in " + path.string() + ": " + ex.what());
  }

  Policy policy(vocab, k, e, h);
  const std::size_t payload_off = header_off + header_len;
  const std::size_t expect = policy.param_count() * 8;
  if (bytes.size() - payload_off != expect) {
    throw IoError("checkpoint payload size mismatch in " + path.string() +
                  ": expected " + std::to_string(expect) + " bytes for " +
                  std::to_string(policy.param_count()) + " params, got " +
                  std::to_string(bytes.size() - payload_off));
  }
  std::vector<double>& w = policy.weights();
  for (std::size_t i = 0; i < w.size(); ++i) {
    w[i] = get_f64_le(bytes.data() + payload_off + i * 8);
  }
  return LoadedCheckpoint{std::move(policy), std::move(meta)};
}

}  // namespace minigrpo
