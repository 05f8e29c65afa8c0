#include "pinnrc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace pinnrc {

namespace {

constexpr char kMagic[6] = {'P', 'I', 'N', 'N', 'R', 'C'};
constexpr std::uint64_t kTanhActivation = 0;

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
 public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  std::uint64_t u64() {
    if (pos_ + 8 > bytes_.size()) throw std::runtime_error("checkpoint truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  const std::string& bytes_;
  std::size_t pos_ = 8;
};

}  // namespace

std::string checkpoint_bytes(const Mlp& net) {
  std::string out(kMagic, sizeof(kMagic));
  out.push_back(static_cast<char>(kCheckpointVersion & 0xffu));
  out.push_back(static_cast<char>(kCheckpointVersion >> 8));
  put_u64(out, net.layer_sizes().size());
  for (int s : net.layer_sizes()) put_u64(out, static_cast<std::uint64_t>(s));
  put_u64(out, kTanhActivation);
  for (double v : net.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  return out;
}

Mlp mlp_from_checkpoint_bytes(const std::string& bytes) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw std::runtime_error("not a checkpoint (bad magic)");
  }
  const auto version = static_cast<std::uint16_t>(static_cast<unsigned char>(bytes[6]) |
                                                  static_cast<unsigned char>(bytes[7]) << 8);
  if (version != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
  }
  Reader in(bytes);
  const std::uint64_t n = in.u64();
  if (n < 2 || n > 1024) throw std::runtime_error("checkpoint has invalid layer count");
  std::vector<int> sizes;
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint64_t s = in.u64();
    if (s == 0 || s > (1u << 20)) throw std::runtime_error("checkpoint has invalid layer size");
    sizes.push_back(static_cast<int>(s));
  }
  if (in.u64() != kTanhActivation) throw std::runtime_error("unknown activation id");
  Mlp net(sizes);
  for (auto& v : net.values()) v = std::bit_cast<double>(in.u64());
  if (!in.done()) throw std::runtime_error("checkpoint has trailing bytes");
  return net;
}

void save_checkpoint(const Mlp& net, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  const std::string bytes = checkpoint_bytes(net);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("failed to write checkpoint " + path.string());
}

Mlp load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  return mlp_from_checkpoint_bytes(bytes);
}

}  // namespace pinnrc
