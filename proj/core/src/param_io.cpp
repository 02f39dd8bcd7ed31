#include "det6d/param_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "det6d/error.hpp"

namespace det6d::nn {

namespace {

constexpr char kMagic[8] = {'D', 'E', 'T', '6', 'D', 'N', 'N', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "parameter container assumes a little-endian host");

class Writer {
 public:
  void u32(std::uint32_t v) { raw(&v, sizeof v); }
  void f64(double v) { raw(&v, sizeof v); }
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    bytes.insert(bytes.end(), b, b + n);
  }
  std::vector<std::uint8_t> bytes;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, sizeof v);
    return v;
  }
  double f64() {
    double v;
    raw(&v, sizeof v);
    return v;
  }
  void raw(void* p, std::size_t n) {
    if (pos_ + n > bytes_.size()) {
      throw Error(ErrorKind::kTruncatedFile, "parameter container ends at byte " + std::to_string(pos_));
    }
    std::memcpy(p, bytes_.data() + pos_, n);
    pos_ += n;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_params(std::span<const MlpParams> mlps) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(mlps.size()));
  for (const auto& mlp : mlps) {
    w.u32(static_cast<std::uint32_t>(mlp.layers.size()));
    for (const auto& l : mlp.layers) {
      w.u32(static_cast<std::uint32_t>(l.out_width()));
      w.u32(static_cast<std::uint32_t>(l.in_width()));
      w.u32(static_cast<std::uint32_t>(l.activation));
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) w.f64(l.weights.data()[i]);
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) w.f64(l.bias[i]);
    }
  }
  return std::move(w.bytes);
}

std::vector<MlpParams> deserialize_params(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  char magic[8];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorKind::kParseError, "not a parameter container (bad magic)");
  }
  if (const auto v = r.u32(); v != kVersion) {
    throw Error(ErrorKind::kParseError, "unsupported container version " + std::to_string(v));
  }
  std::vector<MlpParams> out(r.u32());
  for (auto& mlp : out) {
    mlp.layers.resize(r.u32());
    for (auto& l : mlp.layers) {
      const auto rows = r.u32();
      const auto cols = r.u32();
      const auto act = r.u32();
      if (act > 2) throw Error(ErrorKind::kParseError, "unknown activation " + std::to_string(act));
      l.activation = static_cast<Activation>(act);
      l.weights.resize(rows, cols);
      l.bias.resize(rows);
      for (Eigen::Index i = 0; i < l.weights.size(); ++i) l.weights.data()[i] = r.f64();
      for (Eigen::Index i = 0; i < l.bias.size(); ++i) l.bias[i] = r.f64();
    }
    mlp.validate();
  }
  if (!r.done()) throw Error(ErrorKind::kParseError, "trailing bytes after parameter container");
  return out;
}

void write_params(const std::filesystem::path& path, std::span<const MlpParams> mlps) {
  const auto bytes = serialize_params(mlps);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIoError, "cannot open " + path.string() + " for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(ErrorKind::kIoError, "short write to " + path.string());
}

std::vector<MlpParams> read_params(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIoError, "cannot open " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                        std::istreambuf_iterator<char>());
  return deserialize_params(bytes);
}

}  // namespace det6d::nn
