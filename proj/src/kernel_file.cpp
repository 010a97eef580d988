#include "mfcnn/kernel_file.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mfcnn/errors.hpp"

namespace mfcnn {

namespace {

constexpr char kMagic[4] = {'M', 'F', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

void put(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& b) : b_(b) {}
  std::uint64_t get(int bytes) {
    if (pos_ + bytes > b_.size()) throw InvalidArgument("kernel file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b_[pos_++]) << (8 * i);
    return v;
  }
  double get_f64() { return std::bit_cast<double>(get(8)); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

}  // namespace

const char* kernel_kind_name(KernelKind k) {
  switch (k) {
    case KernelKind::orthogonal: return "orthogonal";
    case KernelKind::delta: return "delta";
    case KernelKind::gaussian: return "gaussian";
  }
  return "unknown";
}

KernelKind parse_kernel_kind(const std::string& name) {
  if (name == "orthogonal") return KernelKind::orthogonal;
  if (name == "delta") return KernelKind::delta;
  if (name == "gaussian") return KernelKind::gaussian;
  throw InvalidArgument("unknown kernel kind '" + name + "'");
}

std::vector<std::uint8_t> encode_kernel_file(const KernelFile& f) {
  const ConvKernel& k = f.kernel;
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  put(out, f.header.version, 4);
  put(out, static_cast<std::uint32_t>(f.header.kind), 4);
  put(out, static_cast<std::uint32_t>(k.rank()), 4);
  put(out, static_cast<std::uint32_t>(k.k_size()), 4);
  put(out, static_cast<std::uint32_t>(k.c_in()), 4);
  put(out, static_cast<std::uint32_t>(k.c_out()), 4);
  put(out, std::bit_cast<std::uint64_t>(f.header.gain), 8);
  put(out, f.header.seed, 8);
  put(out, f.header.rng_algorithm.size(), 4);
  out.insert(out.end(), f.header.rng_algorithm.begin(), f.header.rng_algorithm.end());
  put(out, k.weights().size(), 8);
  for (double w : k.weights()) put(out, std::bit_cast<std::uint64_t>(w), 8);
  return out;
}

KernelFile decode_kernel_file(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw InvalidArgument("not a kernel file (bad magic)");
  Reader r(bytes);
  r.get(4);
  KernelFile f;
  f.header.version = static_cast<std::uint32_t>(r.get(4));
  if (f.header.version != kVersion)
    throw InvalidArgument("unsupported kernel file version " + std::to_string(f.header.version));
  const auto kind = static_cast<std::uint32_t>(r.get(4));
  if (kind > 2) throw InvalidArgument("unknown kernel kind code");
  f.header.kind = static_cast<KernelKind>(kind);
  const std::uint64_t rank = r.get(4), ks = r.get(4), cin = r.get(4), cout = r.get(4);
  if (rank != 1 && rank != 2) throw InvalidArgument("kernel file rank must be 1 or 2");
  if (ks == 0 || cin == 0 || cout == 0) throw InvalidArgument("kernel file has an empty dimension");
  // bound every factor by the file size before multiplying or allocating
  const std::uint64_t limit = bytes.size() / 8;
  if (ks > limit || cin > limit || cout > limit)
    throw InvalidArgument("kernel file shape exceeds its payload");
  f.header.gain = r.get_f64();
  f.header.seed = r.get(8);
  const auto len = r.get(4);
  if (len > r.remaining()) throw InvalidArgument("kernel file truncated");
  for (std::uint64_t i = 0; i < len; ++i) f.header.rng_algorithm.push_back(static_cast<char>(r.get(1)));
  const std::uint64_t count = r.get(8);
  const std::uint64_t taps = rank == 1 ? ks : ks * ks;
  if (taps > limit || taps * cin > limit || taps * cin * cout != count)
    throw InvalidArgument("kernel file payload length does not match declared shape");
  if (count > r.remaining() / 8 || r.remaining() != count * 8)
    throw InvalidArgument("kernel file payload size mismatch");
  f.kernel = ConvKernel(static_cast<int>(rank), static_cast<int>(ks), static_cast<int>(cin),
                        static_cast<int>(cout));
  for (auto& w : f.kernel.weights()) w = r.get_f64();
  return f;
}

void write_kernel_file(const std::string& path, const KernelFile& f) {
  const auto bytes = encode_kernel_file(f);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open '" + path + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("write to '" + path + "' failed");
}

KernelFile read_kernel_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_kernel_file(bytes);
}

}  // namespace mfcnn
