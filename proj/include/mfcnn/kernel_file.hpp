#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfcnn/kernels.hpp"

namespace mfcnn {

enum class KernelKind : std::uint32_t { orthogonal = 0, delta = 1, gaussian = 2 };

const char* kernel_kind_name(KernelKind k);
KernelKind parse_kernel_kind(const std::string& name);

// Little-endian layout:
//   "MFCK" | u32 version | u32 kind | u32 rank | u32 k_size | u32 c_in | u32 c_out
//   | f64 gain | u64 seed | u32 len + RNG name bytes | u64 count | count × f64
// Payload order is [β, β′, i, j], row-major.
struct KernelFileHeader {
  std::uint32_t version = 1;
  KernelKind kind = KernelKind::orthogonal;
  double gain = 1.0;
  std::uint64_t seed = 0;
  std::string rng_algorithm;
};

struct KernelFile {
  KernelFileHeader header;
  ConvKernel kernel;
};

std::vector<std::uint8_t> encode_kernel_file(const KernelFile& f);
KernelFile decode_kernel_file(const std::vector<std::uint8_t>& bytes);

void write_kernel_file(const std::string& path, const KernelFile& f);
KernelFile read_kernel_file(const std::string& path);

}  // namespace mfcnn
