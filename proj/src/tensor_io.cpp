#include "scwt/tensor_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <string>

#include "scwt/error.hpp"

namespace scwt {
namespace {

constexpr std::array<std::uint8_t, 4> kMagic{'S', 'C', 'W', 'T'};

template <class UInt>
void put_le(std::vector<std::uint8_t>& out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<std::uint8_t>((value >> (8 * i)) & 0xFFu));
  }
}

template <class UInt>
UInt get_le(const std::uint8_t* p) {
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    v |= static_cast<UInt>(static_cast<UInt>(p[i]) << (8 * i));
  }
  return v;
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::F32: return 4;
    case DType::F64: return 8;
  }
  throw FormatError("unknown dtype tag");
}

// Product of dims with overflow detection; nullopt on overflow.
std::optional<std::size_t> checked_product(std::span<const std::uint32_t> dims, std::size_t scale) {
  std::size_t n = scale;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::size_t>::max() / d) return std::nullopt;
    n *= d;
  }
  return n;
}

}  // namespace

std::size_t Tensor::element_count() const {
  auto n = checked_product(dims, 1);
  if (!n) throw FormatError("tensor dimensions overflow");
  return *n;
}

double Tensor::at(std::size_t i) const {
  return dtype == DType::F64 ? f64.at(i) : static_cast<double>(f32.at(i));
}

Tensor Tensor::make_f64(std::vector<std::uint32_t> dims, std::vector<double> values) {
  Tensor t;
  t.dtype = DType::F64;
  t.dims = std::move(dims);
  t.f64 = std::move(values);
  if (t.f64.size() != t.element_count()) throw ShapeError("tensor values do not match dims");
  return t;
}

Tensor Tensor::make_f32(std::vector<std::uint32_t> dims, std::vector<float> values) {
  Tensor t;
  t.dtype = DType::F32;
  t.dims = std::move(dims);
  t.f32 = std::move(values);
  if (t.f32.size() != t.element_count()) throw ShapeError("tensor values do not match dims");
  return t;
}

Tensor Tensor::from_matrix(const Eigen::MatrixXd& m) {
  std::vector<double> values(static_cast<std::size_t>(m.size()));
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) values[k++] = m(r, c);
  }
  return make_f64({static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
                  std::move(values));
}

Eigen::MatrixXd Tensor::to_matrix() const {
  if (rank() != 2) throw FormatError("expected a rank-2 tensor, got rank " + std::to_string(rank()));
  Eigen::MatrixXd m(dims[0], dims[1]);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = at(k++);
  }
  return m;
}

bool Tensor::operator==(const Tensor& other) const {
  if (dtype != other.dtype || dims != other.dims) return false;
  // Bitwise comparison so that NaN payloads and signed zeros round-trip.
  if (dtype == DType::F64) {
    return f64.size() == other.f64.size() &&
           std::memcmp(f64.data(), other.f64.data(), f64.size() * sizeof(double)) == 0;
  }
  return f32.size() == other.f32.size() &&
         std::memcmp(f32.data(), other.f32.data(), f32.size() * sizeof(float)) == 0;
}

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  if (tensor.rank() > std::numeric_limits<std::uint8_t>::max()) throw FormatError("rank exceeds 255");
  const std::size_t n = tensor.element_count();
  const std::size_t stored = tensor.dtype == DType::F64 ? tensor.f64.size() : tensor.f32.size();
  if (stored != n) throw ShapeError("tensor payload does not match dims");

  std::vector<std::uint8_t> out;
  out.reserve(kContainerPreamble + 4 * tensor.rank() + n * dtype_size(tensor.dtype));
  out.insert(out.end(), kMagic.begin(), kMagic.end());
  put_le<std::uint16_t>(out, kContainerVersion);
  out.push_back(static_cast<std::uint8_t>(tensor.dtype));
  out.push_back(static_cast<std::uint8_t>(tensor.rank()));
  for (auto d : tensor.dims) put_le<std::uint32_t>(out, d);
  if (tensor.dtype == DType::F64) {
    for (double v : tensor.f64) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  } else {
    for (float v : tensor.f32) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kContainerPreamble) throw FormatError("container shorter than header");
  if (!std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) throw FormatError("bad magic");
  const auto version = get_le<std::uint16_t>(bytes.data() + 4);
  if (version != kContainerVersion) {
    throw FormatError("unsupported container version " + std::to_string(version));
  }
  const auto tag = bytes[6];
  if (tag != static_cast<std::uint8_t>(DType::F32) && tag != static_cast<std::uint8_t>(DType::F64)) {
    throw FormatError("unknown dtype tag " + std::to_string(tag));
  }
  const auto dtype = static_cast<DType>(tag);
  const std::size_t rank = bytes[7];
  const std::size_t header = kContainerPreamble + 4 * rank;
  if (bytes.size() < header) throw FormatError("container truncated inside dims");

  std::vector<std::uint32_t> dims(rank);
  for (std::size_t i = 0; i < rank; ++i) dims[i] = get_le<std::uint32_t>(bytes.data() + 8 + 4 * i);

  const auto payload = checked_product(dims, dtype_size(dtype));
  if (!payload) throw FormatError("dims overflow");
  if (bytes.size() - header != *payload) {
    throw FormatError("payload length " + std::to_string(bytes.size() - header) + " does not match header (" +
                      std::to_string(*payload) + ")");
  }

  Tensor t;
  t.dtype = dtype;
  t.dims = std::move(dims);
  const std::uint8_t* p = bytes.data() + header;
  const std::size_t n = *payload / dtype_size(dtype);
  if (dtype == DType::F64) {
    t.f64.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.f64[i] = std::bit_cast<double>(get_le<std::uint64_t>(p + 8 * i));
  } else {
    t.f32.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.f32[i] = std::bit_cast<float>(get_le<std::uint32_t>(p + 4 * i));
  }
  return t;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifactError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

void write_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  write_file_bytes(path, encode_tensor(tensor));
}

Tensor read_tensor(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_tensor(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  write_tensor(path, Tensor::from_matrix(m));
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) { return read_tensor(path).to_matrix(); }

}  // namespace scwt
