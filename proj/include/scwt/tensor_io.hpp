#pragma once

// SCWT tensor container: a single dense tensor with a fixed little-endian
// header.
//
//   offset  size      field
//   0       4         magic "SCWT"
//   4       2         format version (u16)
//   6       1         dtype tag (1 = f32, 2 = f64)
//   7       1         rank (u8)
//   8       4 * rank  dims (u32 each)
//   ...               payload, row-major
//
// The payload must be exactly product(dims) * sizeof(dtype) bytes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace scwt {

enum class DType : std::uint8_t { F32 = 1, F64 = 2 };

inline constexpr std::uint16_t kContainerVersion = 1;
inline constexpr std::size_t kContainerPreamble = 8;

struct Tensor {
  DType dtype = DType::F64;
  std::vector<std::uint32_t> dims;
  std::vector<double> f64;  // populated when dtype == F64
  std::vector<float> f32;   // populated when dtype == F32

  std::size_t rank() const noexcept { return dims.size(); }
  std::size_t element_count() const;

  /// Element i in row-major order, widened to double.
  double at(std::size_t i) const;

  static Tensor make_f64(std::vector<std::uint32_t> dims, std::vector<double> values);
  static Tensor make_f32(std::vector<std::uint32_t> dims, std::vector<float> values);

  /// Rank-2 f64 tensor holding `m` in row-major order.
  static Tensor from_matrix(const Eigen::MatrixXd& m);

  /// Requires rank 2; f32 payloads are widened.
  Eigen::MatrixXd to_matrix() const;

  bool operator==(const Tensor& other) const;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);

/// Throws FormatError on bad magic, unknown version or dtype, dimension
/// overflow, or a payload whose length does not match the header.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);

/// Writes through a temporary file and renames it into place.
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);

/// Throws MissingArtifactError when the file does not exist.
Tensor read_tensor(const std::filesystem::path& path);

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

/// Reads a whole file. Throws MissingArtifactError when it does not exist.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Atomic write of raw bytes (temporary file + rename).
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace scwt
