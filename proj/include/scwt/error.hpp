#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scwt {

/// Base of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
};

/// Argument outside its documented domain.
class ValidationError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "validation"; }
};

/// Matrix or tensor dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "shape"; }
};

/// Malformed tensor container or artifact.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

class GeometryError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "geometry"; }
};

class AtlasError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "atlas"; }
};

/// A resolution-matrix diagonal entry is not strictly positive.
class DegeneracyError : public Error {
 public:
  DegeneracyError(std::size_t source_index, const std::string& what)
      : Error(what), source_index_(source_index) {}
  const char* kind() const noexcept override { return "degeneracy"; }
  std::size_t source_index() const noexcept { return source_index_; }

 private:
  std::size_t source_index_;
};

/// Non-finite value produced during computation. `layer` is -1 when not
/// attributable to a network layer.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, int layer = -1)
      : Error(what), layer_(layer) {}
  const char* kind() const noexcept override { return "numeric"; }
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

/// Configuration document violates the schema.
class SchemaError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "schema"; }
};

/// A pipeline stage input is missing on disk.
class MissingArtifactError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "missing_artifact"; }
};

}  // namespace scwt
