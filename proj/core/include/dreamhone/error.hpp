#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dreamhone {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor or layer dimensions do not line up.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A named layer, session or record does not exist.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Caller-supplied data or configuration is invalid.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A persisted file is malformed. `offset()` is the byte position where
/// decoding stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

}  // namespace dreamhone
