#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace probseg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates a documented precondition.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A segment or index falls outside the range it must lie in.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Malformed file content. `where()` is the offending value index or line
/// number (1-based for lines), or npos when not applicable.
class FormatError : public Error {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  FormatError(const std::string& what, std::size_t where = npos) : Error(what), where_(where) {}
  std::size_t where() const noexcept { return where_; }

 private:
  std::size_t where_;
};

/// Filesystem failure (open, write, rename).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace probseg
