#pragma once

#include <stdexcept>
#include <string>

namespace ddcam {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or unsupported file contents (NPY header, manifest JSON, ...).
class FormatError : public Error {
 public:
  using Error::Error;
};

// Operand extents do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Argument outside the operation's domain (partition count, unit index, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// The prediction oracle returned different classes for the same active set.
class NondeterminismError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddcam
