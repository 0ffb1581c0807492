#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pcfgset {

// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnknownTokenError : public Error {
 public:
  explicit UnknownTokenError(std::string piece)
      : Error("unknown token '" + piece + "'"), piece_(std::move(piece)) {}
  const std::string& piece() const noexcept { return piece_; }

 private:
  std::string piece_;
};

class UnexpectedEndError : public Error {
 public:
  UnexpectedEndError() : Error("unexpected end of sequence") {}
};

class UnexpectedTokenError : public Error {
 public:
  UnexpectedTokenError(std::size_t position, const std::string& text)
      : Error("unexpected token '" + text + "' at position " + std::to_string(position)),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class ArityMismatchError : public Error {
 public:
  using Error::Error;
};

class EmptyArgumentError : public Error {
 public:
  using Error::Error;
};

class ExhaustedUniqueArgumentsError : public Error {
 public:
  using Error::Error;
};

class EmptyAnchorCellError : public Error {
 public:
  using Error::Error;
};

class DegenerateCovarianceError : public Error {
 public:
  using Error::Error;
};

class SingularCovarianceError : public Error {
 public:
  using Error::Error;
};

class InsufficientPositivesError : public Error {
 public:
  using Error::Error;
};

class EmptySideError : public Error {
 public:
  using Error::Error;
};

class LineCountMismatchError : public Error {
 public:
  LineCountMismatchError(std::size_t expected, std::size_t actual)
      : Error("line count mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(actual)) {}
};

class LengthMismatchError : public Error {
 public:
  using Error::Error;
};

class ZeroVectorError : public Error {
 public:
  using Error::Error;
};

class MissingTokenError : public Error {
 public:
  explicit MissingTokenError(const std::string& token)
      : Error("token '" + token + "' missing from embedding table") {}
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

class ChildExitedError : public Error {
 public:
  using Error::Error;
};

class ProtocolViolationError : public Error {
 public:
  using Error::Error;
};

}  // namespace pcfgset
