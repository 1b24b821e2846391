#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace sdagan {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid argument value (bad factor, empty dataset, non-power-of-two size, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A function under evaluation produced a non-finite value.
class EvaluationError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(std::uint64_t iteration, std::string loss_name)
      : Error("training diverged at iteration " + std::to_string(iteration) +
              ": loss '" + loss_name + "' is not finite"),
        iteration_(iteration),
        loss_name_(std::move(loss_name)) {}

  std::uint64_t iteration() const noexcept { return iteration_; }
  const std::string& loss_name() const noexcept { return loss_name_; }

 private:
  std::uint64_t iteration_;
  std::string loss_name_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed image file. `offset` is the byte position where parsing failed.
class ParseError : public Error {
 public:
  enum class Kind { unsupported_magic, bad_header, unsupported_maxval, short_payload };

  ParseError(Kind kind, std::size_t offset, const std::string& what)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), kind_(kind), offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::size_t offset_;
};

class CheckpointError : public Error {
 public:
  enum class Kind { bad_magic, version_mismatch, truncated, corrupt };

  CheckpointError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

}  // namespace sdagan
