#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace groundkit {

/// Input dimensions disagree (mask sizes, matrix shapes, vector lengths).
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grounded-markup text violates the response grammar.
class MarkupError : public std::runtime_error {
 public:
  MarkupError(std::string message, std::size_t offset)
      : std::runtime_error(std::move(message)), offset_(offset) {}
  /// Byte offset into the input where the violation was detected.
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Identifier token does not match the name_XYY / name_XYYZZ grammar.
class IdentifierError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file's structure or a JSON record violates its documented schema.
class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failure (missing file, short read, bad magic).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Embedding lookup or embedding-file failure.
class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed sample aborted evaluation; carries the offending id.
class EvalError : public std::runtime_error {
 public:
  EvalError(std::string message, std::string sample_id)
      : std::runtime_error(std::move(message)), sample_id_(std::move(sample_id)) {}
  const std::string& sample_id() const noexcept { return sample_id_; }

 private:
  std::string sample_id_;
};

}  // namespace groundkit
