#pragma once

#include <stdexcept>
#include <string>

namespace snl {

// Every failure the library reports derives from snl::Error so callers (the
// CLI in particular) can map them to exit codes in one place.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration value or out-of-range parameter.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error(what), row_(row) {}

  /// 1-based data row (0 means the header).
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class LabelError : public Error {
 public:
  using Error::Error;
};

class SamplingError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

// A precondition on the data (not on a parameter) was violated, e.g. a batch
// identity with a single sample handed to a triplet loss.
class ContractError : public Error {
 public:
  using Error::Error;
};

class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace snl
