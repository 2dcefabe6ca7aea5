#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace olstec {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape mismatch, invalid parameter, or otherwise malformed input.
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// The weight normal equations could not be factorized (empty mask with zero
/// regularization, or non-finite data).
class SingularSystemError : public Error {
 public:
  explicit SingularSystemError(const std::string& what)
      : Error(what), slice_index_(-1) {}

  SingularSystemError(const std::string& what, std::int64_t slice_index)
      : Error(what + " (slice " + std::to_string(slice_index) + ")"),
        slice_index_(slice_index) {}

  std::int64_t slice_index() const { return slice_index_; }

 private:
  std::int64_t slice_index_;
};

/// An SPD solve failed or produced non-finite values inside a factor update.
class ConditioningError : public Error {
 public:
  ConditioningError(const std::string& what, char axis, std::int64_t unit,
                    std::int64_t slice_index)
      : Error(what + " (" + (axis == 'r' ? "row " : "column ") +
              std::to_string(unit) + ", slice " + std::to_string(slice_index) +
              ")"),
        axis_(axis),
        unit_(unit),
        slice_index_(slice_index) {}

  char axis() const { return axis_; }
  std::int64_t unit() const { return unit_; }
  std::int64_t slice_index() const { return slice_index_; }

 private:
  char axis_;
  std::int64_t unit_;
  std::int64_t slice_index_;
};

/// Factor norms exceeded the divergence guard of a gradient tracker.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A metric was requested against a reference for which it is undefined.
class UndefinedMetricError : public Error {
 public:
  using Error::Error;
};

/// Bad magic, version, or layout in a serialized stream.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Read or write failure; carries the slice index when one is known.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what, std::int64_t slice_index = -1)
      : Error(slice_index >= 0
                  ? what + " (slice " + std::to_string(slice_index) + ")"
                  : what),
        slice_index_(slice_index) {}

  std::int64_t slice_index() const { return slice_index_; }

 private:
  std::int64_t slice_index_;
};

}  // namespace olstec
