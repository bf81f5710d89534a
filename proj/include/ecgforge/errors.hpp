#pragma once

#include <stdexcept>
#include <string>

namespace ecgforge {

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedFormat : FormatError {
  using FormatError::FormatError;
};

struct ChecksumError : std::runtime_error {
  int channel;
  ChecksumError(int ch, const std::string& msg)
      : std::runtime_error(msg), channel(ch) {}
};

struct MissingLeadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct LabelError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptySelectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnknownLocalizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct StratificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RecordTooShortError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UpsampleNotSupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MetricUndefinedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedLayerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ecgforge
