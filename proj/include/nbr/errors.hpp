#pragma once

#include <stdexcept>
#include <string>

namespace nbr {

// Error taxonomy mirrors the CLI exit codes: 2 config, 3 data/validation, 4 I/O.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Canonical/prediction file problems: bad version line, corrupted payload.
class FormatError : public DataError {
 public:
  using DataError::DataError;
};

// Prediction-file validation failure with a machine-checkable class.
class ValidationError : public DataError {
 public:
  enum class Code {
    checksum_mismatch,    // file was produced against a different vocabulary
    missing_instances,    // cohort keys absent from the file
    unexpected_instance,  // record keyed by a (user, target) not in the cohort
    duplicate_item,       // repeated item id within one record
    unknown_item,         // item outside the vocabulary
    capacity_exceeded,    // record longer than the declared basket size
    bad_record,           // malformed record line or score list
  };

  ValidationError(Code code, const std::string& what) : DataError(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

const char* validation_code_name(ValidationError::Code code);

}  // namespace nbr
