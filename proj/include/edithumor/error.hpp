#pragma once

#include <stdexcept>
#include <string>

namespace edithumor {

/// Malformed or inconsistent input data (files, records, checkpoints).
/// The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure or violated tensor contract. The CLI maps these to
/// exit code 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage. The CLI maps these to exit code 1.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

#define EDITHUMOR_DEFINE_ERROR(Name, Base) \
  class Name : public Base {               \
   public:                                 \
    using Base::Base;                      \
  }

EDITHUMOR_DEFINE_ERROR(MalformedEdit, DataError);
EDITHUMOR_DEFINE_ERROR(ParseError, DataError);
EDITHUMOR_DEFINE_ERROR(MissingColumn, DataError);
EDITHUMOR_DEFINE_ERROR(EmptyCorpus, DataError);
EDITHUMOR_DEFINE_ERROR(FormatError, DataError);
EDITHUMOR_DEFINE_ERROR(DimMismatch, DataError);
EDITHUMOR_DEFINE_ERROR(VersionMismatch, DataError);
EDITHUMOR_DEFINE_ERROR(CorruptFile, DataError);
EDITHUMOR_DEFINE_ERROR(NoLabeledPairs, DataError);
EDITHUMOR_DEFINE_ERROR(EmptyInput, DataError);
EDITHUMOR_DEFINE_ERROR(IoError, DataError);

EDITHUMOR_DEFINE_ERROR(ShapeMismatch, NumericError);
EDITHUMOR_DEFINE_ERROR(DegenerateBatch, NumericError);
EDITHUMOR_DEFINE_ERROR(EmptyBatch, NumericError);
EDITHUMOR_DEFINE_ERROR(NonFiniteLoss, NumericError);

#undef EDITHUMOR_DEFINE_ERROR

}  // namespace edithumor
