#pragma once

#include <stdexcept>
#include <string>

namespace dcbf {

// Every failure the library reports derives from Error. The CLI maps
// ConfigError to exit code 2 and DataError to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class PlacementInfeasible : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class ShapeMismatch : public Error {
 public:
  using Error::Error;
};

class StaleTape : public Error {
 public:
  using Error::Error;
};

class ShortHistory : public Error {
 public:
  using Error::Error;
};

class CorruptSnapshot : public DataError {
 public:
  using DataError::DataError;
};

class CorruptCheckpoint : public DataError {
 public:
  using DataError::DataError;
};

class VersionMismatch : public DataError {
 public:
  using DataError::DataError;
};

class CorruptDataset : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateDataset : public DataError {
 public:
  using DataError::DataError;
};

class MissingCheckpoint : public DataError {
 public:
  using DataError::DataError;
};

class IoError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace dcbf
