#pragma once

#include <stdexcept>
#include <string>

namespace geonet {

// Bad configuration, flag values, or malformed spec documents.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// File system failures: missing files, unwritable paths.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Invalid data: parse failures, shape mismatches, non-finite values.
class DataError : public std::runtime_error {
public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Training could not place a node and the fallback policy forbids accepting one.
class StalledError : public std::runtime_error {
public:
  explicit StalledError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace geonet
