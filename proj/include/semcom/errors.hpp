#pragma once

#include <stdexcept>
#include <string>

namespace semcom {

// Invalid arguments or configuration values caught before any compute.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// A required path (dataset root, bundle file, results dir) does not exist.
class NotFoundError : public std::runtime_error {
 public:
  explicit NotFoundError(const std::string& msg) : std::runtime_error(msg) {}
};

// A file exists but its contents are not what the format requires.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss; message carries step diagnostics.
class TrainingDivergence : public std::runtime_error {
 public:
  explicit TrainingDivergence(const std::string& msg) : std::runtime_error(msg) {}
};

// All-zero or otherwise degenerate input where a scale factor is undefined.
class DegenerateInputError : public std::runtime_error {
 public:
  explicit DegenerateInputError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace semcom
