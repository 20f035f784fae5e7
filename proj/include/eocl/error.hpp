#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace eocl {

/// Malformed or truncated binary payload (containers, serialized learners).
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset,
              std::optional<std::uint64_t> record = std::nullopt)
      : std::runtime_error(compose(what, offset, record)), offset_(offset), record_(record) {}

  std::uint64_t offset() const noexcept { return offset_; }
  std::optional<std::uint64_t> record_index() const noexcept { return record_; }

 private:
  static std::string compose(const std::string& what, std::uint64_t offset,
                             std::optional<std::uint64_t> record) {
    std::string s = what;
    if (record) s += " (record " + std::to_string(*record) + ")";
    s += " at byte offset " + std::to_string(offset);
    return s;
  }

  std::uint64_t offset_;
  std::optional<std::uint64_t> record_;
};

/// A factorization or iteration produced non-finite or indefinite values.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment or dataset configuration, detected before any run starts.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eocl
