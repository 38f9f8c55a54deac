#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace chaotic_market {

// A map iterate left the unit square (or became NaN).
class MapRangeError : public std::range_error {
 public:
  using std::range_error::range_error;
};

// Total money drifted from N * m0 beyond the allowed relative tolerance.
class ConservationError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Configuration document could not be parsed or failed validation.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, std::size_t line, const std::string& message)
      : std::runtime_error(format(field, line, message)),
        field_(std::move(field)),
        line_(line),
        message_(message) {}

  // Empty when the error is not tied to a single key.
  const std::string& field() const noexcept { return field_; }
  // 1-based; 0 when the error is not tied to a line (e.g. missing keys).
  std::size_t line() const noexcept { return line_; }
  // Without the line/field prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  static std::string format(const std::string& field, std::size_t line,
                            const std::string& message) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!field.empty()) out += "'" + field + "': ";
    return out + message;
  }

  std::string field_;
  std::size_t line_;
  std::string message_;
};

}  // namespace chaotic_market
