#pragma once

// Comma-separated data files: header row, 17-significant-digit decimals
// (round-trip exact), '\n' line endings, no locale dependence.

#include <array>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <type_traits>
#include <vector>

namespace chaotic_market::csv {

inline std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v,
                                 std::chars_format::general, 17);
  return {buf.data(), res.ptr};
}

template <class Int>
  requires std::is_integral_v<Int>
std::string format_number(Int v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

// Accumulates a whole file in memory, then writes it in one go.
class Writer {
 public:
  explicit Writer(std::initializer_list<std::string_view> header) : columns_(header.size()) {
    bool first = true;
    for (auto h : header) {
      if (!first) out_ += ',';
      out_ += h;
      first = false;
    }
    out_ += '\n';
  }

  template <class... Cells>
  void row(const Cells&... cells) {
    static_assert(sizeof...(Cells) > 0);
    if (sizeof...(Cells) != columns_) throw std::logic_error("csv row width mismatch");
    bool first = true;
    ((append(cells, first)), ...);
    out_ += '\n';
  }

  const std::string& str() const noexcept { return out_; }

  void save(const std::filesystem::path& path) const {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f.write(out_.data(), static_cast<std::streamsize>(out_.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
  }

 private:
  template <class T>
  void append(const T& cell, bool& first) {
    if (!first) out_ += ',';
    first = false;
    if constexpr (std::is_same_v<T, bool>) {
      out_ += cell ? "1" : "0";
    } else if constexpr (std::is_arithmetic_v<T>) {
      out_ += format_number(cell);
    } else {
      out_ += std::string_view(cell);
    }
  }

  std::size_t columns_;
  std::string out_;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw std::out_of_range("no such column: " + std::string(name));
  }
};

inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    cells.emplace_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

// Reads a file written by Writer; throws on ragged rows.
inline Table read(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  Table t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("empty csv: " + path.string());
  t.header = split_line(line);
  while (std::getline(f, line)) {
    auto cells = split_line(line);
    if (cells.size() != t.header.size()) {
      throw std::runtime_error("ragged csv row in " + path.string());
    }
    t.rows.push_back(std::move(cells));
  }
  return t;
}

// Strict full-string parse; returns false on trailing junk or overflow.
template <class T>
bool parse_number(std::string_view text, T& out) {
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for reading: " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace chaotic_market::csv
