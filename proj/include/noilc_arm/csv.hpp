#pragma once

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <string>
#include <string_view>

#include "noilc_arm/errors.hpp"

namespace noilc_arm {

// 17 significant digits round-trips a double exactly. snprintf under the
// default "C" locale always uses '.' as the decimal separator.
inline std::string format_number(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// Comma-separated rows with '\n' line endings, independent of platform.
class CsvWriter {
 public:
  explicit CsvWriter(const std::string& path)
      : out_(path, std::ios::binary | std::ios::trunc), path_(path) {
    if (!out_) throw Error("cannot open " + path + " for writing");
  }

  void header(std::initializer_list<std::string_view> cols) {
    bool first = true;
    for (auto c : cols) {
      if (!first) out_ << ',';
      out_ << c;
      first = false;
    }
    out_ << '\n';
  }

  template <typename... Ts>
  void row(const Ts&... values) {
    bool first = true;
    ((write_cell(values, first)), ...);
    out_ << '\n';
  }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing " + path_);
  }

 private:
  void write_cell(double v, bool& first) {
    if (!first) out_ << ',';
    out_ << format_number(v);
    first = false;
  }
  void write_cell(long long v, bool& first) {
    if (!first) out_ << ',';
    out_ << v;
    first = false;
  }
  void write_cell(int v, bool& first) { write_cell(static_cast<long long>(v), first); }
  void write_cell(std::size_t v, bool& first) { write_cell(static_cast<long long>(v), first); }

  std::ofstream out_;
  std::string path_;
};

}  // namespace noilc_arm
