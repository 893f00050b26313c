#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace musculo::harness {

/// Shortest decimal text that reads back to the same double.
std::string format_number(double v);

/// RFC 4180 writer: fields containing a comma, quote, CR or LF are quoted and
/// embedded quotes doubled; rows end with CRLF.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& os) : os_(os) {}

  void header(const std::vector<std::string>& names);
  CsvWriter& field(double v);
  CsvWriter& field(std::int64_t v);
  CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
  CsvWriter& field(std::string_view v);
  CsvWriter& field(const char* v) { return field(std::string_view(v)); }
  void end_row();

  static std::string quote(std::string_view v);

 private:
  void separator();

  std::ostream& os_;
  bool row_started_ = false;
};

}  // namespace musculo::harness
