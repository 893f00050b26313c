#include "musculo/harness/csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace musculo::harness {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc()) throw std::runtime_error("format_number failed");
  return std::string(buf, res.ptr);
}

std::string CsvWriter::quote(std::string_view v) {
  if (v.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(v);
  std::string out = "\"";
  for (const char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void CsvWriter::separator() {
  if (row_started_) os_ << ',';
  row_started_ = true;
}

void CsvWriter::header(const std::vector<std::string>& names) {
  for (const auto& n : names) field(std::string_view(n));
  end_row();
}

CsvWriter& CsvWriter::field(double v) {
  separator();
  os_ << format_number(v);
  return *this;
}

CsvWriter& CsvWriter::field(std::int64_t v) {
  separator();
  os_ << v;
  return *this;
}

CsvWriter& CsvWriter::field(std::string_view v) {
  separator();
  os_ << quote(v);
  return *this;
}

void CsvWriter::end_row() {
  os_ << "\r\n";
  row_started_ = false;
}

}  // namespace musculo::harness
