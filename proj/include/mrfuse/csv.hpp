#ifndef MRFUSE_CSV_HPP
#define MRFUSE_CSV_HPP

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace mrfuse::csv {

/// Six significant digits, '.' decimal point.
inline std::string number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline void write_row(std::ostream& os, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) os << ',';
    os << field(row[i]);
  }
  os << "\r\n";
}

}  // namespace mrfuse::csv

#endif  // MRFUSE_CSV_HPP
