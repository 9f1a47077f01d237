#pragma once

#include "ffc/error.hpp"
#include <stdexcept>
#include <string>
#include <vector>

namespace ffc {

class IoError : public Error {
 public:
  using Error::Error;
};

std::string slurp(const std::string& path);
void spit(const std::string& path, const std::string& content);

// Canonical float formatting for CSV output: 9 significant digits.
std::string fmt_g9(double v);

// Comma split without quoting; the toolkit's CSV columns never contain commas.
std::vector<std::string> split_csv(const std::string& line);

// Splits into lines, dropping a trailing empty line and any '\r'.
std::vector<std::string> split_lines(const std::string& text);

double parse_double(const std::string& s);
long long parse_int(const std::string& s);

}  // namespace ffc
