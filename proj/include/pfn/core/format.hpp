#pragma once

#include <charconv>
#include <cmath>
#include <string>

namespace pfn {

/// Shortest decimal text that round-trips the double exactly; "NA" for non-finite values.
inline std::string fmt_real(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace pfn
