#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfn {

enum class ErrorKind {
  dimension,
  contract,
  numeric,
  capacity,
  empty_context,
  data,
  io,
  config,
  not_checkpoint,
  version_mismatch,
  corrupt_header,
  truncated_blob,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::contract: return "contract error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::capacity: return "capacity error";
    case ErrorKind::empty_context: return "empty context";
    case ErrorKind::data: return "data error";
    case ErrorKind::io: return "io error";
    case ErrorKind::config: return "config error";
    case ErrorKind::not_checkpoint: return "not a checkpoint";
    case ErrorKind::version_mismatch: return "version mismatch";
    case ErrorKind::corrupt_header: return "corrupt header";
    case ErrorKind::truncated_blob: return "truncated blob";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), detail_(what) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// The message without the kind prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace pfn
