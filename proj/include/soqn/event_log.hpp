#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace soqn {

struct LogRecord {
  double time = 0.0;
  std::uint64_t sequence = 0;
  std::string kind;
  std::string origin;
  std::string details;

  bool operator==(const LogRecord&) const = default;
};

/// Append-only structured log. Each record renders as one tab-separated line:
/// time, sequence, kind, origin, details.
class EventLog {
 public:
  void append(double time, std::string kind, std::string origin, std::string details);

  const std::vector<LogRecord>& records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  std::string to_text() const;

 private:
  std::vector<LogRecord> records_;
};

std::string format_line(const LogRecord& r);

/// Six significant digits, the fixed float format used in all outputs.
std::string format_float(double v);

}  // namespace soqn
