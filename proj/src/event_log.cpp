#include "soqn/event_log.hpp"

#include <fmt/format.h>

namespace soqn {

std::string format_float(double v) {
  if (v == 0.0) return "0";  // folds -0
  return fmt::format("{:.6g}", v);
}

void EventLog::append(double time, std::string kind, std::string origin, std::string details) {
  records_.push_back(LogRecord{time, records_.size(), std::move(kind),
                               origin.empty() ? std::string("-") : std::move(origin),
                               std::move(details)});
}

std::string format_line(const LogRecord& r) {
  return fmt::format("{}\t{}\t{}\t{}\t{}", format_float(r.time), r.sequence, r.kind, r.origin,
                     r.details);
}

std::string EventLog::to_text() const {
  std::string out;
  for (const auto& r : records_) {
    out += format_line(r);
    out.push_back('\n');
  }
  return out;
}

}  // namespace soqn
