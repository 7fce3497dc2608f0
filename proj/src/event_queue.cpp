#include "soqn/event_queue.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "soqn/error.hpp"

namespace soqn {

std::uint64_t EventQueue::schedule(double at, Action action) {
  if (!std::isfinite(at) || at < now_) {
    throw Error(Errc::past_schedule,
                "cannot schedule at " + std::to_string(at) + " before " + std::to_string(now_));
  }
  const std::uint64_t seq = next_sequence_++;
  queue_.push(Entry{at, seq, std::move(action)});
  return seq;
}

std::size_t EventQueue::run_until(double t_end) {
  std::size_t executed = 0;
  while (!queue_.empty() && queue_.top().at <= t_end) {
    Entry e = queue_.top();
    queue_.pop();
    now_ = e.at;
    e.action();
    ++executed;
  }
  if (t_end > now_) now_ = t_end;
  return executed;
}

double EventQueue::next_time() const {
  return queue_.empty() ? std::numeric_limits<double>::infinity() : queue_.top().at;
}

}  // namespace soqn
