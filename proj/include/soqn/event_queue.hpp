#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <vector>

namespace soqn {

/// Virtual clock plus a (time, sequence) ordered action queue.
class EventQueue {
 public:
  using Action = std::function<void()>;

  double now() const noexcept { return now_; }

  /// Throws Error(past_schedule) when at < now(). Returns the sequence number.
  std::uint64_t schedule(double at, Action action);

  /// Runs every action with time <= t_end, including ones scheduled while
  /// running, then advances the clock to t_end. Returns the number executed.
  std::size_t run_until(double t_end);

  bool empty() const noexcept { return queue_.empty(); }
  std::size_t pending() const noexcept { return queue_.size(); }
  double next_time() const;

 private:
  struct Entry {
    double at;
    std::uint64_t sequence;
    Action action;
  };
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      if (a.at != b.at) return a.at > b.at;
      return a.sequence > b.sequence;
    }
  };

  double now_ = 0.0;
  std::uint64_t next_sequence_ = 0;
  std::priority_queue<Entry, std::vector<Entry>, Later> queue_;
};

}  // namespace soqn
