#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace wtt {

// Diagnostic and gameplay events ("hit", "nan_reset", "warning", ...).
struct Event {
  std::int64_t step = 0;
  std::string kind;
  std::string detail;
};

class EventLog {
 public:
  void push(std::int64_t step, std::string kind, std::string detail = {}) {
    events_.push_back({step, std::move(kind), std::move(detail)});
  }
  const std::vector<Event>& events() const { return events_; }
  std::size_t count(const std::string& kind) const {
    std::size_t n = 0;
    for (const auto& e : events_) n += (e.kind == kind);
    return n;
  }
  void clear() { events_.clear(); }

 private:
  std::vector<Event> events_;
};

}  // namespace wtt
