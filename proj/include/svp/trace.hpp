#pragma once

#include <algorithm>
#include <string>
#include <vector>

namespace svp {

// Records which model stages ran, for tests that pin down the train/test
// asymmetry and the training-only flow path.
struct CallTrace {
  std::vector<std::string> events;

  void record(std::string e) { events.push_back(std::move(e)); }
  bool contains(const std::string& e) const {
    return std::find(events.begin(), events.end(), e) != events.end();
  }
  size_t count(const std::string& e) const {
    return static_cast<size_t>(std::count(events.begin(), events.end(), e));
  }
  void clear() { events.clear(); }
};

}  // namespace svp
