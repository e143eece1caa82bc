#include "ttbell/bell.hpp"

#include <algorithm>

namespace ttbell {

CHFunction<TimetagSequence> ch_from_tuple_distance(const FunctionTuple& f) {
  if (!f.valid()) {
    throw std::invalid_argument("ch_from_tuple_distance: empty function tuple");
  }
  const double u = f.unit_radius();
  CHFunction<TimetagSequence> out;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    out.l[idx] = [f, u, idx](const TimetagSequence& r, const TimetagSequence& t) {
      return min_cost_value_split(f, idx, r, t, u);
    };
  }
  return out;
}

CHFunction<int> binary_max_diff_ch() {
  CHFunction<int> out;
  for (int idx = 0; idx < kNumSettingsPairs; ++idx) {
    out.l[idx] = [](const int& x, const int& y) {
      return static_cast<double>(std::max(x - y, 0));
    };
  }
  return out;
}

OutcomeFunc<TimetagSequence> timetag_count() {
  return [](const TimetagSequence& s) { return static_cast<double>(s.size()); };
}

OutcomeFunc<int> binary_count() {
  return [](const int& x) { return static_cast<double>(x); };
}

std::vector<TimetagSequence> enumerate_sequences(const std::vector<double>& grid,
                                                 std::size_t max_len) {
  std::vector<TimetagSequence> out{{}};
  std::vector<TimetagSequence> frontier{{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<TimetagSequence> next;
    for (const auto& s : frontier) {
      for (double g : grid) {
        if (!s.empty() && g < s.back()) continue;  // keep sorted, allow ties
        TimetagSequence e = s;
        e.push_back(g);
        next.push_back(e);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace ttbell
