#include "ttbell/distance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ttbell {

namespace {
void require_sorted(const TimetagSequence& s, const char* who) {
  if (!is_sorted_sequence(s)) {
    throw std::invalid_argument(std::string(who) + ": sequence not sorted");
  }
}
}  // namespace

double matching_cost(const FunctionTuple& f, int pair_index, const Matching& m,
                     const TimetagSequence& r, const TimetagSequence& t) {
  require_sorted(r, "matching_cost");
  require_sorted(t, "matching_cost");
  double penalty = 0.0;
  std::size_t prev_i = 0, prev_j = 0;
  bool first = true;
  for (const auto& [i, j] : m.pairs) {
    if (i >= r.size() || j >= t.size()) {
      throw std::invalid_argument("matching_cost: pair index out of range");
    }
    if (!first && (i <= prev_i || j <= prev_j)) {
      throw std::invalid_argument("matching_cost: matching is not monotone");
    }
    prev_i = i;
    prev_j = j;
    first = false;
    penalty += f.eval(pair_index, t[j] - r[i]);
  }
  return static_cast<double>(r.size() - m.pairs.size()) + penalty;
}

DistanceResult min_cost(const FunctionTuple& f, int pair_index,
                        const TimetagSequence& r, const TimetagSequence& t) {
  require_sorted(r, "min_cost");
  require_sorted(t, "min_cost");
  const std::size_t m = r.size(), n = t.size();
  // c[k][l]: cost using the first k entries of r and l of t.
  std::vector<std::vector<double>> c(m + 1, std::vector<double>(n + 1, 0.0));
  enum : unsigned char { kMatch, kDropT, kDropR };
  std::vector<std::vector<unsigned char>> from(
      m + 1, std::vector<unsigned char>(n + 1, kDropT));
  for (std::size_t k = 1; k <= m; ++k) {
    c[k][0] = static_cast<double>(k);
    from[k][0] = kDropR;
  }
  for (std::size_t k = 1; k <= m; ++k) {
    for (std::size_t l = 1; l <= n; ++l) {
      const double match = c[k - 1][l - 1] + f.eval(pair_index, t[l - 1] - r[k - 1]);
      const double drop_t = c[k][l - 1];
      const double drop_r = c[k - 1][l] + 1.0;
      // Tie preference: match, then drop from t, then drop from r.
      if (match <= drop_t && match <= drop_r) {
        c[k][l] = match;
        from[k][l] = kMatch;
      } else if (drop_t <= drop_r) {
        c[k][l] = drop_t;
        from[k][l] = kDropT;
      } else {
        c[k][l] = drop_r;
        from[k][l] = kDropR;
      }
    }
  }

  DistanceResult res;
  res.cost = c[m][n];
  std::size_t k = m, l = n;
  while (k > 0 || l > 0) {
    switch (from[k][l]) {
      case kMatch:
        res.matching.pairs.emplace_back(k - 1, l - 1);
        --k;
        --l;
        break;
      case kDropT:
        --l;
        break;
      default:
        --k;
        break;
    }
  }
  std::reverse(res.matching.pairs.begin(), res.matching.pairs.end());
  return res;
}

double min_cost_value(const FunctionTuple& f, int pair_index,
                      const TimetagSequence& r, const TimetagSequence& t) {
  require_sorted(r, "min_cost_value");
  require_sorted(t, "min_cost_value");
  const std::size_t m = r.size(), n = t.size();
  std::vector<double> prev(n + 1, 0.0), cur(n + 1, 0.0);
  for (std::size_t k = 1; k <= m; ++k) {
    cur[0] = static_cast<double>(k);
    for (std::size_t l = 1; l <= n; ++l) {
      const double match = prev[l - 1] + f.eval(pair_index, t[l - 1] - r[k - 1]);
      cur[l] = std::min({match, cur[l - 1], prev[l] + 1.0});
    }
    std::swap(prev, cur);
  }
  return prev[n];
}

std::vector<GapSegment> split_at_gaps(const TimetagSequence& r,
                                      const TimetagSequence& t, double u) {
  require_sorted(r, "split_at_gaps");
  require_sorted(t, "split_at_gaps");
  if (!(u >= 0.0)) throw std::invalid_argument("split_at_gaps: u must be >= 0");
  std::vector<GapSegment> out;
  std::size_t i = 0, j = 0;
  GapSegment seg;
  double last = 0.0;
  bool have_last = false;
  auto flush = [&] {
    if (!seg.r.empty() || !seg.t.empty()) out.push_back(std::move(seg));
    seg = GapSegment{};
  };
  while (i < r.size() || j < t.size()) {
    const bool take_r =
        j >= t.size() || (i < r.size() && r[i] <= t[j]);
    const double v = take_r ? r[i] : t[j];
    if (have_last && v - last > u) flush();
    if (take_r) {
      seg.r.push_back(v);
      ++i;
    } else {
      seg.t.push_back(v);
      ++j;
    }
    last = v;
    have_last = true;
  }
  flush();
  return out;
}

double min_cost_value_split(const FunctionTuple& f, int pair_index,
                            const TimetagSequence& r, const TimetagSequence& t,
                            double u) {
  if (!std::isfinite(u)) return min_cost_value(f, pair_index, r, t);
  double total = 0.0;
  for (const auto& seg : split_at_gaps(r, t, u)) {
    total += min_cost_value(f, pair_index, seg.r, seg.t);
  }
  return total;
}

}  // namespace ttbell
