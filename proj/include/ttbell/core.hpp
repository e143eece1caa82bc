#pragma once
// Shared domain types: settings, timetag sequences, trial records, the
// settings distribution, and local-realist assignments.  All value types,
// immutable once built, safe to share across workers.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttbell {

/// Measurement settings, two per party.  Stored 1-based to match the trial
/// file encoding.
enum class Setting : int { S1 = 1, S2 = 2 };

inline int setting_value(Setting s) { return static_cast<int>(s); }

inline Setting setting_from(int v) {
  if (v != 1 && v != 2) throw std::invalid_argument("setting must be 1 or 2");
  return static_cast<Setting>(v);
}

struct SettingsPair {
  Setting a = Setting::S1;
  Setting b = Setting::S1;

  /// Dense index: 11 -> 0, 12 -> 1, 21 -> 2, 22 -> 3.
  int index() const {
    return (setting_value(a) - 1) * 2 + (setting_value(b) - 1);
  }
  static SettingsPair from_index(int idx) {
    if (idx < 0 || idx > 3) throw std::invalid_argument("settings index out of range");
    return SettingsPair{setting_from(idx / 2 + 1), setting_from(idx % 2 + 1)};
  }
  bool operator==(const SettingsPair&) const = default;
};

constexpr int kNumSettingsPairs = 4;
constexpr int kPair11 = 0, kPair12 = 1, kPair21 = 2, kPair22 = 3;

/// Detection times in units of the mean pair inter-arrival time.
/// Invariant: non-decreasing, all finite.
using TimetagSequence = std::vector<double>;

bool is_sorted_sequence(const TimetagSequence& s);

struct TrialRecord {
  std::uint64_t id = 0;
  SettingsPair settings;
  TimetagSequence outcome_a;
  TimetagSequence outcome_b;
};

struct SettingsDistribution {
  std::array<double, kNumSettingsPairs> p{0.25, 0.25, 0.25, 0.25};

  static SettingsDistribution uniform() { return SettingsDistribution{}; }
  /// Throws unless all probabilities are positive and sum to 1 (1e-12).
  void validate() const;
};

/// p_{ab} lookup.
double settings_prob(const SettingsDistribution& dist, SettingsPair ab);

/// One outcome per party per setting, fixed before settings are chosen.
template <class Outcome>
struct LRAssignment {
  Outcome a1, a2, b1, b2;

  const Outcome& a(Setting s) const { return s == Setting::S1 ? a1 : a2; }
  const Outcome& b(Setting s) const { return s == Setting::S1 ? b1 : b2; }
};

/// One trial per line: {"id":0,"sa":1,"sb":2,"a":[...],"b":[...]}.
/// Times round-trip bit-exactly (shortest-representation decimal).
std::string encode_trial(const TrialRecord& t);
/// Throws std::runtime_error naming the offending field on malformed input;
/// unsorted timetags rejected.
TrialRecord decode_trial(const std::string& line);

void write_trials(std::ostream& os, const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> read_trials(std::istream& is);

}  // namespace ttbell
