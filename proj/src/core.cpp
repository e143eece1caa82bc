#include "ttbell/core.hpp"

#include <cmath>
#include <istream>
#include <ostream>

#include "json.hpp"

namespace ttbell {

bool is_sorted_sequence(const TimetagSequence& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) return false;
    if (i > 0 && s[i] < s[i - 1]) return false;
  }
  return true;
}

void SettingsDistribution::validate() const {
  double sum = 0.0;
  for (double v : p) {
    if (!(v > 0.0)) throw std::invalid_argument("settings probabilities must be positive");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("settings probabilities must sum to 1");
}

double settings_prob(const SettingsDistribution& dist, SettingsPair ab) {
  return dist.p[ab.index()];
}

std::string encode_trial(const TrialRecord& t) {
  nlohmann::json j;
  j["id"] = t.id;
  j["sa"] = setting_value(t.settings.a);
  j["sb"] = setting_value(t.settings.b);
  j["a"] = t.outcome_a;
  j["b"] = t.outcome_b;
  return j.dump();
}

TrialRecord decode_trial(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("decode_trial: bad record: ") + e.what());
  }
  auto need = [&](const char* field) -> const nlohmann::json& {
    auto it = j.find(field);
    if (it == j.end())
      throw std::runtime_error(std::string("decode_trial: missing field '") + field + "'");
    return *it;
  };
  TrialRecord t;
  try {
    t.id = need("id").get<std::uint64_t>();
  } catch (const nlohmann::json::exception&) {
    throw std::runtime_error("decode_trial: field 'id' not a nonnegative integer");
  }
  try {
    t.settings.a = setting_from(need("sa").get<int>());
  } catch (const std::exception&) {
    throw std::runtime_error("decode_trial: field 'sa' must be 1 or 2");
  }
  try {
    t.settings.b = setting_from(need("sb").get<int>());
  } catch (const std::exception&) {
    throw std::runtime_error("decode_trial: field 'sb' must be 1 or 2");
  }
  auto get_seq = [&](const char* field) {
    TimetagSequence s;
    try {
      s = need(field).get<TimetagSequence>();
    } catch (const nlohmann::json::exception&) {
      throw std::runtime_error(std::string("decode_trial: field '") + field +
                               "' not a number array");
    }
    if (!is_sorted_sequence(s))
      throw std::runtime_error(std::string("decode_trial: unsorted timetags in '") +
                               field + "'");
    return s;
  };
  t.outcome_a = get_seq("a");
  t.outcome_b = get_seq("b");
  return t;
}

void write_trials(std::ostream& os, const std::vector<TrialRecord>& trials) {
  for (const auto& t : trials) os << encode_trial(t) << '\n';
}

std::vector<TrialRecord> read_trials(std::istream& is) {
  std::vector<TrialRecord> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    out.push_back(decode_trial(line));
  }
  return out;
}

}  // namespace ttbell
