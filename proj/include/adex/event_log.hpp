#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

#include "adex/errors.hpp"
#include "adex/events.hpp"

namespace adex {

using Event = std::variant<ClickEvent, ConversionEvent>;

// A validated event log. Events keep file order; conversions are annotated
// with the group of their click so downstream code never needs the registry
// again.
struct EventLog {
  std::vector<Event> events;
  std::vector<int> event_group;  // group per event, parallel to events
  int n_groups = 0;

  std::size_t size() const noexcept { return events.size(); }
};

namespace detail {
inline double require_number(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_number())
    throw ParseError(line, std::string("missing or non-numeric field \"") + key + "\"");
  return j[key].get<double>();
}
inline std::string require_string(const nlohmann::json& j, const char* key, std::size_t line) {
  if (!j.contains(key) || !j[key].is_string())
    throw ParseError(line, std::string("missing or non-string field \"") + key + "\"");
  return j[key].get<std::string>();
}
}  // namespace detail

// Parses one record per line:
//   {"event":"click","click_id":"...","group":0,"ts":1.5}
//   {"event":"conversion","click_id":"...","ts":3.25}
// Lines need not be globally time-sorted, but each conversion must appear
// after its click. Malformed lines and orphan conversions are errors; the
// parser never silently drops a record.
inline EventLog parse_event_log(std::istream& in) {
  EventLog log;
  std::unordered_map<std::string, std::pair<int, double>> clicks;  // id -> (group, ts)
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
      throw ParseError(line_no, "not a JSON object");
    const std::string kind = detail::require_string(j, "event", line_no);
    if (kind == "click") {
      ClickEvent ev;
      ev.click_id = detail::require_string(j, "click_id", line_no);
      const double group = detail::require_number(j, "group", line_no);
      ev.group = static_cast<int>(group);
      if (ev.group < 0 || static_cast<double>(ev.group) != group)
        throw ParseError(line_no, "group must be a nonnegative integer");
      ev.ts = detail::require_number(j, "ts", line_no);
      if (ev.ts < 0.0) throw ParseError(line_no, "ts must be nonnegative");
      if (!clicks.emplace(ev.click_id, std::make_pair(ev.group, ev.ts)).second)
        throw ParseError(line_no, "duplicate click_id " + ev.click_id);
      log.n_groups = std::max(log.n_groups, ev.group + 1);
      log.event_group.push_back(ev.group);
      log.events.emplace_back(std::move(ev));
    } else if (kind == "conversion") {
      ConversionEvent ev;
      ev.click_id = detail::require_string(j, "click_id", line_no);
      ev.ts = detail::require_number(j, "ts", line_no);
      auto it = clicks.find(ev.click_id);
      if (it == clicks.end())
        throw ParseError(line_no, "conversion references unknown click_id " + ev.click_id);
      if (ev.ts < it->second.second)
        throw ParseError(line_no, "conversion precedes click " + ev.click_id);
      log.event_group.push_back(it->second.first);
      log.events.emplace_back(std::move(ev));
    } else {
      throw ParseError(line_no, "unknown event kind \"" + kind + "\"");
    }
  }
  return log;
}

inline void write_event(std::ostream& out, const ClickEvent& ev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", ev.ts);
  out << "{\"event\":\"click\",\"click_id\":\"" << ev.click_id << "\",\"group\":" << ev.group
      << ",\"ts\":" << buf << "}\n";
}

inline void write_event(std::ostream& out, const ConversionEvent& ev) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", ev.ts);
  out << "{\"event\":\"conversion\",\"click_id\":\"" << ev.click_id << "\",\"ts\":" << buf
      << "}\n";
}

}  // namespace adex
