#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sosc {

using Tick = std::int64_t;

enum class Visibility { Visible, Internal };

struct Event {
  Tick t = 0;
  std::string instance;
  std::string label;
  nlohmann::json payload;
  Visibility visibility = Visibility::Visible;
  // Set when the event was produced by an ERROR-stereotyped transition. Kept
  // in memory only; the JSON Lines format does not carry it.
  bool error = false;

  bool operator==(const Event&) const = default;
};

struct Trace {
  std::vector<Event> events;
  // Terminal annotation, e.g. "DEADLOCK_BEFORE_BOUND" or "BOUND_REACHED".
  std::string annotation;

  bool operator==(const Trace&) const = default;
};

// Subsequence of visible events, order preserved.
Trace hideInternal(const Trace& trace);

nlohmann::json toJson(const Event& e);
Event eventFromJson(const nlohmann::json& j);

// One event per line: {"t":..,"inst":..,"label":..,"kind":..,"payload":..}.
std::string toJsonLines(const Trace& trace);
Trace traceFromJsonLines(std::istream& in);

}  // namespace sosc
